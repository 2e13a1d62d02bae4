from __future__ import annotations

import csv
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence


CSV_DIGITS = 10


def chunk_ranges(total: int, limit: int) -> Iterable[tuple[int, int]]:
    """
    Split [0, total) into consecutive half-open ranges of at most `limit` items.
    The last range carries the remainder.
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    if limit < 1:
        raise ValueError("limit must be positive")
    start = 0
    while start < total:
        end = min(total, start + limit)
        yield start, end
        start = end


def format_value(value: float) -> str:
    return f"{value:.{CSV_DIGITS - 1}e}"


def format_row(row: Sequence[float | int | str]) -> list[str]:
    cells: list[str] = []
    for item in row:
        if isinstance(item, str):
            cells.append(item)
        elif isinstance(item, int):
            cells.append(str(item))
        else:
            cells.append(format_value(float(item)))
    return cells


@contextmanager
def open_output(path: Path | None) -> Iterator[IO[str]]:
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        yield handle


def write_csv(
    handle: IO[str],
    header: Sequence[str],
    rows: Iterable[Sequence[float | int | str]],
    footer: Iterable[str] = (),
) -> int:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(header)
    count = 0
    for row in rows:
        writer.writerow(format_row(row))
        count += 1
    for line in footer:
        handle.write(f"# {line}\n")
    return count
