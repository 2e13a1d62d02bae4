from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Iterator, Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import Settings
from errors import NumericalError, SingularMatrixError
from metrology import qcrb, qfi_matrix, snr_correct
from montecarlo import McConfig, mc_lod
from schemes import (
    InterferometerParams,
    MultiPhaseParams,
    Scheme,
    advantage_g_window,
    beta_weights,
    lod_classical_distributed,
    lod_classical_separable,
    lod_multi_classical,
    lod_multi_entangled_optimal,
    lod_multi_entangled_raw,
    lod_multi_separable,
    lod_tsu_distributed,
    lod_tsu_separable,
    qcrb_tsu,
    sensor_setup,
)
from utils import format_value, open_output, write_csv


logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s %(levelname)s %(name)s %(message)s",
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

TWO_PHASE_DEFAULT_G = 5.0
TWO_PHASE_DEFAULT_ALPHA_SQ = 100.0
MULTI_DEFAULT_M = 2
MULTI_DEFAULT_N = 100.0


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    variable: Literal["g", "G", "eta", "M", "n"]
    start: float
    stop: float
    count: int = Field(ge=2)
    spacing: Literal["linear", "log"] = "linear"
    fixed: dict[str, float] = Field(default_factory=dict)
    out: Path | None = None

    @model_validator(mode="after")
    def _check_range(self) -> "SweepSpec":
        if not self.start < self.stop:
            raise ValueError(f"sweep start {self.start} must be below stop {self.stop}")
        if self.spacing == "log" and self.start <= 0:
            raise ValueError("log sweeps need a positive start")
        return self

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


def _float_list(raw: str) -> list[float]:
    try:
        values = [float(item) for item in raw.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def fig2c_rows(spec: SweepSpec, etas: Sequence[float]) -> Iterator[list[float]]:
    g = spec.fixed["g"]
    for eta in etas:
        for G in spec.values():
            params = InterferometerParams(G=float(G), alpha_sq=1.0, eta=eta, g=g)
            yield [
                float(G),
                eta,
                lod_classical_separable(params).delta_phi_sq,
                lod_classical_distributed(params).delta_phi_sq,
                lod_tsu_separable(params).delta_phi_sq,
                lod_tsu_distributed(params).delta_phi_sq,
            ]


def fig2d_rows(spec: SweepSpec, etas: Sequence[float]) -> Iterator[list[float]]:
    G = spec.fixed["G"]
    for eta in etas:
        for g in spec.values():
            params = InterferometerParams(G=G, alpha_sq=1.0, eta=eta, g=float(g))
            yield [
                float(g),
                eta,
                lod_classical_separable(params).delta_phi_sq,
                lod_classical_distributed(params).delta_phi_sq,
                lod_tsu_separable(params).delta_phi_sq,
                lod_tsu_distributed(params).delta_phi_sq,
            ]


def fig2d_footer(G: float, etas: Sequence[float]) -> Iterator[str]:
    for eta in etas:
        window = advantage_g_window(G, eta)
        if window is None:
            yield f"advantage_window eta={format_value(eta)} none"
        else:
            yield (
                f"advantage_window eta={format_value(eta)} "
                f"g_lo={format_value(window.g_lo)} g_hi={format_value(window.g_hi)}"
            )


def fig5d_rows(spec: SweepSpec) -> Iterator[list[float | int]]:
    n = spec.fixed["n"]
    for value in spec.values():
        M = int(round(value))
        yield [
            M,
            lod_multi_classical(M, n).delta_phi_sq,
            lod_multi_separable(M, n).delta_phi_sq,
            lod_multi_entangled_optimal(M, n).delta_phi_sq,
        ]


def _two_phase_header(variable: str) -> list[str]:
    return [variable, "eta", "lod_cla_sep", "lod_cla_dis", "lod_tsu_sep", "lod_tsu_dis"]


def cmd_fig2c(args: argparse.Namespace, settings: Settings | None) -> int:
    spec = SweepSpec(
        variable="G", start=args.start, stop=args.stop, count=args.count,
        fixed={"g": args.g}, out=args.out,
    )
    with open_output(spec.out) as handle:
        count = write_csv(handle, _two_phase_header("G"), fig2c_rows(spec, args.etas))
    logger.info("fig2c: wrote %s rows to %s", count, spec.out or "stdout")
    return EXIT_OK


def cmd_fig2d(args: argparse.Namespace, settings: Settings | None) -> int:
    spec = SweepSpec(
        variable="g", start=args.start, stop=args.stop, count=args.count,
        fixed={"G": args.G}, out=args.out,
    )
    footer = list(fig2d_footer(args.G, args.etas))
    with open_output(spec.out) as handle:
        count = write_csv(handle, _two_phase_header("g"), fig2d_rows(spec, args.etas), footer)
    logger.info("fig2d: wrote %s rows to %s", count, spec.out or "stdout")
    return EXIT_OK


def cmd_fig5d(args: argparse.Namespace, settings: Settings | None) -> int:
    if args.m_max < 4 or args.m_max % 2:
        raise ValueError(f"--m-max must be an even number >= 4, got {args.m_max}")
    spec = SweepSpec(
        variable="M", start=2, stop=args.m_max, count=args.m_max // 2,
        fixed={"n": args.n}, out=args.out,
    )
    header = ["M", "lod_classical", "lod_separable", "lod_entangled"]
    with open_output(spec.out) as handle:
        count = write_csv(handle, header, fig5d_rows(spec))
    logger.info("fig5d: wrote %s rows to %s", count, spec.out or "stdout")
    return EXIT_OK


def _params_from_args(args: argparse.Namespace) -> InterferometerParams | MultiPhaseParams:
    scheme = Scheme(args.scheme)
    if scheme.multi_phase:
        return MultiPhaseParams(
            M=args.M if args.M is not None else MULTI_DEFAULT_M,
            n=args.n if args.n is not None else MULTI_DEFAULT_N,
            G=args.G,
            alpha_sq=args.alpha_sq,
            eta=args.eta,
        )
    return InterferometerParams(
        G=args.G if args.G is not None else TWO_PHASE_DEFAULT_G,
        alpha_sq=args.alpha_sq if args.alpha_sq is not None else TWO_PHASE_DEFAULT_ALPHA_SQ,
        eta=args.eta,
        g=args.g,
        phi1=args.phi1,
        phi2=args.phi2,
    )


_TWO_PHASE_LOD: dict[Scheme, Callable] = {
    Scheme.TSU_DISTRIBUTED: lod_tsu_distributed,
    Scheme.TSU_SEPARABLE: lod_tsu_separable,
    Scheme.CLASSICAL_DISTRIBUTED: lod_classical_distributed,
    Scheme.CLASSICAL_SEPARABLE: lod_classical_separable,
}


def _describe(params: InterferometerParams | MultiPhaseParams) -> str:
    items = []
    for key, value in vars(params).items():
        if value is None:
            continue
        items.append(f"{key}={value if isinstance(value, int) else format_value(value)}")
    return " ".join(items)


def cmd_lod(args: argparse.Namespace, settings: Settings) -> int:
    scheme = Scheme(args.scheme)
    params = _params_from_args(args)
    if scheme in _TWO_PHASE_LOD:
        value = _TWO_PHASE_LOD[scheme](params).delta_phi_sq
    elif scheme is Scheme.MULTI_CLASSICAL:
        value = lod_multi_classical(params.M, params.n).delta_phi_sq
    elif scheme is Scheme.MULTI_SEPARABLE:
        value = lod_multi_separable(params.M, params.n).delta_phi_sq
    elif params.G is not None:
        if params.M < 2 or params.M % 2:
            raise ValueError(f"entangled scheme needs an even M >= 2, got {params.M}")
        value = lod_multi_entangled_raw(params.G, params.alpha_sq)
    else:
        value = lod_multi_entangled_optimal(params.M, params.n).delta_phi_sq
    report = f"scheme={scheme.value} delta_phi_sq={format_value(value)} {_describe(params)}"
    if scheme is Scheme.TSU_DISTRIBUTED:
        setup = sensor_setup(scheme, params)
        fisher = qfi_matrix(setup.builder, setup.operating_phases, settings.qfi_step)
        try:
            bound = qcrb(fisher, beta_weights(params.G, params.g).as_vector())
        except SingularMatrixError:
            # G=1 leaves the conjugate arm dark
            logger.info("fisher matrix is singular at G=%s, reporting the closed-form bound", params.G)
            bound = qcrb_tsu(params)
        report += f" qcrb={format_value(bound)}"
    print(report)
    return EXIT_OK


def cmd_mc(args: argparse.Namespace, settings: Settings) -> int:
    params = _params_from_args(args)
    config = McConfig(
        samples=args.samples if args.samples is not None else settings.mc_samples,
        seed=args.seed if args.seed is not None else settings.mc_seed,
        chunk_size=settings.mc_chunk_size,
        workers=args.workers if args.workers is not None else settings.mc_workers,
        slope_step=settings.slope_step,
    )
    result = mc_lod(args.scheme, params, config)
    print(
        f"scheme={result.scheme.value} empirical={format_value(result.empirical_lod)} "
        f"analytic={format_value(result.analytic_lod)} "
        f"standard_error={format_value(result.standard_error)} "
        f"z={result.z_score:.3f} samples={result.samples} seed={result.seed} "
        f"generator=\"{result.generator}\""
    )
    return EXIT_OK


def cmd_snr_correct(args: argparse.Namespace, settings: Settings | None) -> int:
    value = snr_correct(args.measured_dbm, args.noise_dbm)
    print(f"snr_db={format_value(value)}")
    return EXIT_OK


def _add_scheme_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scheme", required=True, choices=[s.value for s in Scheme])
    parser.add_argument("--G", type=float, default=None, help="nonlinear gain")
    parser.add_argument("--alpha-sq", type=float, default=None, help="seed photons |alpha|^2")
    parser.add_argument("--eta", type=float, default=1.0, help="transmission")
    parser.add_argument("--g", type=float, default=1.0, help="classical gain")
    parser.add_argument("--phi1", type=float, default=0.0)
    parser.add_argument("--phi2", type=float, default=0.0)
    parser.add_argument("--M", type=int, default=None, help="number of phases")
    parser.add_argument("--n", type=float, default=None, help="photons per phase element")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Distributed phase sensing with truncated SU(1,1) interferometers.",
    )
    parser.set_defaults(needs_settings=False)
    sub = parser.add_subparsers(dest="command", required=True)

    fig2c = sub.add_parser("fig2c", help="LOD x |alpha|^2 versus gain G")
    fig2c.add_argument("--out", type=Path, default=None)
    fig2c.add_argument("--g", type=float, default=1.0)
    fig2c.add_argument("--etas", type=_float_list, default=[1.0, 0.8])
    fig2c.add_argument("--start", type=float, default=1.01)
    fig2c.add_argument("--stop", type=float, default=10.0)
    fig2c.add_argument("--count", type=int, default=900)
    fig2c.set_defaults(handler=cmd_fig2c)

    fig2d = sub.add_parser("fig2d", help="LOD x |alpha|^2 versus classical gain g")
    fig2d.add_argument("--out", type=Path, default=None)
    fig2d.add_argument("--G", type=float, default=5.0)
    fig2d.add_argument("--etas", type=_float_list, default=[1.0, 0.8])
    fig2d.add_argument("--start", type=float, default=0.1)
    fig2d.add_argument("--stop", type=float, default=3.0)
    fig2d.add_argument("--count", type=int, default=291)
    fig2d.set_defaults(handler=cmd_fig2d)

    fig5d = sub.add_parser("fig5d", help="M-phase LODs versus number of phases")
    fig5d.add_argument("--out", type=Path, default=None)
    fig5d.add_argument("--n", type=float, default=100.0)
    fig5d.add_argument("--m-max", type=int, default=100)
    fig5d.set_defaults(handler=cmd_fig5d)

    lod_cmd = sub.add_parser("lod", help="closed-form LOD for one scheme")
    _add_scheme_args(lod_cmd)
    lod_cmd.set_defaults(handler=cmd_lod, needs_settings=True)

    mc = sub.add_parser("mc", help="Monte Carlo check of a closed-form LOD")
    _add_scheme_args(mc)
    mc.add_argument("--samples", type=int, default=None)
    mc.add_argument("--seed", type=int, default=None)
    mc.add_argument("--workers", type=int, default=None)
    mc.set_defaults(handler=cmd_mc, needs_settings=True)

    snr = sub.add_parser("snr-correct", help="signal SNR from measured signal and noise powers")
    snr.add_argument("--measured-dbm", type=float, required=True)
    snr.add_argument("--noise-dbm", type=float, required=True)
    snr.set_defaults(handler=cmd_snr_correct)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # figure and snr commands never read the environment
        settings = Settings() if args.needs_settings else None
        if settings is not None:
            logging.getLogger().setLevel(settings.log_level)
        return args.handler(args, settings)
    except NumericalError as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        logger.error("invalid arguments: %s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
