"""Command-line interface.

Exit codes: 0 success, 1 parse error, 2 validation error, 3 numerical
error, 4 no root bracketed.
"""

from __future__ import annotations

import argparse
import sys

from .errors import (
    ConvergenceError,
    DegenerateColumnError,
    DegenerateDesignError,
    DegenerateNormalizationError,
    DomainError,
    InfeasibleEtaError,
    InsufficientDataError,
    NoRootBracketError,
    NoRootError,
    OutOfRangeError,
    ParseError,
    PoleError,
    SingularDenominatorError,
    ValidationError,
)
from .pipeline import RunConfig, run
from .residual import DEFAULT_M_RANGE

EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_NO_ROOT = 4

_EXIT_CODES = (
    (ParseError, EXIT_PARSE),
    ((NoRootBracketError, NoRootError), EXIT_NO_ROOT),
    (
        (
            ConvergenceError,
            SingularDenominatorError,
            DegenerateNormalizationError,
            DegenerateDesignError,
            PoleError,
            InfeasibleEtaError,
        ),
        EXIT_NUMERICAL,
    ),
    (
        (
            ValidationError,
            DomainError,
            InsufficientDataError,
            DegenerateColumnError,
            OutOfRangeError,
        ),
        EXIT_VALIDATION,
    ),
)


def _parse_m_range(text: str) -> tuple:
    if ":" in text:
        lo, hi = text.split(":")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(p) for p in text.split(","))


def _parse_grid(text: str) -> tuple:
    start, stop, count = text.split(":")
    return (float(start), float(stop), int(count))


def _parse_levels(text: str) -> tuple:
    return tuple(float(p) for p in text.replace(";", ",").split(","))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="viscoident",
        description=(
            "Hereditary creep/relaxation kernel identification: spline "
            "approximation of kernel samples and weighted-residual "
            "estimation of the intensity and exponent parameters."
        ),
    )
    p.add_argument("--mode", choices=("identify", "simulate", "table1", "validate"),
                   default="identify")
    p.add_argument("--input", help="kernel samples CSV (t,K; optional header)")
    p.add_argument("--isochrones", help="isochrone matrix CSV")
    p.add_argument("--model-samples",
                   help="independent unit-intensity kernel samples CSV; when "
                        "given, segments are fitted to it instead of to the data")
    p.add_argument("--output", help="report path (identify/table1/validate) "
                                    "or output file prefix (simulate)")
    p.add_argument("--lambda0", type=float, default=1.0,
                   help="initial intensity guess (default 1)")
    p.add_argument("--q0", type=float, default=1.0,
                   help="initial exponent guess (default 1)")
    p.add_argument("--m-range", type=_parse_m_range,
                   default=DEFAULT_M_RANGE, metavar="LO:HI|M1,M2,...",
                   help="difference-moment orders scanned (default 2:8)")
    p.add_argument("--gamma", type=float, default=1e-6,
                   help="target residual level (cancels from the estimate)")
    p.add_argument("--sigma-over-H", type=float, dest="sigma_over_h",
                   help="stress to modulus ratio entering eta")
    p.add_argument("--strain-levels", type=_parse_levels, default=(),
                   metavar="E1,E2,...",
                   help="strain levels for the exponent stage when no "
                        "isochrone file is given")
    p.add_argument("--eval-at-knots", action="store_true",
                   help="evaluate segment terms at the knots instead of "
                        "interval midpoints")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp for byte-identical reports")
    p.add_argument("--json", action="store_true", dest="json_output",
                   help="emit the report as JSON")
    sim = p.add_argument_group("simulate mode")
    sim.add_argument("--kind", choices=("creep", "relaxation"), default="creep")
    sim.add_argument("--alpha", type=float, default=0.5)
    sim.add_argument("--beta", type=float, default=0.0)
    sim.add_argument("--lam", type=float, default=0.8,
                     help="true hereditary intensity")
    sim.add_argument("--H", type=float, default=1.0)
    sim.add_argument("--q", type=float, default=1.5)
    sim.add_argument("--sigma", type=float, default=1.0,
                     help="held stress for creep runs")
    sim.add_argument("--eps", type=float, default=1.0,
                     help="held strain for relaxation runs")
    sim.add_argument("--grid", type=_parse_grid, default=(0.0, 0.005, 64),
                     metavar="START:STOP:N")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**vars(args))
    try:
        report = run(cfg)
    except Exception as exc:  # noqa: BLE001 - total error mapping is the contract
        for classes, code in _EXIT_CODES:
            if isinstance(exc, classes):
                print(f"error({type(exc).__name__}): {exc}", file=sys.stderr)
                return code
        raise
    text = report.to_json() + "\n" if cfg.json_output else report.to_text()
    if cfg.output and cfg.mode != "simulate":
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.mode == "validate" and report.result.get("failed", "none") != "none":
        return EXIT_VALIDATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
