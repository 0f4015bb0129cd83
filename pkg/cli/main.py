from __future__ import annotations

import argparse
import json
import logging
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Type

from pydantic import BaseModel, Field, ValidationError

from calculators.analysis import AnalysisRequest, optimal_n, visibility_scan, scan_csv
from calculators.experiment import ExperimentRequest, dump_dataset, estimate, read_dataset, simulate, write_dataset
from calculators.lp_adversary import AdversaryRequest, adversary_sweep, max_prediction_distance
from calculators.nonlocality import bound_report
from calculators.quantum_core import born_table, chained_family, entangled_state
from cli.self_test import run_self_test
from core.errors import SolverError
from core.loader import available_calculators, load_calculator, read_header
from core.serialize import dumps
from core.simplex import write_lp
from core.table import read_table, write_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    """Raised by the argument parser instead of exiting."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


class Subcommand(str, Enum):
    simulate = "simulate"
    estimate = "estimate"
    bound = "bound"
    adversary = "adversary"
    scan = "scan"
    check = "check"


class EstimateParams(BaseModel):
    input: Path
    confidence_level: float = Field(0.95, gt=0.0, lt=1.0)


class BoundParams(BaseModel):
    in_table: Path
    tolerance: float = Field(1e-9, ge=0.0)


class CheckParams(BaseModel):
    self_test: bool


class SimulateParams(ExperimentRequest):
    out: Optional[Path] = None


class AdversaryParams(AdversaryRequest):
    dump_table: Optional[Path] = None
    dump_lp: Optional[Path] = None


class ScanParams(AnalysisRequest):
    out: Optional[Path] = None


_PARAMS: Dict[Subcommand, Type[BaseModel]] = {
    Subcommand.simulate: SimulateParams,
    Subcommand.estimate: EstimateParams,
    Subcommand.bound: BoundParams,
    Subcommand.adversary: AdversaryParams,
    Subcommand.scan: ScanParams,
    Subcommand.check: CheckParams,
}


class RunConfig(BaseModel):
    subcommand: Subcommand
    parameters: Dict[str, Any]

    def validated(self) -> BaseModel:
        """Parameters checked against the target module's request model."""
        return _PARAMS[self.subcommand](**self.parameters)


def _emit(obj: Any) -> None:
    print(dumps(obj, indent=2))


def _config(ns: argparse.Namespace, **parameters: Any) -> BaseModel:
    cfg = RunConfig(subcommand=ns.cmd, parameters={k: v for k, v in parameters.items() if v is not None})
    return cfg.validated()


def run_simulate(ns: argparse.Namespace) -> int:
    p = _config(
        ns, n=ns.n, visibility=ns.visibility, trials=ns.trials, seed=ns.seed, workers=ns.workers, out=ns.out
    )
    dataset = simulate(p.n, p.visibility, p.trials, p.seed, p.workers)
    if p.out is None:
        dump_dataset(dataset, sys.stdout)
        return EXIT_OK
    write_dataset(dataset, p.out)
    logger.info("wrote %d trials to %s", len(dataset), p.out)
    _emit({"out": str(p.out), "n": p.n, "visibility": p.visibility, "trials": p.trials, "seed": p.seed})
    return EXIT_OK


def run_estimate(ns: argparse.Namespace) -> int:
    p = _config(ns, input=ns.input, confidence_level=ns.confidence)
    _emit(estimate(read_dataset(p.input), p.confidence_level).to_dict())
    return EXIT_OK


def run_bound(ns: argparse.Namespace) -> int:
    p = _config(ns, in_table=ns.in_table, tolerance=ns.tolerance)
    _emit(bound_report(read_table(p.in_table), p.tolerance))
    return EXIT_OK


def run_adversary(ns: argparse.Namespace) -> int:
    p = _config(
        ns,
        n=ns.n,
        visibility=ns.visibility,
        target_a=ns.target_a,
        target_x=ns.target_x,
        all_targets=ns.all_targets,
        dump_table=ns.dump_table,
        dump_lp=ns.dump_lp,
    )
    q = born_table(entangled_state(p.visibility), chained_family(p.n))
    if p.all_targets:
        results = adversary_sweep(q)
        _emit([r.summary() for r in results])
        result = next(r for r in results if r.target == (p.target_a, p.target_x))
    else:
        result = max_prediction_distance(q, p.target_a, p.target_x)
        _emit(result.summary())
    if p.dump_table is not None:
        write_table(result.optimal_table, p.dump_table)
    if p.dump_lp is not None:
        write_lp(result.lp, p.dump_lp)
    return EXIT_OK


def run_scan(ns: argparse.Namespace) -> int:
    if ns.visibility is not None:
        p = _config(ns, visibility=ns.visibility, n_max=ns.n_max)
        n_star, i_min = optimal_n(p.visibility, p.n_max)
        _emit({"visibility": p.visibility, "optimal_n": n_star, "min_i": i_min})
        return EXIT_OK
    p = _config(ns, v_min=ns.vmin, v_max=ns.vmax, steps=ns.steps, n_max=ns.n_max, out=ns.out)
    rows = visibility_scan(p.v_min, p.v_max, p.steps, p.n_max)
    text = scan_csv(rows)
    if p.out is None:
        sys.stdout.write(text)
    else:
        p.out.write_text(text, encoding="utf-8")
    return EXIT_OK


def run_check(ns: argparse.Namespace) -> int:
    p = _config(ns, self_test=ns.self_test)
    if not p.self_test:
        raise ValueError("nothing to check; pass --self-test")
    results = run_self_test()
    _emit(results)
    if not all(results.values()):
        failed = ", ".join(name for name, ok in results.items() if not ok)
        raise RuntimeError(f"self-test failed: {failed}")
    return EXIT_OK


def run_list(_: argparse.Namespace) -> int:
    calcs = available_calculators()
    for name, title in calcs.items():
        print(f"{name}\t{title}")
    return EXIT_OK


def run_doc(ns: argparse.Namespace) -> int:
    header = read_header(ns.calculator)
    if ns.inputs:
        _emit([field.summary() for field in header.inputs])
    elif ns.summary:
        print(header.description)
    else:
        print(header.text or f"No docs available for {ns.calculator}")
    return EXIT_OK


def run_calc(ns: argparse.Namespace) -> int:
    name: str = ns.calculator
    params: Dict[str, Any] = {}
    if ns.params:
        try:
            params = json.loads(ns.params)
        except json.JSONDecodeError as e:
            raise ValueError(f"invalid JSON for --params: {e}") from None
    result = load_calculator(name).calculate(params)  # type: ignore[attr-defined]
    _emit(result.dict())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chained-bell", description="Chained Bell correlations and no-extension bounds")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")
    sub = p.add_subparsers(dest="cmd", required=True)

    p_sim = sub.add_parser("simulate", help="Simulate seeded chained Bell trials to CSV")
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--visibility", type=float, required=True)
    p_sim.add_argument("--trials", type=int, required=True)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--out", help="Output CSV (stdout if omitted)")
    p_sim.set_defaults(func=run_simulate)

    p_est = sub.add_parser("estimate", help="Estimate I_N with Wilson intervals from a dataset")
    p_est.add_argument("--in", dest="input", required=True)
    p_est.add_argument("--confidence", type=float, default=0.95)
    p_est.set_defaults(func=run_estimate)

    p_bound = sub.add_parser("bound", help="Non-signalling and D <= I_N report for a table file")
    p_bound.add_argument("--in-table", required=True)
    p_bound.add_argument("--tolerance", type=float, default=1e-9)
    p_bound.set_defaults(func=run_bound)

    p_adv = sub.add_parser("adversary", help="Most predictive non-signalling extension by LP")
    p_adv.add_argument("--n", type=int, required=True)
    p_adv.add_argument("--visibility", type=float, required=True)
    p_adv.add_argument("--target-a", type=int, required=True)
    p_adv.add_argument("--target-x", type=int, required=True, choices=(1, -1))
    p_adv.add_argument("--all-targets", action="store_true")
    p_adv.add_argument("--dump-table", help="Write the optimal extension table (JSON or .csv)")
    p_adv.add_argument("--dump-lp", help="Write the LP in the plain-text dump format")
    p_adv.set_defaults(func=run_adversary)

    p_scan = sub.add_parser("scan", help="Optimal N over a visibility range, as CSV")
    p_scan.add_argument("--vmin", type=float)
    p_scan.add_argument("--vmax", type=float)
    p_scan.add_argument("--steps", type=int)
    p_scan.add_argument("--visibility", type=float, help="Single visibility instead of a range")
    p_scan.add_argument("--n-max", type=int, default=256)
    p_scan.add_argument("--out")
    p_scan.set_defaults(func=run_scan)

    p_check = sub.add_parser("check", help="Run the invariant smoke suite")
    p_check.add_argument("--self-test", action="store_true")
    p_check.set_defaults(func=run_check)

    p_list = sub.add_parser("list", help="List available calculators")
    p_list.set_defaults(func=run_list)

    p_calc = sub.add_parser("run", help="Run a calculator by name")
    p_calc.add_argument("calculator", help="Calculator name (e.g., quantum_core)")
    p_calc.add_argument("--params", help="JSON object with parameters", required=False)
    p_calc.set_defaults(func=run_calc)

    p_doc = sub.add_parser("doc", help="Show calculator documentation (from docstring)")
    p_doc.add_argument("calculator", help="Calculator name (e.g., analysis)")
    p_doc.add_argument("--inputs", action="store_true", help="Only the parsed [inputs] block, as JSON")
    p_doc.add_argument("--summary", action="store_true", help="Only the [Description] text")
    p_doc.set_defaults(func=run_doc)

    return p


def _one_line(e: Exception) -> str:
    if isinstance(e, ValidationError):
        return "; ".join(f"{'.'.join(str(l) for l in err['loc'])}: {err['msg']}" for err in e.errors())
    return " ".join(str(e).split()) or type(e).__name__


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    _configure_logging(ns.verbose)
    try:
        return ns.func(ns)
    except SolverError as e:
        print(f"solver error: {_one_line(e)}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, OSError) as e:
        print(f"error: {_one_line(e)}", file=sys.stderr)
        return EXIT_INVALID
    except RuntimeError as e:
        print(f"runtime error: {_one_line(e)}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
