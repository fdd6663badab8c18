"""
Batch command line front end.

    python -m dualchoice.cli eval x.csv y.csv --mu uniform-grid:2:10 --alpha 1 --out report.json

Exit status: 0 on success, 1 when a check fails (dominance refuted, prospects
not comonotonic), 2 on input errors.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, get_args

import numpy as np
from pydantic import ValidationError

from dualchoice.core.config import LOG_FORMAT, settings
from dualchoice.core.errors import DimensionMismatch, DomainError, DualChoiceError
from dualchoice.models.measure import DiscreteMeasure
from dualchoice.schemas.report import Command, InputDigest, Report, RunConfig, SchemeSummary
from dualchoice.services.comonotone import is_mu_comonotonic
from dualchoice.services.datasets import build_reference, read_column, read_dataset, read_phi_table
from dualchoice.services.evaluate import (
    Verdict,
    WeightScheme,
    certainty_equivalent,
    concave_order_check,
    fosd_check,
    gamma_batch,
    rank_by_value,
    risk_averse_scheme,
    state_price_scheme,
    univariate_scheme,
)
from dualchoice.services.inequality import gini_evaluate
from dualchoice.services.local_utility import local_utility_from
from dualchoice.services.quantile import mu_quantile

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2


class _Run:
    """State shared by the command handlers of one invocation"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.inputs: List[InputDigest] = []

    def measure(self, path: str) -> DiscreteMeasure:
        dataset = read_dataset(path)
        self.inputs.append(InputDigest(path=path, sha256=dataset.digest))
        return dataset.to_measure()

    def samples(self, path: str) -> np.ndarray:
        dataset = read_dataset(path)
        if dataset.weights is not None:
            raise DomainError(f"aligned samples in {path!r} cannot carry a weight column")
        self.inputs.append(InputDigest(path=path, sha256=dataset.digest))
        return dataset.rows

    def reference(self) -> Tuple[DiscreteMeasure, InputDigest]:
        mu, digest = build_reference(self.config.mu)
        return mu, InputDigest(path=self.config.mu, sha256=digest)

    def scheme(self) -> Tuple[WeightScheme, SchemeSummary]:
        config = self.config
        if config.scheme == "general":
            ws, digest = read_phi_table(config.phi)
            source = InputDigest(path=config.phi, sha256=digest)
        elif config.scheme == "univariate":
            table, digest = read_column(config.f_prime)
            ws = univariate_scheme(table)
            source = InputDigest(path=config.f_prime, sha256=digest)
        else:
            mu, source = self.reference()
            build = risk_averse_scheme if config.scheme == "risk-averse" else state_price_scheme
            ws = build(mu, alpha=config.alpha, u0=config.u0)
        summary = SchemeSummary(
            name=config.scheme,
            reference=source,
            alpha=ws.alpha,
            u0=None if ws.u0 is None else ws.u0.tolist(),
            risk_averse=ws.is_risk_averse or ws.risk_averse_univariate,
        )
        logger.info("Using %s scheme on %d reference atoms (d = %d)", config.scheme, ws.mu.n, ws.dim)
        return ws, summary

    def report(self, status: str, **fields) -> Report:
        return Report(
            command=self.config.command,
            status=status,
            inputs=self.inputs,
            seed=self.config.seed,
            **fields,
        )


def _tol(config: RunConfig, default: float) -> float:
    return default if config.tol is None else config.tol


def _ranking(values: Sequence[float], labels: Sequence[str]) -> List[Dict]:
    return [
        {
            "input": labels[entry.index],
            "index": entry.index,
            "value": entry.value,
            "rank": entry.rank,
            "tied_with": entry.tied_with,
        }
        for entry in rank_by_value(values)
    ]


def _eval(run: _Run) -> Report:
    ws, summary = run.scheme()
    prospects = [run.measure(path) for path in run.config.inputs]
    results = gamma_batch(ws, prospects)
    values = {"gamma": [r.value for r in results]}
    if ws.is_risk_averse:
        values["rho"] = [r.decomposition.rho for r in results]
        values["mean_term"] = [r.decomposition.mean_term for r in results]
    if ws.form == "univariate":
        values["certainty_equivalent"] = [certainty_equivalent(ws, p) for p in prospects]
    certificates = {"quantile_kind": [r.quantile_map.kind for r in results]}
    return run.report("ok", scheme=summary, values=values, certificates=certificates)


def _rank(run: _Run) -> Report:
    ws, summary = run.scheme()
    prospects = [run.measure(path) for path in run.config.inputs]
    gammas = [r.value for r in gamma_batch(ws, prospects)]
    return run.report(
        "ok",
        scheme=summary,
        values={"gamma": gammas, "ranking": _ranking(gammas, run.config.inputs)},
    )


def _dominance(run: _Run) -> Report:
    config = run.config
    x = run.measure(config.inputs[0])
    y = run.measure(config.inputs[1])
    if config.order == "fosd":
        tol = _tol(config, settings.EXACT_TOL)
        mu, digest = run.reference()
        run.inputs.append(digest)
        result = fosd_check(mu, x, y, tol=tol)
        dominated = result.verdict in (Verdict.DOMINATES, Verdict.STRICTLY_DOMINATES)
        strength = "strict" if result.verdict == Verdict.STRICTLY_DOMINATES else "weak"
        certificates = {
            "order": "fosd",
            "verdict": Verdict.DOMINATES.value if dominated else result.verdict.value,
            "strength": strength if dominated else None,
        }
        values = {"q_x": result.q_x.tolist(), "q_y": result.q_y.tolist()}
        return run.report(
            "ok" if dominated else "failed",
            values=values,
            certificates=certificates,
            tolerances={"exact": tol},
        )

    tol = _tol(config, settings.EXACT_TOL)
    references = None
    if config.mu is not None:
        mu, digest = run.reference()
        run.inputs.append(digest)
        references = [mu]
    result = concave_order_check(
        x,
        y,
        method=config.method,
        references=references,
        seed=config.seed,
        tol=tol,
    )
    certificates = {
        "order": "concave",
        "relation": "second <=_cv first",
        "method": result.method,
        "verdict": result.verdict.value,
        "checked": result.checked,
    }
    if result.certificate is not None:
        certificates["doubly_stochastic"] = result.certificate.tolist()
    if result.rho_x is not None:
        certificates["rho_x"] = result.rho_x
        certificates["rho_y"] = result.rho_y
        certificates["refuting_reference"] = {
            "atoms": result.reference.atoms.tolist(),
            "weights": result.reference.weights.tolist(),
        }
    return run.report(
        "failed" if result.verdict == Verdict.FAILS else "ok",
        certificates=certificates,
        tolerances={"exact": tol},
    )


def _comonotone(run: _Run) -> Report:
    tol = _tol(run.config, settings.COMONOTONE_TOL)
    prospects = [run.samples(path) for path in run.config.inputs]
    mu, digest = run.reference()
    run.inputs.append(digest)
    certificate = is_mu_comonotonic(mu, prospects, tol=tol)
    certificates = {
        "comonotonic": certificate.comonotonic,
        "gap": certificate.gap,
        "rho_of_sum": certificate.rho_of_sum,
        "sum_of_rho": certificate.sum_of_rho,
    }
    return run.report(
        "ok" if certificate.comonotonic else "failed",
        certificates=certificates,
        tolerances={"comonotone": tol},
    )


def _quantile(run: _Run) -> Report:
    x = run.measure(run.config.inputs[0])
    mu, digest = run.reference()
    run.inputs.append(digest)
    quantile = mu_quantile(mu, x)
    values = {
        "reference_atoms": mu.atoms.tolist(),
        "reference_weights": mu.weights.tolist(),
        "quantile": quantile.values.tolist(),
        "rho": quantile.plan.value,
    }
    certificates = {"kind": quantile.kind, "degenerate": quantile.degenerate}
    return run.report("ok", values=values, certificates=certificates)


def _local_utility(run: _Run) -> Report:
    p = run.measure(run.config.inputs[0])
    points = p.atoms
    if len(run.config.inputs) > 1:
        points = run.samples(run.config.inputs[1])
    mu, digest = run.reference()
    run.inputs.append(digest)
    if points.shape[1] != p.dim:
        raise DimensionMismatch(f"points have d = {points.shape[1]}, distribution has d = {p.dim}")
    utility = local_utility_from(mu, p)
    values = {
        "points": points.tolist(),
        "utility": np.atleast_1d(utility(points)).tolist(),
        "psi": utility.psi.tolist(),
    }
    return run.report("ok", values=values)


def _inequality(run: _Run) -> Report:
    ws, summary = run.scheme()
    allocations = []
    for path in run.config.inputs:
        dataset = read_dataset(path)
        run.inputs.append(InputDigest(path=path, sha256=dataset.digest))
        allocations.append(dataset.to_allocation())
    evaluations = [gini_evaluate(a, ws) for a in allocations]
    return run.report(
        "ok",
        scheme=summary,
        values={"evaluation": evaluations, "ranking": _ranking(evaluations, run.config.inputs)},
    )


HANDLERS: Dict[str, Callable[[_Run], Report]] = {
    "eval": _eval,
    "rank": _rank,
    "dominance": _dominance,
    "comonotone": _comonotone,
    "quantile": _quantile,
    "local-utility": _local_utility,
    "inequality": _inequality,
}


def render(report: Report) -> str:
    return report.model_dump_json(indent=2) + "\n"


def run(config: RunConfig) -> int:
    """Execute one command, write its report and return the exit status"""
    try:
        report = HANDLERS[config.command](_Run(config))
    except DualChoiceError as exc:
        logger.error("%s failed: %s", config.command, exc)
        return EXIT_INPUT_ERROR
    text = render(report)
    if config.out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(config.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            logger.error("Cannot write report to %s: %s", config.out, exc)
            return EXIT_INPUT_ERROR
        logger.info("Report written to %s", config.out)
    return EXIT_OK if report.status == "ok" else EXIT_CHECK_FAILED


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("inputs", nargs="+", help="dataset CSV files")
    common.add_argument("--mu", help="reference measure: CSV path or uniform-grid:D:K")
    common.add_argument("--scheme", choices=["risk-averse", "state-price", "general", "univariate"],
                        default="risk-averse")
    common.add_argument("--alpha", type=float, default=1.0)
    common.add_argument("--u0", type=_float_list, default=[0.0], help="comma separated offset vector")
    common.add_argument("--phi", help="CSV of reference atoms with phi_ columns (general scheme)")
    common.add_argument("--f-prime", dest="f_prime", help="single-column CSV of f' (univariate scheme)")
    common.add_argument("--order", choices=["fosd", "concave"], default="fosd")
    common.add_argument("--method", choices=["doubly_stochastic", "rho_battery"], default="doubly_stochastic")
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    common.add_argument("--out", help="report path (stdout when omitted)")

    parser = argparse.ArgumentParser(prog="dualchoice", description=__doc__.strip().splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)
    for name in get_args(Command):
        commands.add_parser(name, parents=[common])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=settings.LOG_LEVEL, format=LOG_FORMAT)
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(**vars(args))
    except ValidationError as exc:
        logger.error("Invalid arguments: %s", exc)
        return EXIT_INPUT_ERROR
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
