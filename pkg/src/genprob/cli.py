"""Command line front end.

Exit codes: 0 ok, 1 validation failure, 2 input error, 3 numerical
degeneracy, 4 bad rule specification.  Every flag marked ``[env]`` can also
be set through a ``GENPROB_<FLAG>`` environment variable, e.g.
``GENPROB_SUM_TOL=1e-8``; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .dist import (
    JointDist,
    QuasiStochasticMatrix,
    Tolerances,
    condition_number,
    conditional_from_joint,
    is_product,
    marginals,
    reverse_joint,
)
from .errors import GenprobError, InputError
from .fileio import fmt, matrix_obj, read_assignment, read_matrix, read_vector
from .inference import clip_project, convergence_experiment, estimate_from_counts, infer
from .oracle import search_negative_posterior
from .rules import THIRD_ORDER, FirstOrder, RuleContext, build_r, parse_rule, validate_r
from .seqprob import ProbabilityAssignment, check_axioms

DEFAULT_SEED = 12345
ENV_PREFIX = "GENPROB_"


def _env(name: str, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        print(f"genprob: bad value {raw!r} for {ENV_PREFIX}{name}", file=sys.stderr)
        raise SystemExit(InputError.exit_code) from None


def _common(p: argparse.ArgumentParser, seed: bool = False):
    p.add_argument("--sum-tol", type=float, default=_env("SUM_TOL", 1e-9, float), help="normalization tolerance [env]")
    p.add_argument("--cond-max", type=float, default=_env("COND_MAX", 1e8, float), help="condition-number cap [env]")
    p.add_argument("--support-eps", type=float, default=_env("SUPPORT_EPS", 1e-12, float), help="zero-mass threshold [env]")
    p.add_argument("--format", choices=("json", "csv"), default=_env("FORMAT", "json"), help="report format [env]")
    p.add_argument("-o", "--output", help="write the report here instead of stdout")
    p.add_argument("--normalize", action="store_true", help="rescale inputs to unit mass (recorded in the report)")
    if seed:
        p.add_argument("--seed", type=int, default=_env("SEED", DEFAULT_SEED, int), help=f"RNG seed, default {DEFAULT_SEED} [env]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genprob", description="Inference with Bayes, inversion and mixed rules.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a joint distribution, its reverse joint and the rule family")
    p.add_argument("joint")
    _common(p)

    p = sub.add_parser("infer", help="infer the hidden marginal and a posterior from observed data")
    p.add_argument("model", help="P(A|B) matrix, or a joint (has an 'ordering')")
    p.add_argument("observed", help="observed marginal of A (probabilities or counts)")
    p.add_argument("--rule", default="bayes", help="bayes | inversion | zeroth | mix:<p> | compose:<t>,<t>,...")
    p.add_argument("--clip-project", action="store_true",
                   help="also report the inferred prior clipped to a proper distribution")
    _common(p)

    p = sub.add_parser("experiment", help="seeded convergence experiment, CSV rows per (n, repetition)")
    p.add_argument("truth")
    p.add_argument("--rule", default="bayes")
    p.add_argument("--sizes", required=True, help="comma-separated sample sizes, e.g. 100,10000")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--metric", choices=("l1", "linf"), default="l1")
    _common(p, seed=True)
    p.set_defaults(format=_env("FORMAT", "csv"))

    p = sub.add_parser("search-negative", help="find positive joints whose inversion posterior leaves [0, 1]")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--include-fixture", action="store_true", help="always report the canonical 2x2 joint")
    _common(p, seed=True)

    p = sub.add_parser("axioms", help="check the sequence axioms on an assignment file or a two-variable joint")
    p.add_argument("assignment")
    p.add_argument("--reverse", choices=("inversion", "bayes"), default="inversion",
                   help="how to build the opposite ordering when given a joint matrix")
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p)
    return parser


def _tolerances(args) -> Tolerances:
    try:
        return Tolerances(args.sum_tol, args.cond_max, args.support_eps)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _header(args, **extra) -> dict:
    head = {
        "command": args.command,
        "sum_tol": args.sum_tol,
        "cond_max": args.cond_max,
        "support_eps": args.support_eps,
        "normalize": bool(args.normalize),
    }
    if hasattr(args, "seed"):
        head["seed"] = args.seed
    head.update(extra)
    return head


def _csv_text(header: dict, columns, rows) -> str:
    buf = io.StringIO()
    for key, value in header.items():
        buf.write(f"# {key}={value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _emit(args, text: str):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _load_joint(args, tol: Tolerances, check: bool = True) -> JointDist:
    m = read_matrix(args.joint if hasattr(args, "joint") else args.truth)
    data = m.data / m.data.sum() if args.normalize else m.data
    col_var, row_var = m.ordering or ("B", "A")
    return JointDist(data, m.rows, m.cols, row_var=row_var, col_var=col_var, tol=tol, check=check)


# --- validate -------------------------------------------------------------


def cmd_validate(args) -> int:
    tol = _tolerances(args)
    joint = _load_joint(args, tol, check=False)
    a = joint.entries
    checks = []

    def check(name, value, limit, ok=None):
        ok = (value <= limit) if ok is None else ok
        checks.append({"check": name, "value": float(value), "tol": float(limit), "passed": bool(ok)})
        return ok

    check("normalization", abs(a.sum() - 1.0), tol.sum_tol)
    check("nonnegative", max(0.0, -a.min()), tol.sum_tol)
    product = joint.shape[0] > 1 and is_product(a, tol.sum_tol)
    check("non_product", 0.0 if not product else 1.0, 0.0, ok=not product)
    cond = condition_number(a) if a.shape[0] == a.shape[1] else float("inf")
    invertible = check("condition", cond, tol.cond_max, ok=bool(np.isfinite(cond) and cond <= tol.cond_max))

    pa, pb = marginals(joint, tol)
    if np.all(np.abs(pb.entries) > tol.support_eps):
        model = conditional_from_joint(joint, tol)
        back = model.entries * pb.entries[None, :]
        check("conditional_roundtrip", np.abs(back - a).max(), tol.sum_tol)

    if invertible and not product:
        rev = reverse_joint(joint, tol)
        check("reverse_row_sums", np.abs(rev.entries.sum(axis=1) - pb.entries).max(), tol.sum_tol)
        check("reverse_col_sums", np.abs(rev.entries.sum(axis=0) - pa.entries).max(), tol.sum_tol)
        report = check_axioms(ProbabilityAssignment.from_two_variable(joint, rev), tol.sum_tol)
        for name, res in report.results.items():
            check(f"axiom_{name}", res.max_magnitude, tol.sum_tol, ok=res.passed)
        if abs(a.sum() - 1.0) <= tol.sum_tol:
            ctx = RuleContext.from_joint(joint, tol)
            for rule in (FirstOrder(0.0), FirstOrder(0.5), FirstOrder(1.0), THIRD_ORDER):
                rep = validate_r(build_r(rule, ctx))
                worst = max(rep.ones_residual, rep.marginal_residual, rep.column_deviation or 0.0)
                check(f"rule_{rule}", worst, tol.sum_tol, ok=rep.passed)

    passed = all(c["passed"] for c in checks)
    header = _header(args, input=args.joint, passed=passed)
    if args.format == "json":
        text = _json({"header": header, "checks": checks, "passed": passed})
    else:
        text = _csv_text(header, ("check", "value", "tol", "passed"),
                         [(c["check"], c["value"], c["tol"], c["passed"]) for c in checks])
    _emit(args, text)
    return 0 if passed else 1


# --- infer ----------------------------------------------------------------


def cmd_infer(args) -> int:
    rule = parse_rule(args.rule)
    tol = _tolerances(args)
    m = read_matrix(args.model)
    if m.is_joint:
        col_var, row_var = m.ordering
        data = m.data / m.data.sum() if args.normalize else m.data
        model = conditional_from_joint(JointDist(data, m.rows, m.cols, row_var, col_var, tol=tol), tol)
    else:
        data = m.data / m.data.sum(axis=0) if args.normalize else m.data
        model = QuasiStochasticMatrix(data, m.rows, m.cols, tol=tol)

    v = read_vector(args.observed)
    if v.counts is not None:
        observed = estimate_from_counts(v.counts, v.labels).estimate.entries
    else:
        observed = v.data / v.data.sum() if args.normalize else v.data

    result = infer(model, observed, rule, tol)
    diag = result.diagnostics
    header = _header(args, rule=str(rule), model=args.model, observed=args.observed)
    diagnostics = {
        "column_deviation": [float(x) for x in diag.column_deviation],
        "max_column_deviation": diag.max_column_deviation,
        "min_prior_entry": diag.min_prior_entry,
        "negative_prior": diag.negative_prior,
        "negative_posterior": diag.negative_posterior,
        "condition": diag.condition,
    }
    prior = result.inferred_prior
    post = result.posterior
    clipped = clip_project(prior, tol) if args.clip_project else None

    if args.format == "json":
        out = {
            "header": header,
            "inferred_prior": {"labels": list(prior.labels), "data": [float(x) for x in prior.entries]},
            "posterior": matrix_obj(post.rows, post.cols, post.entries),
            "diagnostics": diagnostics,
        }
        if clipped is not None:
            out["clip_project"] = {
                "note": "clipped and renormalized; not part of the signed inference",
                "labels": list(clipped.labels),
                "data": [float(x) for x in clipped.entries],
            }
        text = _json(out)
    else:
        rows = [("inferred_prior", label, "", x) for label, x in zip(prior.labels, prior.entries.tolist())]
        rows += [("posterior", r, c, post.entries[i, j].item())
                 for i, r in enumerate(post.rows) for j, c in enumerate(post.cols)]
        rows += [("column_deviation", "", c, x) for c, x in zip(post.cols, diagnostics["column_deviation"])]
        for key in ("min_prior_entry", "negative_prior", "negative_posterior", "condition"):
            rows.append((key, "", "", diagnostics[key]))
        if clipped is not None:
            rows += [("clip_project", label, "", x) for label, x in zip(clipped.labels, clipped.entries.tolist())]
        text = _csv_text(header, ("quantity", "row", "col", "value"), rows)
    _emit(args, text)
    return 0


# --- experiment -----------------------------------------------------------


def _sizes(text: str) -> list[int]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise InputError("--sizes needs at least one sample size")
    try:
        sizes = [int(p) for p in parts]
    except ValueError:
        raise InputError(f"--sizes must be integers, got {text!r}") from None
    if any(n <= 0 for n in sizes):
        raise InputError("sample sizes must be positive")
    return sizes


def cmd_experiment(args) -> int:
    rule = parse_rule(args.rule)
    sizes = _sizes(args.sizes)
    if args.reps < 1:
        raise InputError("--reps must be positive")
    tol = _tolerances(args)
    truth = _load_joint(args, tol)
    report = convergence_experiment(truth, rule, sizes, args.seed, args.metric, args.reps, tol)
    header = _header(args, rule=str(rule), truth=args.truth, reps=args.reps, metric=args.metric)
    if args.format == "csv":
        text = report.to_csv(header)
    else:
        text = _json({"header": header, "rows": [r.__dict__ for r in report.rows]})
    _emit(args, text)
    return 0


# --- search-negative ------------------------------------------------------


def cmd_search_negative(args) -> int:
    if args.dim not in (2, 3, 4):
        raise InputError(f"--dim must be 2, 3 or 4, got {args.dim}")
    if args.trials < 0:
        raise InputError("--trials must be non-negative")
    found = search_negative_posterior(args.dim, args.trials, args.seed, include_fixture=args.include_fixture)
    header = _header(args, dim=args.dim, trials=args.trials, found=len(found))
    if args.format == "json":
        text = _json({
            "header": header,
            "witnesses": [
                {
                    "fixture": w.fixture,
                    "joint": [[str(x) for x in row] for row in w.joint],
                    "posterior": [[str(x) for x in row] for row in w.posterior],
                    "offending": [{"row": i, "col": j, "value": str(x), "float": float(x)} for i, j, x in w.offending],
                }
                for w in found
            ],
        })
    else:
        rows = []
        for k, w in enumerate(found):
            rows += [(k, w.fixture, "joint", i, j, str(x), float(x))
                     for i, row in enumerate(w.joint) for j, x in enumerate(row)]
            rows += [(k, w.fixture, "offending", i, j, str(x), float(x)) for i, j, x in w.offending]
        text = _csv_text(header, ("witness", "fixture", "quantity", "row", "col", "exact", "value"), rows)
    _emit(args, text)
    return 0


# --- axioms ---------------------------------------------------------------


def _load_assignment(args, tol: Tolerances) -> ProbabilityAssignment:
    with open(args.assignment) as fh:
        head = fh.read(4096)
    if '"variables"' in head:
        return read_assignment(args.assignment)
    m = read_matrix(args.assignment)
    data = m.data / m.data.sum() if args.normalize else m.data
    col_var, row_var = m.ordering or ("B", "A")
    joint = JointDist(data, m.rows, m.cols, row_var, col_var, tol=tol, check=False)
    rev = reverse_joint(joint, tol).entries if args.reverse == "inversion" else joint.entries.T
    return ProbabilityAssignment.from_two_variable(joint, rev)


def cmd_axioms(args) -> int:
    tol = _tolerances(args)
    try:
        p = _load_assignment(args, tol)
    except OSError as exc:
        raise InputError(f"{args.assignment}: {exc.strerror or exc}") from exc
    report = check_axioms(p, args.tol)
    header = _header(args, input=args.assignment, tol=args.tol, passed=report.passed)
    if args.format == "json":
        text = _json({
            "header": header,
            "passed": report.passed,
            "axioms": [
                {
                    "axiom": name,
                    "passed": r.passed,
                    "checked": r.checked,
                    "violations": r.violation_count,
                    "max_magnitude": r.max_magnitude,
                    "examples": [
                        {"ordering": list(v.ordering), "sequence": v.sequence, "magnitude": v.magnitude}
                        for v in r.violations
                    ],
                }
                for name, r in report.results.items()
            ],
        })
    else:
        text = _csv_text(header, ("axiom", "passed", "checked", "violations", "max_magnitude"),
                         [(n, r.passed, r.checked, r.violation_count, r.max_magnitude) for n, r in report.results.items()])
    _emit(args, text)
    return 0 if report.passed else 1


COMMANDS = {
    "validate": cmd_validate,
    "infer": cmd_infer,
    "experiment": cmd_experiment,
    "search-negative": cmd_search_negative,
    "axioms": cmd_axioms,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except GenprobError as exc:
        print(f"genprob {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
