"""Estimating a hidden marginal and its posterior from observed data.

The observed-variable marginal is pushed back through the inverse model to
give a prior for the hidden variable; that prior may then feed Bayes' rule
(or any other rule).  Inferred quantities can be negative.  They are
flagged, never clipped; :func:`clip_project` is a separate opt-in step.
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass, field

import numpy as np

from .dist import (
    DEFAULT_TOL,
    JointDist,
    ProbVector,
    QuasiStochasticMatrix,
    QuasiVector,
    Tolerances,
    _vector,
    as_array,
    condition_number,
    diag_inv,
    invert,
    is_product,
)
from .errors import (
    DegenerateError,
    DimensionMismatch,
    EmptySample,
    InputError,
    InvalidDistribution,
    NotNormalized,
    ProductDistribution,
)
from .rules import BAYES, RuleContext, RuleExpr, rule_posterior


@dataclass(frozen=True)
class EmpiricalMarginal:
    counts: tuple[int, ...]
    n: int
    estimate: ProbVector


def estimate_from_counts(counts, labels=()) -> EmpiricalMarginal:
    """Relative frequencies ``counts / n``."""
    c = np.asarray(counts)
    if c.ndim != 1 or c.size == 0:
        raise DimensionMismatch("counts must be a non-empty 1-d sequence")
    if not np.all(np.equal(np.mod(c, 1), 0)) or np.any(c < 0):
        raise InvalidDistribution(f"counts must be non-negative integers, got {c.tolist()}")
    c = c.astype(np.int64)
    n = int(c.sum())
    if n == 0:
        raise EmptySample("no observations")
    return EmpiricalMarginal(tuple(c.tolist()), n, ProbVector(c / n, labels))


@dataclass(frozen=True)
class Diagnostics:
    column_deviation: np.ndarray
    min_prior_entry: float
    negative_prior: bool
    negative_posterior: bool
    condition: float

    @property
    def max_column_deviation(self) -> float:
        return float(self.column_deviation.max()) if self.column_deviation.size else 0.0


@dataclass(frozen=True)
class InferenceResult:
    inferred_prior: QuasiVector
    posterior: QuasiStochasticMatrix
    diagnostics: Diagnostics
    rule: str = field(default="bayes")


def _observed(model: np.ndarray, observed, tol: Tolerances) -> np.ndarray:
    o = as_array(observed)
    if o.shape != (model.shape[0],):
        raise DimensionMismatch(f"observed has shape {o.shape}, model expects ({model.shape[0]},)")
    if abs(o.sum() - 1.0) > tol.sum_tol:
        raise NotNormalized(f"observed marginal sums to {o.sum()!r}")
    return o


def infer_hidden_marginal(model, observed, tol: Tolerances | None = None) -> QuasiVector:
    """Hidden-variable marginal ``inv(P(A|B)) @ P(A)``.

    The columns of the inverse of a column-stochastic matrix also sum to
    one, so the result is normalized whenever ``observed`` is; its entries
    may still be negative.
    """
    tol = tol or DEFAULT_TOL
    m = as_array(model)
    o = _observed(m, observed, tol)
    invert(m, tol)  # raises on singular / ill-conditioned models
    est = np.linalg.solve(m, o)
    return _vector(est, getattr(model, "cols", ()), tol)


def column_sum_diagnostic(posterior) -> np.ndarray:
    """Per-column ``|sum - 1|``."""
    return np.abs(as_array(posterior).sum(axis=0) - 1.0)


def _diagnostics(prior: np.ndarray, post: np.ndarray, cond: float, tol: Tolerances) -> Diagnostics:
    return Diagnostics(
        column_deviation=column_sum_diagnostic(post),
        min_prior_entry=float(prior.min()),
        negative_prior=bool(np.any(prior < -tol.sum_tol)),
        negative_posterior=bool(np.any(post < -tol.sum_tol)),
        condition=cond,
    )


def posterior_with_inferred_prior(model, observed, tol: Tolerances | None = None) -> InferenceResult:
    """Bayes posterior using a prior inferred from the data itself.

    Computes ``diag(inv(P(A|B)) @ P~(A)) @ P(A|B).T @ inv(diag(P~(A)))``.
    Its columns sum to one for any observed vector with non-zero entries,
    and it tends to the exact Bayes posterior as ``P~(A) -> P(A)``.
    """
    tol = tol or DEFAULT_TOL
    m = as_array(model)
    o = _observed(m, observed, tol)
    prior = infer_hidden_marginal(model, o, tol)
    post = np.diag(prior.entries) @ m.T @ diag_inv(o, tol)
    rows = getattr(model, "cols", ())
    cols = getattr(model, "rows", ()) or getattr(observed, "labels", ())
    posterior = QuasiStochasticMatrix(post, rows, cols, tol=tol, check=False)
    return InferenceResult(prior, posterior, _diagnostics(prior.entries, post, condition_number(m), tol), "bayes")


def infer(model, observed, rule: RuleExpr = BAYES, tol: Tolerances | None = None) -> InferenceResult:
    """Infer the hidden prior, then apply ``rule`` with the observed marginal as ``P(A)``."""
    tol = tol or DEFAULT_TOL
    m = as_array(model)
    o = _observed(m, observed, tol)
    prior = infer_hidden_marginal(model, o, tol)
    ctx = RuleContext(
        m,
        prior.entries,
        o,
        labels_a=getattr(model, "rows", ()) or getattr(observed, "labels", ()),
        labels_b=getattr(model, "cols", ()),
        tol=tol,
        check=False,
    )
    post = rule_posterior(rule, ctx)
    return InferenceResult(prior, post, _diagnostics(prior.entries, post.entries, condition_number(m), tol), str(rule))


def clip_project(v, tol: Tolerances | None = None) -> ProbVector:
    """Clip negative entries to zero and renormalize.

    This imposes a Kolmogorov projection and is outside the signed
    formalism the rest of the package works in.
    """
    tol = tol or DEFAULT_TOL
    a = np.clip(as_array(v), 0.0, None)
    total = a.sum()
    if total <= 0:
        raise InvalidDistribution("no positive mass left after clipping")
    return ProbVector(a / total, getattr(v, "labels", ()), tol=tol)


# --- experiments ----------------------------------------------------------

CSV_COLUMNS = ("n", "repetition", "seed", "metric", "error_prior", "error_posterior", "min_entry", "max_colsum_dev")

METRICS = {
    "l1": lambda d: float(np.abs(d).sum()),
    "linf": lambda d: float(np.abs(d).max()),
}


def _metric(name: str):
    try:
        return METRICS[name]
    except KeyError:
        raise InputError(f"unknown metric {name!r}; choose from {sorted(METRICS)}") from None


def substream_seed(seed: int, n: int, repetition: int) -> int:
    """Seed of the independent stream used for one (n, repetition) cell."""
    return int(np.random.SeedSequence([int(seed), int(n), int(repetition)]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    repetition: int
    seed: int
    metric: str
    error_prior: float
    error_posterior: float
    min_entry: float
    max_colsum_dev: float


@dataclass
class ExperimentReport:
    rows: list[ExperimentRow]
    seed: int
    rule: str
    metric: str

    def median_errors(self, column: str = "error_prior") -> dict[int, float]:
        by_n: dict[int, list[float]] = {}
        for row in self.rows:
            by_n.setdefault(row.n, []).append(getattr(row, column))
        return {n: statistics.median(v) for n, v in by_n.items()}

    @property
    def negative_count(self) -> int:
        return sum(row.min_entry < 0 for row in self.rows)

    def to_csv(self, header: dict | None = None) -> str:
        buf = io.StringIO()
        for key, value in (header or {}).items():
            buf.write(f"# {key}={value}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
        return buf.getvalue()


def _fmt(x) -> str:
    return repr(x) if isinstance(x, float) else str(x)


def _truth_context(truth: JointDist, tol: Tolerances) -> RuleContext:
    if is_product(truth, atol=tol.sum_tol):
        raise ProductDistribution("truth is a product distribution; the hidden marginal is not identifiable")
    ctx = RuleContext.from_joint(truth, tol)
    invert(ctx.model, tol)
    return ctx


def convergence_experiment(
    truth: JointDist,
    rule: RuleExpr = BAYES,
    sample_sizes=(100, 10_000, 1_000_000),
    seed: int = 0,
    metric: str = "l1",
    reps: int = 1,
    tol: Tolerances | None = None,
) -> ExperimentReport:
    """Sample the observed variable, infer the hidden one, record the error.

    For every sample size ``n`` and repetition, ``n`` draws of A are taken
    from the truth's A-marginal on a private stream seeded by
    :func:`substream_seed`.  ``error_prior`` compares the inferred prior with
    the exact ``P(B)``; ``error_posterior`` compares the rule's posterior
    with the same rule's posterior under the exact marginals (for Bayes,
    the exact Bayes posterior).  A posterior that cannot be formed because
    some outcome was never observed is recorded as NaN.
    """
    tol = tol or getattr(truth, "tol", DEFAULT_TOL)
    sizes = [int(n) for n in sample_sizes]
    if not sizes:
        raise InputError("at least one sample size is required")
    if any(n <= 0 for n in sizes) or reps < 1:
        raise InputError("sample sizes and repetitions must be positive")
    err = _metric(metric)
    ctx = _truth_context(truth, tol)
    reference = rule_posterior(rule, ctx).entries
    pa = np.clip(ctx.prior_a, 0.0, None)
    pa = pa / pa.sum()

    rows = []
    for n in sizes:
        for rep in range(reps):
            s = substream_seed(seed, n, rep)
            counts = np.random.default_rng(s).multinomial(n, pa)
            observed = counts / n
            prior = infer_hidden_marginal(ctx.model, observed, tol).entries
            try:
                post = infer(ctx.model, observed, rule, tol).posterior.entries
                e_post = err(post - reference)
                dev = float(column_sum_diagnostic(post).max())
            except DegenerateError:
                e_post = dev = float("nan")
            rows.append(
                ExperimentRow(n, rep, s, metric, err(prior - ctx.prior_b), e_post, float(prior.min()), dev)
            )
    return ExperimentReport(rows, int(seed), str(rule), metric)


def perturbation_errors(truth: JointDist, epsilons, direction=None, metric: str = "l1", tol: Tolerances | None = None):
    """Error of the inferred prior when ``P(A)`` is shifted by ``eps * direction``.

    ``direction`` must sum to zero; it defaults to ``(1, -1, 0, ...)``.
    The map is affine, so the error is exactly ``|eps| * ||inv(P(A|B)) @ direction||``.
    """
    tol = tol or getattr(truth, "tol", DEFAULT_TOL)
    err = _metric(metric)
    ctx = _truth_context(truth, tol)
    if direction is None:
        direction = np.zeros(ctx.shape[0])
        direction[:2] = (1.0, -1.0)
    direction = np.asarray(direction, dtype=float)
    if abs(direction.sum()) > tol.sum_tol:
        raise InputError("perturbation direction must sum to zero")
    out = []
    for eps in epsilons:
        prior = infer_hidden_marginal(ctx.model, ctx.prior_a + eps * direction, tol).entries
        out.append(err(prior - ctx.prior_b))
    return np.array(out)
