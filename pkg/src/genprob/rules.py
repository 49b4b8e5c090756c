"""Inference rules parameterized by R-matrices.

A rule fixes the reverse conditional through

    P(B|A) = diag(P(B)) @ inv(R) @ inv(diag(P(A)))

and is consistent with the forward model exactly when ``R @ 1_B = 1_A`` and
``R.T @ P(A) = P(B)``.  Bayes' rule and the inversion rule are the two
extremes of the first-order family ``R = p * R_I + (1 - p) * R_K``; odd
alternating products ``R1 @ inv(R2) @ R3 ...`` give higher-order rules.

Mixing happens at the R level.  The posterior of ``r_mix(ctx, 0.5)`` is the
inverse of the averaged R, *not* the average of the two endpoint posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .dist import (
    DEFAULT_TOL,
    JointDist,
    QuasiStochasticMatrix,
    Tolerances,
    as_array,
    conditional_from_joint,
    default_labels,
    diag_inv,
    invert,
    marginals,
)
from .errors import (
    DegenerateError,
    DimensionMismatch,
    DomainError,
    EvenLength,
    InconsistentContext,
    NotNormalized,
    NotSquare,
    RuleSpecError,
)


@dataclass(frozen=True, eq=False)
class RuleContext:
    """Forward model ``P(A|B)`` with the two marginals a rule is built against.

    ``prior_a`` defaults to ``model @ prior_b``.  Pass ``check=False`` to
    build a deliberately inconsistent context, e.g. to feed a rule the wrong
    ``P(A)`` when probing the third-order convergence diagnostic.
    """

    model: np.ndarray
    prior_b: np.ndarray
    prior_a: np.ndarray | None = None
    labels_a: tuple[str, ...] = ()
    labels_b: tuple[str, ...] = ()
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        labels_a = self.labels_a or getattr(self.model, "rows", ())
        labels_b = self.labels_b or getattr(self.model, "cols", ()) or getattr(self.prior_b, "labels", ())
        model = np.array(as_array(self.model), dtype=float)
        prior_b = np.array(as_array(self.prior_b), dtype=float)
        if model.ndim != 2 or prior_b.shape != (model.shape[1],):
            raise DimensionMismatch(f"model {model.shape} and prior_b {prior_b.shape} disagree")
        prior_a = model @ prior_b if self.prior_a is None else np.array(as_array(self.prior_a), dtype=float)
        if prior_a.shape != (model.shape[0],):
            raise DimensionMismatch(f"prior_a has shape {prior_a.shape}, expected ({model.shape[0]},)")
        for a in (model, prior_b, prior_a):
            a.setflags(write=False)
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "prior_b", prior_b)
        object.__setattr__(self, "prior_a", prior_a)
        object.__setattr__(self, "labels_a", tuple(labels_a or default_labels("a", model.shape[0])))
        object.__setattr__(self, "labels_b", tuple(labels_b or default_labels("b", model.shape[1])))
        if self.check:
            self._validate()

    def _validate(self):
        tol = self.tol.sum_tol
        col_dev = np.abs(self.model.sum(axis=0) - 1.0).max()
        if col_dev > tol:
            raise NotNormalized(f"model columns deviate from 1 by {col_dev:.3g}")
        if abs(self.prior_b.sum() - 1.0) > tol:
            raise NotNormalized(f"prior_b sums to {self.prior_b.sum()!r}")
        gap = np.abs(self.model @ self.prior_b - self.prior_a).max()
        if gap > tol:
            raise InconsistentContext(f"prior_a differs from model @ prior_b by {gap:.3g}")

    @classmethod
    def from_joint(cls, joint: JointDist, tol: Tolerances | None = None) -> "RuleContext":
        tol = tol or getattr(joint, "tol", DEFAULT_TOL)
        pa, pb = marginals(joint, tol)
        model = conditional_from_joint(joint, tol)
        return cls(model.entries, pb.entries, pa.entries, model.rows, model.cols, tol=tol)

    @property
    def shape(self) -> tuple[int, int]:
        return self.model.shape

    def with_prior_a(self, prior_a) -> "RuleContext":
        return RuleContext(self.model, self.prior_b, prior_a, self.labels_a, self.labels_b, tol=self.tol, check=False)


def _support_ones(p: np.ndarray, tol: Tolerances) -> np.ndarray:
    return (np.abs(p) > tol.support_eps).astype(float)


@dataclass(frozen=True, eq=False)
class RMatrix:
    """An R-matrix together with the context it was built against.

    ``inverse`` may carry a known inverse so posteriors need not invert
    ``entries`` (composite rules are far worse conditioned than their
    terms).  Both consistency residuals are evaluated once, at construction.
    """

    entries: np.ndarray
    context: RuleContext
    name: str = "custom"
    inverse: np.ndarray | None = field(default=None, repr=False)
    ones_residual: float = field(init=False)
    marginal_residual: float = field(init=False)

    def __post_init__(self):
        r = np.array(as_array(self.entries), dtype=float)
        ctx = self.context
        if r.shape != ctx.shape:
            raise DimensionMismatch(f"R has shape {r.shape}, context expects {ctx.shape}")
        r.setflags(write=False)
        object.__setattr__(self, "entries", r)
        if self.inverse is not None:
            inv = np.array(self.inverse, dtype=float)
            if inv.shape != r.shape[::-1]:
                raise DimensionMismatch(f"inverse has shape {inv.shape}, expected {r.shape[::-1]}")
            inv.setflags(write=False)
            object.__setattr__(self, "inverse", inv)
        ones_b = _support_ones(ctx.prior_b, ctx.tol)
        ones_a = _support_ones(ctx.prior_a, ctx.tol)
        object.__setattr__(self, "ones_residual", float(np.abs(r @ ones_b - ones_a).max()))
        object.__setattr__(self, "marginal_residual", float(np.abs(r.T @ ctx.prior_a - ctx.prior_b).max()))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def r_bayes(ctx: RuleContext) -> RMatrix:
    """``R_K = inv(P(A|B).T)``, the R-matrix that reproduces Bayes' rule."""
    if ctx.shape[0] != ctx.shape[1]:
        raise NotSquare("Bayes R-matrix needs a square model")
    return RMatrix(invert(ctx.model.T, ctx.tol), ctx, "bayes", inverse=ctx.model.T)


def r_inversion(ctx: RuleContext) -> RMatrix:
    """``R_I = inv(diag(P(A))) @ P(A|B) @ diag(P(B))``; its posterior is ``inv(P(A|B))``."""
    r = diag_inv(ctx.prior_a, ctx.tol) @ ctx.model @ np.diag(ctx.prior_b)
    return RMatrix(r, ctx, "inversion")


def r_zeroth(ctx: RuleContext) -> RMatrix:
    """The zeroth-order R-matrix ``1_A P(B)^T``.

    It satisfies both consistency conditions but is singular for
    ``N > 1``; the zeroth-order posterior (every column equal to ``P(B)``)
    is therefore produced by :func:`zeroth_posterior`, not via the R route.
    """
    if ctx.shape[0] != ctx.shape[1]:
        raise NotSquare("no zeroth-order R-matrix exists for a rectangular model")
    diag_inv(ctx.prior_a, ctx.tol)
    diag_inv(ctx.prior_b, ctx.tol)
    return RMatrix(np.outer(np.ones(ctx.shape[0]), ctx.prior_b), ctx, "zeroth")


def _check_p(p) -> float:
    try:
        p = float(p)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"mixing weight {p!r} is not a number") from exc
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"mixing weight {p!r} outside [0, 1]")
    return p


def r_mix(ctx: RuleContext, p: float) -> RMatrix:
    """First-order rule ``p * R_I + (1 - p) * R_K``.  ``p = 0`` is Bayes, ``p = 1`` inversion."""
    p = _check_p(p)
    if p == 0.0:
        return r_bayes(ctx)
    if p == 1.0:
        return r_inversion(ctx)
    r = p * r_inversion(ctx).entries + (1.0 - p) * r_bayes(ctx).entries
    return RMatrix(r, ctx, f"mix:{p!r}")


def posterior_from_r(r: RMatrix, ctx: RuleContext | None = None) -> QuasiStochasticMatrix:
    """Reverse conditional ``P(B|A) = diag(P(B)) @ inv(R) @ inv(diag(P(A)))``."""
    ctx = ctx or r.context
    r_inv = r.inverse if r.inverse is not None else invert(as_array(r), ctx.tol)
    post = np.diag(ctx.prior_b) @ r_inv @ diag_inv(ctx.prior_a, ctx.tol)
    return QuasiStochasticMatrix(post, ctx.labels_b, ctx.labels_a, tol=ctx.tol, check=ctx.check)


def bayes_posterior(ctx: RuleContext) -> QuasiStochasticMatrix:
    """Bayes' rule written out directly: ``diag(P(B)) @ P(A|B).T @ inv(diag(P(A)))``."""
    post = np.diag(ctx.prior_b) @ ctx.model.T @ diag_inv(ctx.prior_a, ctx.tol)
    return QuasiStochasticMatrix(post, ctx.labels_b, ctx.labels_a, tol=ctx.tol, check=ctx.check)


def zeroth_posterior(ctx: RuleContext) -> QuasiStochasticMatrix:
    post = np.outer(ctx.prior_b, np.ones(ctx.shape[0]))
    return QuasiStochasticMatrix(post, ctx.labels_b, ctx.labels_a, tol=ctx.tol, check=ctx.check)


@dataclass(frozen=True)
class ValidationReport:
    ones_residual: float
    marginal_residual: float
    column_deviation: float | None
    tol: float

    @property
    def ones_ok(self) -> bool:
        return self.ones_residual <= self.tol

    @property
    def marginal_ok(self) -> bool:
        return self.marginal_residual <= self.tol

    @property
    def columns_ok(self) -> bool:
        # A singular R has no posterior to check.
        return self.column_deviation is None or self.column_deviation <= self.tol

    @property
    def passed(self) -> bool:
        return self.ones_ok and self.marginal_ok and self.columns_ok


def validate_r(r: RMatrix, ctx: RuleContext | None = None, tol: float | None = None) -> ValidationReport:
    """Residuals of both consistency conditions, plus the posterior column-sum deviation."""
    if ctx is not None and ctx is not r.context:
        r = RMatrix(r.entries, ctx, r.name, inverse=r.inverse)
    ctx = r.context
    tol = ctx.tol.sum_tol if tol is None else tol
    try:
        post = posterior_from_r(r, ctx.with_prior_a(ctx.prior_a))
        col_dev = float(np.abs(post.entries.sum(axis=0) - 1.0).max())
    except DegenerateError:
        col_dev = None
    return ValidationReport(r.ones_residual, r.marginal_residual, col_dev, tol)


def compose(terms: list[RMatrix]) -> RMatrix:
    """Alternating product ``terms[0] @ inv(terms[1]) @ terms[2] @ ...``.

    All terms must share one context; the term count must be odd.  The
    inverse is kept as the reversed alternating product of the terms, so
    each term is conditioned on its own rather than the product as a whole.
    """
    terms = list(terms)
    if len(terms) % 2 == 0:
        raise EvenLength(f"a composite rule needs an odd number of terms, got {len(terms)}")
    ctx = terms[0].context
    for t in terms[1:]:
        if t.context is not ctx:
            raise InconsistentContext("every term of a composite rule must share one context")
    def inv(t):
        return t.inverse if t.inverse is not None else invert(t.entries, ctx.tol)

    out = terms[0].entries
    back = inv(terms[0])
    for k, t in enumerate(terms[1:], start=1):
        if k % 2:
            out, back = out @ inv(t), t.entries @ back
        else:
            out, back = out @ t.entries, inv(t) @ back
    name = "compose:" + ",".join(t.name for t in terms)
    return RMatrix(out, ctx, name, inverse=back)


# --- rule expressions -----------------------------------------------------


@dataclass(frozen=True)
class Zeroth:
    def __str__(self):
        return "zeroth"


@dataclass(frozen=True)
class FirstOrder:
    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", _check_p(self.p))

    def __str__(self):
        if self.p == 0.0:
            return "bayes"
        if self.p == 1.0:
            return "inversion"
        return f"mix:{self.p!r}"


@dataclass(frozen=True)
class Composite:
    terms: tuple[FirstOrder, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms or len(terms) % 2 == 0:
            raise EvenLength(f"rules only exist at odd orders; got {len(terms)} terms")
        if not all(isinstance(t, FirstOrder) for t in terms):
            raise RuleSpecError("composite terms must be first-order rules")
        object.__setattr__(self, "terms", terms)

    def __str__(self):
        return "compose:" + ",".join(map(str, self.terms))


RuleExpr = Union[Zeroth, FirstOrder, Composite]

BAYES = FirstOrder(0.0)
INVERSION = FirstOrder(1.0)
ZEROTH = Zeroth()
THIRD_ORDER = Composite((BAYES, INVERSION, BAYES))


def _parse_term(text: str) -> FirstOrder:
    if text == "bayes":
        return BAYES
    if text == "inversion":
        return INVERSION
    if text.startswith("mix:"):
        raw = text[4:].strip()
        try:
            p = float(Fraction(raw))
        except (ValueError, ZeroDivisionError) as exc:
            raise RuleSpecError(f"bad mixing weight {raw!r}") from exc
        return FirstOrder(p)
    raise RuleSpecError(f"unknown rule term {text!r}")


def parse_rule(text: str) -> RuleExpr:
    """Parse ``bayes | inversion | zeroth | mix:<p> | compose:<term>,<term>,...``.

    ``p`` may be a decimal or a fraction such as ``1/2``.
    """
    text = text.strip().lower()
    if text == "zeroth":
        return ZEROTH
    if text.startswith("compose:"):
        body = text[len("compose:"):]
        parts = [part.strip() for part in body.split(",")]
        if not body.strip() or any(not part for part in parts):
            raise RuleSpecError(f"empty term in {text!r}")
        return Composite(tuple(_parse_term(part) for part in parts))
    return _parse_term(text)


def build_r(rule: RuleExpr, ctx: RuleContext) -> RMatrix:
    if isinstance(rule, Zeroth):
        return r_zeroth(ctx)
    if isinstance(rule, FirstOrder):
        return r_mix(ctx, rule.p)
    if isinstance(rule, Composite):
        return compose([r_mix(ctx, t.p) for t in rule.terms])
    raise RuleSpecError(f"not a rule expression: {rule!r}")


def rule_posterior(rule: RuleExpr, ctx: RuleContext) -> QuasiStochasticMatrix:
    """Reverse conditional produced by ``rule`` in ``ctx``."""
    if isinstance(rule, Zeroth):
        return zeroth_posterior(ctx)
    return posterior_from_r(build_r(rule, ctx), ctx)
