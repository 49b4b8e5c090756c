"""Finite two-variable distributions and the matrix algebra around them.

Orientation is fixed throughout the package: a conditional ``P(X|Y)`` is an
``N_X x N_Y`` matrix whose *columns* are indexed by the conditioning outcome
and sum to one, so that ``P(X) = P(X|Y) @ P(Y)``.  A joint matrix ``P(X, Y)``
has rows indexed by ``X`` and columns by ``Y``; reading right to left, the
column variable precedes the row variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    IllConditioned,
    InvalidDistribution,
    NotNormalized,
    NotSquare,
    ProductDistribution,
    Singular,
    ZeroMarginal,
)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every check in the package."""

    sum_tol: float = 1e-9
    cond_max: float = 1e8
    support_eps: float = 1e-12

    def __post_init__(self):
        for name in ("sum_tol", "cond_max", "support_eps"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")


DEFAULT_TOL = Tolerances()


def default_labels(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(n))


def _frozen(x, ndim: int) -> np.ndarray:
    a = np.array(getattr(x, "entries", x), dtype=float)
    if a.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidDistribution("entries must be finite")
    a.setflags(write=False)
    return a


def _labels(labels, n: int, prefix: str) -> tuple[str, ...]:
    if not labels:
        return default_labels(prefix, n)
    labels = tuple(str(label) for label in labels)
    if len(labels) != n:
        raise DimensionMismatch(f"{len(labels)} labels for {n} entries")
    if len(set(labels)) != n:
        raise InvalidDistribution(f"duplicate labels in {labels}")
    return labels


def as_array(x) -> np.ndarray:
    """Plain float array view of a distribution object or array_like."""
    return np.asarray(getattr(x, "entries", x), dtype=float)


class _ArrayLike:
    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class QuasiVector(_ArrayLike):
    """Real vector with unit total; entries may be negative or exceed one."""

    entries: np.ndarray
    labels: tuple[str, ...] = ()
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        entries = _frozen(self.entries, 1)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "labels", _labels(self.labels, len(entries), "x"))
        if self.check:
            self._validate()

    def _validate(self):
        total = float(self.entries.sum())
        if abs(total - 1.0) > self.tol.sum_tol:
            raise NotNormalized(f"entries sum to {total!r}, not 1")

    def __len__(self):
        return len(self.entries)

    @property
    def is_proper(self) -> bool:
        return bool(np.all(self.entries >= -self.tol.sum_tol))

    @property
    def min_entry(self) -> float:
        return float(self.entries.min())


@dataclass(frozen=True, eq=False)
class ProbVector(QuasiVector):
    """Non-negative vector summing to one."""

    def _validate(self):
        super()._validate()
        if not self.is_proper:
            raise InvalidDistribution(f"negative entry {self.min_entry!r} in a ProbVector")


@dataclass(frozen=True, eq=False)
class QuasiStochasticMatrix(_ArrayLike):
    """Column-stochastic up to sign: every supported column sums to one.

    ``support`` marks the conditioning outcomes the matrix is defined on;
    columns outside it are held at zero.
    """

    entries: np.ndarray
    rows: tuple[str, ...] = ()
    cols: tuple[str, ...] = ()
    support: tuple[bool, ...] | None = None
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        entries = _frozen(self.entries, 2)
        n_rows, n_cols = entries.shape
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "rows", _labels(self.rows, n_rows, "r"))
        object.__setattr__(self, "cols", _labels(self.cols, n_cols, "c"))
        support = (True,) * n_cols if self.support is None else tuple(map(bool, self.support))
        if len(support) != n_cols:
            raise DimensionMismatch("support mask length must match the column count")
        object.__setattr__(self, "support", support)
        if self.check:
            self._validate()

    def _validate(self):
        dev = self.column_deviation
        if dev.size and dev.max() > self.tol.sum_tol:
            raise NotNormalized(f"column sums deviate from 1 by up to {dev.max():.3g}")

    @property
    def column_deviation(self) -> np.ndarray:
        mask = np.asarray(self.support)
        return np.abs(self.entries[:, mask].sum(axis=0) - 1.0)

    @property
    def is_proper(self) -> bool:
        return bool(np.all(self.entries >= -self.tol.sum_tol))

    @property
    def T(self) -> np.ndarray:
        return self.entries.T


@dataclass(frozen=True, eq=False)
class StochasticMatrix(QuasiStochasticMatrix):
    """Non-negative column-stochastic matrix, e.g. a forward model ``P(A|B)``."""

    def _validate(self):
        super()._validate()
        if not self.is_proper:
            raise InvalidDistribution("negative entry in a StochasticMatrix")


@dataclass(frozen=True, eq=False)
class JointDist(_ArrayLike):
    """Joint matrix ``P(row_var, col_var)`` summing to one.

    The column variable precedes the row variable, so ``ordering`` reads
    ``(col_var, row_var)``.  Reverse-ordering joints may carry signed entries.
    """

    entries: np.ndarray
    rows: tuple[str, ...] = ()
    cols: tuple[str, ...] = ()
    row_var: str = "A"
    col_var: str = "B"
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        entries = _frozen(self.entries, 2)
        n_rows, n_cols = entries.shape
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "rows", _labels(self.rows, n_rows, self.row_var.lower()))
        object.__setattr__(self, "cols", _labels(self.cols, n_cols, self.col_var.lower()))
        if self.row_var == self.col_var:
            raise InvalidDistribution("row and column variables must differ")
        if self.check:
            total = float(entries.sum())
            if abs(total - 1.0) > self.tol.sum_tol:
                raise NotNormalized(f"joint sums to {total!r}, not 1")

    @property
    def ordering(self) -> tuple[str, str]:
        return (self.col_var, self.row_var)

    @property
    def is_proper(self) -> bool:
        return bool(np.all(self.entries >= -self.tol.sum_tol))

    @property
    def total(self) -> float:
        return float(self.entries.sum())


def _vector(entries, labels, tol: Tolerances, check=True) -> QuasiVector:
    entries = np.asarray(entries, dtype=float)
    cls = ProbVector if np.all(entries >= -tol.sum_tol) else QuasiVector
    return cls(entries, labels, tol=tol, check=check)


def _cond_matrix(entries, rows, cols, tol, support=None, check=True) -> QuasiStochasticMatrix:
    entries = np.asarray(entries, dtype=float)
    cls = StochasticMatrix if np.all(entries >= -tol.sum_tol) else QuasiStochasticMatrix
    return cls(entries, rows, cols, support=support, tol=tol, check=check)


def marginals(joint: JointDist, tol: Tolerances | None = None):
    """Row-variable and column-variable marginals of a joint.

    Returns ``(P(row_var), P(col_var))``.  Each is a :class:`ProbVector`
    when non-negative and a :class:`QuasiVector` otherwise.
    """
    tol = tol or getattr(joint, "tol", DEFAULT_TOL)
    a = as_array(joint)
    rows = getattr(joint, "rows", ())
    cols = getattr(joint, "cols", ())
    check = getattr(joint, "check", True)
    return (
        _vector(a.sum(axis=1), rows, tol, check),
        _vector(a.sum(axis=0), cols, tol, check),
    )


def conditional_from_joint(
    joint: JointDist,
    tol: Tolerances | None = None,
    restrict_support: bool = False,
) -> QuasiStochasticMatrix:
    """Conditional ``P(row_var | col_var)`` by dividing each column by its mass.

    Parameters
    ----------
    joint : JointDist or (N_A, N_B) array_like
    tol : Tolerances, optional
    restrict_support : bool
        If True, conditioning outcomes whose mass is at most
        ``tol.support_eps`` are excluded: their columns are zero and the
        returned matrix records them as unsupported.  Otherwise such
        outcomes raise :class:`ZeroMarginal`.
    """
    tol = tol or DEFAULT_TOL
    a = as_array(joint)
    col_mass = a.sum(axis=0)
    supported = np.abs(col_mass) > tol.support_eps
    if not supported.all() and not restrict_support:
        bad = np.flatnonzero(~supported).tolist()
        raise ZeroMarginal(f"conditioning outcomes {bad} carry no mass")
    cond = np.zeros_like(a)
    cond[:, supported] = a[:, supported] / col_mass[supported]
    return _cond_matrix(
        cond,
        getattr(joint, "rows", ()),
        getattr(joint, "cols", ()),
        tol,
        support=tuple(supported),
    )


def joint_from_model(model, prior, tol: Tolerances | None = None) -> JointDist:
    """Joint ``P(A, B)`` with entries ``model[i, j] * prior[j]``."""
    tol = tol or DEFAULT_TOL
    m = as_array(model)
    p = as_array(prior)
    if m.ndim != 2 or p.ndim != 1 or m.shape[1] != p.shape[0]:
        raise DimensionMismatch(f"model shape {m.shape} incompatible with prior length {p.shape}")
    rows = getattr(model, "rows", ())
    cols = getattr(model, "cols", ()) or getattr(prior, "labels", ())
    return JointDist(m * p[None, :], rows, cols, tol=tol)


class InversionInfo(NamedTuple):
    condition: float
    residual: float
    bound: float
    kept_rows: tuple[int, ...]
    kept_cols: tuple[int, ...]

    @property
    def within_bound(self) -> bool:
        return self.residual <= self.bound


def condition_number(m) -> float:
    """2-norm condition number from the extreme singular values."""
    s = np.linalg.svd(as_array(m), compute_uv=False)
    if s.size == 0:
        return 1.0
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def _gate(a: np.ndarray, tol: Tolerances) -> float:
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] <= s[0] * max(a.shape) * _EPS:
        raise Singular(f"matrix is numerically singular (singular values {s})")
    cond = float(s[0] / s[-1])
    if cond > tol.cond_max:
        raise IllConditioned(f"condition number {cond:.3g} exceeds cap {tol.cond_max:.3g}")
    return cond


def support_block(m, tol: Tolerances | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Row and column indices of a full-rank square block of ``m``.

    Rows and columns with no mass above ``tol.support_eps`` are dropped
    first; a pivoted QR then picks a maximal independent set of columns,
    and a second pivoted QR picks matching rows.
    """
    tol = tol or DEFAULT_TOL
    a = as_array(m)
    rows = np.flatnonzero(np.abs(a).max(axis=1) > tol.support_eps)
    cols = np.flatnonzero(np.abs(a).max(axis=0) > tol.support_eps)
    if rows.size == 0 or cols.size == 0:
        raise Singular("matrix has empty support")
    sub = a[np.ix_(rows, cols)]
    _, r, piv = scipy.linalg.qr(sub, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > diag[0] * max(sub.shape) * _EPS)) if diag[0] > 0 else 0
    if rank == 0:
        raise Singular("matrix has rank zero on its support")
    cols = np.sort(cols[piv[:rank]])
    _, _, rpiv = scipy.linalg.qr(a[np.ix_(rows, cols)].T, pivoting=True, mode="economic")
    rows = np.sort(rows[rpiv[:rank]])
    return rows, cols


def invert(m, tol: Tolerances | None = None, *, restrict_support: bool = False, full_output: bool = False):
    """Inverse of a square matrix, gated by its condition number.

    Parameters
    ----------
    m : (N, N) array_like
    tol : Tolerances, optional
        ``cond_max`` caps the accepted condition number.
    restrict_support : bool
        Invert only a full-rank block (see :func:`support_block`) and embed
        the block inverse in an ``(M, N)`` zero matrix, where ``m`` is ``(N, M)``.
    full_output : bool
        Also return an :class:`InversionInfo` with the condition estimate,
        the residual ``||m_block @ inv_block - I||_inf`` and the
        backward-stable bound it is expected to respect.

    Raises
    ------
    NotSquare, Singular, IllConditioned
    """
    tol = tol or DEFAULT_TOL
    a = as_array(m)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {a.shape}")
    if restrict_support:
        rows, cols = support_block(a, tol)
    else:
        if a.shape[0] != a.shape[1]:
            raise NotSquare(f"cannot invert a {a.shape[0]}x{a.shape[1]} matrix")
        rows = cols = np.arange(a.shape[0])
    block = a[np.ix_(rows, cols)]
    cond = _gate(block, tol)
    block_inv = np.linalg.inv(block)
    out = np.zeros((a.shape[1], a.shape[0]))
    out[np.ix_(cols, rows)] = block_inv
    if not full_output:
        return out
    n = block.shape[0]
    residual = float(np.linalg.norm(block @ block_inv - np.eye(n), np.inf))
    bound = 10.0 * n * _EPS * float(np.linalg.norm(block, np.inf) * np.linalg.norm(block_inv, np.inf))
    info = InversionInfo(cond, residual, bound, tuple(rows.tolist()), tuple(cols.tolist()))
    return out, info


def is_product(joint, atol: float | None = None) -> bool:
    """True iff the joint is entrywise within ``atol`` of the outer product of its marginals."""
    a = as_array(joint)
    if atol is None:
        atol = getattr(joint, "tol", DEFAULT_TOL).sum_tol
    outer = np.outer(a.sum(axis=1), a.sum(axis=0))
    return bool(np.all(np.abs(a - outer) <= atol))


def reverse_joint(joint: JointDist, tol: Tolerances | None = None) -> JointDist:
    """Opposite-ordering joint of an invertible two-variable joint.

    For a joint ``P(A, B)`` with marginals ``P(A)`` and ``P(B)`` (as
    diagonal matrices) this returns ``P(B, A) = P(B) P(A, B)^{-1} P(A)``,
    the joint induced by the marginal-free inversion rule.  Its row sums are
    ``P(B)`` and its column sums ``P(A)``, so every marginal is independent
    of the ordering.  Entries may be negative or exceed one.
    """
    tol = tol or getattr(joint, "tol", DEFAULT_TOL)
    a = as_array(joint)
    if a.shape[0] != a.shape[1]:
        raise NotSquare(f"reverse joint needs N_A == N_B, got {a.shape}")
    if a.shape[0] > 1 and is_product(a, atol=tol.sum_tol):
        raise ProductDistribution("a product joint has no opposite-ordering joint")
    inv = invert(a, tol)
    row_mass = a.sum(axis=1)
    col_mass = a.sum(axis=0)
    rev = col_mass[:, None] * inv * row_mass[None, :]
    return JointDist(
        rev,
        rows=getattr(joint, "cols", ()),
        cols=getattr(joint, "rows", ()),
        row_var=getattr(joint, "col_var", "B"),
        col_var=getattr(joint, "row_var", "A"),
        tol=tol,
        check=getattr(joint, "check", True),
    )


def diag_inv(v: Sequence[float], tol: Tolerances | None = None) -> np.ndarray:
    """Inverse of ``diag(v)``; raises :class:`ZeroMarginal` on a vanishing entry."""
    tol = tol or DEFAULT_TOL
    v = as_array(v)
    small = np.abs(v) <= tol.support_eps
    if small.any():
        raise ZeroMarginal(f"marginal entries {np.flatnonzero(small).tolist()} vanish")
    return np.diag(1.0 / v)
