"""Probability over ordered sequences of outcomes.

With ``N`` finite variables, every ordering ``s`` of the variables has a
space ``E_s`` of full sequences (one outcome per variable, laid out in the
order ``s``) and a closure ``F_s`` of their subsequences.  A probability
assignment gives a real number, possibly negative, to each full sequence of
each ordering; the probability of a partial sequence is the sum over the full
sequences that contain it.  :func:`check_axioms` tests normalization,
additivity, and the requirement that marginals over a subset of variables
depend only on the relative order of that subset.

Everything is enumerated explicitly, so spaces are capped at four variables
with at most five outcomes each.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import DimensionMismatch, InputError, InvalidDistribution, OrderMismatch, SequenceSpaceTooLarge

MAX_VARIABLES = 4
MAX_ALPHABET = 5
MAX_VIOLATIONS = 100


@dataclass(frozen=True)
class VariableSpec:
    name: str
    alphabet: tuple[str, ...]

    def __post_init__(self):
        alphabet = tuple(str(a) for a in self.alphabet)
        if not alphabet:
            raise InvalidDistribution(f"variable {self.name!r} has no outcomes")
        if len(set(alphabet)) != len(alphabet):
            raise InvalidDistribution(f"variable {self.name!r} repeats an outcome label")
        object.__setattr__(self, "alphabet", alphabet)

    def __len__(self):
        return len(self.alphabet)


@dataclass(frozen=True)
class Ordering:
    """``perm[k]`` is the index of the variable at position ``k`` (0-based)."""

    perm: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(i) for i in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise InvalidDistribution(f"{perm} is not a permutation of 0..{len(perm) - 1}")
        object.__setattr__(self, "perm", perm)

    def position(self, var: int) -> int:
        return self.perm.index(var)


@dataclass(frozen=True)
class Sequence:
    """Outcomes as ``(variable index, label)`` pairs, in the order they occur."""

    items: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        items = tuple((int(v), str(x)) for v, x in self.items)
        variables = [v for v, _ in items]
        if len(set(variables)) != len(variables):
            raise InvalidDistribution("a variable appears twice in one sequence")
        object.__setattr__(self, "items", items)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.items)

    @property
    def membership(self) -> frozenset:
        return frozenset(self.items)

    def __len__(self):
        return len(self.items)

    def has_order(self, s: Ordering) -> bool:
        """True iff this sequence lies in ``F_s``."""
        pos = [s.position(v) for v in self.variables]
        return all(a < b for a, b in zip(pos, pos[1:]))


def is_subsequence(q: Sequence, other: Sequence) -> bool:
    """True iff ``q`` is obtained from ``other`` by deleting elements."""
    it = iter(other.items)
    return all(item in it for item in q.items)


def included_in(q: Sequence, other: Sequence, s: Ordering) -> bool:
    """Membership-set inclusion between two sequences that both have order ``s``."""
    return q.has_order(s) and other.has_order(s) and q.membership <= other.membership


class SequenceSpace:
    """The variables together with every ordering's sequence sets."""

    def __init__(self, variables: Iterable[VariableSpec]):
        self.variables = tuple(variables)
        if not self.variables:
            raise InputError("at least one variable is required")
        if len(self.variables) > MAX_VARIABLES:
            raise SequenceSpaceTooLarge(f"at most {MAX_VARIABLES} variables, got {len(self.variables)}")
        for var in self.variables:
            if len(var) > MAX_ALPHABET:
                raise SequenceSpaceTooLarge(f"variable {var.name!r} has more than {MAX_ALPHABET} outcomes")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise InvalidDistribution("variable names must be unique")
        self._index = {name: i for i, name in enumerate(names)}
        self.orderings = tuple(Ordering(p) for p in itertools.permutations(range(len(self.variables))))
        self._full_cache: dict[Ordering, tuple[Sequence, ...]] = {}

    @property
    def n(self) -> int:
        return len(self.variables)

    def ordering(self, *names: str) -> Ordering:
        try:
            return Ordering(tuple(self._index[name] for name in names))
        except KeyError as exc:
            raise InputError(f"unknown variable {exc.args[0]!r}") from None

    def ordering_names(self, s: Ordering) -> tuple[str, ...]:
        return tuple(self.variables[i].name for i in s.perm)

    def sequence(self, *tokens) -> Sequence:
        """Build a sequence from outcome labels or ``(variable name, label)`` pairs."""
        items = []
        for tok in tokens:
            if isinstance(tok, tuple):
                name, label = tok
                var = self._index[name]
            else:
                owners = [i for i, v in enumerate(self.variables) if str(tok) in v.alphabet]
                if len(owners) != 1:
                    raise InputError(f"label {tok!r} does not identify a unique variable")
                var, label = owners[0], tok
            if str(label) not in self.variables[var].alphabet:
                raise InputError(f"{label!r} is not an outcome of {self.variables[var].name!r}")
            items.append((var, label))
        return Sequence(tuple(items))

    def _require_order(self, q: Sequence, s: Ordering):
        if len(s.perm) != self.n:
            raise OrderMismatch("ordering length differs from the number of variables")
        if not q.has_order(s):
            raise OrderMismatch(f"sequence {q.items} does not have order {self.ordering_names(s)}")

    def full(self, s: Ordering) -> tuple[Sequence, ...]:
        """``E_s``: all ``prod(M_i)`` full sequences of order ``s``, lexicographically."""
        if s not in self._full_cache:
            alphabets = [self.variables[v].alphabet for v in s.perm]
            self._full_cache[s] = tuple(
                Sequence(tuple(zip(s.perm, combo))) for combo in itertools.product(*alphabets)
            )
        return self._full_cache[s]

    def partial(self, s: Ordering) -> tuple[Sequence, ...]:
        """``F_s``: every subsequence of a member of ``E_s``, empty and full included."""
        out = []
        for k in range(self.n + 1):
            for positions in itertools.combinations(range(self.n), k):
                vars_ = [s.perm[p] for p in positions]
                for combo in itertools.product(*(self.variables[v].alphabet for v in vars_)):
                    out.append(Sequence(tuple(zip(vars_, combo))))
        return tuple(out)

    def containing_set(self, q: Sequence, s: Ordering) -> frozenset:
        """``R_s(q)``: the full sequences of order ``s`` that contain ``q``."""
        self._require_order(q, s)
        members = q.membership
        return frozenset(f for f in self.full(s) if members <= f.membership)

    def meet(self, q1: Sequence, q2: Sequence, s: Ordering) -> frozenset:
        return self.containing_set(q1, s) & self.containing_set(q2, s)

    def join(self, q1: Sequence, q2: Sequence, s: Ordering) -> frozenset:
        return self.containing_set(q1, s) | self.containing_set(q2, s)

    def _outcome_table(self, s: Ordering) -> np.ndarray:
        """``(|E_s|, N)`` outcome indices, columns indexed by variable."""
        full = self.full(s)
        table = np.empty((len(full), self.n), dtype=np.int64)
        for r, q in enumerate(full):
            for v, label in q.items:
                table[r, v] = self.variables[v].alphabet.index(label)
        return table

    def _masks(self, s: Ordering, partials: tuple[Sequence, ...]) -> np.ndarray:
        table = self._outcome_table(s)
        masks = np.ones((len(partials), len(table)), dtype=bool)
        for k, q in enumerate(partials):
            for v, label in q.items:
                masks[k] &= table[:, v] == self.variables[v].alphabet.index(label)
        return masks


@dataclass(frozen=True, eq=False)
class ProbabilityAssignment:
    """A real value for every full sequence of every ordering."""

    space: SequenceSpace
    values: Mapping[tuple[Ordering, Sequence], float]
    _tables: dict = field(init=False, repr=False)

    def __post_init__(self):
        tables = {}
        for s in self.space.orderings:
            try:
                tables[s] = np.array([float(self.values[(s, q)]) for q in self.space.full(s)])
            except KeyError as exc:
                raise InputError(f"no value for {exc.args[0][1].items} under ordering "
                                 f"{self.space.ordering_names(exc.args[0][0])}") from None
        object.__setattr__(self, "_tables", tables)

    def table(self, s: Ordering) -> np.ndarray:
        """Values aligned with ``space.full(s)``."""
        return self._tables[s]

    def __getitem__(self, key: tuple[Ordering, Sequence]) -> float:
        return float(self.values[key])

    @classmethod
    def from_function(cls, space: SequenceSpace, f: Callable[[Ordering, Sequence], float]):
        return cls(space, {(s, q): f(s, q) for s in space.orderings for q in space.full(s)})

    @classmethod
    def from_tables(cls, space: SequenceSpace, tables: Mapping[Ordering, np.ndarray]):
        """One array per ordering, axis ``k`` indexed by the outcomes of the variable at position ``k``."""
        values = {}
        for s in space.orderings:
            if s not in tables:
                raise InputError(f"no table for ordering {space.ordering_names(s)}")
            t = np.asarray(tables[s], dtype=float)
            expected = tuple(len(space.variables[v]) for v in s.perm)
            if t.shape != expected:
                raise DimensionMismatch(f"table for {space.ordering_names(s)} has shape {t.shape}, expected {expected}")
            for q, x in zip(space.full(s), t.reshape(-1)):
                values[(s, q)] = float(x)
        return cls(space, values)

    @classmethod
    def symmetric(cls, space: SequenceSpace, joint) -> "ProbabilityAssignment":
        """Kolmogorov-style assignment: every ordering sees the same joint.

        ``joint`` is indexed by variable (axis ``i`` = variable ``i``), not by position.
        """
        joint = np.asarray(joint, dtype=float)
        tables = {s: np.transpose(joint, s.perm) for s in space.orderings}
        return cls.from_tables(space, tables)

    @classmethod
    def from_two_variable(cls, forward, reverse) -> "ProbabilityAssignment":
        """Assignment from a joint ``P(A, B)`` and an opposite-ordering joint ``P(B, A)``.

        ``forward`` has rows A and columns B and serves the ordering where B
        precedes A; ``reverse`` (rows B, columns A) serves the other one.
        """
        space = SequenceSpace([
            VariableSpec(getattr(forward, "row_var", "A"), getattr(forward, "rows", ()) or _default(forward, 0, "a")),
            VariableSpec(getattr(forward, "col_var", "B"), getattr(forward, "cols", ()) or _default(forward, 1, "b")),
        ])
        f = np.asarray(getattr(forward, "entries", forward), dtype=float)
        r = np.asarray(getattr(reverse, "entries", reverse), dtype=float)
        if r.shape != f.T.shape:
            raise DimensionMismatch(f"reverse joint shape {r.shape} should be {f.T.shape}")
        b_first = space.ordering(space.variables[1].name, space.variables[0].name)
        a_first = space.ordering(space.variables[0].name, space.variables[1].name)
        # tables are indexed by position: (B, A) for b_first and (A, B) for a_first
        return cls.from_tables(space, {b_first: f.T, a_first: r.T})


def _default(m, axis, prefix):
    n = np.asarray(getattr(m, "entries", m)).shape[axis]
    return tuple(f"{prefix}{i + 1}" for i in range(n))


def marginal(p: ProbabilityAssignment, q: Sequence, s: Ordering | None = None) -> float:
    """Sum of ``P`` over ``R_s(q)``; ``s`` defaults to the first ordering ``q`` has."""
    space = p.space
    if s is None:
        s = next((o for o in space.orderings if q.has_order(o)), None)
        if s is None:
            raise OrderMismatch("sequence has no valid ordering")
    members = space.containing_set(q, s)
    return math.fsum(p[(s, f)] for f in members)


@dataclass(frozen=True)
class Violation:
    ordering: tuple[str, ...]
    sequence: tuple
    magnitude: float


@dataclass
class AxiomResult:
    name: str
    checked: int = 0
    violations: list[Violation] = field(default_factory=list)
    violation_count: int = 0
    max_magnitude: float = 0.0

    @property
    def passed(self) -> bool:
        return self.violation_count == 0

    def record(self, ordering, sequence, magnitude: float, failed: bool):
        self.checked += 1
        self.max_magnitude = max(self.max_magnitude, float(magnitude))
        if failed:
            self._violate(ordering, sequence, magnitude)

    def record_batch(self, ordering, gaps: np.ndarray, tol: float, describe: Callable[[int], tuple]):
        """Record many instances at once; ``describe(k)`` names instance ``k`` on failure."""
        self.checked += len(gaps)
        if len(gaps):
            self.max_magnitude = max(self.max_magnitude, float(gaps.max()))
        for k in np.flatnonzero(gaps > tol):
            self._violate(ordering, describe(k), gaps[k])

    def _violate(self, ordering, sequence, magnitude):
        self.violation_count += 1
        if len(self.violations) < MAX_VIOLATIONS:
            self.violations.append(Violation(ordering, sequence, float(magnitude)))


@dataclass
class AxiomReport:
    tol: float
    results: dict[str, AxiomResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failed(self) -> list[str]:
        return [name for name, r in self.results.items() if not r.passed]

    def __getitem__(self, name: str) -> AxiomResult:
        return self.results[name]


AXIOMS = ("real_valued", "normalization", "additivity", "causality")


def _labels(space: SequenceSpace, q: Sequence) -> tuple:
    return tuple(f"{space.variables[v].name}={x}" for v, x in q.items)


def check_axioms(p: ProbabilityAssignment, tol: float = 1e-10) -> AxiomReport:
    """Check every axiom instance of ``p`` and list the violations.

    * ``real_valued``: each full-sequence value is a finite real.  Negative
      values are allowed.
    * ``normalization``: ``P(E_s) = 1`` for every ordering.
    * ``additivity``: for every pair of partial sequences with an empty meet,
      the mass of their join equals the sum of their masses.
    * ``causality``: a partial sequence valid under several orderings has the
      same marginal under each of them.
    """
    space = p.space
    res = {name: AxiomResult(name) for name in AXIOMS}
    shared: dict[tuple, list[tuple[Ordering, float]]] = {}

    for s in space.orderings:
        names = space.ordering_names(s)
        full = space.full(s)
        v = p.table(s)
        for q, x in zip(full, v):
            res["real_valued"].record(names, _labels(space, q), 0.0 if np.isfinite(x) else float("inf"),
                                      not np.isfinite(x))
        if not np.all(np.isfinite(v)):
            continue
        total = math.fsum(v)
        res["normalization"].record(names, (), abs(total - 1.0), abs(total - 1.0) > tol)

        partials = space.partial(s)
        masks = space._masks(s, partials)
        masses = masks.astype(float) @ v
        for q, m in zip(partials, masses):
            shared.setdefault(q.items, []).append((s, float(m)))

        add = res["additivity"]
        for i in range(len(partials) - 1):
            rest = masks[i + 1:]
            disjoint = ~(rest & masks[i]).any(axis=1)
            if not disjoint.any():
                continue
            idx = np.flatnonzero(disjoint) + i + 1
            union_mass = (masks[idx] | masks[i]).astype(float) @ v
            gaps = np.abs(union_mass - (masses[i] + masses[idx]))
            add.record_batch(
                names, gaps, tol,
                lambda k, i=i, idx=idx: (_labels(space, partials[i]), _labels(space, partials[idx[k]])),
            )

    cause = res["causality"]
    for items, entries in shared.items():
        if len(entries) < 2:
            continue
        base = entries[0][1]
        gap = max(abs(m - base) for _, m in entries[1:])
        worst = max(entries[1:], key=lambda e: abs(e[1] - base))[0]
        cause.record(space.ordering_names(worst), _labels(space, Sequence(items)), gap, gap > tol)

    return AxiomReport(tol, res)
