import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genprob import oracle
from genprob.dist import JointDist, reverse_joint
from genprob.errors import InputError, InvalidDistribution, OrderMismatch, SequenceSpaceTooLarge
from genprob.seqprob import (
    AXIOMS,
    MAX_VIOLATIONS,
    Ordering,
    ProbabilityAssignment,
    Sequence,
    SequenceSpace,
    VariableSpec,
    check_axioms,
    included_in,
    is_subsequence,
    marginal,
)


def space_of(*sizes):
    names = "ABCD"
    return SequenceSpace(
        VariableSpec(names[i], tuple(f"{names[i].lower()}{k + 1}" for k in range(m))) for i, m in enumerate(sizes)
    )


@pytest.fixture
def ab():
    return space_of(2, 2)


@pytest.fixture
def j0_assignment(j0):
    return ProbabilityAssignment.from_two_variable(j0, reverse_joint(j0))


class TestTypes:
    def test_ordering_must_be_permutation(self):
        with pytest.raises(InvalidDistribution):
            Ordering((0, 0))

    def test_sequence_repeats_variable(self):
        with pytest.raises(InvalidDistribution):
            Sequence(((0, "a1"), (0, "a2")))

    def test_empty_alphabet(self):
        with pytest.raises(InvalidDistribution):
            VariableSpec("A", ())

    def test_duplicate_names(self):
        with pytest.raises(InvalidDistribution):
            SequenceSpace([VariableSpec("A", ("x",)), VariableSpec("A", ("y",))])

    def test_too_many_variables(self):
        with pytest.raises(SequenceSpaceTooLarge):
            SequenceSpace(VariableSpec(f"V{i}", ("x", "y")) for i in range(5))

    def test_alphabet_too_large(self):
        with pytest.raises(SequenceSpaceTooLarge):
            space_of(6, 2)

    def test_unknown_label(self, ab):
        with pytest.raises(InputError):
            ab.sequence("z9")
        with pytest.raises(InputError):
            ab.ordering("A", "Q")


class TestEnumeration:
    def test_single_variable(self):
        sp = space_of(2)
        full = sp.full(sp.ordering("A"))
        assert [q.items for q in full] == [((0, "a1"),), ((0, "a2"),)]

    def test_two_binary(self, ab):
        full = ab.full(ab.ordering("B", "A"))
        assert len(full) == 4
        assert all(q.variables == (1, 0) for q in full)

    def test_three_variables(self):
        sp = space_of(2, 3, 2)
        assert len(sp.orderings) == 6
        for s in sp.orderings:
            full = sp.full(s)
            assert len(full) == 12 and len(set(full)) == 12
            assert all(q.has_order(s) for q in full)

    def test_partial_count(self):
        sp = space_of(2, 3, 2)
        # each variable is either absent or takes one of its outcomes
        assert len(sp.partial(sp.orderings[0])) == 3 * 4 * 3


class TestContainingSet:
    def test_full_sequence(self, ab):
        s = ab.ordering("B", "A")
        q = ab.sequence("b1", "a2")
        assert ab.containing_set(q, s) == {q}

    def test_empty_sequence(self, ab):
        s = ab.ordering("B", "A")
        assert ab.containing_set(Sequence(), s) == set(ab.full(s))

    def test_single_outcome(self, ab):
        s = ab.ordering("B", "A")
        got = ab.containing_set(ab.sequence("b1"), s)
        assert got == {ab.sequence("b1", "a1"), ab.sequence("b1", "a2")}

    def test_order_mismatch(self, ab):
        with pytest.raises(OrderMismatch):
            ab.containing_set(ab.sequence("a1", "b1"), ab.ordering("B", "A"))

    def test_size_is_product_of_missing_alphabets(self):
        sp = space_of(2, 3, 2)
        for s in sp.orderings:
            for q in sp.partial(s):
                missing = [len(v) for i, v in enumerate(sp.variables) if i not in q.variables]
                assert len(sp.containing_set(q, s)) == math.prod(missing)


class TestMeetJoin:
    def test_idempotent(self, ab):
        s = ab.ordering("B", "A")
        q = ab.sequence("b2")
        assert ab.meet(q, q, s) == ab.containing_set(q, s) == ab.join(q, q, s)

    def test_disjoint_outcomes(self, ab):
        s = ab.ordering("B", "A")
        assert ab.meet(ab.sequence("a1"), ab.sequence("a2"), s) == frozenset()

    def test_cross_variable(self, ab):
        s = ab.ordering("B", "A")
        assert ab.meet(ab.sequence("b1"), ab.sequence("a1"), s) == {ab.sequence("b1", "a1")}
        assert len(ab.join(ab.sequence("b1"), ab.sequence("a1"), s)) == 3


class TestSubsequenceRelations:
    def test_membership_matches_erasure(self):
        sp = space_of(2, 2, 3)
        for s in sp.orderings:
            partials = sp.partial(s)
            for q, other in itertools.product(partials, sp.full(s)):
                assert included_in(q, other, s) == is_subsequence(q, other)

    def test_erasure_respects_order(self, ab):
        assert not is_subsequence(ab.sequence("a1", "b1"), ab.sequence("b1", "a1"))
        assert is_subsequence(ab.sequence("a1"), ab.sequence("b1", "a1"))


class TestMarginal:
    def test_a1_under_both_orderings(self, j0_assignment):
        sp = j0_assignment.space
        q = sp.sequence("a1")
        for s in sp.orderings:
            assert marginal(j0_assignment, q, s) == pytest.approx(0.5, abs=1e-12)

    def test_full_and_empty(self, j0_assignment):
        sp = j0_assignment.space
        s = sp.ordering("B", "A")
        assert marginal(j0_assignment, sp.sequence("b2", "a1"), s) == pytest.approx(0.2)
        for s in sp.orderings:
            assert marginal(j0_assignment, Sequence(), s) == pytest.approx(1.0, abs=1e-12)

    def test_reverse_ordering_holds_reverse_joint(self, j0_assignment):
        sp = j0_assignment.space
        s = sp.ordering("A", "B")
        # reverse joint entry P(b1, a2) = -2/5
        assert marginal(j0_assignment, sp.sequence("a2", "b1"), s) == pytest.approx(-0.4)

    def test_default_ordering(self, j0_assignment):
        sp = j0_assignment.space
        assert marginal(j0_assignment, sp.sequence("b1")) == pytest.approx(0.4)
        with pytest.raises(OrderMismatch):
            marginal(j0_assignment, sp.sequence("b1", "a1"), sp.ordering("A", "B"))

    def test_exact_sum(self, j0_assignment):
        sp = j0_assignment.space
        rev = oracle.oracle_reverse_joint(oracle.J0)
        # column a1 of the reverse joint (rows B) sums to P(a1)
        assert rev[0][0] + rev[1][0] == Fraction(1, 2)
        s = sp.ordering("A", "B")
        assert marginal(j0_assignment, sp.sequence("a1"), s) == pytest.approx(float(rev[0][0] + rev[1][0]), abs=1e-15)


class TestCheckAxioms:
    def test_symmetric_assignment(self, j0):
        p = ProbabilityAssignment.from_two_variable(j0, j0.entries.T)
        assert check_axioms(p).passed

    def test_j0_with_reverse_joint(self, j0_assignment):
        report = check_axioms(j0_assignment, tol=1e-10)
        assert report.passed, report.failed()
        assert set(report.results) == set(AXIOMS)
        assert j0_assignment.table(j0_assignment.space.ordering("A", "B")).min() < 0

    def test_scaled_ordering_fails(self, j0):
        p = ProbabilityAssignment.from_two_variable(j0, 1.1 * reverse_joint(j0).entries)
        report = check_axioms(p)
        assert set(report.failed()) == {"normalization", "causality"}
        viol = report["normalization"].violations
        assert len(viol) == 1 and viol[0].ordering == ("A", "B")
        assert viol[0].magnitude == pytest.approx(0.1)

    def test_mismatched_marginal_fails_causality_only(self, j0):
        # reverse joint with the right total but the wrong P(A)
        p = ProbabilityAssignment.from_two_variable(j0, [[0.2, 0.2], [0.2, 0.4]])
        report = check_axioms(p)
        assert report.failed() == ["causality"]
        assert report["causality"].max_magnitude == pytest.approx(0.1)

    def test_non_finite_fails_real_valued(self, j0):
        bad = reverse_joint(j0).entries.copy()
        bad[0, 0] = np.nan
        report = check_axioms(ProbabilityAssignment.from_two_variable(j0, bad))
        assert "real_valued" in report.failed()

    def test_negative_values_alone_are_fine(self):
        sp = space_of(2, 2)
        t = np.array([[1.5, -0.5], [0.25, -0.25]])
        p = ProbabilityAssignment.from_tables(sp, {s: t if s.perm == (0, 1) else t.T for s in sp.orderings})
        assert check_axioms(p).passed

    def test_three_variable_consistent(self):
        sizes = (2, 3, 3)
        sp = space_of(*sizes)
        rng = np.random.default_rng(0)
        base = rng.uniform(0.1, 1.0, size=sizes)
        base /= base.sum()
        u, v, w = (np.array([1.0, -1.0]), np.array([1.0, 0.0, -1.0]), np.array([0.5, -1.0, 0.5]))
        wiggle = np.einsum("i,j,k->ijk", u, v, w)
        tables = {}
        for k, s in enumerate(sp.orderings):
            by_var = base + 0.02 * (k - 2.5) * wiggle
            tables[s] = np.transpose(by_var, s.perm)
        p = ProbabilityAssignment.from_tables(sp, tables)
        report = check_axioms(p)
        assert report.passed, report.failed()
        # ordering dependence shows up only in full sequences
        s0, s1 = sp.orderings[0], sp.orderings[1]
        q0 = sp.full(s0)[0]
        q1 = Sequence(tuple(sorted(q0.items, key=lambda it: s1.position(it[0]))))
        assert p[(s0, q0)] != pytest.approx(p[(s1, q1)])

    def test_three_variable_broken_pair_marginal(self):
        sp = space_of(2, 2, 2)
        base = np.full((2, 2, 2), 1 / 8)
        tables = {s: np.transpose(base, s.perm) for s in sp.orderings}
        s = sp.ordering("C", "A", "B")
        t = tables[s].copy()
        t[0, 0, 0] += 0.05
        t[0, 1, 0] -= 0.05
        tables[s] = t
        report = check_axioms(ProbabilityAssignment.from_tables(sp, tables))
        assert report.failed() == ["causality"]

    def test_violation_cap(self):
        sp = space_of(5, 5, 5)
        rng = np.random.default_rng(1)
        tables = {s: rng.dirichlet(np.ones(125)).reshape(5, 5, 5) for s in sp.orderings}
        result = check_axioms(ProbabilityAssignment.from_tables(sp, tables))["causality"]
        assert result.violation_count > MAX_VIOLATIONS
        assert len(result.violations) == MAX_VIOLATIONS

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 3), st.integers(2, 3), st.integers(0, 2**32 - 1))
    def test_symmetric_always_passes(self, m, k, seed):
        sp = space_of(m, k, 2)
        joint = np.random.default_rng(seed).uniform(-0.5, 1.0, size=(m, k, 2))
        joint /= joint.sum()
        assert check_axioms(ProbabilityAssignment.symmetric(sp, joint)).passed

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_additivity_exact_for_arbitrary_values(self, seed):
        sp = space_of(2, 3)
        rng = np.random.default_rng(seed)
        tables = {s: rng.normal(size=tuple(len(sp.variables[v]) for v in s.perm)) for s in sp.orderings}
        report = check_axioms(ProbabilityAssignment.from_tables(sp, tables), tol=1e-12)
        assert report["additivity"].passed


class TestAssignmentConstruction:
    def test_missing_value(self, ab):
        s = ab.orderings[0]
        with pytest.raises(InputError):
            ProbabilityAssignment(ab, {(s, ab.full(s)[0]): 1.0})

    def test_from_function(self, ab):
        p = ProbabilityAssignment.from_function(ab, lambda s, q: 0.25)
        assert check_axioms(p).passed

    def test_labels_carried(self):
        j = JointDist([[0.3, 0.2], [0.1, 0.4]], rows=("x", "y"), cols=("u", "v"), row_var="X", col_var="Y")
        p = ProbabilityAssignment.from_two_variable(j, reverse_joint(j))
        assert [v.name for v in p.space.variables] == ["X", "Y"]
        assert p.space.variables[1].alphabet == ("u", "v")
