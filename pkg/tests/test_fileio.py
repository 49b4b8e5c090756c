import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from genprob.dist import JointDist, reverse_joint
from genprob.errors import ParseError
from genprob.fileio import (
    assignment_obj,
    dumps_matrix,
    fmt,
    read_assignment,
    read_matrix,
    read_vector,
    write_matrix,
)
from genprob.seqprob import ProbabilityAssignment, check_axioms

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


class TestMatrixRoundTrip:
    @pytest.mark.parametrize("suffix", [".json", ".csv"])
    def test_j0(self, tmp_path, suffix):
        path = tmp_path / f"j0{suffix}"
        write_matrix(path, ["a1", "a2"], ["b1", "b2"], [[0.3, 0.2], [0.1, 0.4]], ("B", "A"))
        m = read_matrix(path)
        assert m.rows == ("a1", "a2") and m.cols == ("b1", "b2") and m.ordering == ("B", "A")
        assert m.data.tolist() == [[0.3, 0.2], [0.1, 0.4]]
        assert m.joint().ordering == ("B", "A")

    @settings(max_examples=50, deadline=None)
    @given(st.sampled_from([".json", ".csv"]), st.integers(1, 4).flatmap(lambda n: arrays(np.float64, (n, 3), elements=finite)))
    def test_bit_identical(self, tmp_path_factory, suffix, data):
        path = tmp_path_factory.mktemp("rt") / f"m{suffix}"
        rows = [f"r{i}" for i in range(data.shape[0])]
        write_matrix(path, rows, ["x", "y", "z"], data)
        back = read_matrix(path)
        assert back.data.tobytes() == data.tobytes()
        assert back.ordering is None

    def test_reverse_joint_roundtrip(self, tmp_path, j0):
        rev = reverse_joint(j0)
        path = tmp_path / "rev.json"
        write_matrix(path, rev.rows, rev.cols, rev.entries, rev.ordering)
        assert read_matrix(path).data.tobytes() == rev.entries.tobytes()

    def test_fmt_shortest(self):
        assert fmt(0.1) == "0.1" and fmt(1 / 3) == "0.3333333333333333" and fmt(np.float64(-0.8)) == "-0.8"

    def test_default_labels(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"data": [[0.5], [0.5]]}))
        m = read_matrix(path)
        assert m.rows == ("a1", "a2") and m.cols == ("b1",)

    def test_csv_comments_and_fractions(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text('# a comment\n"B,A",b1,b2\na1,3/10,0.2\na2,0.1,2/5\n')
        m = read_matrix(path)
        assert m.ordering == ("B", "A")
        np.testing.assert_allclose(m.data, [[0.3, 0.2], [0.1, 0.4]])

    def test_dumps_csv_header(self):
        text = dumps_matrix(["a1"], ["b1"], [[1.0]], ("B", "A"), "csv")
        assert text.splitlines()[0] == '"B,A",b1'


class TestMalformedMatrix:
    @pytest.mark.parametrize(
        "text, fragment",
        [
            ('{"rows": ["a1"], "data": [[0.3, 0.2]', "m.json:1"),
            ('{"rows": ["a1"]}', "missing field 'data'"),
            ('{"data": [[0.3, 0.2], [0.1]]}', "data row 1"),
            ('{"data": [[0.3, "x"]]}', "data[0][1]"),
            ('{"data": [[0.3, true]]}', "data[0][1]"),
            ('{"rows": ["a1", "a2"], "data": [[1.0]]}', "field 'rows'"),
            ('{"data": [[1.0]], "ordering": "B,B"}', "ordering"),
            ('[1, 2]', "top level"),
        ],
    )
    def test_json(self, tmp_path, text, fragment):
        path = tmp_path / "m.json"
        path.write_text(text)
        with pytest.raises(ParseError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
            read_matrix(path)

    @pytest.mark.parametrize(
        "text, fragment",
        [
            (",b1,b2\na1,0.3\n", "row 2 has 2 fields"),
            (",b1,b2\na1,0.3,zz\n", "row 2 field 3"),
            (",b1\n", "header row and at least one data row"),
        ],
    )
    def test_csv(self, tmp_path, text, fragment):
        path = tmp_path / "m.csv"
        path.write_text(text)
        with pytest.raises(ParseError, match=fragment):
            read_matrix(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            read_matrix(tmp_path / "nope.json")


class TestVector:
    def test_json_data(self, tmp_path):
        path = tmp_path / "v.json"
        path.write_text(json.dumps({"labels": ["x", "y"], "data": [0.5, 0.5]}))
        v = read_vector(path)
        assert v.labels == ("x", "y") and v.data.tolist() == [0.5, 0.5] and v.counts is None

    def test_json_counts(self, tmp_path):
        path = tmp_path / "v.json"
        path.write_text(json.dumps({"counts": [3, 7]}))
        v = read_vector(path)
        assert v.counts == (3, 7) and v.labels == ("a1", "a2")

    def test_matrix_shaped(self, tmp_path):
        path = tmp_path / "v.json"
        path.write_text(json.dumps({"rows": ["p", "q"], "cols": ["v"], "data": [[0.25], [0.75]]}))
        v = read_vector(path)
        assert v.labels == ("p", "q") and v.data.tolist() == [0.25, 0.75]

    def test_csv_counts(self, tmp_path):
        path = tmp_path / "v.csv"
        path.write_text("label,count\na1,5\na2,5\n")
        assert read_vector(path).counts == (5, 5)

    def test_csv_plain(self, tmp_path):
        path = tmp_path / "v.csv"
        path.write_text("a1,0.6\na2,0.4\n")
        v = read_vector(path)
        assert v.counts is None and v.data.tolist() == [0.6, 0.4]

    @pytest.mark.parametrize(
        "name, text",
        [
            ("v.json", '{"counts": [1.5, 2]}'),
            ("v.json", '{"counts": [-1, 2]}'),
            ("v.json", '{"data": []}'),
            ("v.json", '{"labels": ["x"], "data": [0.5, 0.5]}'),
            ("v.json", '{"data": [[0.5, 0.5], [0.5, 0.5]]}'),
            ("v.csv", "a1,0.6,extra\n"),
            ("v.csv", "label,count\n"),
        ],
    )
    def test_malformed(self, tmp_path, name, text):
        path = tmp_path / name
        path.write_text(text)
        with pytest.raises(ParseError):
            read_vector(path)


class TestAssignment:
    def test_roundtrip(self, tmp_path, j0):
        p = ProbabilityAssignment.from_two_variable(j0, reverse_joint(j0))
        path = tmp_path / "p.json"
        path.write_text(json.dumps(assignment_obj(p)))
        q = read_assignment(path)
        for s in p.space.orderings:
            assert q.table(s).tobytes() == p.table(s).tobytes()
        assert check_axioms(q).passed

    @pytest.mark.parametrize(
        "obj",
        [
            {"variables": []},
            {"variables": [{"name": "A"}], "assignments": []},
            {"variables": [{"name": "A", "alphabet": ["a1"]}], "assignments": [{"ordering": ["A"]}]},
            {"variables": [{"name": "A", "alphabet": ["a1"]}], "assignments": [{"ordering": ["A"], "table": [[1.0]]}]},
        ],
    )
    def test_malformed(self, tmp_path, obj):
        path = tmp_path / "p.json"
        path.write_text(json.dumps(obj))
        with pytest.raises(ParseError):
            read_assignment(path)
