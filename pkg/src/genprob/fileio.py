"""Reading and writing labeled matrices and vectors.

JSON matrix::

    {"rows": ["a1", "a2"], "cols": ["b1", "b2"],
     "data": [[0.3, 0.2], [0.1, 0.4]], "ordering": "B,A"}

``ordering`` is present for joints only and names the variables in
precedence order, column variable first.  The CSV form has a header row of
column labels (its first cell holds the ordering, if any) and the row label
in the first column.  Lines starting with ``#`` are comments.

Floats are written with ``repr``, the shortest string that round-trips.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .dist import DEFAULT_TOL, JointDist, Tolerances, default_labels
from .errors import ParseError


@dataclass(frozen=True)
class MatrixFile:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    data: np.ndarray
    ordering: tuple[str, str] | None = None

    @property
    def is_joint(self) -> bool:
        return self.ordering is not None

    def joint(self, tol: Tolerances = DEFAULT_TOL, check: bool = True) -> JointDist:
        col_var, row_var = self.ordering or ("B", "A")
        return JointDist(self.data, self.rows, self.cols, row_var=row_var, col_var=col_var, tol=tol, check=check)


@dataclass(frozen=True)
class VectorFile:
    labels: tuple[str, ...]
    data: np.ndarray
    counts: tuple[int, ...] | None = None


def _number(x, where: str) -> float:
    if isinstance(x, bool) or x is None:
        raise ParseError(f"{where}: expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(x)
        except ValueError:
            try:
                return float(Fraction(x.strip()))
            except (ValueError, ZeroDivisionError):
                pass
    raise ParseError(f"{where}: expected a number, got {x!r}")


def _parse_ordering(value, where: str) -> tuple[str, str] | None:
    if value in (None, ""):
        return None
    names = value if isinstance(value, list) else str(value).split(",")
    names = [str(n).strip() for n in names]
    if len(names) != 2 or not all(names) or names[0] == names[1]:
        raise ParseError(f"{where}: ordering must name two distinct variables, got {value!r}")
    return names[0], names[1]


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc


def _load_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _is_csv(path, text: str) -> bool:
    suffix = Path(str(path)).suffix.lower()
    if suffix == ".csv":
        return True
    if suffix == ".json":
        return False
    return not text.lstrip().startswith(("{", "["))


def _csv_rows(text: str):
    lines = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    return list(csv.reader(lines))


def matrix_from_obj(obj, source: str = "<json>") -> MatrixFile:
    if not isinstance(obj, dict):
        raise ParseError(f"{source}: top level must be an object")
    if "data" not in obj:
        raise ParseError(f"{source}: missing field 'data'")
    data = obj["data"]
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ParseError(f"{source}: field 'data' must be a non-empty array of arrays")
    width = len(data[0])
    for i, row in enumerate(data):
        if len(row) != width:
            raise ParseError(f"{source}: data row {i} has {len(row)} entries, expected {width}")
    if width == 0:
        raise ParseError(f"{source}: data rows are empty")
    arr = np.array([[_number(x, f"{source}: data[{i}][{j}]") for j, x in enumerate(row)]
                    for i, row in enumerate(data)])
    rows = tuple(str(r) for r in obj.get("rows") or default_labels("a", arr.shape[0]))
    cols = tuple(str(c) for c in obj.get("cols") or default_labels("b", arr.shape[1]))
    if len(rows) != arr.shape[0]:
        raise ParseError(f"{source}: field 'rows' has {len(rows)} labels for {arr.shape[0]} data rows")
    if len(cols) != arr.shape[1]:
        raise ParseError(f"{source}: field 'cols' has {len(cols)} labels for {arr.shape[1]} data columns")
    return MatrixFile(rows, cols, arr, _parse_ordering(obj.get("ordering"), f"{source}: field 'ordering'"))


def read_matrix(path) -> MatrixFile:
    text = _read_text(path)
    if not _is_csv(path, text):
        return matrix_from_obj(_load_json(text, str(path)), str(path))
    rows = _csv_rows(text)
    if len(rows) < 2:
        raise ParseError(f"{path}: CSV needs a header row and at least one data row")
    header, body = rows[0], rows[1:]
    cols = tuple(c.strip() for c in header[1:])
    labels, data = [], []
    for k, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: CSV row {k} has {len(row)} fields, expected {len(header)}")
        labels.append(row[0].strip())
        data.append([_number(x.strip(), f"{path}: CSV row {k} field {j + 2}") for j, x in enumerate(row[1:])])
    ordering = _parse_ordering(header[0].strip(), f"{path}: CSV header ordering cell")
    return MatrixFile(tuple(labels), cols, np.array(data), ordering)


def read_vector(path) -> VectorFile:
    """Vector from JSON (``labels`` plus ``data`` or ``counts``) or two-column CSV."""
    text = _read_text(path)
    source = str(path)
    if not _is_csv(path, text):
        obj = _load_json(text, source)
        if isinstance(obj, dict) and "counts" in obj:
            counts = obj["counts"]
            if not isinstance(counts, list) or not counts:
                raise ParseError(f"{source}: field 'counts' must be a non-empty array")
            values = [_number(c, f"{source}: counts[{i}]") for i, c in enumerate(counts)]
            if any(v != int(v) or v < 0 for v in values):
                raise ParseError(f"{source}: counts must be non-negative integers")
            ints = tuple(int(v) for v in values)
            labels = tuple(str(x) for x in obj.get("labels") or default_labels("a", len(ints)))
            if len(labels) != len(ints):
                raise ParseError(f"{source}: {len(labels)} labels for {len(ints)} counts")
            return VectorFile(labels, np.array(values), ints)
        if isinstance(obj, dict) and isinstance(obj.get("data"), list) and obj["data"] and isinstance(obj["data"][0], list):
            m = matrix_from_obj(obj, source)
            if 1 not in m.data.shape:
                raise ParseError(f"{source}: expected a single row or column, got shape {m.data.shape}")
            labels = m.rows if m.data.shape[1] == 1 else m.cols
            return VectorFile(labels, m.data.reshape(-1))
        if not isinstance(obj, dict) or not isinstance(obj.get("data"), list) or not obj["data"]:
            raise ParseError(f"{source}: expected an object with a non-empty 'data' or 'counts' array")
        values = np.array([_number(x, f"{source}: data[{i}]") for i, x in enumerate(obj["data"])])
        labels = tuple(str(x) for x in obj.get("labels") or default_labels("a", len(values)))
        if len(labels) != len(values):
            raise ParseError(f"{source}: {len(labels)} labels for {len(values)} entries")
        return VectorFile(labels, values)
    rows = _csv_rows(text)
    is_counts = False
    if rows and len(rows[0]) == 2 and rows[0][1].strip().lower() in ("p", "value", "count", "counts"):
        is_counts = rows[0][1].strip().lower().startswith("count")
        rows = rows[1:]
    if not rows:
        raise ParseError(f"{source}: empty vector")
    labels, values = [], []
    for k, row in enumerate(rows, start=1):
        if len(row) != 2:
            raise ParseError(f"{source}: CSV row {k} must have 2 fields (label, value)")
        labels.append(row[0].strip())
        values.append(_number(row[1].strip(), f"{source}: CSV row {k}"))
    counts = None
    if is_counts:
        if any(v != int(v) or v < 0 for v in values):
            raise ParseError(f"{source}: counts must be non-negative integers")
        counts = tuple(int(v) for v in values)
    return VectorFile(tuple(labels), np.array(values), counts)


def fmt(x) -> str:
    """Shortest round-trip decimal form of a float."""
    return repr(float(x))


def matrix_obj(rows, cols, data, ordering=None) -> dict:
    obj = {"rows": list(rows), "cols": list(cols), "data": [[float(x) for x in row] for row in np.asarray(data)]}
    if ordering:
        obj["ordering"] = ",".join(ordering)
    return obj


def dumps_matrix(rows, cols, data, ordering=None, fmt_: str = "json") -> str:
    if fmt_ == "json":
        return json.dumps(matrix_obj(rows, cols, data, ordering), indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([",".join(ordering) if ordering else ""] + list(cols))
    for label, row in zip(rows, np.asarray(data)):
        w.writerow([label] + [fmt(x) for x in row])
    return buf.getvalue()


def write_matrix(path, rows, cols, data, ordering=None) -> None:
    fmt_ = "csv" if Path(str(path)).suffix.lower() == ".csv" else "json"
    Path(path).write_text(dumps_matrix(rows, cols, data, ordering, fmt_))


def assignment_from_obj(obj, source: str = "<json>"):
    """Sequence-probability assignment from its JSON form::

        {"variables": [{"name": "A", "alphabet": ["a1", "a2"]}, ...],
         "assignments": [{"ordering": ["B", "A"],
                          "table": [["b1", "a1", 0.3], ...]}, ...]}

    Each table row lists one outcome per variable, in the ordering's order,
    followed by the value.
    """
    from .seqprob import ProbabilityAssignment, SequenceSpace, VariableSpec

    if not isinstance(obj, dict) or "variables" not in obj or "assignments" not in obj:
        raise ParseError(f"{source}: expected fields 'variables' and 'assignments'")
    try:
        space = SequenceSpace(VariableSpec(v["name"], tuple(v["alphabet"])) for v in obj["variables"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{source}: each variable needs 'name' and 'alphabet'") from exc
    values = {}
    for k, block in enumerate(obj["assignments"]):
        where = f"{source}: assignments[{k}]"
        if not isinstance(block, dict) or "ordering" not in block or "table" not in block:
            raise ParseError(f"{where}: needs 'ordering' and 'table'")
        order = block["ordering"]
        names = order if isinstance(order, list) else str(order).split(",")
        s = space.ordering(*[str(n).strip() for n in names])
        for r, row in enumerate(block["table"]):
            if not isinstance(row, list) or len(row) != space.n + 1:
                raise ParseError(f"{where}.table[{r}]: expected {space.n} labels and a value")
            q = space.sequence(*[(space.variables[v].name, str(x)) for v, x in zip(s.perm, row[:-1])])
            values[(s, q)] = _number(row[-1], f"{where}.table[{r}] value")
    return ProbabilityAssignment(space, values)


def read_assignment(path):
    return assignment_from_obj(_load_json(_read_text(path), str(path)), str(path))


def assignment_obj(p) -> dict:
    space = p.space
    return {
        "variables": [{"name": v.name, "alphabet": list(v.alphabet)} for v in space.variables],
        "assignments": [
            {
                "ordering": list(space.ordering_names(s)),
                "table": [[x for _, x in q.items] + [float(val)] for q, val in zip(space.full(s), p.table(s))],
            }
            for s in space.orderings
        ],
    }
