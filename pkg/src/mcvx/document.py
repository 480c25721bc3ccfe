"""JSON problem documents.

A document declares variables and parameters by name, an objective AST and a
constraint list. ASTs are nested ``[kind, child, ...]`` lists; leaves are
``{"var": name}``, ``{"param": name}`` or ``{"const": number | rows}``. Atoms
with data carry it after the child: ``["scale", child, 2.0]`` and
``["index", child, {"rows": [start, stop, step], "cols": [...]}]``.

:func:`dumps` is canonical (sorted keys, fixed layout), so a document written
by it survives ``dumps(loads(text))`` byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .atoms import ATOMS
from .bcd import SolveSettings
from .errors import ShapeError, UnknownAtomError
from .expression import Constant, Expression, Parameter, Variable, apply_atom
from .lattice import Sign
from .problem import Equality, Inequality, Problem, SOCConstraint

# settings keys as they appear in documents -> SolveSettings fields
SETTING_KEYS = {
    "rho": "rho", "mu_0": "mu_0", "mu_max": "mu_max", "lambd": "lambd",
    "max_iter": "max_iter", "update": "update", "seed": "seed", "tol_obj": "tol_obj",
    "tol_slack": "tol_slack", "fixed_sets": "fixed_sets",
    "drop_slacks_when_feasible": "drop_slacks_when_feasible", "shuffle": "shuffle",
    "solver_tol": "solver_tol",
}
DATA_ATOMS = ("scale", "index")


class DocumentError(ValueError):
    """Schema violation; ``path`` locates the offending field."""

    def __init__(self, path: str, detail: str):
        self.path = path
        super().__init__(f"{path}: {detail}" if path else detail)


@dataclass
class ProblemDocument:
    problem: Problem
    settings: SolveSettings
    raw_settings: dict


def _tensor(value):
    arr = np.asarray(value, dtype=float)
    if arr.size == 1:
        return float(arr.reshape(-1)[0])
    if arr.ndim == 2 and arr.shape[1] == 1:
        return arr[:, 0].tolist()  # flat lists read back as columns
    return arr.tolist()


def _parse_tensor(value, path: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise DocumentError(path, "not a numeric tensor") from None
    if arr.ndim > 2:
        raise DocumentError(path, "tensor literals have at most two dimensions")
    if not np.all(np.isfinite(arr)):
        raise DocumentError(path, "non-finite entry")
    return arr


# -- serialization -------------------------------------------------------------

def expression_to_ast(e: Expression):
    if isinstance(e, Variable):
        return {"var": e.name}
    if isinstance(e, Parameter):
        return {"param": e.name}
    if isinstance(e, Constant):
        return {"const": _tensor(e.value)}
    node = [e.kind] + [expression_to_ast(a) for a in e.args]
    if e.kind == "scale":
        node.append(float(e.data))
    elif e.kind == "index":
        (r0, r1, rs), (c0, c1, cs) = e.data
        node.append({"rows": [r0, r1, rs], "cols": [c0, c1, cs]})
    return node


def _leaf_entry(leaf, value) -> dict:
    out = {"name": leaf.name, "rows": leaf.shape.rows, "cols": leaf.shape.cols,
           "sign": leaf.sign.value}
    if value is not None:
        out["value"] = _tensor(value)
    return out


def problem_to_document(p: Problem, settings: dict | None = None) -> dict:
    names = [v.name for v in p.variables()] + [q.name for q in p.parameters()]
    if len(set(names)) != len(names):
        raise DocumentError("", "variable and parameter names must be unique")
    cons = []
    for c in p.constraints:
        if isinstance(c, SOCConstraint):
            cons.append({"relation": "soc", "t": expression_to_ast(c.t),
                         "x": expression_to_ast(c.x)})
        else:
            cons.append({"relation": c.relation, "lhs": expression_to_ast(c.expr)})
    return {
        "variables": [_leaf_entry(v, v.value) for v in p.variables()],
        "parameters": [_leaf_entry(q, q.value) for q in p.parameters()],
        "objective": expression_to_ast(p.objective),
        "constraints": cons,
        "settings": dict(settings or {}),
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


# -- parsing ---------------------------------------------------------------------

def _shape_of(entry: dict, path: str) -> tuple[int, int]:
    try:
        rows, cols = int(entry.get("rows", 1)), int(entry.get("cols", 1))
    except (TypeError, ValueError):
        raise DocumentError(path, "rows/cols must be integers") from None
    if rows < 1 or cols < 1:
        raise DocumentError(path, "rows/cols must be positive")
    return rows, cols


def _sign_of(entry: dict, path: str):
    try:
        return Sign.parse(entry.get("sign"))
    except ValueError as err:
        raise DocumentError(f"{path}.sign", str(err)) from None


def _declare(entries, kind, path, taken: dict):
    if not isinstance(entries, list):
        raise DocumentError(path, "expected a list")
    out = {}
    for k, entry in enumerate(entries):
        here = f"{path}[{k}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise DocumentError(here, "expected an object with a string 'name'")
        name = entry["name"]
        if name in taken or name in out:
            raise DocumentError(f"{here}.name", f"duplicate name {name!r}")
        shape = _shape_of(entry, here)
        sign = _sign_of(entry, here)
        value = entry.get("value")
        arr = None if value is None else _parse_tensor(value, f"{here}.value")
        try:
            if kind == "variable":
                leaf = Variable(shape, name=name, sign=sign, value=arr)
            else:
                leaf = Parameter(shape, name=name, sign=sign, value=arr)
        except (ShapeError, ValueError) as err:
            raise DocumentError(here, str(err)) from None
        out[name] = leaf
    return out


class _AstReader:
    def __init__(self, variables: dict, parameters: dict):
        self.variables = variables
        self.parameters = parameters

    def read(self, node, path: str) -> Expression:
        if isinstance(node, dict):
            return self._leaf(node, path)
        if not isinstance(node, list) or not node or not isinstance(node[0], str):
            raise DocumentError(path, "expected [kind, args...] or a leaf object")
        kind = node[0]
        if kind not in ATOMS:
            raise DocumentError(f"{path}[0]", f"unknown atom {kind!r}")
        rest = node[1:]
        data = None
        if kind in DATA_ATOMS:
            if len(rest) != 2:
                raise DocumentError(path, f"{kind} takes one child and one data entry")
            rest, data = rest[:1], self._data(kind, rest[1], f"{path}[2]")
        children = [self.read(c, f"{path}[{k + 1}]") for k, c in enumerate(rest)]
        try:
            return apply_atom(kind, children, data)
        except (ShapeError, UnknownAtomError) as err:
            raise DocumentError(path, str(err)) from None

    def _data(self, kind, raw, path):
        if kind == "scale":
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise DocumentError(path, "scale factor must be a number")
            return float(raw)
        try:
            rows, cols = raw["rows"], raw["cols"]
            return tuple(tuple(int(v) for v in part) for part in (rows, cols))
        except (KeyError, TypeError, ValueError):
            raise DocumentError(path, "index data needs integer 'rows' and 'cols' triples") from None

    def _leaf(self, node: dict, path: str) -> Expression:
        if len(node) != 1:
            raise DocumentError(path, "leaf objects have exactly one key")
        (key, val), = node.items()
        if key == "var":
            if val not in self.variables:
                raise DocumentError(path, f"undeclared variable {val!r}")
            return self.variables[val]
        if key == "param":
            if val not in self.parameters:
                raise DocumentError(path, f"undeclared parameter {val!r}")
            return self.parameters[val]
        if key == "const":
            return Constant(_parse_tensor(val, path))
        raise DocumentError(path, f"unknown leaf key {key!r}")


def _constraint(reader: _AstReader, entry, path: str):
    if not isinstance(entry, dict):
        raise DocumentError(path, "expected an object")
    rel = entry.get("relation")
    try:
        if rel == "soc":
            return SOCConstraint(reader.read(entry.get("t"), f"{path}.t"),
                                 reader.read(entry.get("x"), f"{path}.x"))
        lhs = reader.read(entry.get("lhs"), f"{path}.lhs")
    except ShapeError as err:
        raise DocumentError(path, str(err)) from None
    if rel == "<=0":
        return Inequality(lhs)
    if rel == "==0":
        return Equality(lhs)
    raise DocumentError(f"{path}.relation", f"expected '<=0', '==0' or 'soc', got {rel!r}")


def _settings(raw, path: str) -> SolveSettings:
    if not isinstance(raw, dict):
        raise DocumentError(path, "expected an object")
    kwargs = {}
    for key, val in raw.items():
        if key not in SETTING_KEYS:
            raise DocumentError(f"{path}.{key}", "unknown setting")
        kwargs[SETTING_KEYS[key]] = val
    try:
        return SolveSettings(**kwargs)
    except (TypeError, ValueError) as err:
        raise DocumentError(path, str(err)) from None


def document_to_problem(doc: dict) -> ProblemDocument:
    if not isinstance(doc, dict):
        raise DocumentError("", "document must be a JSON object")
    known = {"variables", "parameters", "objective", "constraints", "settings"}
    for key in doc:
        if key not in known:
            raise DocumentError(key, "unknown top-level field")
    if "objective" not in doc:
        raise DocumentError("objective", "missing")
    variables = _declare(doc.get("variables", []), "variable", "variables", {})
    parameters = _declare(doc.get("parameters", []), "parameter", "parameters", variables)
    reader = _AstReader(variables, parameters)
    objective = reader.read(doc["objective"], "objective")
    raw_cons = doc.get("constraints", [])
    if not isinstance(raw_cons, list):
        raise DocumentError("constraints", "expected a list")
    cons = [_constraint(reader, c, f"constraints[{k}]") for k, c in enumerate(raw_cons)]
    raw_settings = doc.get("settings", {})
    settings = _settings(raw_settings, "settings")
    try:
        problem = Problem(objective, cons, variables=list(variables.values()))
    except ShapeError as err:
        raise DocumentError("objective", str(err)) from None
    return ProblemDocument(problem, settings, dict(raw_settings))


def loads(text: str) -> ProblemDocument:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise DocumentError(f"line {err.lineno} column {err.colno}", err.msg) from None
    return document_to_problem(doc)


def parse_problem(path) -> ProblemDocument:
    """Read a problem document; blocks are numbered in declaration order."""
    return loads(Path(path).read_text())


def settings_document(s: SolveSettings, keys=None) -> dict:
    """The document form of chosen settings (all document keys by default)."""
    names = {f.name for f in fields(s)}
    keys = keys if keys is not None else [k for k in SETTING_KEYS if k != "fixed_sets"]
    return {k: getattr(s, SETTING_KEYS[k]) for k in keys if SETTING_KEYS[k] in names}


__all__ = [
    "DocumentError", "ProblemDocument", "parse_problem", "loads", "dumps",
    "problem_to_document", "document_to_problem", "expression_to_ast", "settings_document",
]
