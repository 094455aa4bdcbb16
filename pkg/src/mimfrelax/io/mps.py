"""Free-format MPS for :class:`LinearModel`.

Only the dialect written here is read back: sections ``NAME``, optional
``OBJSENSE``, ``ROWS``, ``COLUMNS`` (binaries between ``'MARKER' 'INTORG'``
and ``'INTEND'``), ``RHS``, optional ``BOUNDS`` and ``ENDATA``. Reals are
written in shortest round-trip form so a read gives back the same doubles.
Columns inside ``INTORG`` markers are read as binaries.
"""
from __future__ import annotations

import math
import re
from typing import Dict, List, Optional, Tuple

from ..model import LinearExpr, LinearModel, ModelError, ObjSense, Sense, VarKind

MAX_NAME = 255
OBJ_ROW = "OBJ"

_SENSE_CODE = {Sense.LE: "L", Sense.GE: "G", Sense.EQ: "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}
_SECTION_ORDER = ["NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]
_BAD = re.compile(r"[^A-Za-z0-9_]")


class MpsError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NameCollision(MpsError):
    pass


def sanitize(name: str) -> str:
    out = _BAD.sub("_", name)[:MAX_NAME]
    return out or "_"


def _num(v: float) -> str:
    v = float(v)
    if v == 0.0:
        return "0"
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _unique(names: List[str], what: str) -> List[str]:
    clean = [sanitize(n) for n in names]
    seen: Dict[str, int] = {}
    for i, c in enumerate(clean):
        if c in seen:
            raise NameCollision(f"{what} names {names[seen[c]]!r} and {names[i]!r} both sanitize to {c!r}")
        seen[c] = i
    return clean


def write_mps(model: LinearModel) -> str:
    """Serialize ``model``; identical models give byte-identical text."""
    cols = _unique([v.name for v in model.variables], "column")
    rows = _unique([c.name for c in model.constraints], "row")
    obj = OBJ_ROW
    while obj in rows:
        obj += "_"
    lines = [f"NAME {sanitize(model.name)}"]
    if model.sense is ObjSense.MAX:
        lines += ["OBJSENSE", "    MAX"]
    lines.append("ROWS")
    lines.append(f" N  {obj}")
    for name, con in zip(rows, model.constraints):
        lines.append(f" {_SENSE_CODE[con.sense]}  {name}")

    by_col: List[List[Tuple[str, float]]] = [[] for _ in model.variables]
    for vid, coef in sorted(model.objective.terms.items()):
        by_col[vid].append((obj, coef))
    for name, con in zip(rows, model.constraints):
        for vid in sorted(con.expr.terms):
            by_col[vid].append((name, con.expr.terms[vid]))

    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for var, cname, entries in zip(model.variables, cols, by_col):
        if var.kind is VarKind.BINARY and not in_int:
            lines.append(f"    MARKER{marker} 'MARKER' 'INTORG'")
            marker += 1
            in_int = True
        elif var.kind is not VarKind.BINARY and in_int:
            lines.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
            marker += 1
            in_int = False
        if not entries:
            entries = [(obj, 0.0)]
        for rname, coef in entries:
            lines.append(f"    {cname} {rname} {_num(coef)}")
    if in_int:
        lines.append(f"    MARKER{marker} 'MARKER' 'INTEND'")

    lines.append("RHS")
    if model.objective.constant != 0.0:
        lines.append(f"    RHS {obj} {_num(-model.objective.constant)}")
    for name, con in zip(rows, model.constraints):
        if con.rhs != 0.0:
            lines.append(f"    RHS {name} {_num(con.rhs)}")

    bounds = []
    for var, cname in zip(model.variables, cols):
        lo, hi = var.lower, var.upper
        if var.kind is VarKind.BINARY and (lo, hi) == (0.0, 1.0):
            bounds.append(f" BV BND {cname}")
        elif lo == hi:
            bounds.append(f" FX BND {cname} {_num(lo)}")
        elif lo == -math.inf and hi == math.inf:
            bounds.append(f" FR BND {cname}")
        else:
            if lo == -math.inf:
                bounds.append(f" MI BND {cname}")
            elif lo != 0.0 or var.kind is VarKind.BINARY:
                bounds.append(f" LO BND {cname} {_num(lo)}")
            if hi != math.inf:
                bounds.append(f" UP BND {cname} {_num(hi)}")
    lines.append("BOUNDS")
    lines.extend(bounds)
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def _float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise MpsError(f"expected a number, got {tok!r}", lineno) from None


def read_mps(text: str) -> LinearModel:
    """Parse text written by :func:`write_mps`."""
    name = "model"
    sense = ObjSense.MIN
    obj_row: Optional[str] = None
    row_index: Dict[str, int] = {}
    row_sense: List[Sense] = []
    row_names: List[str] = []
    row_terms: List[Dict[int, float]] = []
    rhs: Dict[int, float] = {}
    obj_terms: Dict[int, float] = {}
    obj_const = 0.0
    col_index: Dict[str, int] = {}
    col_names: List[str] = []
    col_binary: List[bool] = []
    col_lo: List[float] = []
    col_hi: List[float] = []

    section = None
    stage = -1
    in_int = False
    ended = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        if ended:
            raise MpsError("content after ENDATA", lineno)
        if not line[0].isspace():
            tokens = line.split()
            head = tokens[0].upper()
            if head not in _SECTION_ORDER:
                raise MpsError(f"unknown section {tokens[0]!r}", lineno)
            pos = _SECTION_ORDER.index(head)
            if pos <= stage or (head != "NAME" and stage < 0):
                raise MpsError(f"section {head} out of order", lineno)
            if head in ("COLUMNS",) and obj_row is None:
                raise MpsError("COLUMNS before any objective row", lineno)
            stage = pos
            section = head
            if head == "NAME":
                name = tokens[1] if len(tokens) > 1 else name
            elif head == "ENDATA":
                ended = True
            elif head == "OBJSENSE" and len(tokens) > 1:
                sense = _parse_sense(tokens[1], lineno)
            continue

        tokens = line.split()
        if section == "OBJSENSE":
            sense = _parse_sense(tokens[0], lineno)
        elif section == "ROWS":
            if len(tokens) != 2:
                raise MpsError("ROWS entry needs a type and a name", lineno)
            code, rname = tokens[0].upper(), tokens[1]
            if rname in row_index or rname == obj_row:
                raise MpsError(f"duplicate row {rname!r}", lineno)
            if code == "N":
                if obj_row is not None:
                    raise MpsError("more than one objective row", lineno)
                obj_row = rname
            elif code in _CODE_SENSE:
                row_index[rname] = len(row_names)
                row_names.append(rname)
                row_sense.append(_CODE_SENSE[code])
                row_terms.append({})
            else:
                raise MpsError(f"unknown row type {tokens[0]!r}", lineno)
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'") == "MARKER":
                kind = tokens[2].strip("'")
                if kind == "INTORG":
                    in_int = True
                elif kind == "INTEND":
                    in_int = False
                else:
                    raise MpsError(f"unknown marker {tokens[2]!r}", lineno)
                continue
            if len(tokens) not in (3, 5):
                raise MpsError("COLUMNS entry needs column, row, value pairs", lineno)
            cname = tokens[0]
            if cname not in col_index:
                col_index[cname] = len(col_names)
                col_names.append(cname)
                col_binary.append(in_int)
                col_lo.append(0.0)
                col_hi.append(1.0 if in_int else math.inf)
            elif col_index[cname] != len(col_names) - 1:
                raise MpsError(f"entries of column {cname!r} are not contiguous", lineno)
            vid = col_index[cname]
            for rname, val in zip(tokens[1::2], tokens[2::2]):
                coef = _float(val, lineno)
                if rname == obj_row:
                    if coef != 0.0:
                        obj_terms[vid] = coef
                elif rname in row_index:
                    if coef != 0.0:
                        row_terms[row_index[rname]][vid] = coef
                else:
                    raise MpsError(f"unknown row {rname!r}", lineno)
        elif section == "RHS":
            if len(tokens) not in (3, 5):
                raise MpsError("RHS entry needs a set name and row, value pairs", lineno)
            for rname, val in zip(tokens[1::2], tokens[2::2]):
                v = _float(val, lineno)
                if rname == obj_row:
                    obj_const = -v
                elif rname in row_index:
                    rhs[row_index[rname]] = v
                else:
                    raise MpsError(f"RHS for unknown row {rname!r}", lineno)
        elif section == "BOUNDS":
            _parse_bound(tokens, lineno, col_index, col_binary, col_lo, col_hi)
        else:
            raise MpsError("data line outside any section", lineno)
    if not ended:
        raise MpsError("missing ENDATA", len(text.splitlines()) + 1)

    model = LinearModel(name=name)
    for cname, binary, lo, hi in zip(col_names, col_binary, col_lo, col_hi):
        try:
            model.add_variable(cname, lo, hi, VarKind.BINARY if binary else VarKind.CONTINUOUS)
        except ModelError as exc:
            raise MpsError(str(exc)) from None
    for i, (rname, s, terms) in enumerate(zip(row_names, row_sense, row_terms)):
        model.add_constraint(LinearExpr(terms), s, rhs.get(i, 0.0), name=rname)
    model.set_objective(LinearExpr(obj_terms, obj_const), sense)
    return model


def _parse_sense(tok: str, lineno: int) -> ObjSense:
    t = tok.upper()
    if t in ("MAX", "MAXIMIZE"):
        return ObjSense.MAX
    if t in ("MIN", "MINIMIZE"):
        return ObjSense.MIN
    raise MpsError(f"unknown objective sense {tok!r}", lineno)


def _parse_bound(tokens, lineno, col_index, col_binary, col_lo, col_hi):
    kind = tokens[0].upper()
    if len(tokens) < 3:
        raise MpsError("BOUNDS entry needs a type, set name and column", lineno)
    cname = tokens[2]
    if cname not in col_index:
        raise MpsError(f"bound on unknown column {cname!r}", lineno)
    vid = col_index[cname]
    needs_value = kind in ("LO", "UP", "FX")
    if needs_value != (len(tokens) == 4):
        raise MpsError(f"bound type {kind} {'needs' if needs_value else 'takes no'} value", lineno)
    val = _float(tokens[3], lineno) if needs_value else 0.0
    if kind == "BV":
        if not col_binary[vid]:
            raise MpsError(f"BV bound on non-integer column {cname!r}", lineno)
        col_lo[vid], col_hi[vid] = 0.0, 1.0
    elif kind == "LO":
        col_lo[vid] = val
    elif kind == "UP":
        col_hi[vid] = val
    elif kind == "FX":
        col_lo[vid] = col_hi[vid] = val
    elif kind == "MI":
        col_lo[vid] = -math.inf
    elif kind == "PL":
        col_hi[vid] = math.inf
    elif kind == "FR":
        col_lo[vid], col_hi[vid] = -math.inf, math.inf
    else:
        raise MpsError(f"unknown bound type {tokens[0]!r}", lineno)
