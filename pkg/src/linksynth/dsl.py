"""Program and condition ASTs, term rewriting, canonical keys, JSON schema.

Programs::

    P ::= Empty | Union(P...) | Exclude(P, P) | Find(vars, rvars, C, returns)
    C ::= And(C, C) | Not(C) | True | False | Rel(v, r, w)
        | VLabel == VLabel | RLabel == RLabel
        | Eq(Str, Str) | Contains(Str, Str) | F < F | F > F

Variables are small integers: ``v3`` is ``3`` in a vars slot, ``r1`` is ``1``
in an rvars slot. Float constants live on the 0.0, 0.1, ..., 1.0 lattice and
are stored as integer tenths so comparisons stay exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Union as TUnion

from .document import Label, RelLabel

MAX_VAR = 10
PROGRAM_FORMAT = "linksynth.program"
PROGRAM_VERSION = 1
STR_LITERALS = (".", "/", ":", "-")
VLABEL_LITERALS = (Label.HEADER, Label.QUESTION, Label.ANSWER)
COORDS = ("x0", "x1", "y0", "y1")


class ProgramError(ValueError):
    pass


class ProgramParseError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


# terms

@dataclass(frozen=True)
class VarLabel:
    v: int


@dataclass(frozen=True)
class RVarLabel:
    r: int


@dataclass(frozen=True)
class VarText:
    v: int


@dataclass(frozen=True)
class StrLit:
    s: str

    def __post_init__(self):
        if self.s not in STR_LITERALS:
            raise ProgramError(f"string literal {self.s!r} not in {STR_LITERALS}")


@dataclass(frozen=True)
class VarCoord:
    v: int
    attr: str

    def __post_init__(self):
        if self.attr not in COORDS:
            raise ProgramError(f"unknown coordinate {self.attr!r}")


@dataclass(frozen=True)
class RelMag:
    r: int


@dataclass(frozen=True)
class FConst:
    tenths: int

    def __post_init__(self):
        if not 0 <= self.tenths <= 10:
            raise ProgramError(f"float constant {self.tenths / 10} off the 0.1 lattice")

    @property
    def value(self) -> float:
        return self.tenths / 10


VLabelTerm = TUnion[VarLabel, Label]
RLabelTerm = TUnion[RVarLabel, RelLabel]
StrTerm = TUnion[VarText, StrLit]
FloatTerm = TUnion[VarCoord, RelMag, FConst]


# conditions

@dataclass(frozen=True)
class TrueC:
    pass


@dataclass(frozen=True)
class FalseC:
    pass


TRUE = TrueC()
FALSE = FalseC()


@dataclass(frozen=True)
class And:
    left: "Condition"
    right: "Condition"


@dataclass(frozen=True)
class Not:
    arg: "Condition"


@dataclass(frozen=True)
class Rel:
    v: int
    r: int
    w: int


@dataclass(frozen=True)
class VLabelEq:
    lhs: VLabelTerm
    rhs: VLabelTerm


@dataclass(frozen=True)
class RLabelEq:
    lhs: RLabelTerm
    rhs: RLabelTerm


@dataclass(frozen=True)
class StrEq:
    lhs: StrTerm
    rhs: StrTerm


@dataclass(frozen=True)
class StrContains:
    haystack: StrTerm
    needle: StrTerm


@dataclass(frozen=True)
class FloatLt:
    lhs: FloatTerm
    rhs: FloatTerm


@dataclass(frozen=True)
class FloatGt:
    lhs: FloatTerm
    rhs: FloatTerm


Condition = TUnion[TrueC, FalseC, And, Not, Rel, VLabelEq, RLabelEq, StrEq, StrContains, FloatLt, FloatGt]
ATOMS = (Rel, VLabelEq, RLabelEq, StrEq, StrContains, FloatLt, FloatGt)


def conj(*conds: Condition) -> Condition:
    """Left-nested And of the given conditions (True when empty)."""
    if not conds:
        return TRUE
    out = conds[0]
    for c in conds[1:]:
        out = And(out, c)
    return out


def conjuncts(cond: Condition) -> list[Condition]:
    if isinstance(cond, And):
        return conjuncts(cond.left) + conjuncts(cond.right)
    return [cond]


def _term_refs(t) -> tuple[set[int], set[int]]:
    if isinstance(t, (VarLabel, VarText, VarCoord)):
        return {t.v}, set()
    if isinstance(t, (RVarLabel, RelMag)):
        return set(), {t.r}
    return set(), set()


def cond_refs(cond: Condition) -> tuple[set[int], set[int]]:
    """Variables and relation variables mentioned in ``cond``."""
    vs: set[int] = set()
    rs: set[int] = set()
    stack = [cond]
    while stack:
        c = stack.pop()
        if isinstance(c, And):
            stack += [c.left, c.right]
        elif isinstance(c, Not):
            stack.append(c.arg)
        elif isinstance(c, Rel):
            vs |= {c.v, c.w}
            rs.add(c.r)
        elif isinstance(c, (TrueC, FalseC)):
            pass
        else:
            for t in (c.__dict__.values()):
                a, b = _term_refs(t)
                vs |= a
                rs |= b
    return vs, rs


# programs

@dataclass(frozen=True)
class Empty:
    pass


EMPTY = Empty()


@dataclass(frozen=True)
class Union:
    children: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Exclude:
    left: "Program"
    right: "Program"


@dataclass(frozen=True)
class Find:
    vars: tuple
    rvars: tuple
    cond: Condition
    returns: tuple

    def __post_init__(self):
        for name in ("vars", "rvars", "returns"):
            val = tuple(getattr(self, name))
            if len(set(val)) != len(val):
                raise ProgramError(f"Find {name} has duplicates: {val}")
            if any(not 0 <= x <= MAX_VAR for x in val):
                raise ProgramError(f"Find {name} outside v0..v{MAX_VAR}: {val}")
            object.__setattr__(self, name, tuple(sorted(val)))
        if 0 not in self.vars:
            raise ProgramError("Find must bind v0")
        if not self.rvars:
            raise ProgramError("Find needs at least one relation variable")
        if not set(self.returns) <= set(self.vars):
            raise ProgramError(f"returns {self.returns} not within vars {self.vars}")
        if 0 in self.returns:
            raise ProgramError("v0 cannot be returned")
        vs, rs = cond_refs(self.cond)
        if not vs <= set(self.vars) or not rs <= set(self.rvars):
            raise ProgramError(f"condition mentions unbound variables {vs - set(self.vars)} / "
                               f"{rs - set(self.rvars)}")


Program = TUnion[Empty, Union, Exclude, Find]


def iter_finds(p: Program) -> Iterator[Find]:
    if isinstance(p, Find):
        yield p
    elif isinstance(p, Union):
        for c in p.children:
            yield from iter_finds(c)
    elif isinstance(p, Exclude):
        yield from iter_finds(p.left)
        yield from iter_finds(p.right)


# rewriting

_SAME_VAR_TRUE = {("x0", "x1"), ("y0", "y1")}
_SAME_VAR_FALSE = {("x1", "x0"), ("y1", "y0")}

_LITERALS = (Label, RelLabel, StrLit, FConst)


def _is_lit(t) -> bool:
    return isinstance(t, _LITERALS)


def _lit_value(t):
    if isinstance(t, StrLit):
        return t.s
    if isinstance(t, FConst):
        return t.tenths
    return t


def _rewrite_atom(c: Condition) -> Condition:
    if isinstance(c, (VLabelEq, RLabelEq, StrEq)):
        if c.lhs == c.rhs:
            return TRUE
        if _is_lit(c.lhs) and _is_lit(c.rhs):
            return FALSE
        return c
    if isinstance(c, StrContains):
        if c.haystack == c.needle:
            return TRUE
        if _is_lit(c.haystack) and _is_lit(c.needle):
            return TRUE if c.needle.s in c.haystack.s else FALSE
        return c
    if isinstance(c, (FloatLt, FloatGt)):
        if c.lhs == c.rhs:
            return FALSE
        lo, hi = (c.lhs, c.rhs) if isinstance(c, FloatLt) else (c.rhs, c.lhs)
        if isinstance(lo, FConst) and isinstance(hi, FConst):
            return TRUE if lo.tenths < hi.tenths else FALSE
        if isinstance(lo, VarCoord) and isinstance(hi, VarCoord) and lo.v == hi.v:
            if (lo.attr, hi.attr) in _SAME_VAR_TRUE:
                return TRUE
            if (lo.attr, hi.attr) in _SAME_VAR_FALSE:
                return FALSE
        return c
    return c


def _rewrite_once(c: Condition) -> Condition:
    if isinstance(c, And):
        a, b = _rewrite_once(c.left), _rewrite_once(c.right)
        if a == FALSE or b == FALSE:
            return FALSE
        if a == TRUE:
            return b
        if b == TRUE:
            return a
        if a == b:
            return a
        return And(a, b)
    if isinstance(c, Not):
        a = _rewrite_once(c.arg)
        if a == TRUE:
            return FALSE
        if a == FALSE:
            return TRUE
        if isinstance(a, Not):
            return a.arg
        return Not(a)
    return _rewrite_atom(c)


def rewrite(cond: Condition) -> Condition:
    """Apply the simplification rules bottom-up until nothing changes.

    Besides the equivalence-reduction rules (idempotent/absorbing And,
    reflexive comparisons, box-orientation facts) this folds comparisons
    between literals and double negation. ``v.x0 < v.x1`` becoming True
    assumes boxes of positive extent.
    """
    prev = cond
    while True:
        nxt = _rewrite_once(prev)
        if nxt == prev:
            return nxt
        prev = nxt


def _term_str(t) -> str:
    if isinstance(t, VarLabel):
        return f"v{t.v}.label"
    if isinstance(t, RVarLabel):
        return f"r{t.r}.label"
    if isinstance(t, VarText):
        return f"v{t.v}.text"
    if isinstance(t, StrLit):
        return json.dumps(t.s)
    if isinstance(t, VarCoord):
        return f"v{t.v}.{t.attr}"
    if isinstance(t, RelMag):
        return f"r{t.r}.mag"
    if isinstance(t, FConst):
        return f"{t.value:.1f}"
    if isinstance(t, (Label, RelLabel)):
        return t.value
    raise TypeError(t)


def cond_str(c: Condition) -> str:
    """Compact human-readable rendering of a condition."""
    if isinstance(c, TrueC):
        return "True"
    if isinstance(c, FalseC):
        return "False"
    if isinstance(c, And):
        return f"And({cond_str(c.left)}, {cond_str(c.right)})"
    if isinstance(c, Not):
        return f"Not({cond_str(c.arg)})"
    if isinstance(c, Rel):
        return f"Rel(v{c.v}, r{c.r}, v{c.w})"
    if isinstance(c, (VLabelEq, RLabelEq)):
        return f"{_term_str(c.lhs)} == {_term_str(c.rhs)}"
    if isinstance(c, StrEq):
        return f"Eq({_term_str(c.lhs)}, {_term_str(c.rhs)})"
    if isinstance(c, StrContains):
        return f"Contains({_term_str(c.haystack)}, {_term_str(c.needle)})"
    if isinstance(c, FloatLt):
        return f"{_term_str(c.lhs)} < {_term_str(c.rhs)}"
    if isinstance(c, FloatGt):
        return f"{_term_str(c.lhs)} > {_term_str(c.rhs)}"
    raise TypeError(c)


def _flat_key(c: Condition) -> str:
    if isinstance(c, Not):
        return f"Not({_flat_key(c.arg)})"
    if isinstance(c, And):
        parts = sorted({_flat_key(x) for x in conjuncts(c)})
        return "And[" + "; ".join(parts) + "]"
    return cond_str(c)


def canonical_key(cond: Condition) -> str:
    """Rewrite, flatten And into a sorted set of conjuncts, serialize."""
    return _flat_key(rewrite(cond))


def program_key(p: Program) -> str:
    if isinstance(p, Find):
        vs = ",".join(f"v{v}" for v in p.vars)
        rs = ",".join(f"r{r}" for r in p.rvars)
        ret = ",".join(f"v{v}" for v in p.returns)
        return f"Find({{{vs}}}, {{{rs}}}, {canonical_key(p.cond)}, {{{ret}}})"
    if isinstance(p, Empty):
        return "Empty"
    if isinstance(p, Union):
        return "Union(" + ", ".join(program_key(c) for c in p.children) + ")"
    if isinstance(p, Exclude):
        return f"Exclude({program_key(p.left)}, {program_key(p.right)})"
    raise TypeError(p)


def pretty(p: Program, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(p, Empty):
        return pad + "Empty"
    if isinstance(p, Find):
        vs = ", ".join(f"v{v}" for v in p.vars)
        rs = ", ".join(f"r{r}" for r in p.rvars)
        ret = ", ".join(f"v{v}" for v in p.returns)
        body = ",\n".join(pad + "    " + cond_str(c) for c in conjuncts(p.cond))
        return f"{pad}Find({{{vs}}}, {{{rs}}}, And(\n{body}\n{pad}  ), {{{ret}}})"
    if isinstance(p, Union):
        if not p.children:
            return pad + "Union()"
        inner = ",\n".join(pretty(c, indent + 1) for c in p.children)
        return f"{pad}Union(\n{inner}\n{pad})"
    if isinstance(p, Exclude):
        return f"{pad}Exclude(\n{pretty(p.left, indent + 1)},\n{pretty(p.right, indent + 1)}\n{pad})"
    raise TypeError(p)


# json

def _term_to_json(t) -> dict:
    if isinstance(t, VarLabel):
        return {"var": t.v, "prop": "label"}
    if isinstance(t, RVarLabel):
        return {"rvar": t.r, "prop": "label"}
    if isinstance(t, VarText):
        return {"var": t.v, "prop": "text"}
    if isinstance(t, VarCoord):
        return {"var": t.v, "prop": t.attr}
    if isinstance(t, RelMag):
        return {"rvar": t.r, "prop": "mag"}
    if isinstance(t, StrLit):
        return {"str": t.s}
    if isinstance(t, FConst):
        return {"const": t.value}
    if isinstance(t, Label):
        return {"label": t.value}
    if isinstance(t, RelLabel):
        return {"rlabel": t.value}
    raise TypeError(t)


_BINARY = {VLabelEq: "vlabel_eq", RLabelEq: "rlabel_eq", StrEq: "str_eq",
           StrContains: "contains", FloatLt: "lt", FloatGt: "gt"}
_BINARY_BY_KIND = {v: k for k, v in _BINARY.items()}


def cond_to_json(c: Condition) -> dict:
    if isinstance(c, TrueC):
        return {"kind": "true"}
    if isinstance(c, FalseC):
        return {"kind": "false"}
    if isinstance(c, And):
        return {"kind": "and", "left": cond_to_json(c.left), "right": cond_to_json(c.right)}
    if isinstance(c, Not):
        return {"kind": "not", "arg": cond_to_json(c.arg)}
    if isinstance(c, Rel):
        return {"kind": "rel", "v": c.v, "r": c.r, "w": c.w}
    kind = _BINARY[type(c)]
    a, b = (c.haystack, c.needle) if isinstance(c, StrContains) else (c.lhs, c.rhs)
    return {"kind": kind, "lhs": _term_to_json(a), "rhs": _term_to_json(b)}


def program_to_json(p: Program) -> dict:
    if isinstance(p, Empty):
        return {"kind": "empty"}
    if isinstance(p, Union):
        return {"kind": "union", "children": [program_to_json(c) for c in p.children]}
    if isinstance(p, Exclude):
        return {"kind": "exclude", "left": program_to_json(p.left), "right": program_to_json(p.right)}
    if isinstance(p, Find):
        return {"kind": "find", "vars": list(p.vars), "rvars": list(p.rvars),
                "cond": cond_to_json(p.cond), "returns": list(p.returns)}
    raise TypeError(p)


def _need(d, key, path):
    if not isinstance(d, dict):
        raise ProgramParseError(path, f"expected an object, got {type(d).__name__}")
    if key not in d:
        raise ProgramParseError(path, f"missing field {key!r}")
    return d[key]


def _int_list(x, path) -> tuple:
    if not isinstance(x, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in x):
        raise ProgramParseError(path, "expected a list of integers")
    return tuple(x)


def _term_from_json(d, path, family):
    if not isinstance(d, dict):
        raise ProgramParseError(path, "expected a term object")
    try:
        if family == "vlabel":
            if "label" in d:
                lab = Label(d["label"])
                if lab not in VLABEL_LITERALS:
                    raise ValueError(f"{lab.value} is not a label literal")
                return lab
            if d.get("prop") == "label" and "var" in d:
                return VarLabel(int(d["var"]))
        elif family == "rlabel":
            if "rlabel" in d:
                return RelLabel(d["rlabel"])
            if d.get("prop") == "label" and "rvar" in d:
                return RVarLabel(int(d["rvar"]))
        elif family == "str":
            if "str" in d:
                return StrLit(d["str"])
            if d.get("prop") == "text" and "var" in d:
                return VarText(int(d["var"]))
        elif family == "float":
            if "const" in d:
                v = float(d["const"])
                tenths = round(v * 10)
                if abs(tenths / 10 - v) > 1e-12:
                    raise ValueError(f"constant {v} off the 0.1 lattice")
                return FConst(tenths)
            if d.get("prop") == "mag" and "rvar" in d:
                return RelMag(int(d["rvar"]))
            if d.get("prop") in COORDS and "var" in d:
                return VarCoord(int(d["var"]), d["prop"])
    except (ValueError, TypeError, ProgramError) as exc:
        raise ProgramParseError(path, str(exc)) from exc
    raise ProgramParseError(path, f"not a valid {family} term: {d}")


_FAMILY = {VLabelEq: "vlabel", RLabelEq: "rlabel", StrEq: "str", StrContains: "str",
           FloatLt: "float", FloatGt: "float"}


def cond_from_json(d, path="$") -> Condition:
    kind = _need(d, "kind", path)
    if kind == "true":
        return TRUE
    if kind == "false":
        return FALSE
    if kind == "and":
        return And(cond_from_json(_need(d, "left", path), path + ".left"),
                   cond_from_json(_need(d, "right", path), path + ".right"))
    if kind == "not":
        return Not(cond_from_json(_need(d, "arg", path), path + ".arg"))
    if kind == "rel":
        vals = [_need(d, k, path) for k in ("v", "r", "w")]
        if not all(isinstance(x, int) for x in vals):
            raise ProgramParseError(path, "rel fields must be integers")
        return Rel(*vals)
    if kind in _BINARY_BY_KIND:
        cls = _BINARY_BY_KIND[kind]
        fam = _FAMILY[cls]
        return cls(_term_from_json(_need(d, "lhs", path), path + ".lhs", fam),
                   _term_from_json(_need(d, "rhs", path), path + ".rhs", fam))
    raise ProgramParseError(path, f"unknown condition kind {kind!r}")


def program_from_json(d, path="$") -> Program:
    kind = _need(d, "kind", path)
    if kind == "empty":
        return EMPTY
    if kind == "union":
        children = _need(d, "children", path)
        if not isinstance(children, list):
            raise ProgramParseError(path + ".children", "expected a list")
        return Union(tuple(program_from_json(c, f"{path}.children[{i}]") for i, c in enumerate(children)))
    if kind == "exclude":
        return Exclude(program_from_json(_need(d, "left", path), path + ".left"),
                       program_from_json(_need(d, "right", path), path + ".right"))
    if kind == "find":
        vars_ = _int_list(_need(d, "vars", path), path + ".vars")
        rvars = _int_list(_need(d, "rvars", path), path + ".rvars")
        returns = _int_list(_need(d, "returns", path), path + ".returns")
        cond = cond_from_json(_need(d, "cond", path), path + ".cond")
        try:
            return Find(vars_, rvars, cond, returns)
        except ProgramError as exc:
            raise ProgramParseError(path, str(exc)) from exc
    raise ProgramParseError(path, f"unknown program kind {kind!r}")


def serialize_program(p: Program) -> bytes:
    doc = {"format": PROGRAM_FORMAT, "version": PROGRAM_VERSION, "program": program_to_json(p)}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def parse_program(data: bytes | str) -> Program:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProgramParseError("$", f"invalid JSON: {exc}") from exc
    if isinstance(doc, dict) and "program" in doc:
        if doc.get("format") != PROGRAM_FORMAT:
            raise ProgramParseError("$.format", f"unexpected format {doc.get('format')!r}")
        if doc.get("version") != PROGRAM_VERSION:
            raise ProgramParseError("$.version", f"unsupported version {doc.get('version')!r}")
        return program_from_json(doc["program"], "$.program")
    return program_from_json(doc, "$")
