"""Temporal-logic formulas: AST, S-expression syntax, fragments and NNF.

Concrete syntax is a prefix S-expression over the tokens ``top``, ``not``,
``and``, ``or``, ``U``, ``X``, ``F`` and ``G``::

    (U (and (not d) lanes) goal)
    (G (F s))

Derived connectives (``or``, ``F``, ``G``) are kept as they were written;
backends decide how to operationalize them.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Union

from tltc.errors import FormulaSyntaxError, NnfUnsupported

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

UNARY = {"not": "Not", "X": "Next", "F": "Eventually", "G": "Always"}
BINARY = {"and": "And", "or": "Or", "U": "Until"}
KEYWORDS = frozenset({"top", *UNARY, *BINARY})


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Prop:
    name: str

    def __post_init__(self):
        if not is_identifier(self.name):
            raise ValueError(f"invalid proposition name {self.name!r}")


@dataclass(frozen=True)
class Not:
    child: Formula


@dataclass(frozen=True)
class Next:
    child: Formula


@dataclass(frozen=True)
class Eventually:
    child: Formula


@dataclass(frozen=True)
class Always:
    child: Formula


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until:
    left: Formula
    right: Formula


Formula = Union[Top, Prop, Not, Next, Eventually, Always, And, Or, Until]

UNARY_TYPES = (Not, Next, Eventually, Always)
BINARY_TYPES = (And, Or, Until)
TEMPORAL_TYPES = (Next, Eventually, Always, Until)

_TAGS = {
    Top: "top", Prop: "prop", Not: "not", Next: "X", Eventually: "F",
    Always: "G", And: "and", Or: "or", Until: "U",
}
_CLASSES = {"Not": Not, "Next": Next, "Eventually": Eventually, "Always": Always,
            "And": And, "Or": Or, "Until": Until}


class Fragment(enum.Enum):
    LTL = "LTL"
    LTL_NO_NEXT = "LTL_NO_NEXT"

    @classmethod
    def parse(cls, name: str) -> Fragment:
        aliases = {"LTL": cls.LTL, "LTL_NO_NEXT": cls.LTL_NO_NEXT,
                   "LTL\\X": cls.LTL_NO_NEXT, "CT_LTL": cls.LTL_NO_NEXT}
        try:
            return aliases[name]
        except KeyError:
            raise ValueError(f"unknown fragment {name!r}") from None


def is_identifier(name: str) -> bool:
    return bool(IDENT_RE.match(name)) and name not in KEYWORDS


def tag(f: Formula) -> str:
    """Connective tag of the outermost node (``prop`` for atoms)."""
    return _TAGS[type(f)]


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, UNARY_TYPES):
        return (f.child,)
    if isinstance(f, BINARY_TYPES):
        return (f.left, f.right)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    """Pre-order walk, including ``f`` itself."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def is_temporal(f: Formula) -> bool:
    return isinstance(f, TEMPORAL_TYPES)


# -- parsing ----------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s+|\(|\)|[^\s()]+")


def _tokenize(text: str):
    line, col = 1, 1
    for m in _TOKEN_RE.finditer(text):
        tok = m.group()
        if not tok.isspace():
            yield tok, line, col
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
    yield None, line, col


def parse(text: str) -> Formula:
    """Parse a prefix S-expression into a :data:`Formula`.

    Raises:
        FormulaSyntaxError: on unbalanced parentheses, unknown operators,
            wrong arity or invalid identifiers.
    """
    tokens = list(_tokenize(text))
    pos = 0

    def err(msg, at):
        _, line, col = tokens[at]
        raise FormulaSyntaxError(msg, line, col, text)

    def expr():
        nonlocal pos
        tok, _, _ = tokens[pos]
        if tok is None:
            err("unexpected end of input", pos)
        if tok == ")":
            err("unbalanced ')'", pos)
        if tok != "(":
            pos += 1
            if tok == "top":
                return Top()
            if tok in KEYWORDS:
                err(f"operator {tok!r} must be applied inside parentheses", pos - 1)
            if not IDENT_RE.match(tok):
                err(f"invalid identifier {tok!r}", pos - 1)
            return Prop(tok)
        open_at = pos
        pos += 1
        op, _, _ = tokens[pos]
        if op is None:
            err("unbalanced '('", open_at)
        if op not in UNARY and op not in BINARY:
            err(f"unknown operator {op!r}", pos)
        op_at = pos
        pos += 1
        args = []
        while tokens[pos][0] not in (")", None):
            args.append(expr())
        if tokens[pos][0] is None:
            err("unbalanced '('", open_at)
        arity = 1 if op in UNARY else 2
        if len(args) != arity:
            plural = "argument" if arity == 1 else "arguments"
            err(f"{op!r} requires {arity} {plural}, got {len(args)}", op_at)
        pos += 1
        cls = _CLASSES[UNARY.get(op) or BINARY[op]]
        return cls(*args)

    f = expr()
    if tokens[pos][0] is not None:
        err(f"unexpected trailing token {tokens[pos][0]!r}", pos)
    return f


def render(f: Formula) -> str:
    """Canonical prefix form; ``parse(render(f)) == f``."""
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Prop):
        return f.name
    args = " ".join(render(c) for c in children(f))
    return f"({tag(f)} {args})"


# -- analyses ---------------------------------------------------------------

def fragment_check(f: Formula, frag: Fragment) -> bool:
    if frag is Fragment.LTL:
        return True
    return not any(isinstance(g, Next) for g in subformulas(f))


def first_violation(f: Formula, frag: Fragment) -> Formula | None:
    """Outermost subformula that falls outside ``frag``, if any."""
    for g in subformulas(f):
        if frag is Fragment.LTL_NO_NEXT and isinstance(g, Next):
            return g
    return None


def free_propositions(f: Formula) -> set[str]:
    return {g.name for g in subformulas(f) if isinstance(g, Prop)}


def to_nnf(f: Formula) -> Formula:
    """Push negations down to atoms.

    Raises:
        NnfUnsupported: if a negation sits above Until.
    """
    if isinstance(f, (Top, Prop)):
        return f
    if isinstance(f, Not):
        return _negate(f.child)
    if isinstance(f, UNARY_TYPES):
        return type(f)(to_nnf(f.child))
    return type(f)(to_nnf(f.left), to_nnf(f.right))


def _negate(g: Formula) -> Formula:
    if isinstance(g, (Top, Prop)):
        return Not(g)
    if isinstance(g, Not):
        return to_nnf(g.child)
    if isinstance(g, And):
        return Or(_negate(g.left), _negate(g.right))
    if isinstance(g, Or):
        return And(_negate(g.left), _negate(g.right))
    if isinstance(g, Eventually):
        return Always(_negate(g.child))
    if isinstance(g, Always):
        return Eventually(_negate(g.child))
    if isinstance(g, Next):
        return Next(_negate(g.child))
    raise NnfUnsupported(f"negated until {render(g)} has no release form in this grammar")
