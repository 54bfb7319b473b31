"""Parsing of system descriptions and flattening into encoded coalgebras.

The input format is line oriented:

    functor: <FEXPR>
    initial: <name>          (optional)
    <name>: <TERM>           (one line per state)

``#`` starts a comment line, whitespace is insignificant inside
expressions and terms.  The functor expression grammar::

    FEXPR  :=  SUM
    SUM    :=  PROD ('+' PROD)*
    PROD   :=  UNARY ('x' UNARY)*
    UNARY  :=  'P' UNARY | 'B' UNARY | 'D' UNARY
             | ('Z'|'Q'|'N') '^(' FEXPR ')'
             | 'Sig' '{' sym '/' nat (',' sym '/' nat)* '}' UNARY
             | POST
    POST   :=  ATOM ('^' 'C' '{' letters '}')*
    ATOM   :=  'X' | 'C' '{' atoms '}' | '(' FEXPR ')'

Terms are parsed directed by the functor: ``{t,...}`` for powersets and
bags, ``{t: w, ...}`` for weighted branching and distributions (weights
are exact integers or ``p/q`` rationals), ``f(t,...)`` or a bare nullary
symbol for polynomial functors, ``{a: t, b: t}`` for exponents (total),
``(t, t)`` for products, ``in<i> t`` (aliases ``inl``/``inr``) for
coproducts, a bare atom for constants and a state name for the identity.

Flattening reduces functor composition to a coproduct of depth-one
functors over many-sorted states: every nested non-identity subterm under
a functor boundary becomes a fresh intermediate state of the inner sort.
Intermediate states are deliberately not deduplicated; refining merges
duplicates anyway.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .bags import Label, Tagged
from .functors import (
    AtomTerm,
    BagFunctor,
    BasicFunctor,
    Constant,
    Coproduct,
    CoproductB,
    ConstantB,
    Distribution,
    EXP_SYMBOL,
    Exponent,
    F1Value,
    FunctorExpr,
    Identity,
    InTerm,
    MonoidB,
    MonoidValued,
    Polynomial,
    PolynomialB,
    Powerset,
    PowersetB,
    Product,
    ProductB,
    SetTerm,
    StateRef,
    SymTerm,
    Tag,
    Term,
    TermShapeError,
    TupleTerm,
    VarSort,
    WeightedTerm,
    build_basic,
    monoid_value,
    normalize_functor,
    states_of,
)

__all__ = [
    "ParseError",
    "ConsistencyError",
    "InputSpec",
    "EncodedCoalgebra",
    "parse",
    "flatten",
]

RESERVED_NAMES = {"functor", "initial", "partition", "stats"}
_BLOCK_NAME = re.compile(r"B\d+\Z")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_IN_TOKEN = re.compile(r"in(\d+)\Z")


class ParseError(ValueError):
    """Input rejected, with a position."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}"
            if col is not None:
                where += f", column {col}"
            where += ": "
        super().__init__(where + message)


class ConsistencyError(Exception):
    """The pipeline produced something it promised it never would."""


# ---------------------------------------------------------------------------
# tokenizer


_TOKEN = re.compile(r"[A-Za-z0-9_]+|[{}(),:/^+\-]")


class _Tokens:
    def __init__(self, text: str, line: int, col_offset: int = 0):
        self.line = line
        self.toks: list[tuple[str, int]] = []
        pos = 0
        while pos < len(text):
            ch = text[pos]
            if ch in " \t":
                pos += 1
                continue
            m = _TOKEN.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {ch!r}", line, col_offset + pos + 1)
            self.toks.append((m.group(), col_offset + pos + 1))
            pos = m.end()
        self.i = 0

    def peek(self) -> str | None:
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def col(self) -> int | None:
        if self.i < len(self.toks):
            return self.toks[self.i][1]
        return self.toks[-1][1] + len(self.toks[-1][0]) if self.toks else 1

    def next(self) -> str:
        if self.i >= len(self.toks):
            raise ParseError("unexpected end of line", self.line, self.col())
        t, _ = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        got = self.peek()
        if got != text:
            raise ParseError(f"expected {text!r}, got {got!r}", self.line, self.col())
        self.next()

    def done(self):
        if self.i < len(self.toks):
            raise ParseError(
                f"trailing input {self.peek()!r}", self.line, self.col()
            )


# ---------------------------------------------------------------------------
# functor expressions


def _parse_fexpr(toks: _Tokens) -> FunctorExpr:
    parts = [_parse_prod(toks)]
    while toks.peek() == "+":
        toks.next()
        parts.append(_parse_prod(toks))
    return Coproduct(tuple(parts)) if len(parts) > 1 else parts[0]


def _parse_prod(toks: _Tokens) -> FunctorExpr:
    parts = [_parse_unary(toks)]
    while toks.peek() == "x":
        toks.next()
        parts.append(_parse_unary(toks))
    return Product(tuple(parts)) if len(parts) > 1 else parts[0]


def _parse_unary(toks: _Tokens) -> FunctorExpr:
    t = toks.peek()
    if t == "P":
        toks.next()
        return Powerset(_parse_unary(toks))
    if t == "B":
        toks.next()
        return BagFunctor(_parse_unary(toks))
    if t == "D":
        toks.next()
        return Distribution(_parse_unary(toks))
    if t in ("Z", "Q", "N"):
        toks.next()
        toks.expect("^")
        toks.expect("(")
        inner = _parse_fexpr(toks)
        toks.expect(")")
        return MonoidValued(t, inner)
    if t == "Sig":
        toks.next()
        sig = _parse_signature(toks)
        return Polynomial(sig, _parse_unary(toks))
    return _parse_postfix(toks)


def _parse_signature(toks: _Tokens) -> tuple[tuple[str, int], ...]:
    toks.expect("{")
    sig = []
    while True:
        sym = toks.next()
        if not _NAME.fullmatch(sym):
            raise ParseError(f"bad operation symbol {sym!r}", toks.line, toks.col())
        toks.expect("/")
        ar = toks.next()
        if not ar.isdigit():
            raise ParseError(f"bad arity {ar!r}", toks.line, toks.col())
        sig.append((sym, int(ar)))
        if toks.peek() == ",":
            toks.next()
            continue
        toks.expect("}")
        break
    try:
        Polynomial(tuple(sig), Identity())
    except ValueError as e:
        raise ParseError(str(e), toks.line) from None
    return tuple(sig)


def _parse_letter_set(toks: _Tokens) -> tuple[str, ...]:
    toks.expect("{")
    letters = []
    while toks.peek() != "}":
        letters.append(toks.next())
        if toks.peek() == ",":
            toks.next()
        elif toks.peek() != "}":
            raise ParseError(
                f"expected ',' or '}}', got {toks.peek()!r}", toks.line, toks.col()
            )
    toks.expect("}")
    if not letters:
        raise ParseError("empty atom set", toks.line, toks.col())
    if len(set(letters)) != len(letters):
        raise ParseError("duplicate atoms in set", toks.line, toks.col())
    return tuple(letters)


def _parse_postfix(toks: _Tokens) -> FunctorExpr:
    e = _parse_fatom(toks)
    while toks.peek() == "^":
        toks.next()
        toks.expect("C")
        letters = _parse_letter_set(toks)
        e = Exponent(letters, e)
    return e


def _parse_fatom(toks: _Tokens) -> FunctorExpr:
    t = toks.peek()
    if t == "X":
        toks.next()
        return Identity()
    if t == "C":
        toks.next()
        return Constant(_parse_letter_set(toks))
    if t == "(":
        toks.next()
        e = _parse_fexpr(toks)
        toks.expect(")")
        return e
    raise ParseError(f"expected a functor, got {t!r}", toks.line, toks.col())


def parse_functor(text: str, line: int = 1, col_offset: int = 0) -> FunctorExpr:
    toks = _Tokens(text, line, col_offset)
    e = _parse_fexpr(toks)
    toks.done()
    return e


# ---------------------------------------------------------------------------
# terms, directed by the (original) functor expression


def _parse_weight(toks: _Tokens) -> int | Fraction:
    neg = False
    if toks.peek() == "-":
        toks.next()
        neg = True
    num = toks.next()
    if not num.isdigit():
        raise ParseError(f"number expected, got {num!r}", toks.line, toks.col())
    value: int | Fraction = int(num)
    if toks.peek() == "/":
        toks.next()
        den = toks.next()
        if not den.isdigit() or int(den) == 0:
            raise ParseError(f"bad denominator {den!r}", toks.line, toks.col())
        value = Fraction(value, int(den))
    return -value if neg else value


def _parse_term(f: FunctorExpr, toks: _Tokens) -> Term:
    if isinstance(f, Identity):
        name = toks.next()
        return StateRef(name)

    if isinstance(f, Constant):
        name = toks.next()
        if name not in f.atoms:
            raise ParseError(
                f"unknown atom {name!r}, expected one of {list(f.atoms)}",
                toks.line,
                toks.col(),
            )
        return AtomTerm(name)

    if isinstance(f, (Powerset, BagFunctor)):
        toks.expect("{")
        elems = []
        while toks.peek() != "}":
            elems.append(_parse_term(f.child, toks))
            if toks.peek() == ",":
                toks.next()
            elif toks.peek() != "}":
                raise ParseError(
                    f"expected ',' or '}}', got {toks.peek()!r}", toks.line, toks.col()
                )
        toks.expect("}")
        if isinstance(f, Powerset):
            return SetTerm(tuple(elems))
        counts: dict = {}
        for e in elems:
            counts[e] = counts.get(e, 0) + 1
        return WeightedTerm(tuple(counts.items()))

    if isinstance(f, (MonoidValued, Distribution)):
        monoid = "Q" if isinstance(f, Distribution) else f.monoid
        toks.expect("{")
        entries: list = []
        while toks.peek() != "}":
            key = _parse_term(f.child, toks)
            toks.expect(":")
            raw = _parse_weight(toks)
            try:
                w = monoid_value(monoid, raw)
            except ValueError as e:
                raise ParseError(str(e), toks.line, toks.col()) from None
            entries.append((key, w))
            if toks.peek() == ",":
                toks.next()
            elif toks.peek() != "}":
                raise ParseError(
                    f"expected ',' or '}}', got {toks.peek()!r}", toks.line, toks.col()
                )
        toks.expect("}")
        seen = set()
        for k, _ in entries:
            if k in seen:
                raise ParseError("duplicate entry in weighted term", toks.line)
            seen.add(k)
        entries = [(k, w) for k, w in entries if w != 0]
        if isinstance(f, Distribution):
            if any(w < 0 for _, w in entries):
                raise ParseError("distribution weights must be positive", toks.line)
            if sum((w for _, w in entries), Fraction(0)) != 1:
                raise ParseError("distribution does not sum to 1", toks.line)
        return WeightedTerm(tuple(entries))

    if isinstance(f, Exponent):
        toks.expect("{")
        mapping: dict = {}
        while toks.peek() != "}":
            letter = toks.next()
            if letter not in f.letters:
                raise ParseError(
                    f"unknown letter {letter!r}, expected one of {list(f.letters)}",
                    toks.line,
                    toks.col(),
                )
            if letter in mapping:
                raise ParseError(f"letter {letter!r} given twice", toks.line)
            toks.expect(":")
            mapping[letter] = _parse_term(f.child, toks)
            if toks.peek() == ",":
                toks.next()
            elif toks.peek() != "}":
                raise ParseError(
                    f"expected ',' or '}}', got {toks.peek()!r}", toks.line, toks.col()
                )
        toks.expect("}")
        missing = [l for l in f.letters if l not in mapping]
        if missing:
            raise ParseError(f"missing letters {missing} (map must be total)", toks.line)
        return SymTerm(EXP_SYMBOL, tuple(mapping[l] for l in f.letters))

    if isinstance(f, Polynomial):
        sym = toks.next()
        arities = dict(f.signature)
        if sym not in arities:
            raise ParseError(
                f"unknown operation symbol {sym!r}, expected one of {sorted(arities)}",
                toks.line,
                toks.col(),
            )
        n = arities[sym]
        if n == 0:
            return SymTerm(sym, ())
        toks.expect("(")
        args = [_parse_term(f.child, toks)]
        for _ in range(n - 1):
            toks.expect(",")
            args.append(_parse_term(f.child, toks))
        toks.expect(")")
        return SymTerm(sym, tuple(args))

    if isinstance(f, Product):
        toks.expect("(")
        items = [_parse_term(f.children[0], toks)]
        for c in f.children[1:]:
            toks.expect(",")
            items.append(_parse_term(c, toks))
        toks.expect(")")
        return TupleTerm(tuple(items))

    if isinstance(f, Coproduct):
        tok = toks.next()
        if tok == "inl":
            index = 1
        elif tok == "inr":
            index = 2
        else:
            m = _IN_TOKEN.fullmatch(tok)
            if not m:
                raise ParseError(
                    f"expected an injection in<i>, got {tok!r}", toks.line, toks.col()
                )
            index = int(m.group(1))
        if not 1 <= index <= len(f.children):
            raise ParseError(
                f"injection index {index} out of range 1..{len(f.children)}",
                toks.line,
                toks.col(),
            )
        return InTerm(index, _parse_term(f.children[index - 1], toks))

    raise ParseError(f"cannot parse terms for functor {f!r}", toks.line)


# ---------------------------------------------------------------------------
# input specifications


@dataclass
class InputSpec:
    """A parsed (or programmatically built) system description."""

    functor: FunctorExpr
    core: FunctorExpr
    states: list[tuple[str, Term]]
    initial: str | None = None
    functor_text: str | None = None

    @classmethod
    def build(
        cls,
        functor: FunctorExpr,
        states: list[tuple[str, Term]],
        initial: str | None = None,
        functor_text: str | None = None,
    ) -> "InputSpec":
        """Build and validate a spec from in-memory terms (core shapes)."""
        spec = cls(functor, normalize_functor(functor), list(states), initial, functor_text)
        spec.validate()
        return spec

    def validate(self):
        seen = set()
        for name, _ in self.states:
            if name in seen:
                raise ParseError(f"duplicate state {name!r}")
            seen.add(name)
        for name, t in self.states:
            for ref in states_of(t):
                if ref not in seen:
                    raise ParseError(f"unknown state {ref!r} referenced by {name!r}")
        if self.initial is not None and self.initial not in seen:
            raise ParseError(f"initial state {self.initial!r} is not declared")

    def state_names(self) -> list[str]:
        return [name for name, _ in self.states]


def _check_state_name(name: str, line: int, allow_block_names: bool):
    if not _NAME.fullmatch(name):
        raise ParseError(f"bad state name {name!r}", line, 1)
    if name in RESERVED_NAMES:
        raise ParseError(f"{name!r} is a reserved name", line, 1)
    if not allow_block_names and _BLOCK_NAME.fullmatch(name):
        raise ParseError(
            f"state name {name!r} collides with output block names; "
            "rename it, or pass --allow-block-names when re-minimizing "
            "this tool's own output",
            line,
            1,
        )


def parse(text: str, allow_block_names: bool = False) -> InputSpec:
    """Parse a system description.

    Lines from a ``partition:`` or ``stats:`` header onwards are ignored,
    so the tool's own output documents parse back in.
    """
    functor: FunctorExpr | None = None
    functor_text: str | None = None
    initial: str | None = None
    initial_line: int | None = None
    states: list[tuple[str, Term]] = []
    state_lines: dict[str, int] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line.strip() in ("partition:", "stats:"):
            break
        if ":" not in line:
            raise ParseError("expected '<name>: ...'", line_no, len(line))
        head, rest = line.split(":", 1)
        head = head.strip()
        if functor is None:
            if head != "functor":
                raise ParseError("the first line must be 'functor: <expression>'", line_no, 1)
            functor_text = rest.strip()
            functor = parse_functor(functor_text, line_no, col_offset=line.index(":") + 1)
            continue
        if head == "initial":
            if states or initial is not None:
                raise ParseError(
                    "'initial:' must appear once, right after the functor line", line_no, 1
                )
            initial = rest.strip()
            initial_line = line_no
            continue
        _check_state_name(head, line_no, allow_block_names)
        if head in state_lines:
            raise ParseError(f"duplicate state {head!r}", line_no, 1)
        toks = _Tokens(rest, line_no, col_offset=line.index(":") + 1)
        term = _parse_term(functor, toks)
        toks.done()
        state_lines[head] = line_no
        states.append((head, term))

    if functor is None:
        raise ParseError("empty input: no 'functor:' line found")
    if not states:
        raise ParseError("no states declared")

    declared = set(state_lines)
    for name, t in states:
        for ref in states_of(t):
            if ref not in declared:
                raise ParseError(
                    f"unknown state {ref!r} referenced by {name!r}", state_lines[name]
                )
    if initial is not None and initial not in declared:
        raise ParseError(f"initial state {initial!r} is not declared", initial_line)

    return InputSpec(functor, normalize_functor(functor), states, initial, functor_text)


# ---------------------------------------------------------------------------
# encoded coalgebras and flattening


@dataclass
class EncodedCoalgebra:
    """A many-sorted system in encoded form: per state an output value and
    a list of labelled edges.  Sort 0 holds the user's states; higher
    sorts hold the intermediate states introduced by flattening."""

    sorts: list[BasicFunctor]
    system: BasicFunctor
    sort_of: list[int]
    f1: list[F1Value]
    edges: list[list[tuple[Label, int]]]
    names: list[str]
    n_user: int
    initial: int | None = None
    functor: FunctorExpr | None = None
    core: FunctorExpr | None = None
    functor_text: str | None = None

    @property
    def n(self) -> int:
        return len(self.f1)

    @property
    def m(self) -> int:
        return sum(len(es) for es in self.edges)

    def state_payload(self, x: int) -> tuple[F1Value, list[tuple[Label, int]]]:
        """The state's (output value, edges) with the sort tag stripped."""
        if len(self.sorts) == 1:
            return self.f1[x], self.edges[x]
        v = self.f1[x]
        assert isinstance(v, Tag) and v.index == self.sort_of[x] + 1
        return v.inner, [(a.inner, t) for a, t in self.edges[x]]


def flatten(spec: InputSpec) -> EncodedCoalgebra:
    """Reduce functor composition to a coproduct of depth-one functors over
    many-sorted states, and encode every state."""
    basics: list[BasicFunctor] = []
    sort_index: dict[FunctorExpr, int] = {}

    def sort_for(expr: FunctorExpr) -> int:
        if expr in sort_index:
            return sort_index[expr]
        i = len(basics)
        sort_index[expr] = i
        basics.append(None)  # reserve the slot; children may allocate more
        basics[i] = build_basic(expr, lambda c: VarSort(sort_for(c)))
        return i

    assert sort_for(spec.core) == 0

    n_user = len(spec.states)
    name_to_id = {name: i for i, (name, _) in enumerate(spec.states)}
    terms: list[Term] = [t for _, t in spec.states]
    sort_of: list[int] = [0] * n_user
    names: list[str] = [name for name, _ in spec.states]

    def spawn(term: Term, sort: int) -> int:
        i = len(terms)
        terms.append(term)
        sort_of.append(sort)
        names.append(f"#{i}")
        return i

    def lower(t: Term, basic: BasicFunctor) -> Term:
        if isinstance(basic, VarSort):
            if basic.sort == 0:
                if not isinstance(t, StateRef):
                    raise TermShapeError(f"state reference expected, got {t!r}")
                if t.state not in name_to_id:
                    raise TermShapeError(f"unknown state {t.state!r}")
                return StateRef(name_to_id[t.state])
            return StateRef(spawn(t, basic.sort))
        if isinstance(basic, ConstantB):
            return t
        if isinstance(basic, PowersetB):
            if not isinstance(t, SetTerm):
                raise TermShapeError(f"set term expected, got {t!r}")
            return SetTerm(tuple(lower(e, basic.child) for e in t.elems))
        if isinstance(basic, MonoidB):
            if not isinstance(t, WeightedTerm):
                raise TermShapeError(f"weighted term expected, got {t!r}")
            return WeightedTerm(
                tuple((lower(k, basic.child), w) for k, w in t.entries)
            )
        if isinstance(basic, PolynomialB):
            if not isinstance(t, SymTerm):
                raise TermShapeError(f"operation term expected, got {t!r}")
            return SymTerm(t.symbol, tuple(lower(a, basic.child) for a in t.args))
        if isinstance(basic, ProductB):
            if not isinstance(t, TupleTerm) or len(t.items) != len(basic.children):
                raise TermShapeError(f"{len(basic.children)}-tuple expected, got {t!r}")
            return TupleTerm(
                tuple(lower(i, c) for c, i in zip(basic.children, t.items))
            )
        if isinstance(basic, CoproductB):
            if not isinstance(t, InTerm) or not 1 <= t.index <= len(basic.children):
                raise TermShapeError(f"injection expected, got {t!r}")
            return InTerm(t.index, lower(t.inner, basic.children[t.index - 1]))
        raise TermShapeError(f"cannot lower terms for {basic!r}")

    multi = len(basics) > 1
    system: BasicFunctor = CoproductB(tuple(basics)) if multi else basics[0]

    f1s: list[F1Value] = []
    edges: list[list[tuple[Label, int]]] = []
    i = 0
    while i < len(terms):
        s = sort_of[i]
        lowered = lower(terms[i], basics[s])
        if multi:
            v, es = system.encode(InTerm(s + 1, lowered))
        else:
            v, es = basics[s].encode(lowered)
        f1s.append(v)
        edges.append(es)
        i += 1

    initial = name_to_id[spec.initial] if spec.initial is not None else None
    return EncodedCoalgebra(
        sorts=basics,
        system=system,
        sort_of=sort_of,
        f1=f1s,
        edges=edges,
        names=names,
        n_user=n_user,
        initial=initial,
        functor=spec.functor,
        core=spec.core,
        functor_text=spec.functor_text,
    )
