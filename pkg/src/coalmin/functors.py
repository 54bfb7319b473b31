"""Functor expressions, their terms, and the per-shape behaviour that the
minimizer is generic over.

A functor expression describes the branching type of a system (powerset,
weighted, polynomial, products/coproducts of those, ...).  For each shape
there are three operations:

* ``encode``  -- turn a depth-one term into an output value (the part of a
  state's behaviour that does not mention successors) plus a bag of
  (label, successor) edges.  The pair determines the term uniquely.
* ``merge``   -- given the bag of labels from one source state into a set
  of states that are being identified, compute the labels into the merged
  state.  Weighted edges add up (and may cancel), powerset edges collapse
  to one, polynomial positions are kept as is.
* ``decode``  -- invert ``encode``; used for pretty-printing results.

Sugar functors (distributions, bag functor, exponents) are rewritten by
:func:`normalize_functor` into the core shapes before anything else looks
at them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable

from .bags import UNIT, Bag, Label, MonoidElem, OrderedValue, Position, Tagged, value_key

__all__ = [
    "TermShapeError",
    "DecodeError",
    "MergeError",
    "MONOIDS",
    "monoid_value",
    "FunctorExpr",
    "Identity",
    "Constant",
    "Powerset",
    "BagFunctor",
    "Distribution",
    "MonoidValued",
    "Polynomial",
    "Exponent",
    "Product",
    "Coproduct",
    "normalize_functor",
    "EXP_SYMBOL",
    "Term",
    "StateRef",
    "AtomTerm",
    "SetTerm",
    "WeightedTerm",
    "SymTerm",
    "TupleTerm",
    "InTerm",
    "term_key",
    "states_of",
    "map_term",
    "F1Value",
    "Star",
    "STAR",
    "EmptyFlag",
    "MonoidTotal",
    "Symbol",
    "Atom",
    "TupleValue",
    "Tag",
    "BasicFunctor",
    "VarSort",
    "ConstantB",
    "PowersetB",
    "MonoidB",
    "PolynomialB",
    "ProductB",
    "CoproductB",
    "build_basic",
    "basic_functor",
    "encode_term",
    "merge",
    "decode_term",
]


class TermShapeError(ValueError):
    """A term does not fit the functor it is used with."""


class DecodeError(ValueError):
    """An (output value, edge bag) pair is not in the image of encode."""


class MergeError(ValueError):
    """A label bag contains labels foreign to the functor being merged."""


# ---------------------------------------------------------------------------
# monoids


def _check_int(w):
    if isinstance(w, Fraction):
        if w.denominator != 1:
            raise ValueError(f"integer weight expected, got {w}")
        return int(w)
    if isinstance(w, bool) or not isinstance(w, int):
        raise ValueError(f"integer weight expected, got {w!r}")
    return w


def _check_nat(w):
    w = _check_int(w)
    if w < 0:
        raise ValueError(f"nonnegative weight expected, got {w}")
    return w


def _check_rat(w):
    if isinstance(w, bool) or not isinstance(w, (int, Fraction)):
        raise ValueError(f"rational weight expected, got {w!r}")
    return Fraction(w)


MONOIDS: dict[str, Callable] = {"Z": _check_int, "N": _check_nat, "Q": _check_rat}


def monoid_value(monoid: str, w):
    """Validate and normalize a weight for the given monoid id (Z, N, Q)."""
    try:
        check = MONOIDS[monoid]
    except KeyError:
        raise ValueError(f"unknown monoid {monoid!r}") from None
    return check(w)


# ---------------------------------------------------------------------------
# functor expressions


class FunctorExpr:
    """Base class of the functor-expression AST."""

    __slots__ = ()


@dataclass(frozen=True)
class Identity(FunctorExpr):
    pass


@dataclass(frozen=True)
class Constant(FunctorExpr):
    atoms: tuple[str, ...]

    def __post_init__(self):
        atoms = tuple(sorted(set(self.atoms)))
        if not atoms:
            raise ValueError("constant functor needs a nonempty atom set")
        object.__setattr__(self, "atoms", atoms)


@dataclass(frozen=True)
class Powerset(FunctorExpr):
    child: FunctorExpr


@dataclass(frozen=True)
class BagFunctor(FunctorExpr):
    """Finite multisets; sugar for N-weighted branching."""

    child: FunctorExpr


@dataclass(frozen=True)
class Distribution(FunctorExpr):
    """Finite probability distributions; sugar for Q-weighted branching
    plus a sums-to-one validation at ingest time."""

    child: FunctorExpr


@dataclass(frozen=True)
class MonoidValued(FunctorExpr):
    monoid: str
    child: FunctorExpr
    # "bag" / "dist" when this node came from desugaring; affects printing only
    sugar: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.monoid not in MONOIDS:
            raise ValueError(f"unknown monoid {self.monoid!r}")


@dataclass(frozen=True)
class Polynomial(FunctorExpr):
    signature: tuple[tuple[str, int], ...]
    child: FunctorExpr
    # letter names when this node came from an exponent; printing only
    letters: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.signature:
            raise ValueError("polynomial functor needs a nonempty signature")
        names = [s for s, _ in self.signature]
        if len(set(names)) != len(names):
            raise ValueError("polynomial signature has duplicate symbols")
        for s, ar in self.signature:
            if not isinstance(ar, int) or ar < 0:
                raise ValueError(f"bad arity for symbol {s!r}: {ar!r}")


@dataclass(frozen=True)
class Exponent(FunctorExpr):
    """F^A for a finite letter set A; sugar for a polynomial functor with
    one symbol of arity |A|."""

    letters: tuple[str, ...]
    child: FunctorExpr

    def __post_init__(self):
        letters = tuple(sorted(set(self.letters)))
        if not letters:
            raise ValueError("exponent needs a nonempty letter set")
        object.__setattr__(self, "letters", letters)


@dataclass(frozen=True)
class Product(FunctorExpr):
    children: tuple[FunctorExpr, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("product needs at least two components")


@dataclass(frozen=True)
class Coproduct(FunctorExpr):
    children: tuple[FunctorExpr, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("coproduct needs at least two components")


EXP_SYMBOL = "^"


def normalize_functor(f: FunctorExpr) -> FunctorExpr:
    """Rewrite sugar into core shapes.

    Exponents become single-symbol polynomials (the letter table is kept
    for printing), distributions become Q-weighted branching (validated
    at ingest), and the bag functor becomes N-weighted branching.
    """
    if isinstance(f, (Identity, Constant)):
        return f
    if isinstance(f, Powerset):
        return Powerset(normalize_functor(f.child))
    if isinstance(f, BagFunctor):
        return MonoidValued("N", normalize_functor(f.child), sugar="bag")
    if isinstance(f, Distribution):
        return MonoidValued("Q", normalize_functor(f.child), sugar="dist")
    if isinstance(f, MonoidValued):
        return MonoidValued(f.monoid, normalize_functor(f.child), sugar=f.sugar)
    if isinstance(f, Exponent):
        sig = ((EXP_SYMBOL, len(f.letters)),)
        return Polynomial(sig, normalize_functor(f.child), letters=f.letters)
    if isinstance(f, Polynomial):
        return Polynomial(f.signature, normalize_functor(f.child), letters=f.letters)
    if isinstance(f, Product):
        return Product(tuple(normalize_functor(c) for c in f.children))
    if isinstance(f, Coproduct):
        return Coproduct(tuple(normalize_functor(c) for c in f.children))
    raise TypeError(f"not a functor expression: {f!r}")


# ---------------------------------------------------------------------------
# terms


class Term:
    """Base class of (core) terms.  Terms are immutable and canonical:
    structural equality is semantic equality."""

    __slots__ = ()


@dataclass(frozen=True)
class StateRef(Term):
    state: Any  # state name (str) or state id (int)


@dataclass(frozen=True)
class AtomTerm(Term):
    name: str


@dataclass(frozen=True)
class SetTerm(Term):
    elems: tuple = ()

    def __post_init__(self):
        uniq = {term_key(e): e for e in self.elems}
        object.__setattr__(self, "elems", tuple(uniq[k] for k in sorted(uniq)))


@dataclass(frozen=True)
class WeightedTerm(Term):
    entries: tuple = ()  # ((term, weight), ...), keys distinct, weights nonzero

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda kw: term_key(kw[0])))
        for (k1, _), (k2, _) in zip(entries, entries[1:]):
            if k1 == k2:
                raise ValueError(f"duplicate key in weighted term: {k1!r}")
        for _, w in entries:
            if w == 0:
                raise ValueError("zero weight in weighted term (drop it instead)")
        object.__setattr__(self, "entries", entries)


@dataclass(frozen=True)
class SymTerm(Term):
    symbol: str
    args: tuple = ()


@dataclass(frozen=True)
class TupleTerm(Term):
    items: tuple = ()


@dataclass(frozen=True)
class InTerm(Term):
    index: int  # 1-based coproduct component
    inner: Term


def term_key(t: Term) -> tuple:
    """Total-order key on terms (used for canonical forms and printing)."""
    if isinstance(t, StateRef):
        return (0, value_key(t.state))
    if isinstance(t, AtomTerm):
        return (1, t.name)
    if isinstance(t, SetTerm):
        return (2, tuple(term_key(e) for e in t.elems))
    if isinstance(t, WeightedTerm):
        return (3, tuple((term_key(k), w) for k, w in t.entries))
    if isinstance(t, SymTerm):
        return (4, t.symbol, tuple(term_key(a) for a in t.args))
    if isinstance(t, TupleTerm):
        return (5, tuple(term_key(i) for i in t.items))
    if isinstance(t, InTerm):
        return (6, t.index, term_key(t.inner))
    raise TypeError(f"not a term: {t!r}")


def states_of(t: Term) -> set:
    """All states referenced inside a term."""
    if isinstance(t, StateRef):
        return {t.state}
    if isinstance(t, AtomTerm):
        return set()
    if isinstance(t, SetTerm):
        return set().union(*(states_of(e) for e in t.elems)) if t.elems else set()
    if isinstance(t, WeightedTerm):
        out: set = set()
        for k, _ in t.entries:
            out |= states_of(k)
        return out
    if isinstance(t, SymTerm):
        out = set()
        for a in t.args:
            out |= states_of(a)
        return out
    if isinstance(t, TupleTerm):
        out = set()
        for i in t.items:
            out |= states_of(i)
        return out
    if isinstance(t, InTerm):
        return states_of(t.inner)
    raise TypeError(f"not a term: {t!r}")


def map_term(f: FunctorExpr, t: Term, h: Callable) -> Term:
    """Apply the functor action of ``f`` to the state renaming ``h``.

    Renaming may identify states: sets deduplicate, weights of identified
    successors add up (entries summing to zero disappear).
    """
    if isinstance(f, Identity):
        if not isinstance(t, StateRef):
            raise TermShapeError(f"state reference expected, got {t!r}")
        return StateRef(h(t.state))
    if isinstance(f, Constant):
        if not isinstance(t, AtomTerm):
            raise TermShapeError(f"atom expected, got {t!r}")
        return t
    if isinstance(f, Powerset):
        if not isinstance(t, SetTerm):
            raise TermShapeError(f"set term expected, got {t!r}")
        return SetTerm(tuple(map_term(f.child, e, h) for e in t.elems))
    if isinstance(f, MonoidValued):
        if not isinstance(t, WeightedTerm):
            raise TermShapeError(f"weighted term expected, got {t!r}")
        acc: dict = {}
        order: list = []
        for k, w in t.entries:
            k2 = map_term(f.child, k, h)
            kk = term_key(k2)
            if kk in acc:
                acc[kk] = (acc[kk][0], acc[kk][1] + w)
            else:
                acc[kk] = (k2, w)
                order.append(kk)
        return WeightedTerm(tuple(acc[kk] for kk in order if acc[kk][1] != 0))
    if isinstance(f, Polynomial):
        if not isinstance(t, SymTerm):
            raise TermShapeError(f"operation term expected, got {t!r}")
        return SymTerm(t.symbol, tuple(map_term(f.child, a, h) for a in t.args))
    if isinstance(f, Product):
        if not isinstance(t, TupleTerm) or len(t.items) != len(f.children):
            raise TermShapeError(f"{len(f.children)}-tuple expected, got {t!r}")
        return TupleTerm(
            tuple(map_term(c, i, h) for c, i in zip(f.children, t.items))
        )
    if isinstance(f, Coproduct):
        if not isinstance(t, InTerm) or not 1 <= t.index <= len(f.children):
            raise TermShapeError(f"injection expected, got {t!r}")
        return InTerm(t.index, map_term(f.children[t.index - 1], t.inner, h))
    raise TermShapeError(f"cannot map terms of functor {f!r}")


# ---------------------------------------------------------------------------
# output values (the F1 part of an encoded state)


class F1Value(OrderedValue):
    """The successor-free part of a state's behaviour.  Totally ordered so
    encoded states can be grouped and compared deterministically."""

    __slots__ = ()
    family_rank = 4


class Star(F1Value):
    __slots__ = ()

    def __init__(self):
        super().__init__((0,))

    def __repr__(self):
        return "Star"


STAR = Star()


class EmptyFlag(F1Value):
    __slots__ = ("nonempty",)

    def __init__(self, nonempty: bool):
        self.nonempty = bool(nonempty)
        super().__init__((1, self.nonempty))

    def __repr__(self):
        return f"EmptyFlag({'nonempty' if self.nonempty else 'empty'})"


class MonoidTotal(F1Value):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value
        super().__init__((2, value))

    def __repr__(self):
        return f"MonoidTotal({self.value})"


class Symbol(F1Value):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        super().__init__((3, name))

    def __repr__(self):
        return f"Symbol({self.name!r})"


class Atom(F1Value):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        super().__init__((4, name))

    def __repr__(self):
        return f"Atom({self.name!r})"


class TupleValue(F1Value):
    __slots__ = ("items",)

    def __init__(self, items: Iterable[F1Value]):
        self.items = tuple(items)
        super().__init__((5,) + tuple(v.key for v in self.items))

    def __repr__(self):
        return f"TupleValue({list(self.items)!r})"


class Tag(F1Value):
    __slots__ = ("index", "inner")

    def __init__(self, index: int, inner: F1Value):
        self.index = index
        self.inner = inner
        super().__init__((6, index) + inner.key)

    def __repr__(self):
        return f"Tag({self.index}, {self.inner!r})"


# ---------------------------------------------------------------------------
# basic functors: one encoded layer, children are sort variables


class BasicFunctor:
    """One depth-one layer of a (flattened) functor expression.

    Carries the encode / merge / decode behaviour.  ``encode`` and
    ``decode`` work with plain edge lists; bag canonicalization happens at
    the call sites that compare values.
    """

    __slots__ = ()

    def encode(self, t: Term) -> tuple[F1Value, list[tuple[Label, Any]]]:
        raise NotImplementedError

    def merge_labels(self, labels: list[Label]) -> list[Label]:
        raise NotImplementedError

    def decode(self, v: F1Value, pairs: Iterable[tuple[Label, Any]]) -> Term:
        raise NotImplementedError


class VarSort(BasicFunctor):
    """The identity functor, pointing at the states of one sort."""

    __slots__ = ("sort",)

    def __init__(self, sort: int):
        self.sort = sort

    def encode(self, t):
        if not isinstance(t, StateRef):
            raise TermShapeError(f"state reference expected, got {t!r}")
        return STAR, [(Position(1), t.state)]

    def merge_labels(self, labels):
        return labels

    def decode(self, v, pairs):
        pairs = list(pairs)
        if v != STAR or len(pairs) != 1 or pairs[0][0] != Position(1):
            raise DecodeError(f"malformed identity encoding: {v!r}, {pairs!r}")
        return StateRef(pairs[0][1])

    def __repr__(self):
        return f"VarSort({self.sort})"


class ConstantB(BasicFunctor):
    __slots__ = ("atoms",)

    def __init__(self, atoms: tuple[str, ...]):
        self.atoms = tuple(atoms)

    def encode(self, t):
        if not isinstance(t, AtomTerm):
            raise TermShapeError(f"atom expected, got {t!r}")
        if t.name not in self.atoms:
            raise TermShapeError(f"unknown atom {t.name!r} (have {self.atoms})")
        return Atom(t.name), []

    def merge_labels(self, labels):
        return labels

    def decode(self, v, pairs):
        pairs = list(pairs)
        if not isinstance(v, Atom) or v.name not in self.atoms or pairs:
            raise DecodeError(f"malformed constant encoding: {v!r}, {pairs!r}")
        return AtomTerm(v.name)

    def __repr__(self):
        return f"ConstantB({self.atoms})"


class PowersetB(BasicFunctor):
    __slots__ = ("child",)

    def __init__(self, child: VarSort):
        self.child = child

    def encode(self, t):
        if not isinstance(t, SetTerm):
            raise TermShapeError(f"set term expected, got {t!r}")
        targets = []
        for e in t.elems:
            if not isinstance(e, StateRef):
                raise TermShapeError(f"state reference expected, got {e!r}")
            targets.append(e.state)
        return EmptyFlag(bool(targets)), [(UNIT, x) for x in targets]

    def merge_labels(self, labels):
        # one edge into the merged state iff there was at least one
        if not labels:
            return []
        return [UNIT]

    def decode(self, v, pairs):
        pairs = list(pairs)
        if not isinstance(v, EmptyFlag):
            raise DecodeError(f"malformed powerset encoding: {v!r}")
        targets = []
        for a, x in pairs:
            if a != UNIT:
                raise DecodeError(f"foreign label in powerset encoding: {a!r}")
            targets.append(x)
        if len(set(targets)) != len(targets):
            raise DecodeError(f"duplicate powerset targets: {targets!r}")
        if v.nonempty != bool(targets):
            raise DecodeError("powerset emptiness flag contradicts edges")
        return SetTerm(tuple(StateRef(x) for x in targets))

    def __repr__(self):
        return f"PowersetB({self.child!r})"


class MonoidB(BasicFunctor):
    __slots__ = ("monoid", "child")

    def __init__(self, monoid: str, child: VarSort):
        if monoid not in MONOIDS:
            raise ValueError(f"unknown monoid {monoid!r}")
        self.monoid = monoid
        self.child = child

    def encode(self, t):
        if not isinstance(t, WeightedTerm):
            raise TermShapeError(f"weighted term expected, got {t!r}")
        edges = []
        total = 0
        for k, w in t.entries:
            if not isinstance(k, StateRef):
                raise TermShapeError(f"state reference expected, got {k!r}")
            w = monoid_value(self.monoid, w)
            if w == 0:
                raise TermShapeError("zero-weight entry reached encode")
            total += w
            edges.append((MonoidElem(self.monoid, w), k.state))
        return MonoidTotal(total), edges

    def merge_labels(self, labels):
        if not labels:
            return []
        if len(labels) == 1:
            return labels
        total = 0
        try:
            for l in labels:
                total += l.value
        except AttributeError:
            raise MergeError(f"foreign label in weighted merge: {labels!r}") from None
        if total == 0:
            return []
        return [MonoidElem(self.monoid, total)]

    def decode(self, v, pairs):
        pairs = list(pairs)
        if not isinstance(v, MonoidTotal):
            raise DecodeError(f"malformed weighted encoding: {v!r}")
        entries = []
        total = 0
        for a, x in pairs:
            if not isinstance(a, MonoidElem):
                raise DecodeError(f"foreign label in weighted encoding: {a!r}")
            entries.append((StateRef(x), a.value))
            total += a.value
        if len({x for _, x in pairs}) != len(pairs):
            raise DecodeError(f"duplicate weighted targets: {pairs!r}")
        if total != v.value:
            raise DecodeError("weight total contradicts edge weights")
        return WeightedTerm(tuple(entries))

    def __repr__(self):
        return f"MonoidB({self.monoid}, {self.child!r})"


class PolynomialB(BasicFunctor):
    __slots__ = ("signature", "arities", "letters", "child")

    def __init__(
        self,
        signature: tuple[tuple[str, int], ...],
        child: VarSort,
        letters: tuple[str, ...] | None = None,
    ):
        self.signature = tuple(signature)
        self.arities = dict(self.signature)
        self.letters = letters
        self.child = child

    def _letter(self, i: int) -> str | None:
        if self.letters is not None and i <= len(self.letters):
            return self.letters[i - 1]
        return None

    def encode(self, t):
        if not isinstance(t, SymTerm):
            raise TermShapeError(f"operation term expected, got {t!r}")
        if t.symbol not in self.arities:
            raise TermShapeError(f"unknown symbol {t.symbol!r}")
        if len(t.args) != self.arities[t.symbol]:
            raise TermShapeError(
                f"symbol {t.symbol!r} expects {self.arities[t.symbol]} "
                f"arguments, got {len(t.args)}"
            )
        edges = []
        for i, a in enumerate(t.args, start=1):
            if not isinstance(a, StateRef):
                raise TermShapeError(f"state reference expected, got {a!r}")
            edges.append((Position(i, self._letter(i)), a.state))
        return Symbol(t.symbol), edges

    def merge_labels(self, labels):
        # the encoding is natural: nothing to merge
        return labels

    def decode(self, v, pairs):
        pairs = list(pairs)
        if not isinstance(v, Symbol) or v.name not in self.arities:
            raise DecodeError(f"malformed operation encoding: {v!r}")
        n = self.arities[v.name]
        slots: list = [None] * n
        for a, x in pairs:
            if not isinstance(a, Position) or not 1 <= a.index <= n:
                raise DecodeError(f"bad position label {a!r} for {v.name!r}/{n}")
            if slots[a.index - 1] is not None:
                raise DecodeError(f"duplicate position {a.index} for {v.name!r}")
            slots[a.index - 1] = StateRef(x)
        if any(s is None for s in slots):
            raise DecodeError(f"missing positions for {v.name!r}/{n}: {pairs!r}")
        return SymTerm(v.name, tuple(slots))

    def __repr__(self):
        return f"PolynomialB({self.signature}, {self.child!r})"


def _merge_tagged(children: tuple[BasicFunctor, ...], labels: list[Label]) -> list[Label]:
    """Shared merge for products and coproducts: partition the bag by the
    component tag, merge each part with the component's own merge, re-tag
    and concatenate."""
    buckets: dict[int, list[Label]] = {}
    for l in labels:
        if not isinstance(l, Tagged) or not 1 <= l.index <= len(children):
            raise MergeError(f"unknown label tag for this functor: {l!r}")
        buckets.setdefault(l.index, []).append(l.inner)
    out: list[Label] = []
    for i in sorted(buckets):
        for a in children[i - 1].merge_labels(buckets[i]):
            out.append(Tagged(i, a))
    return out


class ProductB(BasicFunctor):
    __slots__ = ("children",)

    def __init__(self, children: tuple[BasicFunctor, ...]):
        self.children = tuple(children)

    def encode(self, t):
        if not isinstance(t, TupleTerm) or len(t.items) != len(self.children):
            raise TermShapeError(
                f"{len(self.children)}-tuple expected, got {t!r}"
            )
        values = []
        edges = []
        for i, (c, item) in enumerate(zip(self.children, t.items), start=1):
            v, es = c.encode(item)
            values.append(v)
            edges.extend((Tagged(i, a), x) for a, x in es)
        return TupleValue(values), edges

    def merge_labels(self, labels):
        return _merge_tagged(self.children, labels)

    def decode(self, v, pairs):
        if not isinstance(v, TupleValue) or len(v.items) != len(self.children):
            raise DecodeError(f"malformed product encoding: {v!r}")
        parts: list[list] = [[] for _ in self.children]
        for a, x in pairs:
            if not isinstance(a, Tagged) or not 1 <= a.index <= len(self.children):
                raise DecodeError(f"bad component tag in product encoding: {a!r}")
            parts[a.index - 1].append((a.inner, x))
        items = [
            c.decode(vi, p) for c, vi, p in zip(self.children, v.items, parts)
        ]
        return TupleTerm(tuple(items))

    def __repr__(self):
        return f"ProductB({list(self.children)!r})"


class CoproductB(BasicFunctor):
    __slots__ = ("children",)

    def __init__(self, children: tuple[BasicFunctor, ...]):
        self.children = tuple(children)

    def encode(self, t):
        if not isinstance(t, InTerm) or not 1 <= t.index <= len(self.children):
            raise TermShapeError(f"injection expected, got {t!r}")
        v, es = self.children[t.index - 1].encode(t.inner)
        return Tag(t.index, v), [(Tagged(t.index, a), x) for a, x in es]

    def merge_labels(self, labels):
        return _merge_tagged(self.children, labels)

    def decode(self, v, pairs):
        if not isinstance(v, Tag) or not 1 <= v.index <= len(self.children):
            raise DecodeError(f"malformed coproduct encoding: {v!r}")
        inner_pairs = []
        for a, x in pairs:
            if not isinstance(a, Tagged) or a.index != v.index:
                raise DecodeError(
                    f"label {a!r} does not match coproduct component {v.index}"
                )
            inner_pairs.append((a.inner, x))
        return InTerm(v.index, self.children[v.index - 1].decode(v.inner, inner_pairs))

    def __repr__(self):
        return f"CoproductB({list(self.children)!r})"


# ---------------------------------------------------------------------------
# building basic functors from (core) functor expressions


def build_basic(f: FunctorExpr, var_of: Callable[[FunctorExpr], VarSort]) -> BasicFunctor:
    """Turn a core functor expression into a basic functor.

    ``var_of`` decides what sort variable stands for a nested child; the
    flattener passes a callback that allocates fresh sorts for genuine
    compositions.
    """

    def inner(c: FunctorExpr) -> VarSort:
        if isinstance(c, Identity):
            return VarSort(0)
        return var_of(c)

    if isinstance(f, Identity):
        return VarSort(0)
    if isinstance(f, Constant):
        return ConstantB(f.atoms)
    if isinstance(f, Powerset):
        return PowersetB(inner(f.child))
    if isinstance(f, MonoidValued):
        return MonoidB(f.monoid, inner(f.child))
    if isinstance(f, Polynomial):
        return PolynomialB(f.signature, inner(f.child), f.letters)
    if isinstance(f, Product):
        return ProductB(tuple(build_basic(c, var_of) for c in f.children))
    if isinstance(f, Coproduct):
        return CoproductB(tuple(build_basic(c, var_of) for c in f.children))
    raise TypeError(f"not a core functor expression: {f!r}")


def basic_functor(f: FunctorExpr) -> BasicFunctor:
    """Basic functor for a composition-free core expression (single sort)."""

    def no_composition(c: FunctorExpr) -> VarSort:
        raise ValueError(
            f"functor {c!r} is nested under another functor; flatten it first"
        )

    return build_basic(normalize_functor(f), no_composition)


# ---------------------------------------------------------------------------
# public operations (bag-level wrappers)


def encode_term(f: BasicFunctor, t: Term) -> tuple[F1Value, Bag]:
    """Encode a depth-one term as (output value, bag of (label, state))."""
    v, edges = f.encode(t)
    return v, Bag(edges)


def merge(f: BasicFunctor, labels: Bag) -> Bag:
    """Labels from one source into a block that is being merged."""
    return Bag(f.merge_labels(list(labels)))


def decode_term(f: BasicFunctor, v: F1Value, pairs) -> Term:
    """Invert :func:`encode_term` (up to renaming of states)."""
    return f.decode(v, list(pairs))
