"""Finite multisets (bags) in a canonical sorted form, plus the small
calculus used by the rest of the package: filtering a bag of
(label, state) pairs by a state set, and the mutually inverse group /
ungroup bijections between bags of pairs and finitely supported maps
from states to label bags.

Bags are stored as sorted tuples rather than count maps so that whole
bags can be compared, hashed and ordered by value; multiplicity counts
are recoverable in one pass via :meth:`Bag.counts`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator

__all__ = [
    "OrderedValue",
    "Label",
    "UnitLabel",
    "UNIT",
    "MonoidElem",
    "Position",
    "Tagged",
    "Bag",
    "EMPTY_BAG",
    "GroupedBag",
    "value_key",
    "fil",
    "group",
    "ungroup",
]


class OrderedValue:
    """Base of the small value families (edge labels, output values) that
    are ordered by a precomputed key tuple.  The class-level family rank
    keeps distinct families apart in mixed containers."""

    __slots__ = ("key",)
    family_rank = 9

    def __init__(self, key: tuple):
        self.key = key

    def __eq__(self, other):
        return (
            isinstance(other, OrderedValue)
            and other.family_rank == self.family_rank
            and other.key == self.key
        )

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self.family_rank, self.key))

    def __lt__(self, other):
        if isinstance(other, OrderedValue) and other.family_rank == self.family_rank:
            return self.key < other.key
        return NotImplemented


class Label(OrderedValue):
    """An edge label.

    The four variants form one totally ordered family:
    Unit < MonoidElem < Position < Tagged, with ties broken by payload.
    """

    __slots__ = ()
    family_rank = 3


class UnitLabel(Label):
    """The single label used for unlabelled (powerset) edges."""

    __slots__ = ()

    def __init__(self):
        super().__init__((0,))

    def __repr__(self):
        return "Unit"


UNIT = UnitLabel()


class MonoidElem(Label):
    """A monoid element used as an edge weight.

    Values are exact: ints for Z/N, :class:`~fractions.Fraction` for Q.
    Ordered by numeric value, then by monoid id.
    """

    __slots__ = ("monoid", "value")

    def __init__(self, monoid: str, value):
        self.monoid = monoid
        self.value = value
        super().__init__((1, value, monoid))

    def __repr__(self):
        return f"MonoidElem({self.monoid}, {self.value})"


class Position(Label):
    """A 1-based argument position of a polynomial operation symbol.

    ``letter`` is presentation sugar (set when the polynomial came from
    an exponent functor); it does not take part in equality or order.
    """

    __slots__ = ("index", "letter")

    def __init__(self, index: int, letter: str | None = None):
        self.index = index
        self.letter = letter
        super().__init__((2, index))

    def __repr__(self):
        if self.letter is not None:
            return f"Position({self.index}, {self.letter!r})"
        return f"Position({self.index})"


class Tagged(Label):
    """A label of component ``index`` (1-based) of a product/coproduct."""

    __slots__ = ("index", "inner")

    def __init__(self, index: int, inner: Label):
        self.index = index
        self.inner = inner
        super().__init__((3, index, inner.key))

    def __repr__(self):
        return f"Tagged({self.index}, {self.inner!r})"


# Ranks used to order heterogeneous bag elements.  Numbers first (int and
# Fraction compare with each other), then strings, tuples; OrderedValue
# families (labels: 3, output values: 4) carry their own rank; nested
# bags come last.
_RANK_NUM = 0
_RANK_STR = 1
_RANK_TUPLE = 2
_RANK_BAG = 5


def value_key(v) -> tuple:
    """Total-order key for everything a bag may contain."""
    if isinstance(v, OrderedValue):
        return (v.family_rank,) + v.key
    if isinstance(v, tuple):
        return (_RANK_TUPLE,) + tuple(value_key(c) for c in v)
    if isinstance(v, str):
        return (_RANK_STR, v)
    if isinstance(v, (int, Fraction)):
        return (_RANK_NUM, v)
    if isinstance(v, Bag):
        return (_RANK_BAG,) + tuple(value_key(i) for i in v.items)
    raise TypeError(f"bag elements of type {type(v).__name__} have no order")


class Bag:
    """A finite multiset with a canonical (sorted) representation.

    Two bags are equal iff their canonical sequences are equal, so any
    permutation of insertions yields the same bag.
    """

    __slots__ = ("items",)

    def __init__(self, items: Iterable = ()):
        self.items = tuple(sorted(items, key=value_key))

    def __eq__(self, other):
        return isinstance(other, Bag) and self.items == other.items

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(self.items)

    def __lt__(self, other):
        if not isinstance(other, Bag):
            return NotImplemented
        return [value_key(v) for v in self.items] < [value_key(v) for v in other.items]

    def __iter__(self) -> Iterator:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, v) -> bool:
        return v in self.items

    def __add__(self, other: "Bag") -> "Bag":
        """Bag union (multiplicities add)."""
        return Bag(self.items + other.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    def count(self, v) -> int:
        """Multiplicity of ``v`` (0 iff absent)."""
        return self.items.count(v)

    def counts(self) -> dict:
        """The finitely-supported-function view: element -> multiplicity."""
        out: dict = {}
        for v in self.items:
            out[v] = out.get(v, 0) + 1
        return out

    def __repr__(self):
        return "Bag[" + ", ".join(repr(v) for v in self.items) + "]"


EMPTY_BAG = Bag()


class GroupedBag:
    """A finitely supported association from states to nonempty label bags."""

    __slots__ = ("mapping",)

    def __init__(self, mapping: Iterable | dict = ()):
        items = mapping.items() if isinstance(mapping, dict) else mapping
        self.mapping = {x: b for x, b in items if len(b) > 0}

    def __getitem__(self, x) -> Bag:
        # total as a function: absent states map to the empty bag
        return self.mapping.get(x, EMPTY_BAG)

    def __eq__(self, other):
        return isinstance(other, GroupedBag) and self.mapping == other.mapping

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(frozenset(self.mapping.items()))

    def __len__(self) -> int:
        return len(self.mapping)

    def __iter__(self):
        return iter(self.support())

    def support(self) -> list:
        return sorted(self.mapping, key=value_key)

    def items(self):
        return [(x, self.mapping[x]) for x in self.support()]

    def __repr__(self):
        inner = ", ".join(f"{x!r}: {b!r}" for x, b in self.items())
        return "{" + inner + "}"


def fil(bag: Bag, states) -> Bag:
    """Keep the labels of the pairs whose state lies in ``states``.

    ``fil(b, S)(a) == sum(b(a, x) for x in S)``.
    """
    states = set(states)
    return Bag(a for (a, x) in bag if x in states)


def group(bag: Bag) -> GroupedBag:
    """Turn a bag of (label, state) pairs into a map state -> bag of labels."""
    acc: dict = {}
    for (a, x) in bag:
        acc.setdefault(x, []).append(a)
    return GroupedBag({x: Bag(ls) for x, ls in acc.items()})


def ungroup(grouped: GroupedBag) -> Bag:
    """Inverse of :func:`group`."""
    return Bag((a, x) for x, b in grouped.items() for a in b)
