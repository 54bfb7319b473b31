"""Brute-force reference implementations for the test suite.

Everything here works on terms of the composed functor, never on
encodings, so it provides an independent route to the same answers as
the refine/quotient/reach machinery: behavioural equivalence by naive
splitting with term-level quotient application, and canonical-graph
successors read off the syntax.
"""

from __future__ import annotations

from .functors import (
    AtomTerm,
    Constant,
    Coproduct,
    FunctorExpr,
    Identity,
    InTerm,
    MonoidValued,
    Polynomial,
    Powerset,
    Product,
    SetTerm,
    StateRef,
    SymTerm,
    Term,
    TupleTerm,
    WeightedTerm,
    map_term,
)
from .ingest import InputSpec
from .refine import Partition

__all__ = [
    "oracle_partition",
    "oracle_canonical_successors",
    "oracle_reachable",
    "ORACLE_MAX_STATES",
]

ORACLE_MAX_STATES = 10


def oracle_partition(spec: InputSpec) -> Partition:
    """Coarsest partition of the user states under which every block's
    members have identical quotiented terms.

    Starts from a single block and keeps splitting: per round, every
    state's term is quotiented at the term level (weights of identified
    successors summed, sets deduplicated, polynomial arguments renamed)
    and blocks are split by term equality.  Only intended for small
    systems; guarded at ``ORACLE_MAX_STATES`` states.
    """
    names = spec.state_names()
    if len(names) > ORACLE_MAX_STATES:
        raise ValueError(
            f"oracle limited to {ORACLE_MAX_STATES} states, got {len(names)}"
        )
    index = {name: i for i, name in enumerate(names)}
    terms = {i: t for i, (_, t) in enumerate(spec.states)}
    n = len(names)

    block_of = [0] * n
    blocks = [list(range(n))]
    rounds = 0
    while True:
        rounds += 1
        changed = False
        new_blocks = []
        for block in blocks:
            by_term: dict[Term, list[int]] = {}
            for x in block:
                q = map_term(spec.core, terms[x], lambda s: block_of[index[s]])
                by_term.setdefault(q, []).append(x)
            if len(by_term) == 1:
                new_blocks.append(block)
            else:
                changed = True
                new_blocks.extend(by_term.values())
        new_blocks.sort(key=lambda b: b[0])
        block_of = [0] * n
        for i, b in enumerate(new_blocks):
            for x in b:
                block_of[x] = i
        blocks = new_blocks
        if not changed:
            break
    return Partition(block_of, blocks, rounds)


def oracle_canonical_successors(f: FunctorExpr, t: Term) -> set:
    """The states a term genuinely depends on: everything that occurs
    syntactically (weights are nonzero by construction)."""
    if isinstance(f, Identity):
        assert isinstance(t, StateRef)
        return {t.state}
    if isinstance(f, Constant):
        assert isinstance(t, AtomTerm)
        return set()
    if isinstance(f, Powerset):
        assert isinstance(t, SetTerm)
        out: set = set()
        for e in t.elems:
            out |= oracle_canonical_successors(f.child, e)
        return out
    if isinstance(f, MonoidValued):
        assert isinstance(t, WeightedTerm)
        out = set()
        for k, _ in t.entries:
            out |= oracle_canonical_successors(f.child, k)
        return out
    if isinstance(f, Polynomial):
        assert isinstance(t, SymTerm)
        out = set()
        for a in t.args:
            out |= oracle_canonical_successors(f.child, a)
        return out
    if isinstance(f, Product):
        assert isinstance(t, TupleTerm)
        out = set()
        for c, i in zip(f.children, t.items):
            out |= oracle_canonical_successors(c, i)
        return out
    if isinstance(f, Coproduct):
        assert isinstance(t, InTerm)
        return oracle_canonical_successors(f.children[t.index - 1], t.inner)
    raise TypeError(f"not a core functor expression: {f!r}")


def oracle_reachable(spec: InputSpec, root: str) -> set[str]:
    """Transitive closure of the canonical-graph successor relation."""
    terms = dict(spec.states)
    seen = {root}
    todo = [root]
    while todo:
        x = todo.pop()
        for y in oracle_canonical_successors(spec.core, terms[x]):
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return seen
