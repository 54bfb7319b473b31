"""Reachability on the encoding viewed as a plain directed graph.

The encoding's edge graph coincides with the canonical graph of the
system for every functor shape in this package, so a standard
breadth-first search (labels ignored) computes exactly the states of the
reachable part.  On flattened systems the search runs across all sorts;
intermediate states that only served unreachable user states get dropped
with everything else.
"""

from __future__ import annotations

from .ingest import ConsistencyError, EncodedCoalgebra

__all__ = ["reachable", "restrict"]


def reachable(C: EncodedCoalgebra, root: int) -> set[int]:
    """States reachable from ``root`` along edges, labels ignored.

    The frontier is expanded level by level in ascending state id, so the
    visit order is deterministic.
    """
    n = C.n
    if not 0 <= root < n:
        raise ValueError(f"no such state: {root}")
    edges = C.edges
    visited = bytearray(n)
    visited[root] = 1
    frontier = [root]
    while frontier:
        nxt: list[int] = []
        for x in frontier:
            for _, t in edges[x]:
                if not visited[t]:
                    visited[t] = 1
                    nxt.append(t)
        nxt.sort()
        frontier = nxt
    return {x for x in range(n) if visited[x]}


def restrict(C: EncodedCoalgebra, keep: set[int]) -> EncodedCoalgebra:
    """The induced subsystem on ``keep`` (which must be successor-closed),
    with states renumbered densely in their original relative order."""
    old = sorted(keep)
    remap = {x: i for i, x in enumerate(old)}
    edges = []
    for x in old:
        row = []
        for a, t in C.edges[x]:
            if t not in remap:
                raise ConsistencyError(
                    f"restriction is not successor-closed: edge "
                    f"{C.names[x]} -> {C.names[t]} leaves the kept set"
                )
            row.append((a, remap[t]))
        edges.append(row)
    initial = None
    if C.initial is not None and C.initial in remap:
        initial = remap[C.initial]
    return EncodedCoalgebra(
        sorts=C.sorts,
        system=C.system,
        sort_of=[C.sort_of[x] for x in old],
        f1=[C.f1[x] for x in old],
        edges=edges,
        names=[C.names[x] for x in old],
        n_user=sum(1 for x in old if C.sort_of[x] == 0),
        initial=initial,
        functor=C.functor,
        core=C.core,
        functor_text=C.functor_text,
    )
