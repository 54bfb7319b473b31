"""Transition structure of the quotient system, in linear time.

Given the encoded input and the behavioural-equivalence partition, the
quotient's encoding is computed per block from one representative: edge
targets are relabelled to blocks, the edge list is grouped by target
block with a reusable index array (initialized to -1, reset after every
state, so total work stays proportioned to the number of edges), the
labels into each block are merged, and the groups are flattened back to
an edge list.  Equivalent weighted edges add up here, which is also
where transitions can disappear entirely when weights cancel.

With ``check=True`` the pipeline runs for every member of every block
and verifies that the choice of representative does not matter, and that
the index array really is all -1 again after each state.
"""

from __future__ import annotations

from .bags import Bag, Label
from .functors import F1Value
from .ingest import ConsistencyError, EncodedCoalgebra
from .refine import Partition

__all__ = ["build_quotient"]


def _pipeline(block_of, edges_x, merge_fn, idx):
    """The per-state grouping pipeline; returns the block's edge list."""
    group_blocks: list[int] = []
    group_labels: list[list[Label]] = []
    for a, t in edges_x:
        y = block_of[t]
        j = idx[y]
        if j < 0:
            idx[y] = len(group_blocks)
            group_blocks.append(y)
            group_labels.append([a])
        else:
            group_labels[j].append(a)
    for y in group_blocks:
        idx[y] = -1
    out: list[tuple[Label, int]] = []
    for y, labels in zip(group_blocks, group_labels):
        for a in merge_fn(labels):
            out.append((a, y))
    return out


def build_quotient(
    C: EncodedCoalgebra, P: Partition, check: bool = False
) -> EncodedCoalgebra:
    """One state per block, with the merged transition structure.

    ``P`` must come from :func:`~coalmin.refine.refine` (or otherwise be a
    congruence); each block's edges are taken from its minimal member.
    """
    k = P.num_blocks
    block_of = P.block_of
    merge_fn = C.system.merge_labels
    idx = [-1] * k

    out_edges: list[list[tuple[Label, int]] | None] = [None] * k
    out_f1: list[F1Value | None] = [None] * k
    out_sort: list[int | None] = [None] * k

    for x in range(C.n):
        b = block_of[x]
        if out_edges[b] is not None and not check:
            continue
        es = _pipeline(block_of, C.edges[x], merge_fn, idx)
        if check and any(v != -1 for v in idx):
            raise ConsistencyError(
                f"index array not reset after state {C.names[x]}"
            )
        if out_edges[b] is None:
            out_edges[b] = es
            out_f1[b] = C.f1[x]
            out_sort[b] = C.sort_of[x]
        elif check:
            if C.f1[x] != out_f1[b] or Bag(es) != Bag(out_edges[b]):
                raise ConsistencyError(
                    f"block {b} is not a congruence class: members "
                    f"{C.names[P.blocks[b][0]]} and {C.names[x]} disagree"
                )

    assert all(es is not None for es in out_edges)  # every block is nonempty
    n_user = sum(1 for s in out_sort if s == 0)
    # blocks are numbered by minimal member, so the user-sort blocks come first
    assert all(s == 0 for s in out_sort[:n_user])

    return EncodedCoalgebra(
        sorts=C.sorts,
        system=C.system,
        sort_of=out_sort,
        f1=out_f1,
        edges=out_edges,
        names=[f"B{i}" for i in range(k)],
        n_user=n_user,
        initial=block_of[C.initial] if C.initial is not None else None,
        functor=C.functor,
        core=C.core,
        functor_text=C.functor_text,
    )
