"""Coarsest behavioural-equivalence partition by signature refinement.

Each state's signature under a partition is what its outgoing edge bag
looks like after the targets are replaced by their blocks and the labels
into each block are merged.  States start out grouped by their output
value and are repeatedly split by signature until nothing changes; the
fixpoint is validated against a brute-force term-level oracle in the
test suite rather than against the quasilinear engines from the
literature, which this package deliberately does not reimplement.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bags import Bag, Label
from .functors import F1Value
from .ingest import EncodedCoalgebra

__all__ = ["Partition", "Signature", "signature", "refine"]

Signature = tuple  # (F1Value, Bag of (label, block-id))


@dataclass
class Partition:
    """A partition of the state set into consecutively numbered blocks.

    Blocks are ordered by their minimal member, member lists ascend, so
    identical inputs always yield identical numbering.
    """

    block_of: list[int]
    blocks: list[list[int]]
    rounds: int = 0

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def is_discrete(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)


def _signature_bag(x: int, block_of: list[int], C: EncodedCoalgebra) -> Bag:
    merge_fn = C.system.merge_labels
    grouped: dict[int, list[Label]] = {}
    for a, t in C.edges[x]:
        grouped.setdefault(block_of[t], []).append(a)
    pairs = []
    for y, labels in grouped.items():
        for a in merge_fn(labels):
            pairs.append((a, y))
    return Bag(pairs)


def signature(x: int, P: Partition, C: EncodedCoalgebra) -> Signature:
    """The state's one-step behaviour relative to the partition."""
    return (C.f1[x], _signature_bag(x, P.block_of, C))


def _renumber(groups: list[list[int]]) -> tuple[list[list[int]], list[int]]:
    groups = sorted(groups, key=lambda b: b[0])
    block_of: list[int] = [0] * sum(len(b) for b in groups)
    for i, b in enumerate(groups):
        for x in b:
            block_of[x] = i
    return groups, block_of


def initial_partition(C: EncodedCoalgebra) -> Partition:
    """Group states by output value (the successor-free part of the
    encoding); behavioural equivalence can never merge across it."""
    by_f1: dict[F1Value, list[int]] = {}
    for x in range(C.n):
        by_f1.setdefault(C.f1[x], []).append(x)
    blocks, block_of = _renumber(list(by_f1.values()))
    return Partition(block_of, blocks)


def refine(C: EncodedCoalgebra) -> Partition:
    """Iterate signature splitting to the coarsest stable partition."""
    part = initial_partition(C)
    blocks, block_of = part.blocks, part.block_of
    rounds = 0
    while True:
        rounds += 1
        changed = False
        new_blocks: list[list[int]] = []
        for block in blocks:
            if len(block) == 1:
                new_blocks.append(block)
                continue
            by_sig: dict[Bag, list[int]] = {}
            for x in block:
                by_sig.setdefault(_signature_bag(x, block_of, C), []).append(x)
            if len(by_sig) == 1:
                new_blocks.append(block)
            else:
                changed = True
                new_blocks.extend(by_sig.values())
        blocks, block_of = _renumber(new_blocks)
        if not changed:
            break
    return Partition(block_of, blocks, rounds)
