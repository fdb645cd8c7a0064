"""
Finite trees of increasing sequences and their order.

A tree is a prefix-closed set of nonempty strictly increasing tuples. The
derivative D keeps the nodes that have a proper extension in the tree, and
the order o(T) is the number of derivatives needed to reach the empty tree.
"""
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import FrozenSet, Iterable, List, Set, Tuple

from l1workbench.combinatorics.families import FinSet, as_finset
from l1workbench.utils.errors import PreconditionError

logger = logging.getLogger(__name__)

Node = Tuple[int, ...]


@dataclass(frozen=True)
class FinTree:
    nodes: FrozenSet[Node]

    def __post_init__(self):
        for node in self.nodes:
            if not node:
                raise PreconditionError("Tree nodes are nonempty sequences")
            if any(a >= b for a, b in zip(node, node[1:])):
                raise PreconditionError(f"Tree node {node} is not strictly increasing")
            if len(node) > 1 and node[:-1] not in self.nodes:
                raise PreconditionError(f"Tree is not prefix closed: {node[:-1]} missing")

    @classmethod
    def from_nodes(cls, nodes: Iterable[Iterable[int]]) -> "FinTree":
        return cls(frozenset(tuple(node) for node in nodes))

    def __len__(self):
        return len(self.nodes)

    def maximal_nodes(self) -> Set[Node]:
        extended = {node[:-1] for node in self.nodes if len(node) > 1}
        return {node for node in self.nodes if node not in extended}

    def derivative(self) -> "FinTree":
        extended = {node[:-1] for node in self.nodes if len(node) > 1}
        return FinTree(frozenset(node for node in self.nodes if node in extended))


def tree_order(tree: FinTree) -> int:
    """Least k with D^k(tree) empty."""
    order = 0
    while tree.nodes:
        tree = tree.derivative()
        order += 1
    return order


def family_to_tree(family: Iterable[FinSet]) -> FinTree:
    """All nonempty initial segments of the increasing enumerations of the sets."""
    nodes = set()
    for F in family:
        F = as_finset(F)
        for length in range(1, len(F) + 1):
            nodes.add(F[:length])
    return FinTree(frozenset(nodes))


def tree_to_family(tree: FinTree) -> List[FinSet]:
    """
    Hereditary family of subsets of node ranges, lexicographically sorted.

    The empty set is always included.
    """
    members: Set[FinSet] = {()}
    for node in tree.maximal_nodes():
        for size in range(1, len(node) + 1):
            members.update(combinations(node, size))
    return sorted(members)
