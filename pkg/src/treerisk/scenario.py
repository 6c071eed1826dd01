"""Finite scenario trees: rooted node graphs with branch probabilities on a time grid."""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum, isfinite
from typing import Iterable, Mapping

from .errors import ValidationError

SUM_TOL = 1e-12


@dataclass(frozen=True)
class TreeNode:
    """A single tree node. ``branch_prob`` is conditional on the parent (1.0 at the root)."""

    id: str
    parent: str | None
    depth: int
    time: float
    branch_prob: float


class ScenarioTree:
    """Finite filtered probability space over a rooted tree.

    The partition into depth-k nodes carries the information available at time
    ``times[k]``. Branch probabilities are conditional on the parent and
    strictly positive, so every conditional expectation along the tree is well
    defined and every leaf has positive mass.

    Instances are immutable after construction and meant to be shared by the
    processes and bi-measures built on them (those types compare trees by
    object identity). Construct via :func:`build_tree` or
    :func:`uniform_binomial`.
    """

    __slots__ = (
        "nodes",
        "order",
        "depth_nodes",
        "leaves",
        "K",
        "T",
        "times",
        "prob",
        "_children",
        "_paths",
        "_leaves_under",
    )

    def __init__(self, node_list: Iterable[TreeNode]):
        nodes = list(node_list)
        if not nodes:
            raise ValidationError("tree has no nodes")

        by_id: dict[str, TreeNode] = {}
        for n in nodes:
            if not isinstance(n.id, str) or not n.id:
                raise ValidationError(f"node id must be a non-empty string, got {n.id!r}")
            if n.id in by_id:
                raise ValidationError(f"duplicate node id '{n.id}'")
            by_id[n.id] = n

        roots = [n for n in nodes if n.parent is None]
        if len(roots) != 1:
            raise ValidationError(f"expected exactly one root node, found {len(roots)}")
        root = roots[0]
        if root.depth != 0:
            raise ValidationError(f"root node '{root.id}' must have depth 0, got {root.depth}")
        if root.branch_prob != 1.0:
            raise ValidationError(f"root node '{root.id}' must carry branch probability 1")

        children: dict[str, list[str]] = {n.id: [] for n in nodes}
        for n in nodes:
            if n.parent is None:
                continue
            if n.parent not in by_id:
                raise ValidationError(f"node '{n.id}' references unknown parent '{n.parent}'")
            if n.depth != by_id[n.parent].depth + 1:
                raise ValidationError(
                    f"node '{n.id}' at depth {n.depth} must sit one level below "
                    f"parent '{n.parent}' at depth {by_id[n.parent].depth}"
                )
            if not (0.0 < n.branch_prob <= 1.0) or not isfinite(n.branch_prob):
                raise ValidationError(
                    f"branch probability of node '{n.id}' must lie in (0, 1], got {n.branch_prob!r}"
                )
            children[n.parent].append(n.id)

        K = max(n.depth for n in nodes)
        time_at: dict[int, float] = {}
        for n in nodes:
            if not isfinite(n.time):
                raise ValidationError(f"node '{n.id}' has non-finite time {n.time!r}")
            if n.depth in time_at:
                if n.time != time_at[n.depth]:
                    raise ValidationError(
                        f"node '{n.id}' has time {n.time!r}, but depth {n.depth} "
                        f"was already placed at time {time_at[n.depth]!r}"
                    )
            else:
                time_at[n.depth] = n.time
        times = [time_at[k] for k in range(K + 1)]
        if abs(times[0]) > SUM_TOL:
            raise ValidationError(f"the time grid must start at 0, got t_0 = {times[0]!r}")
        for k in range(K):
            if not times[k + 1] > times[k]:
                raise ValidationError(
                    f"times must be strictly increasing, got t_{k} = {times[k]!r} "
                    f"and t_{k + 1} = {times[k + 1]!r}"
                )

        for n in nodes:
            if not children[n.id] and n.depth != K:
                raise ValidationError(
                    f"node '{n.id}' has no children but sits at depth {n.depth} < {K}; "
                    "all leaves must share the terminal depth"
                )

        # canonical ordering: (depth, id) lexicographic, children sorted by id
        order = sorted(by_id, key=lambda i: (by_id[i].depth, i))
        for lst in children.values():
            lst.sort()

        for n in nodes:
            kids = children[n.id]
            if kids:
                s = fsum(by_id[c].branch_prob for c in kids)
                if abs(s - 1.0) > SUM_TOL:
                    raise ValidationError(
                        f"children probabilities sum != 1 under node '{n.id}' (got {s!r})"
                    )

        prob: dict[str, float] = {root.id: 1.0}
        for nid in order:
            n = by_id[nid]
            if n.parent is not None:
                prob[nid] = prob[n.parent] * n.branch_prob

        leaves = [nid for nid in order if by_id[nid].depth == K]
        mass = fsum(prob[leaf] for leaf in leaves)
        if abs(mass - 1.0) > SUM_TOL:
            raise ValidationError(f"leaf probabilities sum != 1 (got {mass!r})")

        paths: dict[str, tuple[str, ...]] = {}
        for leaf in leaves:
            chain = []
            cur: str | None = leaf
            while cur is not None:
                chain.append(cur)
                cur = by_id[cur].parent
            paths[leaf] = tuple(reversed(chain))

        leaves_under: dict[str, list[str]] = {nid: [] for nid in order}
        for leaf in leaves:
            for nid in paths[leaf]:
                leaves_under[nid].append(leaf)

        depth_nodes = tuple(
            tuple(nid for nid in order if by_id[nid].depth == k) for k in range(K + 1)
        )

        self.nodes = by_id
        self.order = tuple(order)
        self.depth_nodes = depth_nodes
        self.leaves = tuple(leaves)
        self.K = K
        self.T = times[K]
        self.times = tuple(times)
        self.prob = prob
        self._children = {nid: tuple(kids) for nid, kids in children.items()}
        self._paths = paths
        self._leaves_under = {nid: tuple(ls) for nid, ls in leaves_under.items()}

    def require_node(self, node_id: str) -> TreeNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise ValidationError(f"unknown node id '{node_id}'") from None

    def children(self, node_id: str) -> tuple[str, ...]:
        self.require_node(node_id)
        return self._children[node_id]

    def path(self, leaf_id: str) -> tuple[str, ...]:
        """Node ids from the root down to ``leaf_id``, inclusive."""
        if leaf_id not in self._paths:
            raise ValidationError(f"'{leaf_id}' is not a leaf of this tree")
        return self._paths[leaf_id]

    def leaves_under(self, node_id: str) -> tuple[str, ...]:
        self.require_node(node_id)
        return self._leaves_under[node_id]

    def sort_key(self, node_id: str):
        n = self.require_node(node_id)
        return (n.depth, n.id)

    @property
    def root(self) -> str:
        return self.depth_nodes[0][0]

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"ScenarioTree(nodes={len(self.order)}, leaves={len(self.leaves)}, "
            f"K={self.K}, T={self.T})"
        )


def build_tree(
    node_rows: Iterable[tuple[str, str | None, int, float]],
    branch_prob: Mapping[str, float],
) -> ScenarioTree:
    """Assemble and validate a tree from ``(id, parent, depth, time)`` rows.

    ``branch_prob`` maps each non-root node to its conditional probability.
    An entry for the root is optional and must equal 1 when present.
    """
    rows = list(node_rows)
    nodes = []
    for nid, parent, depth, time in rows:
        if parent is None:
            p = branch_prob.get(nid, 1.0)
        else:
            if nid not in branch_prob:
                raise ValidationError(f"missing branch probability for node '{nid}'")
            p = branch_prob[nid]
        nodes.append(TreeNode(id=nid, parent=parent, depth=depth, time=float(time), branch_prob=float(p)))
    return ScenarioTree(nodes)


def uniform_binomial(depth: int) -> ScenarioTree:
    """Symmetric binary tree, branch probability one half, time grid k/depth.

    Node ids are the up/down path strings ('u', 'd', 'ud', ...); the root is
    named 'root'. The tree has 2**depth leaves of probability 2**-depth each.
    """
    if depth < 1:
        raise ValidationError(f"depth must be a positive integer, got {depth}")
    rows: list[tuple[str, str | None, int, float]] = [("root", None, 0, 0.0)]
    probs: dict[str, float] = {}
    level = [""]
    for k in range(1, depth + 1):
        nxt = []
        for prefix in level:
            parent = prefix if prefix else "root"
            for letter in ("d", "u"):
                nid = prefix + letter
                rows.append((nid, parent, k, k / depth))
                probs[nid] = 0.5
                nxt.append(nid)
        level = nxt
    return build_tree(rows, probs)


def node_probability(tree: ScenarioTree, node_id: str) -> float:
    """Unconditional probability of the node, the product of branch probabilities above it."""
    tree.require_node(node_id)
    return tree.prob[node_id]
