"""Adapted and scenario-resolved processes, running suprema, projections."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import fsum, isfinite
from typing import Mapping

from .errors import ValidationError
from .scenario import ScenarioTree


def _require_same_tree(a: ScenarioTree, b: ScenarioTree) -> None:
    if a is not b:
        raise ValidationError("tree mismatch: operands were built on different scenario trees")


def _check_finite(label: str, value: float) -> float:
    v = float(value)
    if not isfinite(v):
        raise ValidationError(f"non-finite value {value!r} at {label}")
    return v


@dataclass(frozen=True)
class AdaptedProcess:
    """A process carrying one value per tree node.

    Measurability is structural: the depth-k slice only sees the depth-k node,
    so any node-keyed value assignment is adapted by construction.
    """

    tree: ScenarioTree
    values: dict[str, float]

    def __post_init__(self):
        vals = {}
        for nid, v in self.values.items():
            if nid not in self.tree.nodes:
                raise ValidationError(f"process value given for unknown node '{nid}'")
            vals[nid] = _check_finite(f"node '{nid}'", v)
        for nid in self.tree.order:
            if nid not in vals:
                raise ValidationError(f"process is missing a value at node '{nid}'")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, tree: ScenarioTree, c: float) -> "AdaptedProcess":
        c = float(c)
        return cls(tree, {nid: c for nid in tree.order})

    @classmethod
    def zero(cls, tree: ScenarioTree) -> "AdaptedProcess":
        return cls.constant(tree, 0.0)

    def __add__(self, other: "AdaptedProcess") -> "AdaptedProcess":
        _require_same_tree(self.tree, other.tree)
        return AdaptedProcess(
            self.tree, {n: self.values[n] + other.values[n] for n in self.tree.order}
        )

    def __sub__(self, other: "AdaptedProcess") -> "AdaptedProcess":
        _require_same_tree(self.tree, other.tree)
        return AdaptedProcess(
            self.tree, {n: self.values[n] - other.values[n] for n in self.tree.order}
        )

    def __neg__(self) -> "AdaptedProcess":
        return self.scale(-1.0)

    def scale(self, c: float) -> "AdaptedProcess":
        c = float(c)
        return AdaptedProcess(self.tree, {n: c * v for n, v in self.values.items()})

    def shift(self, m: float) -> "AdaptedProcess":
        m = float(m)
        return AdaptedProcess(self.tree, {n: v + m for n, v in self.values.items()})


@dataclass(frozen=True)
class StaticRV:
    """A terminal-time random variable, one value per leaf."""

    tree: ScenarioTree
    values: dict[str, float]

    def __post_init__(self):
        vals = {}
        for leaf, v in self.values.items():
            if leaf not in self.tree.nodes:
                raise ValidationError(f"value given for unknown leaf '{leaf}'")
            if self.tree.nodes[leaf].depth != self.tree.K:
                raise ValidationError(f"'{leaf}' is not a leaf; static values live on leaves only")
            vals[leaf] = _check_finite(f"leaf '{leaf}'", v)
        for leaf in self.tree.leaves:
            if leaf not in vals:
                raise ValidationError(f"missing value at leaf '{leaf}'")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, tree: ScenarioTree, c: float) -> "StaticRV":
        c = float(c)
        return cls(tree, {leaf: c for leaf in tree.leaves})

    def expectation(self) -> float:
        p = self.tree.prob
        return fsum(p[leaf] * self.values[leaf] for leaf in self.tree.leaves)

    def scale(self, c: float) -> "StaticRV":
        c = float(c)
        return StaticRV(self.tree, {leaf: c * v for leaf, v in self.values.items()})

    def __add__(self, other: "StaticRV") -> "StaticRV":
        _require_same_tree(self.tree, other.tree)
        return StaticRV(
            self.tree, {leaf: self.values[leaf] + other.values[leaf] for leaf in self.tree.leaves}
        )

    def __sub__(self, other: "StaticRV") -> "StaticRV":
        _require_same_tree(self.tree, other.tree)
        return StaticRV(
            self.tree, {leaf: self.values[leaf] - other.values[leaf] for leaf in self.tree.leaves}
        )

    def __neg__(self) -> "StaticRV":
        return self.scale(-1.0)


@dataclass(frozen=True)
class RawProcess:
    """A time-indexed value per leaf, with no measurability tied to the tree.

    Raw processes live over the constant filtration in which every leaf is
    already visible at time zero; they are the natural inputs of the optional
    and predictable projections. Values must cover every (leaf, depth) pair.
    """

    tree: ScenarioTree
    values: dict[tuple[str, int], float]

    def __post_init__(self):
        vals = {}
        K = self.tree.K
        for key, v in self.values.items():
            leaf, k = key
            if leaf not in self.tree.nodes or self.tree.nodes[leaf].depth != K:
                raise ValidationError(f"raw process keyed on unknown leaf '{leaf}'")
            if not 0 <= k <= K:
                raise ValidationError(f"raw process depth {k} at leaf '{leaf}' out of range 0..{K}")
            vals[(leaf, int(k))] = _check_finite(f"({leaf}, {k})", v)
        for leaf in self.tree.leaves:
            for k in range(K + 1):
                if (leaf, k) not in vals:
                    raise ValidationError(f"raw process is missing a value at ({leaf}, {k})")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_adapted(cls, X: AdaptedProcess) -> "RawProcess":
        """Resolve an adapted process along each path: value at (leaf, k) is X at the depth-k ancestor."""
        tree = X.tree
        vals = {}
        for leaf in tree.leaves:
            for k, nid in enumerate(tree.path(leaf)):
                vals[(leaf, k)] = X.values[nid]
        return cls(tree, vals)


def terminal_values(X: AdaptedProcess) -> StaticRV:
    """The terminal slice of an adapted process as a leaf-keyed random variable."""
    return StaticRV(X.tree, {leaf: X.values[leaf] for leaf in X.tree.leaves})


def running_sup(X: AdaptedProcess) -> StaticRV:
    """Pathwise supremum of |X| from the root through each leaf."""
    tree = X.tree
    out = {}
    for leaf in tree.leaves:
        out[leaf] = max(abs(X.values[nid]) for nid in tree.path(leaf))
    return StaticRV(tree, out)


def sup_norm(X: AdaptedProcess) -> float:
    """Essential supremum of the running supremum (plain maximum: every leaf has mass)."""
    rs = running_sup(X)
    return max(rs.values[leaf] for leaf in X.tree.leaves)


def _conditional_mean(tree: ScenarioTree, leaf_values: Mapping[str, float], nid: str) -> float:
    leaves = tree.leaves_under(nid)
    first = leaf_values[leaves[0]]
    if all(leaf_values[leaf] == first for leaf in leaves):
        # conditioning a constant returns it exactly
        return first
    p = tree.prob
    return fsum(p[leaf] * leaf_values[leaf] for leaf in leaves) / p[nid]


def optional_projection_static(Y: StaticRV) -> AdaptedProcess:
    """Martingale closure of Y: at each node the probability-weighted mean of its leaves.

    The terminal slice reproduces Y exactly and successive slices satisfy the
    one-step martingale identity up to rounding.
    """
    tree = Y.tree
    out: dict[str, float] = {}
    for nid in tree.order:
        if tree.nodes[nid].depth == tree.K:
            out[nid] = Y.values[nid]
        else:
            out[nid] = _conditional_mean(tree, Y.values, nid)
    return AdaptedProcess(tree, out)


def optional_projection_raw(Z: RawProcess) -> AdaptedProcess:
    """Optional projection: at a depth-k node, the conditional mean of the depth-k raw slice."""
    tree = Z.tree
    out: dict[str, float] = {}
    for k in range(tree.K + 1):
        slice_k = {leaf: Z.values[(leaf, k)] for leaf in tree.leaves}
        for nid in tree.depth_nodes[k]:
            if k == tree.K:
                out[nid] = slice_k[nid]
            else:
                out[nid] = _conditional_mean(tree, slice_k, nid)
    return AdaptedProcess(tree, out)


def predictable_projection_raw(Z: RawProcess) -> AdaptedProcess:
    """Predictable projection: condition each depth-k slice on the parent node.

    At the root the conditioning information is trivial, so the depth-0 slice
    is replaced by its unconditional mean. Siblings share their parent's
    value.
    """
    tree = Z.tree
    out: dict[str, float] = {}
    root = tree.root
    slice_0 = {leaf: Z.values[(leaf, 0)] for leaf in tree.leaves}
    out[root] = _conditional_mean(tree, slice_0, root)
    for k in range(1, tree.K + 1):
        slice_k = {leaf: Z.values[(leaf, k)] for leaf in tree.leaves}
        for parent in tree.depth_nodes[k - 1]:
            m = _conditional_mean(tree, slice_k, parent)
            for child in tree.children(parent):
                out[child] = m
    return AdaptedProcess(tree, out)


def prob_sup_exceedance(X: AdaptedProcess, Y: AdaptedProcess, eps: float) -> float:
    """P[ sup_k |X_k - Y_k| > eps ], the mass of leaves whose paths ever separate by more than eps."""
    _require_same_tree(X.tree, Y.tree)
    eps = float(eps)
    if not eps > 0.0:
        raise ValidationError(f"eps must be positive, got {eps!r}")
    tree = X.tree
    rs = running_sup(X - Y)
    return fsum(tree.prob[leaf] for leaf in tree.leaves if rs.values[leaf] > eps)
