"""Bi-measures: paired predictable/optional increment fields on a scenario tree.

A bi-measure plays the role of a dual variable against adapted processes. It
stores two increment fields: a predictable one, whose increment is decided one
step ahead (stored on the depth-k node, acting at time k+1, reading the left
limit of the process, which on the tree is the value at the storage node), and
an optional one acting at the storage node itself, with mass at time zero
allowed. Increments are stored sparsely; a missing entry means zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum, isfinite

from .errors import ValidationError
from .process import AdaptedProcess, RawProcess, StaticRV, _require_same_tree
from .scenario import ScenarioTree


def _clean_increments(
    tree: ScenarioTree, entries: dict[str, float], *, field: str, max_depth: int
) -> dict[str, float]:
    out: dict[str, float] = {}
    for nid, v in entries.items():
        node = tree.require_node(nid)
        if node.depth > max_depth:
            raise ValidationError(
                f"{field} increment stored at node '{nid}' (depth {node.depth}); "
                f"entries are only allowed up to depth {max_depth}"
            )
        v = float(v)
        if not isfinite(v):
            raise ValidationError(f"non-finite {field} increment at node '{nid}'")
        if v != 0.0:
            out[nid] = v
    return out


@dataclass(frozen=True)
class BiMeasure:
    """Sparse predictable/optional increment pair over one tree.

    ``pr_inc`` lives on depths 0..K-1 (an increment stored at a depth-k node
    acts at time k+1); ``op_inc`` lives on all depths, the root included.
    Exact zeros are dropped at construction so equal objects compare equal.
    """

    tree: ScenarioTree
    pr_inc: dict[str, float]
    op_inc: dict[str, float]

    def __post_init__(self):
        object.__setattr__(
            self,
            "pr_inc",
            _clean_increments(self.tree, self.pr_inc, field="predictable", max_depth=self.tree.K - 1),
        )
        object.__setattr__(
            self,
            "op_inc",
            _clean_increments(self.tree, self.op_inc, field="optional", max_depth=self.tree.K),
        )

    @property
    def is_positive(self) -> bool:
        return all(v >= 0.0 for v in self.pr_inc.values()) and all(
            v >= 0.0 for v in self.op_inc.values()
        )

    def scale(self, c: float) -> "BiMeasure":
        c = float(c)
        return BiMeasure(
            self.tree,
            {n: c * v for n, v in self.pr_inc.items()},
            {n: c * v for n, v in self.op_inc.items()},
        )

    def __neg__(self) -> "BiMeasure":
        return self.scale(-1.0)

    def __add__(self, other: "BiMeasure") -> "BiMeasure":
        _require_same_tree(self.tree, other.tree)
        pr = dict(self.pr_inc)
        for n, v in other.pr_inc.items():
            pr[n] = pr.get(n, 0.0) + v
        op = dict(self.op_inc)
        for n, v in other.op_inc.items():
            op[n] = op.get(n, 0.0) + v
        return BiMeasure(self.tree, pr, op)

    def __sub__(self, other: "BiMeasure") -> "BiMeasure":
        return self + (-other)

    def _stored_nodes(self) -> list[str]:
        return sorted(set(self.pr_inc) | set(self.op_inc), key=self.tree.sort_key)


@dataclass(frozen=True)
class RawBiMeasure:
    """Increment pair resolved per leaf, over the constant filtration.

    ``left_inc`` is keyed on (leaf, k) for k = 1..K and pairs against the
    previous process value; ``right_inc`` is keyed on k = 0..K and pairs
    against the current one. Coverage must be complete.
    """

    tree: ScenarioTree
    left_inc: dict[tuple[str, int], float]
    right_inc: dict[tuple[str, int], float]

    def __post_init__(self):
        K = self.tree.K
        leaves = set(self.tree.leaves)

        def check(entries, lo, label):
            vals = {}
            for (leaf, k), v in entries.items():
                if leaf not in leaves:
                    raise ValidationError(f"{label} increment keyed on unknown leaf '{leaf}'")
                if not lo <= k <= K:
                    raise ValidationError(
                        f"{label} increment at ({leaf}, {k}) out of range {lo}..{K}"
                    )
                v = float(v)
                if not isfinite(v):
                    raise ValidationError(f"non-finite {label} increment at ({leaf}, {k})")
                vals[(leaf, int(k))] = v
            for leaf in leaves:
                for k in range(lo, K + 1):
                    if (leaf, k) not in vals:
                        raise ValidationError(f"missing {label} increment at ({leaf}, {k})")
            return vals

        object.__setattr__(self, "left_inc", check(self.left_inc, 1, "left"))
        object.__setattr__(self, "right_inc", check(self.right_inc, 0, "right"))


def as_raw(a: BiMeasure) -> RawBiMeasure:
    """Resolve a bi-measure along each path into its raw counterpart."""
    tree = a.tree
    left: dict[tuple[str, int], float] = {}
    right: dict[tuple[str, int], float] = {}
    for leaf in tree.leaves:
        path = tree.path(leaf)
        for k, nid in enumerate(path):
            if k < tree.K:
                left[(leaf, k + 1)] = a.pr_inc.get(nid, 0.0)
            right[(leaf, k)] = a.op_inc.get(nid, 0.0)
    return RawBiMeasure(tree, left, right)


def pairing(X: AdaptedProcess, a: BiMeasure) -> float:
    """Expected pathwise increment sum of X against a.

    The predictable field reads the left limit, which is the value at its
    storage node; the optional field reads the value where it sits. The
    per-path double sum therefore collapses to one term per stored increment,
    P(n) * X(n) * (pr(n) + op(n)).
    """
    _require_same_tree(X.tree, a.tree)
    tree = X.tree
    prob = tree.prob
    return fsum(
        prob[n] * X.values[n] * (a.pr_inc.get(n, 0.0) + a.op_inc.get(n, 0.0))
        for n in a._stored_nodes()
    )


def raw_pairing(Z: RawProcess, a: RawBiMeasure) -> float:
    """Pairing over the constant filtration: per-leaf increment sums, then expectation."""
    _require_same_tree(Z.tree, a.tree)
    tree = Z.tree
    K = tree.K
    terms = []
    for leaf in tree.leaves:
        p = tree.prob[leaf]
        for k in range(1, K + 1):
            terms.append(p * Z.values[(leaf, k - 1)] * a.left_inc[(leaf, k)])
        for k in range(K + 1):
            terms.append(p * Z.values[(leaf, k)] * a.right_inc[(leaf, k)])
    return fsum(terms)


def _variation_parts(a: BiMeasure) -> dict[str, list[float]]:
    """Absolute-increment contributions per leaf, visiting only stored nodes.

    Leaves absent from the result see no increment and have variation zero.
    fsum of each list is order independent (it rounds the exact sum once),
    so scattering by stored node gives the same values as a path walk.
    """
    tree = a.tree
    parts: dict[str, list[float]] = {}
    for inc_map in (a.pr_inc, a.op_inc):
        for nid, inc in inc_map.items():
            mag = abs(inc)
            for leaf in tree.leaves_under(nid):
                parts.setdefault(leaf, []).append(mag)
    return parts


def variation(a: BiMeasure) -> StaticRV:
    """Pathwise total variation: the sum of absolute increments seen along each leaf's path."""
    tree = a.tree
    out = {leaf: 0.0 for leaf in tree.leaves}
    for leaf, terms in _variation_parts(a).items():
        out[leaf] = fsum(terms)
    return StaticRV(tree, out)


def variation_norm(a: BiMeasure, p: float = 1.0) -> float:
    """L^p norm of the pathwise variation under the leaf measure (p = inf gives the max)."""
    parts = _variation_parts(a)
    if p == math.inf:
        return max((fsum(terms) for terms in parts.values()), default=0.0)
    p = float(p)
    if not p >= 1.0:
        raise ValidationError(f"norm order must satisfy p >= 1, got {p!r}")
    prob = a.tree.prob
    total = fsum(prob[leaf] * fsum(terms) ** p for leaf, terms in parts.items())
    return total ** (1.0 / p)


def jordan(a: BiMeasure) -> tuple[BiMeasure, BiMeasure]:
    """Increment-wise positive and negative parts; a == plus - minus exactly."""
    plus = BiMeasure(
        a.tree,
        {n: v for n, v in a.pr_inc.items() if v > 0.0},
        {n: v for n, v in a.op_inc.items() if v > 0.0},
    )
    minus = BiMeasure(
        a.tree,
        {n: -v for n, v in a.pr_inc.items() if v < 0.0},
        {n: -v for n, v in a.op_inc.items() if v < 0.0},
    )
    return plus, minus


def terminal_increment(a: BiMeasure) -> StaticRV:
    """Signed sum of all increments along each path: the net terminal mass a_T - a_0."""
    tree = a.tree
    out = {}
    for leaf in tree.leaves:
        terms = []
        for nid in tree.path(leaf):
            if nid in a.pr_inc:
                terms.append(a.pr_inc[nid])
            if nid in a.op_inc:
                terms.append(a.op_inc[nid])
        out[leaf] = fsum(terms)
    return StaticRV(tree, out)


def dual_projection(a: RawBiMeasure) -> BiMeasure:
    """Project a raw increment pair onto the tree filtration.

    The predictable part stored at a depth-k node is the conditional mean of
    the raw left increment acting at k+1; the optional part at a node is the
    conditional mean of the raw right increment at the same depth. In discrete
    time no mass is left over for a continuous part.
    """
    tree = a.tree
    pr: dict[str, float] = {}
    op: dict[str, float] = {}
    for k in range(tree.K + 1):
        right_k = {leaf: a.right_inc[(leaf, k)] for leaf in tree.leaves}
        for nid in tree.depth_nodes[k]:
            op[nid] = _node_mean(tree, right_k, nid)
        if k < tree.K:
            left_next = {leaf: a.left_inc[(leaf, k + 1)] for leaf in tree.leaves}
            for nid in tree.depth_nodes[k]:
                pr[nid] = _node_mean(tree, left_next, nid)
    return BiMeasure(tree, pr, op)


def _node_mean(tree: ScenarioTree, leaf_values: dict[str, float], nid: str) -> float:
    leaves = tree.leaves_under(nid)
    first = leaf_values[leaves[0]]
    if all(leaf_values[leaf] == first for leaf in leaves):
        return first
    prob = tree.prob
    return fsum(prob[leaf] * leaf_values[leaf] for leaf in leaves) / prob[nid]


def normalize_scenario(a: BiMeasure) -> BiMeasure:
    """Scale a nonnegative bi-measure to unit expected variation.

    The result is a generalized scenario: the density-like dual objects the
    risk representations draw from.
    """
    for n, v in list(a.pr_inc.items()) + list(a.op_inc.items()):
        if v < 0.0:
            raise ValidationError(
                f"negative increment at node '{n}'; normalization requires a nonnegative bi-measure"
            )
    norm = variation_norm(a, 1.0)
    if norm <= 0.0:
        raise ValidationError("cannot normalize the zero bi-measure")
    return a.scale(1.0 / norm)


def stopping_time_measure(tree: ScenarioTree, tau: dict[str, int]) -> BiMeasure:
    """Optional unit mass placed where the stopping rule tau fires.

    ``tau`` maps each leaf to the depth at which its path stops. The rule must
    be a genuine stopping time: whether a path stops at depth k may only
    depend on its depth-k node.
    """
    K = tree.K
    for leaf in tree.leaves:
        if leaf not in tau:
            raise ValidationError(f"stopping rule missing at leaf '{leaf}'")
        k = tau[leaf]
        if not isinstance(k, int) or not 0 <= k <= K:
            raise ValidationError(f"stopping depth {k!r} at leaf '{leaf}' out of range 0..{K}")
    op: dict[str, float] = {}
    for k in range(K + 1):
        for nid in tree.depth_nodes[k]:
            flags = {tau[leaf] == k for leaf in tree.leaves_under(nid)}
            if len(flags) > 1:
                raise ValidationError(
                    f"stopping decision at depth {k} is not measurable at node '{nid}'"
                )
            if flags.pop():
                op[nid] = 1.0
    return BiMeasure(tree, {}, op)


def terminal_density_measure(f: StaticRV, *, norm_tol: float = 1e-9) -> BiMeasure:
    """Terminal optional mass weighted by a probability density on the leaves."""
    tree = f.tree
    for leaf in tree.leaves:
        if f.values[leaf] < 0.0:
            raise ValidationError(f"density is negative at leaf '{leaf}'")
    mean = f.expectation()
    if abs(mean - 1.0) > norm_tol:
        raise ValidationError(f"density must integrate to 1, got {mean!r}")
    op = {leaf: f.values[leaf] for leaf in tree.leaves if f.values[leaf] != 0.0}
    return BiMeasure(tree, {}, op)


def increment_vector(a: BiMeasure) -> list[float]:
    """Flatten to the canonical coordinate layout: predictable entries (depths 0..K-1), then optional (all depths)."""
    tree = a.tree
    coords = []
    for k in range(tree.K):
        for nid in tree.depth_nodes[k]:
            coords.append(a.pr_inc.get(nid, 0.0))
    for nid in tree.order:
        coords.append(a.op_inc.get(nid, 0.0))
    return coords
