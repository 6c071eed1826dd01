"""Shared fixtures: canonical small trees and seeded random generators."""

import pytest

from treerisk import (
    AdaptedProcess,
    BiMeasure,
    RawBiMeasure,
    RawProcess,
    RiskMeasureSpec,
    ScenarioTree,
    StaticRV,
    TreeNode,
    normalize_scenario,
    uniform_binomial,
)


@pytest.fixture
def t1():
    """Binary one-period tree: root, leaves d and u with probability 0.5 each."""
    return uniform_binomial(1)


@pytest.fixture
def t2():
    """Uniform two-period binary tree with four leaves of probability 0.25."""
    return uniform_binomial(2)


@pytest.fixture
def atom_tree():
    """One-period tree with outcome probabilities (0.1, 0.6, 0.3)."""
    nodes = [
        TreeNode("root", None, 0, 0.0, 1.0),
        TreeNode("lo", "root", 1, 1.0, 0.1),
        TreeNode("mid", "root", 1, 1.0, 0.6),
        TreeNode("hi", "root", 1, 1.0, 0.3),
    ]
    return ScenarioTree(nodes)


@pytest.fixture
def atom_y(atom_tree):
    """The quantile fixture payoff: -2 with prob 0.1, 0 with 0.6, 1 with 0.3."""
    return StaticRV(atom_tree, {"lo": -2.0, "mid": 0.0, "hi": 1.0})


@pytest.fixture
def chain_tree():
    """Deterministic two-period chain: a single path with branch probability one."""
    nodes = [
        TreeNode("root", None, 0, 0.0, 1.0),
        TreeNode("a", "root", 1, 0.5, 1.0),
        TreeNode("b", "a", 2, 1.0, 1.0),
    ]
    return ScenarioTree(nodes)


def random_tree(rng, max_depth=3, max_branch=3):
    """Random tree with rng-driven branching and positive normalized probabilities."""
    depth = int(rng.integers(1, max_depth + 1))
    rows = [("root", None, 1.0)]
    frontier = ["root"]
    for _ in range(depth):
        next_frontier = []
        for parent in frontier:
            width = int(rng.integers(2, max_branch + 1))
            raw = rng.uniform(0.1, 1.0, size=width)
            probs = raw / raw.sum()
            for j in range(width):
                nid = f"{parent}.{j}"
                rows.append((nid, parent, float(probs[j])))
                next_frontier.append(nid)
        frontier = next_frontier
    nodes = []
    for nid, parent, p in rows:
        k = 0 if parent is None else nid.count(".")
        nodes.append(TreeNode(nid, parent, k, k / depth, p))
    return ScenarioTree(nodes)


def random_static(tree, rng, scale=1.0):
    return StaticRV(tree, {leaf: float(rng.uniform(-scale, scale)) for leaf in tree.leaves})


def random_process(tree, rng, scale=1.0):
    return AdaptedProcess(
        tree, {nid: float(rng.uniform(-scale, scale)) for nid in tree.order}
    )


def random_bimeasure(tree, rng, density=0.7):
    """Signed sparse bi-measure with uniform increments in [-1, 1]."""
    pr = {}
    op = {}
    for nid in tree.order:
        if tree.nodes[nid].depth < tree.K and rng.uniform() < density:
            pr[nid] = float(rng.uniform(-1.0, 1.0))
        if rng.uniform() < density:
            op[nid] = float(rng.uniform(-1.0, 1.0))
    return BiMeasure(tree, pr, op)


def random_dyadic_bimeasure(tree, rng, density=0.7):
    """Signed bi-measure with increments on the 1/1024 grid, so sums stay exact."""
    def draw():
        k = int(rng.integers(-1024, 1025))
        if k == 0:
            k = 1
        return k / 1024.0

    pr = {}
    op = {}
    for nid in tree.order:
        if tree.nodes[nid].depth < tree.K and rng.uniform() < density:
            pr[nid] = draw()
        if rng.uniform() < density:
            op[nid] = draw()
    return BiMeasure(tree, pr, op)


def random_scenario(tree, rng, density=0.7):
    """Positive unit-variation bi-measure (a generalized scenario)."""
    a = random_bimeasure(tree, rng, density=density)
    plus = BiMeasure(
        tree,
        {n: abs(v) for n, v in a.pr_inc.items()},
        {n: abs(v) for n, v in a.op_inc.items()},
    )
    if not plus.pr_inc and not plus.op_inc:
        plus = BiMeasure(tree, {}, {tree.leaves[0]: 1.0})
    return normalize_scenario(plus)


def random_spec(tree, rng, n_elements=3, coherent=False):
    elements = []
    for _ in range(n_elements):
        a = random_scenario(tree, rng)
        g = 0.0 if coherent else float(rng.uniform(0.0, 0.5))
        elements.append((a, g))
    return RiskMeasureSpec(tree, elements)


def random_raw_process(tree, rng, scale=1.0):
    vals = {}
    for leaf in tree.leaves:
        for k in range(tree.K + 1):
            vals[(leaf, k)] = float(rng.uniform(-scale, scale))
    return RawProcess(tree, vals)


def random_raw_bimeasure(tree, rng, scale=1.0):
    left = {}
    right = {}
    for leaf in tree.leaves:
        for k in range(tree.K + 1):
            right[(leaf, k)] = float(rng.uniform(-scale, scale))
            if k >= 1:
                left[(leaf, k)] = float(rng.uniform(-scale, scale))
    return RawBiMeasure(tree, left, right)
