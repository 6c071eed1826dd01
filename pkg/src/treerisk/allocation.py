"""Capital allocation by the maximizing scenario, with randomized fairness audits."""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum
from typing import Sequence

import numpy as np

from .bimeasure import pairing
from .errors import ValidationError
from .process import AdaptedProcess, _require_same_tree
from .riskcore import RiskMeasureSpec, rho_eval

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class AllocationResult:
    """Per-position capital charges k_i = -<X_i, a*> against the maximizing scenario a*."""

    k: tuple[float, ...]
    maximizer: int
    maximizer_label: str
    rho_total: float
    sum_k: float

    def __post_init__(self):
        if abs(self.sum_k - self.rho_total) > _SUM_TOL:
            raise ValidationError(
                f"allocation does not add up: sum k = {self.sum_k!r} "
                f"vs rho = {self.rho_total!r}"
            )


def allocate(spec: RiskMeasureSpec, positions: Sequence[AdaptedProcess]) -> AllocationResult:
    """Split the portfolio risk across positions using one maximizing scenario.

    Requires a coherent spec; with penalties the per-position charges would no
    longer sum to the portfolio risk. Among tied maximizers the lowest index
    wins, so results are deterministic.
    """
    if not spec.is_coherent:
        raise ValidationError("allocation by maximizing scenario requires a coherent spec")
    positions = list(positions)
    if not positions:
        raise ValidationError("allocation needs at least one position")
    for X in positions:
        _require_same_tree(spec.tree, X.tree)
    total = positions[0]
    for X in positions[1:]:
        total = total + X
    res = rho_eval(spec, total)
    idx = res.argmax[0]
    a_star = spec.elements[idx][0]
    k = tuple(-pairing(X, a_star) for X in positions)
    return AllocationResult(
        k=k,
        maximizer=idx,
        maximizer_label=spec.labels[idx],
        rho_total=res.value,
        sum_k=fsum(k),
    )


@dataclass(frozen=True)
class FairnessCertificate:
    samples: int
    seed: int
    checked: int
    worst_slack: float
    worst_alpha: tuple[float, ...]
    max_witness_deviation: float
    passed: bool


def fairness_check(
    result: AllocationResult,
    spec: RiskMeasureSpec,
    positions: Sequence[AdaptedProcess],
    samples: int = 1000,
    seed: int | None = None,
    slack_tol: float = 1e-12,
) -> FairnessCertificate:
    """Audit no-undercut fairness: sum_j alpha_j k_j <= rho(sum_j alpha_j X_j).

    Draws fractional participations alpha in [0,1]^N and always includes the
    standard basis vectors and the all-ones vector. Records the worst slack
    and the largest deviation of the linear witness
    sum_j alpha_j k_j = -<sum_j alpha_j X_j, a*>, which is what makes the
    inequality automatic under the maximizing scenario.
    """
    positions = list(positions)
    if len(result.k) != len(positions):
        raise ValidationError(f"{len(result.k)} charges vs {len(positions)} positions")
    if samples < 0:
        raise ValidationError(f"samples must be nonnegative, got {samples}")
    if seed is None:
        raise ValidationError("fairness sampling needs an explicit seed")
    for X in positions:
        _require_same_tree(spec.tree, X.tree)

    n = len(positions)
    rng = np.random.default_rng(seed)
    alphas: list[tuple[float, ...]] = []
    for j in range(n):
        e = [0.0] * n
        e[j] = 1.0
        alphas.append(tuple(e))
    alphas.append(tuple([1.0] * n))
    for _ in range(samples):
        alphas.append(tuple(float(x) for x in rng.uniform(0.0, 1.0, size=n)))

    a_star = spec.elements[result.maximizer][0]
    tree = spec.tree
    order = tree.order
    worst_slack = float("inf")
    worst_alpha = alphas[0]
    witness_dev = 0.0
    for alpha in alphas:
        blended = AdaptedProcess(
            tree,
            {
                nid: fsum(alpha[j] * positions[j].values[nid] for j in range(n))
                for nid in order
            },
        )
        charged = fsum(alpha[j] * result.k[j] for j in range(n))
        slack = rho_eval(spec, blended).value - charged
        if slack < worst_slack:
            worst_slack = slack
            worst_alpha = alpha
        witness_dev = max(witness_dev, abs(charged - (-pairing(blended, a_star))))

    return FairnessCertificate(
        samples=samples,
        seed=seed,
        checked=len(alphas),
        worst_slack=worst_slack,
        worst_alpha=worst_alpha,
        max_witness_deviation=witness_dev,
        passed=worst_slack >= -slack_tol,
    )
