"""Stress diagnostics: uniform integrability, refinement limits, decomposition identities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum
from typing import Callable, Protocol, Sequence

from .bimeasure import BiMeasure, jordan, terminal_increment, variation
from .errors import ValidationError
from .instances import avar, avar_max_density, worst_case_spec
from .process import AdaptedProcess, StaticRV, prob_sup_exceedance, terminal_values
from .riskcore import RiskMeasureSpec, rho_eval
from .scenario import ScenarioTree, uniform_binomial

DEFAULT_K_GRID = (0.0, 1.0, 5.0, 10.0, 20.0, 50.0)
DEFAULT_EPS_GRID = (0.5, 0.25, 0.125)


@dataclass(frozen=True)
class UIReport:
    thresholds: tuple[float, ...]
    modulus: tuple[float, ...]
    decay_threshold: float
    verdict: str  # "decaying" or "non-decaying"


def ui_modulus(
    family: Sequence[StaticRV],
    thresholds: Sequence[float],
    decay_threshold: float = 1e-6,
) -> UIReport:
    """Tail-mass modulus eta(K) = sup_f E[|f| ; |f| > K] over a finite family.

    Computed exactly atom by atom. ``decaying`` means the modulus at the
    largest threshold has dropped below ``decay_threshold``; on a finite tree
    that is the meaningful stand-in for the vanishing-tail limit.
    """
    family = list(family)
    if not family:
        raise ValidationError("uniform integrability needs a nonempty family")
    ks = [float(k) for k in thresholds]
    if not ks:
        raise ValidationError("need at least one threshold")
    if any(k < 0 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValidationError("thresholds must be nonnegative and strictly increasing")
    tree = family[0].tree
    for f in family:
        if f.tree is not tree:
            raise ValidationError("tree mismatch inside the family")
    prob = tree.prob
    etas = []
    for k in ks:
        eta = 0.0
        for f in family:
            mass = fsum(
                prob[leaf] * abs(f.values[leaf])
                for leaf in tree.leaves
                if abs(f.values[leaf]) > k
            )
            if mass > eta:
                eta = mass
        etas.append(eta)
    verdict = "decaying" if etas[-1] < decay_threshold else "non-decaying"
    return UIReport(
        thresholds=tuple(ks),
        modulus=tuple(etas),
        decay_threshold=decay_threshold,
        verdict=verdict,
    )


class GeneratingFamily(Protocol):
    """What a refinement probe needs from a scenario family at one depth."""

    label: str

    def rho(self, X: AdaptedProcess) -> float: ...

    def variation_densities(self) -> list[StaticRV]: ...


class SpecFamily:
    """Wrap an explicit generating spec."""

    def __init__(self, spec: RiskMeasureSpec, label: str = "spec"):
        self.spec = spec
        self.label = label

    def rho(self, X: AdaptedProcess) -> float:
        return rho_eval(self.spec, X).value

    def variation_densities(self) -> list[StaticRV]:
        return [variation(a) for a in self.spec.measures()]


class WorstCaseFamily:
    """Renormalized leaf point masses; exact at any depth."""

    def __init__(self, tree: ScenarioTree):
        self.spec = worst_case_spec(tree)
        self.tree = tree
        self.label = "worst-case"

    def rho(self, X: AdaptedProcess) -> float:
        return rho_eval(self.spec, X).value

    def variation_densities(self) -> list[StaticRV]:
        # one representative point mass per distinct leaf probability carries
        # the whole family's tail modulus
        tree = self.tree
        out = []
        seen: set[float] = set()
        for leaf in tree.leaves:
            p = tree.prob[leaf]
            if p in seen:
                continue
            seen.add(p)
            vals = {l: 0.0 for l in tree.leaves}
            vals[leaf] = 1.0 / p
            out.append(StaticRV(tree, vals))
        return out


class AVaRFamily:
    """The full dual density polytope of avar, evaluated without enumeration.

    The generating elements are terminal densities, so the supremum over the
    polytope only reads the terminal slice and equals the scan form of avar.
    Tail moduli are reported on representative extreme densities: every member
    is capped at 1/alpha, so the modulus vanishes exactly beyond that cap.
    """

    def __init__(self, tree: ScenarioTree, alpha: float):
        self.tree = tree
        self.alpha = float(alpha)
        self.label = f"avar[{alpha:g}]"

    def rho(self, X: AdaptedProcess) -> float:
        return avar(terminal_values(X), self.alpha)

    def variation_densities(self) -> list[StaticRV]:
        tree = self.tree
        ranking = StaticRV(
            tree, {leaf: float(i) for i, leaf in enumerate(tree.leaves)}
        )
        concentrated = avar_max_density(ranking, self.alpha)
        return [StaticRV.constant(tree, 1.0), concentrated]


@dataclass(frozen=True)
class RefinementSchedule:
    """A ladder of depths with builders for the tree, the family and the probe pair."""

    depths: tuple[int, ...]
    family_builder: Callable[[ScenarioTree], GeneratingFamily]
    sequence_builder: Callable[[ScenarioTree], tuple[AdaptedProcess, AdaptedProcess]]
    tree_builder: Callable[[int], ScenarioTree] = uniform_binomial

    def __post_init__(self):
        depths = tuple(int(d) for d in self.depths)
        if not depths:
            raise ValidationError("schedule needs at least one depth")
        if any(d < 1 for d in depths) or any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValidationError("depths must be positive and strictly increasing")
        object.__setattr__(self, "depths", depths)


@dataclass(frozen=True)
class DepthProbe:
    depth: int
    rho_moving: float
    rho_limit: float
    gap: float
    exceedance: tuple[tuple[float, float], ...]
    modulus: UIReport


@dataclass(frozen=True)
class LebesgueReport:
    family_label: str
    rows: tuple[DepthProbe, ...]
    exceedance_vanishing: bool
    verdict: str  # "consistent" | "violating" | "inconclusive"


def lebesgue_probe(
    schedule: RefinementSchedule,
    k_grid: Sequence[float] = DEFAULT_K_GRID,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    gap_floor: float = 0.5,
    consistent_coeff: float = 10.0,
    modulus_decay_threshold: float = 1e-6,
) -> LebesgueReport:
    """Chase the dominated-convergence behaviour of a family along refinements.

    At each depth the probe evaluates the family on the moving process and on
    its pointwise limit, records the gap, the separation probabilities of the
    pair, and the tail modulus of the family's variation densities.

    Verdicts on the final depths (up to three): ``violating`` when the gap
    stays above ``gap_floor`` while the separation probability vanishes;
    ``consistent`` when the gap falls at least geometrically, within
    ``consistent_coeff`` times 2^-depth; otherwise ``inconclusive``.
    """
    rows: list[DepthProbe] = []
    label = None
    for depth in schedule.depths:
        tree = schedule.tree_builder(depth)
        family = schedule.family_builder(tree)
        if label is None:
            label = family.label
        X_n, X_lim = schedule.sequence_builder(tree)
        rho_n = family.rho(X_n)
        rho_lim = family.rho(X_lim)
        exceedance = tuple(
            (eps, prob_sup_exceedance(X_n, X_lim, eps)) for eps in eps_grid
        )
        mod = ui_modulus(
            family.variation_densities(), k_grid, decay_threshold=modulus_decay_threshold
        )
        rows.append(
            DepthProbe(
                depth=depth,
                rho_moving=rho_n,
                rho_limit=rho_lim,
                gap=abs(rho_n - rho_lim),
                exceedance=exceedance,
                modulus=mod,
            )
        )

    window = rows[-min(3, len(rows)):]
    last = rows[-1]
    vanish_tol = max(consistent_coeff * 2.0 ** -last.depth, 1e-12)
    exceedance_vanishing = all(value <= vanish_tol for _, value in last.exceedance)
    # boundary counts as tracking: canonical families land exactly on it
    tracking = all(r.gap <= consistent_coeff * 2.0 ** -r.depth + 1e-15 for r in window)
    if tracking and last.gap <= gap_floor and last.modulus.verdict == "decaying":
        verdict = "consistent"
    elif not tracking and last.gap > gap_floor and exceedance_vanishing:
        verdict = "violating"
    else:
        verdict = "inconclusive"
    return LebesgueReport(
        family_label=label or "",
        rows=tuple(rows),
        exceedance_vanishing=exceedance_vanishing,
        verdict=verdict,
    )


def crash_sequence(tree: ScenarioTree) -> tuple[AdaptedProcess, AdaptedProcess]:
    """Terminal unit loss on the first canonical leaf, against the zero limit."""
    vals = {nid: 0.0 for nid in tree.order}
    vals[tree.leaves[0]] = -1.0
    return AdaptedProcess(tree, vals), AdaptedProcess.zero(tree)


def worst_case_crash_schedule(depths: Sequence[int]) -> RefinementSchedule:
    return RefinementSchedule(
        depths=tuple(depths),
        family_builder=WorstCaseFamily,
        sequence_builder=crash_sequence,
    )


def avar_crash_schedule(depths: Sequence[int], alpha: float) -> RefinementSchedule:
    return RefinementSchedule(
        depths=tuple(depths),
        family_builder=lambda tree: AVaRFamily(tree, alpha),
        sequence_builder=crash_sequence,
    )


@dataclass(frozen=True)
class DecompositionRow:
    terminal_bound_slack: float
    additivity_deviation: float
    jordan_deviation: float
    var_within_2_terminal_envelope: bool
    terminal_within_2_var_envelope: bool


@dataclass(frozen=True)
class DecompositionReport:
    rows: tuple[DecompositionRow, ...]
    sup_variation: float
    sup_terminal: float


def decomposition_battery(measures: Sequence[BiMeasure]) -> DecompositionReport:
    """Pointwise decomposition identities for each signed bi-measure.

    Per element and leaf: |a_T - a_0| <= Var(a); Var(a) = Var(a+) + Var(a-);
    a_T - a_0 = Var(a+) - Var(a-). The report carries worst deviations (zero
    up to summation rounding) plus the factor-two envelope comparisons between
    the variation family and the terminal-mass family, which are recorded but
    hold only as inequalities, not as set identities.
    """
    measures = list(measures)
    if not measures:
        raise ValidationError("battery needs at least one bi-measure")
    tree = measures[0].tree
    for a in measures:
        if a.tree is not tree:
            raise ValidationError("tree mismatch inside the battery input")

    var_by_elem = []
    term_by_elem = []
    rows = []
    for a in measures:
        var = variation(a)
        term = terminal_increment(a)
        plus, minus = jordan(a)
        var_p = variation(plus)
        var_m = variation(minus)
        bound_slack = max(
            abs(term.values[leaf]) - var.values[leaf] for leaf in tree.leaves
        )
        addv = max(
            abs(var.values[leaf] - (var_p.values[leaf] + var_m.values[leaf]))
            for leaf in tree.leaves
        )
        jord = max(
            abs(term.values[leaf] - (var_p.values[leaf] - var_m.values[leaf]))
            for leaf in tree.leaves
        )
        var_by_elem.append(var)
        term_by_elem.append(term)
        rows.append((bound_slack, addv, jord))

    term_envelope = {
        leaf: max(abs(t.values[leaf]) for t in term_by_elem) for leaf in tree.leaves
    }
    var_envelope = {
        leaf: max(v.values[leaf] for v in var_by_elem) for leaf in tree.leaves
    }
    out_rows = []
    for (bound_slack, addv, jord), var, term in zip(rows, var_by_elem, term_by_elem):
        out_rows.append(
            DecompositionRow(
                terminal_bound_slack=bound_slack,
                additivity_deviation=addv,
                jordan_deviation=jord,
                var_within_2_terminal_envelope=all(
                    var.values[leaf] <= 2.0 * term_envelope[leaf] for leaf in tree.leaves
                ),
                terminal_within_2_var_envelope=all(
                    abs(term.values[leaf]) <= 2.0 * var_envelope[leaf]
                    for leaf in tree.leaves
                ),
            )
        )
    return DecompositionReport(
        rows=tuple(out_rows),
        sup_variation=max(
            max(v.values[leaf] for leaf in tree.leaves) for v in var_by_elem
        ),
        sup_terminal=max(
            max(abs(t.values[leaf]) for leaf in tree.leaves) for t in term_by_elem
        ),
    )


@dataclass(frozen=True)
class AttainmentRow:
    value: float
    maximizers: tuple[str, ...]
    margin: float


@dataclass(frozen=True)
class AttainmentReport:
    rows: tuple[AttainmentRow, ...]


def attainment_check(spec: RiskMeasureSpec, processes: Sequence[AdaptedProcess]) -> AttainmentReport:
    """Confirm each supremum is attained and measure its margin over the runner-up.

    Ties report margin zero; a spec with no competitor outside the maximizing
    set reports an infinite margin.
    """
    rows = []
    for X in processes:
        res = rho_eval(spec, X)
        labels = tuple(spec.labels[i] for i in res.argmax)
        if len(res.argmax) > 1:
            margin = 0.0
        else:
            others = [v for i, v in enumerate(res.values) if i not in res.argmax]
            margin = res.value - max(others) if others else math.inf
        rows.append(AttainmentRow(value=res.value, maximizers=labels, margin=margin))
    return AttainmentReport(rows=tuple(rows))
