"""Verdicts: persistence certificates, extinction partitions, routing.

The classification logic sits on top of the boundary measure table.  Let
M be the boundary ergodic measures and lambda_i(mu) the invasion rates.

Persistent: there are weights p on the species simplex with
    sum_i p_i lambda_i(mu) > 0 for every mu in M.
The best such margin is the maximin value t* over M; a strictly positive
t* (beyond numerical tolerance and beyond the Monte Carlo uncertainty of
whichever rows attain the minimum) is the certificate.

Extinction: some measures are sinks.  mu is a sink when every species
outside its support has negative invasion rate against it AND the
community inside its support is itself persistent (so mu really is the
long-run state of the survivors).  If sinks exist, trajectories converge
to one of them and the species outside its support die out at the
predicted exponential rates.  Measures that are neither repelled in all
outside directions nor sinks form the residual class; when it is
nonempty we additionally check it is repelling as a whole before
claiming full convergence.

Anything the numbers cannot settle at the configured budget is refused
honestly: the verdict is Inconclusive with the reason and the knob to
turn, never a guess.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assumptions import AssumptionReport, run_assumption_checks
from .measures import (AnalysisBudget, BoundaryDiscovery, ErgodicMeasure,
                       InvasionRateTable, discover_boundary)
from .model import KolmogorovModel
from .simplex import solve_maximin

_BINDING_SLACK = 1e-12


@dataclass
class PersistenceCertificate:
    weights: np.ndarray          # p on the species simplex
    t_star: float                # certified uniform invasion margin
    binding: list[str]           # measure keys attaining the minimum
    uncertainty: float           # Monte Carlo band of the binding rows

    @property
    def rho_star(self) -> float:
        # half the margin: the exponential rate the certificate actually
        # guarantees after absorbing the boundary layer
        return 0.5 * self.t_star

    def to_json_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights],
            "t_star": float(self.t_star),
            "rho_star": float(self.rho_star),
            "binding_measures": list(self.binding),
            "uncertainty": float(self.uncertainty),
        }


@dataclass
class PersistenceRefusal:
    """No persistence certificate.  ``decided`` tells the two cases apart:
    True means the margin is decidedly negative (the system is genuinely not
    persistent, go classify the extinction), False means the numbers could
    not settle the sign at this budget."""

    reason: str
    measure: str | None = None     # argmin / offending measure key
    species: int | None = None     # 1-based, when there is one
    t_star: float | None = None
    decided: bool = False
    suggestion: str = "tighten the Monte Carlo budget and rerun"

    def to_json_dict(self) -> dict:
        out = {"reason": self.reason, "suggestion": self.suggestion,
               "decided_not_persistent": bool(self.decided)}
        if self.measure is not None:
            out["measure"] = self.measure
        if self.species is not None:
            out["species"] = self.species
        if self.t_star is not None:
            out["t_star"] = float(self.t_star)
        return out


@dataclass
class MeasurePartition:
    sinks: list[str]                       # measure keys attracting nearby states
    others: list[str]                      # repelled in at least one direction
    undecided: list[tuple[str, str]]       # (measure key, reason)
    repulsion: str                         # vacuous | holds | fails | undecidable
    repulsion_margin: float | None = None

    def to_json_dict(self) -> dict:
        out = {
            "sinks": list(self.sinks),
            "others": list(self.others),
            "undecided": [{"measure": k, "reason": r} for k, r in self.undecided],
            "residual_repulsion": self.repulsion,
        }
        if self.repulsion_margin is not None:
            out["repulsion_margin"] = float(self.repulsion_margin)
        return out


@dataclass
class ExtinctionTarget:
    measure: ErgodicMeasure
    extinct: tuple[int, ...]       # 0-based species predicted to die
    rates: np.ndarray              # their predicted log-decay rates (negative)

    def to_json_dict(self) -> dict:
        return {
            "measure": self.measure.key,
            "survivors": self.measure.support_labels(),
            "extinct": [i + 1 for i in self.extinct],
            "extinction_rates": [float(v) for v in self.rates],
        }


@dataclass
class Verdict:
    kind: str                      # Persistent | Extinction | BlowUpRisk | Inconclusive
    assumptions: AssumptionReport
    discovery: BoundaryDiscovery | None = None
    certificate: PersistenceCertificate | None = None
    refusal: PersistenceRefusal | None = None
    partition: MeasurePartition | None = None
    targets: list[ExtinctionTarget] = field(default_factory=list)
    strength: str | None = None    # Extinction only: full | boundary-only
    blowup_witness: dict | None = None
    notes: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        out: dict = {"verdict": self.kind, "assumptions": self.assumptions.to_json_dict()}
        if self.discovery is not None:
            out["measures"] = [mu.to_json_dict() for mu in self.discovery.measures]
            out["invasion_rates"] = self.discovery.table.to_json_dict()
            if self.discovery.unresolved:
                out["unresolved_faces"] = self.discovery.unresolved_labels()
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json_dict()
        if self.refusal is not None:
            out["refusal"] = self.refusal.to_json_dict()
        if self.partition is not None:
            out["partition"] = self.partition.to_json_dict()
        if self.targets:
            out["extinction_targets"] = [t.to_json_dict() for t in self.targets]
        if self.strength is not None:
            out["strength"] = self.strength
        if self.blowup_witness is not None:
            out["blowup_witness"] = self.blowup_witness
        if self.notes:
            out["notes"] = list(self.notes)
        return out


# ---------------------------------------------------------------------------
# persistence

def maximin_weights(table: InvasionRateTable) -> tuple[np.ndarray, float]:
    """Optimal species weights and margin over the whole measure table."""
    return solve_maximin(table.rates_for_lp())


def _binding_band(rows: np.ndarray, ci: np.ndarray, p: np.ndarray,
                  t_star: float) -> tuple[np.ndarray, float]:
    vals = rows @ p
    binding = np.flatnonzero(vals <= t_star + _BINDING_SLACK + 1e-9 * abs(t_star))
    band = float(np.max(ci[binding] @ p)) if binding.size else 0.0
    return binding, band


def check_persistence(table: InvasionRateTable,
                      budget: AnalysisBudget | None = None,
                      ) -> PersistenceCertificate | PersistenceRefusal:
    """Persistence certificate, or a refusal naming the blocking measure."""
    budget = budget or AnalysisBudget()
    rows = table.rates_for_lp()
    # every off-support entry must have a known sign before we trust the LP
    for k, mu in enumerate(table.measures):
        for i in range(table.n_species):
            if i in mu.support or table.sign_decidable(k, i):
                continue
            return PersistenceRefusal(
                reason=(f"invasion rate of species {i + 1} against {mu.key} is "
                        f"{table.rates[k, i]:.4g} with uncertainty "
                        f"{table.ci[k, i]:.4g}: not sign-decidable"),
                measure=mu.key, species=i + 1)
    p, t_star = solve_maximin(rows)
    binding, band = _binding_band(rows, table.ci, p, t_star)
    gate = max(budget.decision_tol, band)
    argmin = None
    if binding.size:
        worst_k = int(binding[int(np.argmax(table.ci[binding] @ p))])
        argmin = table.measures[worst_k].key
    if t_star > gate:
        return PersistenceCertificate(
            weights=p, t_star=t_star,
            binding=[table.measures[k].key for k in binding],
            uncertainty=band)
    if t_star < -gate:
        return PersistenceRefusal(
            reason=(f"no weights make every boundary measure invadable: maximin "
                    f"margin {t_star:.4g} at {argmin}"),
            measure=argmin, t_star=t_star, decided=True,
            suggestion="the system is not persistent; see the extinction partition")
    if abs(t_star) <= budget.decision_tol:
        return PersistenceRefusal(
            reason=(f"maximin invasion margin {t_star:.3g} is numerically zero: "
                    "the system sits on the persistence boundary"),
            measure=argmin, t_star=t_star,
            suggestion="perturb the model parameters; the verdict is structurally unstable")
    return PersistenceRefusal(
        reason=(f"maximin invasion margin {t_star:.4g} is inside the Monte Carlo "
                f"uncertainty {band:.4g} of the binding measures"),
        measure=argmin, t_star=t_star)


# ---------------------------------------------------------------------------
# extinction partition

def _sub_maximin(table: InvasionRateTable, support: tuple[int, ...],
                 budget: AnalysisBudget) -> tuple[float, float]:
    """Maximin margin of the sub-community on `support` vs its own boundary."""
    cols = np.array(support, dtype=int)
    sub = [k for k, nu in enumerate(table.measures) if set(nu.support) < set(support)]
    rows = table.rates_for_lp()[np.ix_(sub, cols)]
    ci = table.ci[np.ix_(sub, cols)]
    p, t_star = solve_maximin(rows)
    _, band = _binding_band(rows, ci, p, t_star)
    return t_star, band


def check_extinction_measure(table: InvasionRateTable, k: int,
                             budget: AnalysisBudget | None = None,
                             ) -> tuple[str, str]:
    """('sink'|'other'|'undecided', reason) for measure k of the table."""
    budget = budget or AnalysisBudget()
    mu = table.measures[k]
    outside = [i for i in range(table.n_species) if i not in mu.support]
    worst = None
    for i in outside:
        if not table.sign_decidable(k, i):
            return "undecided", (
                f"invasion rate of species {i + 1} against {mu.key} is not "
                "sign-decidable at this budget")
        v = table.rates[k, i]
        worst = v if worst is None else max(worst, v)
    if outside and worst >= 0.0:
        return "other", (
            f"some outside species invades {mu.key} (max rate {worst:.4g})")
    if mu.support:
        t_sub, band = _sub_maximin(table, mu.support, budget)
        gate = max(budget.decision_tol, band)
        if t_sub <= gate:
            if t_sub < -gate:
                # the survivors are not self-persistent; such a measure should
                # not have been discovered, flag rather than trust it
                return "undecided", (
                    f"survivor community of {mu.key} fails its own persistence "
                    f"test (margin {t_sub:.4g})")
            return "undecided", (
                f"survivor community of {mu.key} has borderline persistence "
                f"margin {t_sub:.4g}")
    return "sink", ""


def partition_measures(table: InvasionRateTable,
                       budget: AnalysisBudget | None = None) -> MeasurePartition:
    """Split the measure table into sinks, repelled measures, and undecided."""
    budget = budget or AnalysisBudget()
    sinks: list[str] = []
    others: list[str] = []
    others_idx: list[int] = []
    undecided: list[tuple[str, str]] = []
    for k, mu in enumerate(table.measures):
        cls, reason = check_extinction_measure(table, k, budget)
        if cls == "sink":
            sinks.append(mu.key)
        elif cls == "other":
            others.append(mu.key)
            others_idx.append(k)
        else:
            undecided.append((mu.key, reason))

    if not others_idx:
        return MeasurePartition(sinks, others, undecided, "vacuous")
    rows = table.rates_for_lp()[others_idx]
    ci = table.ci[others_idx]
    p, t_star = solve_maximin(rows)
    _, band = _binding_band(rows, ci, p, t_star)
    gate = max(budget.decision_tol, band)
    if t_star > gate:
        status = "holds"
    elif t_star < -gate:
        status = "fails"
    else:
        status = "undecidable"
    return MeasurePartition(sinks, others, undecided, status,
                            repulsion_margin=t_star)


def _extinction_targets(table: InvasionRateTable,
                        partition: MeasurePartition) -> list[ExtinctionTarget]:
    targets = []
    for k, mu in enumerate(table.measures):
        if mu.key not in partition.sinks:
            continue
        extinct = tuple(i for i in range(table.n_species) if i not in mu.support)
        rates = np.array([table.rates[k, i] for i in extinct])
        targets.append(ExtinctionTarget(measure=mu, extinct=extinct, rates=rates))
    return targets


# ---------------------------------------------------------------------------
# full pipeline

def classify(model: KolmogorovModel,
             budget: AnalysisBudget | None = None,
             assumptions: AssumptionReport | None = None) -> Verdict:
    """Classify the long-run behaviour of the system.

    Routing: assumption failures short-circuit (a certified dissipativity
    failure with a blow-up witness is reported as BlowUpRisk, an
    unverifiable one as Inconclusive); otherwise the boundary is mapped,
    persistence is tested, and failing that the extinction partition is
    built.  Every Inconclusive carries the reason.
    """
    budget = budget or AnalysisBudget()
    if assumptions is None:
        assumptions = run_assumption_checks(model)
    notes: list[str] = list(assumptions.notes)

    if assumptions.nondegenerate.status == "fail":
        return Verdict(
            kind="Inconclusive", assumptions=assumptions,
            refusal=PersistenceRefusal(
                reason=("noise degenerates somewhere on the state space: "
                        + assumptions.nondegenerate.detail),
                suggestion="the classification theory needs nondegenerate noise"),
            notes=notes)

    if assumptions.tightness.status == "fail":
        return Verdict(
            kind="BlowUpRisk", assumptions=assumptions,
            blowup_witness=assumptions.tightness.witness,
            notes=notes + ["mass escapes to infinity along the certified direction"])
    if assumptions.tightness.status == "heuristic-fail":
        return Verdict(
            kind="Inconclusive", assumptions=assumptions,
            refusal=PersistenceRefusal(
                reason=("could not verify that the dynamics stay tight: "
                        + assumptions.tightness.detail),
                suggestion="no blow-up certificate either; inspect the model drift"),
            notes=notes)

    discovery = discover_boundary(model, budget)
    if discovery.unresolved:
        face, reason = discovery.unresolved[0]
        label = "{" + ", ".join(str(i + 1) for i in face) + "}"
        return Verdict(
            kind="Inconclusive", assumptions=assumptions, discovery=discovery,
            refusal=PersistenceRefusal(
                reason=f"boundary face {label} unresolved: {reason}"),
            notes=notes)

    outcome = check_persistence(discovery.table, budget)
    if isinstance(outcome, PersistenceCertificate):
        if assumptions.growth.status == "heuristic-fail":
            notes = notes + [
                "growth condition unverified: convergence rate claims weakened"]
        return Verdict(kind="Persistent", assumptions=assumptions,
                       discovery=discovery, certificate=outcome, notes=notes)
    if not outcome.decided:
        return Verdict(kind="Inconclusive", assumptions=assumptions,
                       discovery=discovery, refusal=outcome, notes=notes)

    partition = partition_measures(discovery.table, budget)
    if partition.undecided:
        key, reason = partition.undecided[0]
        return Verdict(
            kind="Inconclusive", assumptions=assumptions, discovery=discovery,
            partition=partition,
            refusal=PersistenceRefusal(
                reason=f"extinction partition undecided at {key}: {reason}"),
            notes=notes)
    if partition.sinks:
        targets = _extinction_targets(discovery.table, partition)
        growth_ok = assumptions.growth.status in ("pass", "heuristic-pass")
        repulsion_ok = partition.repulsion in ("vacuous", "holds")
        strength = "full" if (growth_ok and repulsion_ok) else "boundary-only"
        if not repulsion_ok:
            notes = notes + [
                "residual measures not verifiably repelling: convergence to a "
                "specific sink is claimed only near the boundary"]
        if not growth_ok:
            notes = notes + [
                "growth condition unverified: almost-sure convergence claimed, "
                "rate claims weakened"]
        return Verdict(kind="Extinction", assumptions=assumptions,
                       discovery=discovery, partition=partition,
                       targets=targets, strength=strength, notes=notes)
    return Verdict(
        kind="Inconclusive", assumptions=assumptions, discovery=discovery,
        partition=partition,
        refusal=PersistenceRefusal(
            reason=("the system is not persistent, yet no boundary measure is a "
                    "sink: the invasion graph has no attracting end at this budget")),
        notes=notes)
