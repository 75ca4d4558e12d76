"""Cost-benefit scoring of hardening strategies and the selection loop."""

from __future__ import annotations

import io
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .costs import CostParams, strategy_cost
from .fragility import DIRECT, CurveSet, line_probabilities, pole_probabilities
from .indices import ResilienceIndices, TargetCriteria, TargetReport, compute_indices, degraded_mean, meets_targets
from .network import Network
from .simulation import EventConfig, ResilienceCurve, run_evaluation
from .strategies import DEFAULT_K, Strategy, enumerate_strategies, line_weights

__all__ = [
    "CostParams", "StrategyEvaluation", "SelectionReport", "strategy_cost", "strategy_benefit",
    "resilience_improvement", "benefit_cost_ratio", "rank", "first_passing", "evaluate_strategy",
    "select_optimal", "strategy_table",
]

NO_HARDENING = "no_hardening_needed"
SELECTED = "selected"
NOT_AFFORDABLE = "not_affordable"

MESSAGES = {
    NO_HARDENING: "No hardening is needed",
    SELECTED: "Optimal hardening strategy selected",
    NOT_AFFORDABLE: "Hardening is not affordable for the selected event or the provided budget; "
                    "modify the target criteria",
}


class EconomicsError(ValueError):
    pass


@dataclass(frozen=True)
class StrategyEvaluation:
    strategy: Strategy
    cost: float
    benefit: float
    lam: float
    alpha: float
    indices: ResilienceIndices
    report: TargetReport | None = None
    curve: ResilienceCurve | None = field(default=None, compare=False, repr=False)

    @property
    def passes(self) -> bool:
        return bool(self.report) if self.report is not None else False

    @property
    def label(self) -> str:
        return self.strategy.id


@dataclass(frozen=True)
class SelectionReport:
    status: str
    baseline: ResilienceCurve = field(repr=False)
    baseline_indices: ResilienceIndices
    baseline_report: TargetReport
    ranked: tuple[StrategyEvaluation, ...] = ()
    selected: StrategyEvaluation | None = None

    @property
    def message(self) -> str:
        return MESSAGES[self.status]


def strategy_benefit(
    s: Strategy,
    post_curve: ResilienceCurve,
    net: Network,
    p: CostParams,
    pga: float = 0.5,
    curves: CurveSet | None = None,
    mode: str = DIRECT,
) -> float:
    """Value of the load served in the degraded state plus avoided repair cost.

    Supplied essential and common power are averaged over the degraded-state
    hours of ``post_curve``; every pole of a hardened overhead line, and every
    hardened cable once, contributes ``gamma * repair_cost * (P - P_H)``.
    """
    if post_curve.hardened != s.lines:
        raise EconomicsError(
            f"curve was simulated with hardened lines {sorted(post_curve.hardened)}, "
            f"strategy {s.id} hardens {sorted(s.lines)}"
        )
    served = 0.0
    for e in net.essential_loads:
        served += degraded_mean(post_curve.essential_kw[e.id], post_curve) * e.value
    served += degraded_mean(post_curve.common_kw, post_curve) * p.omega_common
    avoided = 0.0
    for lid in sorted(s.lines):
        line = net.line(lid)
        for prob, prob_h in pole_probabilities(line, pga, curves, mode):
            avoided += line.pole_repair_cost * (prob - prob_h)
    return served + p.gamma * avoided


def resilience_improvement(base: ResilienceIndices, post: ResilienceIndices) -> float:
    return (base.zeta_v - post.zeta_v) + (base.zeta_d - post.zeta_d) + (base.zeta_e - post.zeta_e)


def benefit_cost_ratio(benefit: float, lam: float, cost: float) -> float:
    if cost <= 0:
        raise EconomicsError("strategy cost must be positive")
    return benefit * (1.0 + lam) / cost


def _label_key(label: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", label)]


def rank(evals: Sequence[StrategyEvaluation]) -> list[StrategyEvaluation]:
    """Descending benefit-to-cost ratio; ties go to the cheaper strategy, then by label."""
    return sorted(evals, key=lambda e: (-e.alpha, e.cost, _label_key(e.label)))


def first_passing(ranked: Sequence[StrategyEvaluation], criteria: TargetCriteria) -> StrategyEvaluation | None:
    """Walk the ranked list and return the first affordable strategy meeting the targets."""
    for ev in ranked:
        if ev.cost > criteria.budget + 1e-9:
            continue
        if meets_targets(ev.indices, criteria):
            return ev
    return None


def evaluate_strategy(
    s: Strategy,
    net: Network,
    cfg: EventConfig,
    params: CostParams,
    base: ResilienceIndices,
    criteria: TargetCriteria,
    curves: CurveSet | None = None,
    mode: str = DIRECT,
    keep_curve: bool = False,
) -> StrategyEvaluation:
    """Simulate ``net`` with the strategy's lines hardened and score it."""
    probs = line_probabilities(net, s.lines, cfg.pga, curves, mode)
    curve = run_evaluation(net, probs, cfg, hardened=s.lines)
    idx = compute_indices(curve)
    cost = strategy_cost(s, net, params)
    benefit = strategy_benefit(s, curve, net, params, cfg.pga, curves, mode)
    lam = resilience_improvement(base, idx)
    return StrategyEvaluation(
        strategy=s,
        cost=cost,
        benefit=benefit,
        lam=lam,
        alpha=benefit_cost_ratio(benefit, lam, cost),
        indices=idx,
        report=meets_targets(idx, criteria),
        curve=curve if keep_curve else None,
    )


def _evaluate_many(args):
    strategies, rest = args
    return [evaluate_strategy(s, *rest) for s in strategies]


def evaluate_strategies(
    strategies: Sequence[Strategy],
    net: Network,
    cfg: EventConfig,
    params: CostParams,
    base: ResilienceIndices,
    criteria: TargetCriteria,
    curves: CurveSet | None = None,
    mode: str = DIRECT,
    workers: int = 1,
) -> list[StrategyEvaluation]:
    rest = (net, cfg, params, base, criteria, curves, mode)
    if workers <= 1 or len(strategies) < 2:
        return [evaluate_strategy(s, *rest) for s in strategies]
    n = min(workers, len(strategies))
    size = math.ceil(len(strategies) / n)
    batches = [list(strategies[i : i + size]) for i in range(0, len(strategies), size)]
    with ProcessPoolExecutor(max_workers=n) as pool:
        results = list(pool.map(_evaluate_many, [(b, rest) for b in batches]))
    return [ev for batch in results for ev in batch]


def select_optimal(
    net: Network,
    cfg: EventConfig,
    criteria: TargetCriteria,
    params: CostParams,
    k: int = DEFAULT_K,
    weighting: str = "cost",
    curves: CurveSet | None = None,
    mode: str = DIRECT,
    workers: int = 1,
) -> SelectionReport:
    """Baseline check, strategy enumeration, cost-benefit ranking and selection.

    Each strategy is simulated with the same seed as the baseline so the
    comparisons share outage draws.
    """
    base_probs = line_probabilities(net, (), cfg.pga, curves, mode)
    baseline = run_evaluation(net, base_probs, cfg, workers=workers)
    base_idx = compute_indices(baseline)
    base_report = meets_targets(base_idx, criteria)
    if base_report:
        return SelectionReport(NO_HARDENING, baseline, base_idx, base_report)

    weights = line_weights(net, params, weighting)
    strategies = enumerate_strategies(net, weights, k, criteria, params)
    evals = evaluate_strategies(strategies, net, cfg, params, base_idx, criteria, curves, mode, workers)
    ranked = tuple(rank(evals))
    chosen = first_passing(ranked, criteria)
    if chosen is None:
        return SelectionReport(NOT_AFFORDABLE, baseline, base_idx, base_report, ranked)
    # Re-run the winner to keep its curve for reporting.
    chosen = evaluate_strategy(chosen.strategy, net, cfg, params, base_idx, criteria, curves, mode, keep_curve=True)
    return SelectionReport(SELECTED, baseline, base_idx, base_report, ranked, chosen)


def _compress(lines) -> str:
    """Render a line set like ``1,6-8,17``."""
    ids = sorted(lines)
    parts, i = [], 0
    while i < len(ids):
        j = i
        while j + 1 < len(ids) and ids[j + 1] == ids[j] + 1:
            j += 1
        parts.append(str(ids[i]) if i == j else f"{ids[i]}-{ids[j]}")
        i = j + 1
    return ",".join(parts)


def strategy_table(ranked: Sequence[StrategyEvaluation], header: Mapping[str, object] | None = None) -> str:
    buf = io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}: {v}\n")
    buf.write("priority,strategy,lines,C,B,lambda,alpha,zeta_v,zeta_d,zeta_e,essential_pct,pass\n")
    for n, ev in enumerate(ranked, 1):
        i = ev.indices
        buf.write(
            f"{n},{ev.label},\"{_compress(ev.strategy.lines)}\",{ev.cost!r},{ev.benefit!r},{ev.lam!r},"
            f"{ev.alpha!r},{i.zeta_v!r},{i.zeta_d!r},{i.zeta_e!r},{i.essential_pct_degraded!r},"
            f"{'yes' if ev.passes else 'no'}\n"
        )
    return buf.getvalue()
