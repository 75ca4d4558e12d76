"""Candidate hardening strategies.

For every essential load the cheapest loopless paths to each generator able
to carry it are found with Dijkstra's algorithm and Yen's k-shortest-paths
construction. A strategy picks one path per essential load; its line set is
the union of the chosen paths.
"""

from __future__ import annotations

import heapq
import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .costs import CostParams, line_hardening_cost, strategy_cost
from .indices import TargetCriteria
from .network import EssentialLoad, Network

COST_WEIGHTS = "cost"
HOP_WEIGHTS = "hops"
DEFAULT_K = 3


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class PathCandidate:
    essential: str | None
    generator_bus: int
    buses: tuple[int, ...]
    lines: tuple[int, ...]
    weight: float

    @property
    def source_bus(self) -> int:
        return self.buses[0]


@dataclass(frozen=True)
class Strategy:
    id: str
    lines: frozenset[int]
    assignment: Mapping[str, PathCandidate] = field(default_factory=dict)

    def generator_load(self, net: Network) -> dict[int, float]:
        """Essential demand assigned to each generator bus."""
        out: dict[int, float] = {}
        for eid, path in self.assignment.items():
            out[path.generator_bus] = out.get(path.generator_bus, 0.0) + net.essential_by_id[eid].amount
        return out


def line_weights(net: Network, params: CostParams | None = None, weighting: str = COST_WEIGHTS) -> dict[int, float]:
    """Edge weights for path search: hardening cost per line, or 1 per hop."""
    if weighting == HOP_WEIGHTS:
        return {ln.id: 1.0 for ln in net.lines}
    if weighting != COST_WEIGHTS:
        raise StrategyError(f"unknown weighting {weighting!r}")
    params = params or CostParams()
    return {ln.id: line_hardening_cost(ln, params) for ln in net.lines}


def _path_weight(lines: Iterable[int], weights: Mapping[int, float]) -> float:
    w = 0.0
    for l in lines:
        w += weights[l]
    return w


def shortest_path(
    net: Network,
    source: int,
    target: int,
    weights: Mapping[int, float],
    banned_lines: Iterable[int] = (),
    banned_buses: Iterable[int] = (),
) -> PathCandidate | None:
    """Minimum-weight path from ``source`` to ``target``, or ``None`` if unreachable.

    Equal-weight paths are ordered by their line-id sequence, smallest first.
    """
    if any(w < 0 for w in weights.values()):
        raise StrategyError("path weights must be non-negative")
    for b in (source, target):
        if b not in net.bus_index:
            raise StrategyError(f"unknown bus {b}")
    banned_lines = set(banned_lines)
    banned_buses = set(banned_buses)
    if source == target:
        return PathCandidate(None, target, (source,), (), 0.0)
    settled: set[int] = set()
    heap: list[tuple[float, tuple[int, ...], int, tuple[int, ...]]] = [(0.0, (), source, (source,))]
    while heap:
        w, lines, bus, buses = heapq.heappop(heap)
        if bus in settled:
            continue
        settled.add(bus)
        if bus == target:
            return PathCandidate(None, target, buses, lines, w)
        for lid, nb in net.adjacency[bus]:
            if nb in settled or nb in banned_buses or lid in banned_lines:
                continue
            heapq.heappush(heap, (w + weights[lid], lines + (lid,), nb, buses + (nb,)))
    return None


def k_shortest_paths(
    net: Network, source: int, target: int, weights: Mapping[int, float], k: int
) -> list[PathCandidate]:
    """Up to ``k`` cheapest loopless paths (Yen), cheapest first."""
    if k < 1:
        raise StrategyError("k must be >= 1")
    first = shortest_path(net, source, target, weights)
    if first is None:
        return []
    accepted = [first]
    seen = {first.lines}
    pool: list[tuple[float, tuple[int, ...], tuple[int, ...]]] = []
    while len(accepted) < k:
        prev = accepted[-1]
        for i in range(len(prev.lines)):
            root_lines = prev.lines[:i]
            root_buses = prev.buses[: i + 1]
            banned = {p.lines[i] for p in accepted if len(p.lines) > i and p.lines[:i] == root_lines}
            spur = shortest_path(net, root_buses[-1], target, weights, banned, root_buses[:-1])
            if spur is None:
                continue
            lines = root_lines + spur.lines
            if lines in seen:
                continue
            seen.add(lines)
            heapq.heappush(pool, (_path_weight(lines, weights), lines, root_buses[:-1] + spur.buses))
        if not pool:
            break
        w, lines, buses = heapq.heappop(pool)
        accepted.append(PathCandidate(None, target, buses, lines, w))
    return accepted


def capable_generators(net: Network, essential: EssentialLoad) -> list[int]:
    return [b.id for b in net.buses if b.gen_capacity > 0 and b.gen_capacity >= essential.amount]


def k_paths(net: Network, essential: EssentialLoad, weights: Mapping[int, float], k: int = DEFAULT_K) -> list[PathCandidate]:
    """Cheapest paths from an essential load to every generator that could carry it alone."""
    out: list[PathCandidate] = []
    for g in capable_generators(net, essential):
        for p in k_shortest_paths(net, essential.bus, g, weights, k):
            out.append(PathCandidate(essential.id, g, p.buses, p.lines, p.weight))
    out.sort(key=lambda p: (p.weight, p.generator_bus, p.lines))
    return out


def candidate_paths(net: Network, weights: Mapping[int, float], k: int = DEFAULT_K) -> dict[str, list[PathCandidate]]:
    """Path candidates per essential load; raises if any load has none."""
    per: dict[str, list[PathCandidate]] = {}
    for e in net.essential_loads:
        cands = k_paths(net, e, weights, k)
        if not cands:
            raise StrategyError(f"essential load {e.id} at bus {e.bus} cannot reach any capable generator")
        per[e.id] = cands
    return per


def enumerate_strategies(
    net: Network,
    weights: Mapping[int, float],
    k: int = DEFAULT_K,
    criteria: TargetCriteria | None = None,
    params: CostParams | None = None,
) -> list[Strategy]:
    """Every feasible combination of one path per essential load.

    Combinations overloading a generator with essential demand, or costing
    more than the budget, are dropped. Combinations with an identical line
    set are merged, keeping the assignment with the lower summed path weight.
    """
    if not net.essential_loads:
        return []
    params = params or CostParams()
    budget = criteria.budget if criteria is not None else float("inf")
    per = candidate_paths(net, weights, k)
    ids = [e.id for e in net.essential_loads]
    amount = {e.id: e.amount for e in net.essential_loads}
    capacity = {b.id: b.gen_capacity for b in net.buses}

    kept: list[tuple[frozenset[int], dict[str, PathCandidate], float]] = []
    position: dict[frozenset[int], int] = {}
    for combo in itertools.product(*(per[i] for i in ids)):
        load: dict[int, float] = {}
        for eid, path in zip(ids, combo):
            load[path.generator_bus] = load.get(path.generator_bus, 0.0) + amount[eid]
        if any(v > capacity[g] + 1e-9 for g, v in load.items()):
            continue
        lines = frozenset(itertools.chain.from_iterable(p.lines for p in combo))
        if strategy_cost(lines, net, params) > budget + 1e-9:
            continue
        score = sum(p.weight for p in combo)
        if lines in position:
            j = position[lines]
            if score < kept[j][2]:
                kept[j] = (lines, dict(zip(ids, combo)), score)
            continue
        position[lines] = len(kept)
        kept.append((lines, dict(zip(ids, combo)), score))
    return [Strategy(f"S{n}", lines, assign) for n, (lines, assign, _) in enumerate(kept, 1)]


def paths_to_csv(per: Mapping[str, list[PathCandidate]], header: Mapping[str, object] | None = None) -> str:
    buf = io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}: {v}\n")
    buf.write("essential,generator_bus,rank,weight,lines,buses\n")
    for eid, cands in per.items():
        rank: dict[int, int] = {}
        for p in cands:
            rank[p.generator_bus] = rank.get(p.generator_bus, 0) + 1
            buf.write(f"{eid},{p.generator_bus},{rank[p.generator_bus]},{p.weight!r},"
                      f"{' '.join(map(str, p.lines))},{' '.join(map(str, p.buses))}\n")
    return buf.getvalue()
