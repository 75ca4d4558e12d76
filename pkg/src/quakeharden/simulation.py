"""Monte Carlo outage simulation and the averaged resilience curve.

Each iteration draws an independent outage pattern from its own random
stream, restores failed lines a fixed number per hour, and dispatches the
generation inside every connected sub-graph at every hour. Per-iteration
traces are averaged in iteration order, so results are bitwise identical
for a given seed no matter how the iterations are split across workers.

Time is on an integer hour grid ``0..horizon``. The sample at hour ``h``
describes the interval ``(h - 1, h]``: the network is intact up to and
including ``t_e``, lines lost in the event are out from ``t_e + 1``, and a
line restored at hour ``h`` is back in service in sample ``h``.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .network import Network, connected_components

RANDOM_ORDER = "random_per_iteration"
INDEX_ORDER = "index_order"
RECOVERY_ORDERS = (RANDOM_ORDER, INDEX_ORDER)

# Tolerance for "R is back at its pre-event level".
RESTORED_TOL = 1e-6


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class EventConfig:
    pga: float = 0.5
    t_e: int = 1
    recovery_start: int = 10
    recovery_rate: int = 2
    horizon: int = 30
    iterations: int = 500
    seed: int = 2022
    recovery_order: str = RANDOM_ORDER

    def __post_init__(self) -> None:
        if not 0 <= self.t_e < self.recovery_start <= self.horizon:
            raise SimulationError(
                f"need 0 <= t_e < recovery_start <= horizon, got "
                f"{self.t_e}, {self.recovery_start}, {self.horizon}"
            )
        if self.recovery_rate < 1:
            raise SimulationError("recovery_rate must be >= 1")
        if self.iterations < 1:
            raise SimulationError("iterations must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise SimulationError("seed must be a non-negative 64-bit integer")
        if self.recovery_order not in RECOVERY_ORDERS:
            raise SimulationError(f"recovery_order must be one of {RECOVERY_ORDERS}")
        if self.pga < 0:
            raise SimulationError("pga must be >= 0")


@dataclass(frozen=True)
class OutageScenario:
    failed: frozenset[int]
    restore_time: dict[int, int]

    def out_of_service(self, hour: int, t_e: int) -> frozenset[int]:
        """Lines that are down in the sample at ``hour``."""
        if hour <= t_e:
            return frozenset()
        return frozenset(l for l in self.failed if self.restore_time[l] > hour)


@dataclass(frozen=True)
class Dispatch:
    supplied_total: float
    supplied_essential: dict[str, float]
    supplied_common: float
    common_by_bus: dict[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Landmarks:
    t_e: int
    t_pe: int
    t_r: int
    t_pir: int


@dataclass(frozen=True, eq=False)
class ResilienceCurve:
    """Iteration-averaged supply around one event.

    ``essential_kw`` and ``common_kw`` hold the mean supplied power per hour;
    ``r`` is their sum over ``total_demand``.
    """

    hours: np.ndarray
    r: np.ndarray
    essential_fraction: np.ndarray
    essential_kw: dict[str, np.ndarray]
    common_kw: np.ndarray
    total_demand: float
    total_essential: float
    landmarks: Landmarks
    hardened: frozenset[int] = frozenset()
    iterations: int = 0
    seed: int = 0

    @property
    def r0(self) -> float:
        return float(self.r[self.landmarks.t_e])

    @property
    def r_pe(self) -> float:
        return float(self.r[self.landmarks.t_pe])

    @property
    def r_pr(self) -> float:
        return float(self.r[self.landmarks.t_pir])


@dataclass(frozen=True, eq=False)
class SupplyTraces:
    """Per-iteration supplied power, shape ``(iterations, hours)``.

    ``essential`` has shape ``(iterations, n_essential, hours)`` with the
    essential loads in network order.
    """

    total: np.ndarray
    common: np.ndarray
    essential: np.ndarray


# sampling -------------------------------------------------------------------

def _stream(seed: int, iteration: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(iteration,))))


def _prob_vector(net: Network, probs: Mapping[int, float]) -> np.ndarray:
    missing = [ln.id for ln in net.lines if ln.id not in probs]
    if missing:
        raise SimulationError(f"no failure probability for line(s) {missing}")
    p = np.array([float(probs[ln.id]) for ln in net.lines])
    if np.any((p < 0) | (p > 1)):
        raise SimulationError("failure probabilities must lie in [0, 1]")
    return p


def _draw(p: np.ndarray, line_ids: np.ndarray, cfg: EventConfig, iteration: int) -> np.ndarray:
    """Restore hour per line for one iteration; -1 marks lines that did not fail."""
    rng = _stream(cfg.seed, iteration)
    failed = rng.random(p.size) < p
    # Restoration priorities are drawn for every line so hardened and
    # unhardened runs with one seed stay coupled.
    keys = rng.random(p.size)
    idx = np.flatnonzero(failed)
    if cfg.recovery_order == RANDOM_ORDER:
        order = idx[np.argsort(keys[idx], kind="stable")]
    else:
        order = idx[np.argsort(line_ids[idx], kind="stable")]
    restore = np.full(p.size, -1, dtype=np.int64)
    restore[order] = cfg.recovery_start + np.arange(order.size) // cfg.recovery_rate
    return restore


def sample_outage(net: Network, probs: Mapping[int, float], cfg: EventConfig, iteration: int) -> OutageScenario:
    """Draw the outage pattern and restoration schedule of one iteration."""
    if not 0 <= iteration < cfg.iterations:
        raise SimulationError(f"iteration {iteration} outside [0, {cfg.iterations})")
    p = _prob_vector(net, probs)
    ids = np.array(net.line_ids())
    restore = _draw(p, ids, cfg, iteration)
    hit = np.flatnonzero(restore >= 0)
    return OutageScenario(
        failed=frozenset(int(ids[i]) for i in hit),
        restore_time={int(ids[i]): int(restore[i]) for i in hit},
    )


# dispatch -------------------------------------------------------------------

def _essential_priority(net: Network) -> list[int]:
    return sorted(range(len(net.essential_loads)),
                  key=lambda i: (-net.essential_loads[i].value, net.essential_loads[i].id))


def dispatch_component(net: Network, component: Iterable[int]) -> Dispatch:
    """Serve the load of one connected sub-graph from its own generation.

    The served total is ``min(generation, demand)``. When generation is short,
    essential loads are served first by descending value density and common
    loads share what is left in proportion to their demand.
    """
    buses = set(component)
    gen = math.fsum(net.bus(b).gen_capacity for b in buses)
    remaining = gen
    essential: dict[str, float] = {}
    for i in _essential_priority(net):
        e = net.essential_loads[i]
        if e.bus not in buses:
            continue
        got = min(e.amount, remaining)
        essential[e.id] = got
        remaining -= got
    common_demand = {b: net.bus(b).common_load for b in sorted(buses)}
    total_common = math.fsum(common_demand.values())
    served = min(remaining, total_common)
    share = served / total_common if total_common > 0 else 0.0
    by_bus = {b: d * share for b, d in common_demand.items()}
    return Dispatch(
        supplied_total=math.fsum(essential.values()) + served,
        supplied_essential=essential,
        supplied_common=served,
        common_by_bus=by_bus,
    )


def total_supplied(net: Network, failed: Iterable[int] = ()) -> Dispatch:
    """Sum the dispatch of every sub-graph left after removing ``failed`` lines."""
    essential = {e.id: 0.0 for e in net.essential_loads}
    by_bus: dict[int, float] = {}
    total = common = 0.0
    for comp in connected_components(net, failed):
        d = dispatch_component(net, comp)
        total += d.supplied_total
        common += d.supplied_common
        essential.update(d.supplied_essential)
        by_bus.update(d.common_by_bus)
    return Dispatch(total, essential, common, by_bus)


class _Arrays:
    """Flat numpy views of a network for batched dispatch."""

    def __init__(self, net: Network):
        idx = net.bus_index
        self.n_bus = len(net.buses)
        self.from_idx = np.array([idx[ln.from_bus] for ln in net.lines], dtype=np.int64)
        self.to_idx = np.array([idx[ln.to_bus] for ln in net.lines], dtype=np.int64)
        self.gen = np.array([b.gen_capacity for b in net.buses])
        self.common = np.array([b.common_load for b in net.buses])
        self.ess_bus = np.array([idx[e.bus] for e in net.essential_loads], dtype=np.int64)
        self.ess_amount = np.array([e.amount for e in net.essential_loads])
        self.priority = _essential_priority(net)


def _dispatch_batch(a: _Arrays, alive: np.ndarray):
    """Dispatch ``alive.shape[0]`` independent copies of the network at once.

    Copy ``n`` occupies nodes ``n*B .. n*B + B - 1`` of one block-diagonal graph.
    """
    n_copies = alive.shape[0]
    B = a.n_bus
    offset = (np.arange(n_copies, dtype=np.int64) * B)[:, None]
    rows = (offset + a.from_idx[None, :])[alive]
    cols = (offset + a.to_idx[None, :])[alive]
    n_nodes = n_copies * B
    graph = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n_nodes, n_nodes))
    n_comp, labels = _cc(graph, directed=False)

    gen_c = np.bincount(labels, weights=np.tile(a.gen, n_copies), minlength=n_comp)
    com_c = np.bincount(labels, weights=np.tile(a.common, n_copies), minlength=n_comp)
    remaining = gen_c
    ess = np.zeros((n_copies, a.ess_bus.size))
    for e in a.priority:
        lab = labels[offset[:, 0] + a.ess_bus[e]]
        got = np.minimum(a.ess_amount[e], remaining[lab])
        remaining[lab] -= got
        ess[:, e] = got
    served_c = np.minimum(remaining, com_c)
    comp_copy = np.empty(n_comp, dtype=np.int64)
    comp_copy[labels] = np.repeat(np.arange(n_copies), B)
    common = np.bincount(comp_copy, weights=served_c, minlength=n_copies)
    return ess.sum(axis=1) + common, common, ess


def _simulate_chunk(net: Network, p: np.ndarray, cfg: EventConfig, start: int, stop: int):
    a = _Arrays(net)
    ids = np.array(net.line_ids())
    restore = np.stack([_draw(p, ids, cfg, it) for it in range(start, stop)])
    n, H = stop - start, cfg.horizon + 1
    total = np.empty((n, H))
    common = np.empty((n, H))
    ess = np.empty((n, a.ess_bus.size, H))

    intact = np.ones((1, ids.size), dtype=bool)
    t0, c0, e0 = _dispatch_batch(a, intact)
    total[:, : cfg.t_e + 1] = t0[0]
    common[:, : cfg.t_e + 1] = c0[0]
    ess[:, :, : cfg.t_e + 1] = e0[0][:, None]

    changes = set(np.unique(restore[restore >= 0]).tolist())
    for h in range(cfg.t_e + 1, H):
        if h == cfg.t_e + 1 or h in changes:
            alive = restore <= h
            t, c, e = _dispatch_batch(a, alive)
        total[:, h] = t
        common[:, h] = c
        ess[:, :, h] = e
    return total, common, ess


def _chunks(n: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def simulate_traces(net: Network, probs: Mapping[int, float], cfg: EventConfig, workers: int = 1) -> SupplyTraces:
    """Per-iteration supplied-power traces for all ``cfg.iterations`` iterations."""
    p = _prob_vector(net, probs)
    parts = _chunks(cfg.iterations, workers)
    if len(parts) == 1:
        results = [_simulate_chunk(net, p, cfg, *parts[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(parts)) as pool:
            futures = [pool.submit(_simulate_chunk, net, p, cfg, a, b) for a, b in parts]
            results = [f.result() for f in futures]
    return SupplyTraces(
        total=np.concatenate([r[0] for r in results]),
        common=np.concatenate([r[1] for r in results]),
        essential=np.concatenate([r[2] for r in results]),
    )


def scenario_trace(net: Network, scenario: OutageScenario, cfg: EventConfig) -> list[Dispatch]:
    """Hourly dispatch of a single scenario, computed one hour at a time."""
    return [total_supplied(net, scenario.out_of_service(h, cfg.t_e)) for h in range(cfg.horizon + 1)]


# aggregation ----------------------------------------------------------------

def detect_landmarks(r: np.ndarray, cfg: EventConfig) -> Landmarks:
    """Locate the degraded-state start and the restoration point on ``r``.

    ``t_pe`` is the first hour in ``[t_e, t_r]`` where ``r`` reaches its
    minimum over that window. ``t_pir`` is the first hour from ``t_r`` on
    where ``r`` is back to ``r[t_e]``, or the horizon if that never happens.
    """
    r = np.asarray(r, dtype=float)
    if r.size < cfg.horizon + 1:
        raise SimulationError("series does not cover the horizon")
    t_e, t_r = cfg.t_e, cfg.recovery_start
    window = r[t_e : t_r + 1]
    t_pe = t_e + int(np.flatnonzero(window <= window.min() + 1e-12)[0])
    back = np.flatnonzero(r[t_r : cfg.horizon + 1] >= r[t_e] - RESTORED_TOL)
    t_pir = t_r + int(back[0]) if back.size else cfg.horizon
    return Landmarks(t_e=t_e, t_pe=t_pe, t_r=t_r, t_pir=t_pir)


def curve_from_traces(net: Network, traces: SupplyTraces, cfg: EventConfig,
                      hardened: Iterable[int] = ()) -> ResilienceCurve:
    demand = net.total_demand
    if demand <= 0:
        raise SimulationError("network has no load")
    mean_total = traces.total.mean(axis=0)
    mean_common = traces.common.mean(axis=0)
    mean_ess = traces.essential.mean(axis=0)
    r = np.clip(mean_total / demand, 0.0, 1.0)
    total_ess = net.total_essential_load
    if total_ess > 0:
        ess_frac = np.clip(mean_ess.sum(axis=0) / total_ess, 0.0, 1.0)
    else:
        ess_frac = np.ones_like(r)
    return ResilienceCurve(
        hours=np.arange(cfg.horizon + 1),
        r=r,
        essential_fraction=ess_frac,
        essential_kw={e.id: mean_ess[i] for i, e in enumerate(net.essential_loads)},
        common_kw=mean_common,
        total_demand=demand,
        total_essential=total_ess,
        landmarks=detect_landmarks(r, cfg),
        hardened=frozenset(hardened),
        iterations=cfg.iterations,
        seed=cfg.seed,
    )


def run_evaluation(net: Network, probs: Mapping[int, float], cfg: EventConfig,
                   workers: int = 1, hardened: Iterable[int] = ()) -> ResilienceCurve:
    """Monte Carlo resilience curve of ``net`` under line failure probabilities ``probs``.

    ``hardened`` only labels the curve with the line set whose probabilities
    were lowered; it does not change ``probs``.
    """
    traces = simulate_traces(net, probs, cfg, workers)
    return curve_from_traces(net, traces, cfg, hardened)


# export ---------------------------------------------------------------------

def curve_to_csv(curve: ResilienceCurve, header: Mapping[str, object] | None = None) -> str:
    buf = io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}: {v}\n")
    lm = curve.landmarks
    buf.write(f"# t_e: {lm.t_e}\n# t_pe: {lm.t_pe}\n# t_r: {lm.t_r}\n# t_pir: {lm.t_pir}\n")
    buf.write(f"# R_0: {curve.r0!r}\n# R_pe: {curve.r_pe!r}\n# R_pr: {curve.r_pr!r}\n")
    buf.write("hour,R,essential_fraction\n")
    for h, r, e in zip(curve.hours, curve.r, curve.essential_fraction):
        buf.write(f"{int(h)},{float(r)!r},{float(e)!r}\n")
    return buf.getvalue()


def curve_from_series(r, cfg: EventConfig, essential_fraction=None, total_demand: float = 1.0) -> ResilienceCurve:
    """Wrap an hourly R(t) series, e.g. from another tool, as a :class:`ResilienceCurve`."""
    r = np.asarray(r, dtype=float)
    if r.shape != (cfg.horizon + 1,):
        raise SimulationError(f"series must have {cfg.horizon + 1} hourly samples, got {r.shape}")
    if np.any((r < 0) | (r > 1)):
        raise SimulationError("R(t) must lie in [0, 1]")
    ess = np.ones_like(r) if essential_fraction is None else np.asarray(essential_fraction, dtype=float)
    return ResilienceCurve(
        hours=np.arange(cfg.horizon + 1),
        r=r,
        essential_fraction=ess,
        essential_kw={},
        common_kw=r * total_demand,
        total_demand=total_demand,
        total_essential=0.0,
        landmarks=detect_landmarks(r, cfg),
        iterations=0,
        seed=cfg.seed,
    )
