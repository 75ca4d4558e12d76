from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quakeharden.costs import CostParams, strategy_cost
from quakeharden.indices import TargetCriteria
from quakeharden.network import Bus, EssentialLoad, Network
from quakeharden.strategies import (
    HOP_WEIGHTS, StrategyError, candidate_paths, enumerate_strategies, k_paths, k_shortest_paths,
    line_weights, paths_to_csv, shortest_path,
)

from helpers import overhead


def simple_paths(net, source, target):
    """Every loopless path as (lines, buses), by depth-first search."""
    out = []

    def walk(bus, lines, buses):
        if bus == target:
            out.append((tuple(lines), tuple(buses)))
            return
        for ln in net.lines:
            for a, b in ((ln.from_bus, ln.to_bus), (ln.to_bus, ln.from_bus)):
                if a == bus and b not in buses:
                    walk(b, lines + [ln.id], buses + [b])

    walk(source, [], [source])
    return out


@st.composite
def small_graphs(draw):
    n = draw(st.integers(2, 8))
    edges = [(draw(st.integers(1, b - 1)), b) for b in range(2, n + 1)]  # spanning tree
    extra = draw(st.lists(st.tuples(st.integers(1, n), st.integers(1, n)), max_size=8))
    edges += [(a, b) for a, b in extra if a != b]
    buses = tuple(Bus(i, gen_capacity=10.0 if i == 1 else 0.0, common_load=0.0 if i == 1 else 1.0)
                  for i in range(1, n + 1))
    lines = tuple(overhead(i, a, b) for i, (a, b) in enumerate(edges, 1))
    net = Network(buses, lines)
    weights = {ln.id: float(draw(st.integers(1, 5))) for ln in lines}
    target = draw(st.integers(1, n))
    return net, weights, target


def is_simple_path(net, path, source, target):
    assert path.buses[0] == source and path.buses[-1] == target
    assert len(set(path.buses)) == len(path.buses)
    assert len(path.lines) == len(path.buses) - 1
    for lid, a, b in zip(path.lines, path.buses, path.buses[1:]):
        assert {a, b} == {net.line(lid).from_bus, net.line(lid).to_bus}
    return True


def weight(lines, weights):
    return sum(weights[l] for l in lines)


class TestShortestPath:
    def test_same_bus(self, toy5):
        p = shortest_path(toy5, 3, 3, line_weights(toy5))
        assert p.lines == () and p.weight == 0.0

    def test_triangle(self):
        net = Network((Bus(1, 5.0), Bus(2, common_load=1.0), Bus(3, common_load=1.0)),
                      (overhead(1, 1, 2), overhead(2, 2, 3), overhead(3, 1, 3)))
        p = shortest_path(net, 1, 3, {1: 1.0, 2: 1.0, 3: 3.0})
        assert p.buses == (1, 2, 3) and p.weight == 2.0

    def test_unreachable(self, toy5):
        assert shortest_path(toy5, 1, 3, line_weights(toy5), banned_lines={2, 3}) is None

    def test_tie_goes_to_smaller_line_sequence(self):
        net = Network((Bus(1, 5.0), Bus(2), Bus(3), Bus(4, common_load=1.0)),
                      (overhead(1, 1, 3), overhead(2, 3, 4), overhead(3, 1, 2), overhead(4, 2, 4)))
        assert shortest_path(net, 1, 4, {l: 1.0 for l in range(1, 5)}).lines == (1, 2)

    def test_negative_weights_rejected(self, toy5):
        with pytest.raises(StrategyError):
            shortest_path(toy5, 1, 3, {**line_weights(toy5), 2: -1.0})

    @settings(max_examples=100, deadline=None)
    @given(small_graphs())
    def test_matches_brute_force(self, case):
        net, weights, target = case
        p = shortest_path(net, 1, target, weights)
        everything = simple_paths(net, 1, target)
        best = min(weight(l, weights) for l, _ in everything)
        assert is_simple_path(net, p, 1, target)
        assert p.weight == best
        assert p.lines == min(l for l, _ in everything if weight(l, weights) == best)


class TestYen:
    @settings(max_examples=100, deadline=None)
    @given(small_graphs(), st.integers(1, 6))
    def test_matches_brute_force(self, case, k):
        net, weights, target = case
        got = k_shortest_paths(net, 1, target, weights, k)
        everything = simple_paths(net, 1, target)
        assert len(got) == min(k, len(everything))
        assert len({p.lines for p in got}) == len(got)
        for p in got:
            assert is_simple_path(net, p, 1, target)
            assert p.weight == weight(p.lines, weights)
        want = sorted(weight(l, weights) for l, _ in everything)[: len(got)]
        assert [p.weight for p in got] == want

    def test_k_exceeding_path_count(self, toy5):
        got = k_shortest_paths(toy5, 3, 1, line_weights(toy5), 10)
        assert len(got) == 2  # the loop offers two ways round

    def test_k_must_be_positive(self, toy5):
        with pytest.raises(StrategyError):
            k_shortest_paths(toy5, 3, 1, line_weights(toy5), 0)


class TestCandidates:
    def test_radial_k1(self):
        buses = (Bus(1, 100.0), Bus(2), Bus(3, 50.0), Bus(4, common_load=5.0))
        net = Network(buses, (overhead(1, 1, 2), overhead(2, 2, 3), overhead(3, 2, 4)),
                      (EssentialLoad("E", 4, 40.0, 1.0),))
        got = k_paths(net, net.essential_loads[0], line_weights(net), k=1)
        assert {(p.generator_bus, p.lines) for p in got} == {(1, (3, 1)), (3, (3, 2))}

    def test_capability_uses_single_load(self):
        buses = (Bus(1, 100.0), Bus(2), Bus(3, 30.0), Bus(4, common_load=5.0))
        net = Network(buses, (overhead(1, 1, 2), overhead(2, 2, 3), overhead(3, 2, 4)),
                      (EssentialLoad("E", 4, 40.0, 1.0),))
        assert {p.generator_bus for p in k_paths(net, net.essential_loads[0], line_weights(net))} == {1}

    @pytest.mark.filterwarnings("ignore:total demand")
    def test_no_capable_generator(self):
        net = Network((Bus(1, 10.0), Bus(2, common_load=1.0)), (overhead(1, 1, 2),),
                      (EssentialLoad("big", 2, 50.0, 1.0),))
        with pytest.raises(StrategyError, match="big"):
            candidate_paths(net, line_weights(net))

    def test_ieee33_every_load_has_paths(self, ieee33):
        per = candidate_paths(ieee33, line_weights(ieee33))
        assert set(per) == {"Omega1", "Omega2", "Omega3", "Omega4"}
        assert any(p.generator_bus == 18 for p in per["Omega4"])

    def test_hop_weights(self, ieee33):
        w = line_weights(ieee33, weighting=HOP_WEIGHTS)
        p = shortest_path(ieee33, 17, 18, w)
        assert p.lines == (17,) and p.weight == 1.0

    def test_csv(self, ieee33):
        text = paths_to_csv(candidate_paths(ieee33, line_weights(ieee33), k=1), {"seed": 1})
        rows = text.splitlines()
        assert rows[1] == "essential,generator_bus,rank,weight,lines,buses"
        assert all(r.split(",")[2] == "1" for r in rows[2:])


class TestEnumeration:
    def test_single_load_single_generator(self):
        net = Network((Bus(1, 100.0), Bus(2), Bus(3, common_load=1.0)),
                      (overhead(1, 1, 2), overhead(2, 2, 3)), (EssentialLoad("E", 3, 10.0, 1.0),))
        got = enumerate_strategies(net, line_weights(net), k=1)
        assert len(got) == 1 and got[0].lines == frozenset({1, 2}) and got[0].id == "S1"

    @pytest.mark.filterwarnings("ignore:total demand")
    def test_capacity_rejects_overload(self):
        net = Network((Bus(1, 100.0), Bus(2, common_load=1.0), Bus(3, common_load=1.0)),
                      (overhead(1, 1, 2), overhead(2, 1, 3)),
                      (EssentialLoad("A", 2, 80.0, 1.0), EssentialLoad("B", 3, 60.0, 1.0)))
        assert enumerate_strategies(net, line_weights(net)) == []

    def test_budget_filter(self, ieee33):
        crit = TargetCriteria(budget=100_000)
        got = enumerate_strategies(ieee33, line_weights(ieee33), 3, crit)
        assert got and all(strategy_cost(s, ieee33, CostParams()) <= 100_000 for s in got)

    def test_ieee33_invariants(self, ieee33):
        crit = TargetCriteria()
        w = line_weights(ieee33)
        got = enumerate_strategies(ieee33, w, 3, crit)
        assert 5 <= len(got) <= 500
        assert [s.id for s in got] == [f"S{i}" for i in range(1, len(got) + 1)]
        assert len({s.lines for s in got}) == len(got)
        for s in got:
            assert set(s.assignment) == {e.id for e in ieee33.essential_loads}
            for g, load in s.generator_load(ieee33).items():
                assert load <= ieee33.bus(g).gen_capacity
            assert strategy_cost(s, ieee33, CostParams()) <= crit.budget
            union = set()
            for eid, path in s.assignment.items():
                assert is_simple_path(ieee33, path, ieee33.essential_by_id[eid].bus, path.generator_bus)
                union |= set(path.lines)
            assert union == s.lines

    def test_dedup_keeps_cheaper_assignment(self, ieee33):
        """Each kept assignment has the lowest summed path weight among feasible combinations with its line set."""
        w = line_weights(ieee33)
        per = candidate_paths(ieee33, w, 2)
        cap = {b.id: b.gen_capacity for b in ieee33.buses}
        best = {}
        for combo in itertools.product(*per.values()):
            load = {}
            for p in combo:
                load[p.generator_bus] = load.get(p.generator_bus, 0.0) + ieee33.essential_by_id[p.essential].amount
            if any(v > cap[g] for g, v in load.items()):
                continue
            lines = frozenset(l for p in combo for l in p.lines)
            score = sum(p.weight for p in combo)
            best[lines] = min(score, best.get(lines, score))
        got = enumerate_strategies(ieee33, w, 2)
        assert {s.lines for s in got} == set(best)
        for s in got:
            assert sum(p.weight for p in s.assignment.values()) == best[s.lines]
