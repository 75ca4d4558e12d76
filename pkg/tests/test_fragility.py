from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quakeharden.fragility import (
    CURVE, ComponentProbs, FragilityCurve, FragilityError, dump_curves, effective_line_prob, eval_curve,
    line_failure_prob, line_probabilities, load_curves, pole_probabilities, span_failure_prob,
)

from helpers import cable, overhead

prob = st.floats(0.0, 1.0, allow_nan=False)

CURVES_YAML = """
- {equipment_class: pole, hardened: false, points: [[0.2, 0.001], [0.5, 0.01], [1.0, 0.2]]}
- {equipment_class: pole, hardened: true, points: [[0.2, 0.0], [0.5, 0.001], [1.0, 0.05]]}
- {equipment_class: wire, hardened: false, points: [[0.5, 0.02]]}
- {equipment_class: wire, hardened: true, points: [[0.5, 0.002]]}
- {equipment_class: cable, hardened: false, points: [[0.0, 0.1], [1.0, 0.5]]}
- {equipment_class: cable, hardened: true, points: [[0.0, 0.01], [1.0, 0.05]]}
"""


def exact_line_prob(spans):
    """Enumerate every pole/wire outcome and sum the mass of those that break the line."""
    total = 0.0
    flat = [p for s in spans for p in (s.pole, s.wire)]
    for outcome in itertools.product((False, True), repeat=len(flat)):
        mass = math.prod(p if f else 1 - p for p, f in zip(flat, outcome))
        if any(outcome):
            total += mass
    return total


class TestComposition:
    def test_span_example(self):
        assert span_failure_prob(ComponentProbs(pole=0.1, wire=0.2)) == pytest.approx(0.28, abs=1e-12)

    def test_twenty_spans(self):
        assert line_failure_prob([0.1] * 20) == pytest.approx(1 - 0.9**20, abs=1e-12)
        assert line_failure_prob([0.1] * 20) == pytest.approx(0.8784233454094307, abs=1e-12)

    def test_degenerate_spans(self):
        assert line_failure_prob([0.0] * 5) == 0.0
        assert line_failure_prob([0.0, 1.0, 0.0]) == 1.0

    def test_matches_enumeration(self):
        spans = [ComponentProbs(0.1, 0.05), ComponentProbs(0.3, 0.0), ComponentProbs(0.02, 0.2)]
        got = line_failure_prob([span_failure_prob(s) for s in spans])
        assert got == pytest.approx(exact_line_prob(spans), abs=1e-12)

    def test_matches_monte_carlo(self):
        spans = [ComponentProbs(0.1, 0.05), ComponentProbs(0.3, 0.0), ComponentProbs(0.02, 0.2)]
        p = line_failure_prob([span_failure_prob(s) for s in spans])
        rng = np.random.default_rng(7)
        n = 100_000
        flat = np.array([q for s in spans for q in (s.pole, s.wire)])
        broken = (rng.random((n, flat.size)) < flat).any(axis=1)
        se = math.sqrt(p * (1 - p) / n)
        assert abs(broken.mean() - p) < 3 * se

    @given(prob, prob)
    def test_span_symmetric_and_bounded(self, a, b):
        s = span_failure_prob(ComponentProbs(a, b))
        assert s == pytest.approx(span_failure_prob(ComponentProbs(b, a)), abs=1e-12)
        assert max(a, b) - 1e-12 <= s <= 1 + 1e-12

    @settings(max_examples=80)
    @given(st.lists(prob, min_size=1, max_size=12), st.randoms())
    def test_line_permutation_invariant(self, spans, rnd):
        shuffled = list(spans)
        rnd.shuffle(shuffled)
        assert line_failure_prob(spans) == pytest.approx(line_failure_prob(shuffled), abs=1e-12)
        assert max(spans) - 1e-12 <= line_failure_prob(spans) <= 1.0

    @given(st.lists(prob, min_size=1, max_size=8), prob)
    def test_adding_a_span_never_lowers(self, spans, extra):
        assert line_failure_prob(spans + [extra]) >= line_failure_prob(spans) - 1e-12

    @pytest.mark.parametrize("bad", [[], [1.5], [-0.1]])
    def test_rejects_bad_spans(self, bad):
        with pytest.raises(FragilityError):
            line_failure_prob(bad)


class TestCurves:
    def test_interpolation(self):
        c = FragilityCurve(((0.2, 0.1), (0.6, 0.9)))
        assert eval_curve(c, 0.4) == pytest.approx(0.5)

    def test_clamped_outside_range(self):
        c = FragilityCurve(((0.2, 0.1), (0.6, 0.9)))
        assert eval_curve(c, 0.0) == pytest.approx(0.1)
        assert eval_curve(c, 3.0) == pytest.approx(0.9)

    @pytest.mark.parametrize("points", [
        (), ((0.5, 0.1), (0.4, 0.2)), ((0.2, 0.5), (0.6, 0.4)), ((0.2, 1.2),), ((-0.1, 0.1),),
    ])
    def test_invalid_curves(self, points):
        with pytest.raises(FragilityError):
            FragilityCurve(points)

    def test_negative_pga(self):
        with pytest.raises(FragilityError, match="pga"):
            eval_curve(FragilityCurve(((0.0, 0.0), (1.0, 1.0))), -0.2)

    @given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
    def test_monotone_in_pga(self, a, b):
        c = FragilityCurve(((0.1, 0.0), (0.5, 0.3), (1.2, 0.95)))
        lo, hi = sorted((a, b))
        assert eval_curve(c, lo) <= eval_curve(c, hi) + 1e-12

    def test_yaml_round_trip(self):
        curves = load_curves(CURVES_YAML)
        assert load_curves(dump_curves(curves)) == curves

    def test_duplicate_record(self):
        doc = CURVES_YAML + "- {equipment_class: pole, hardened: false, points: [[0.5, 0.1]]}\n"
        with pytest.raises(FragilityError, match="duplicate"):
            load_curves(doc)


class TestLineProbabilities:
    def test_direct_mode_uses_line_values(self, ieee33):
        assert effective_line_prob(ieee33.line(1)) == 0.88
        assert effective_line_prob(ieee33.line(20), hardened=True) == 0.02

    def test_hardened_subset(self, ieee33):
        probs = line_probabilities(ieee33, {1, 20})
        assert probs[1] == 0.03 and probs[20] == 0.02 and probs[2] == 0.88 and probs[26] == 0.74

    def test_unknown_hardened_line(self, ieee33):
        with pytest.raises(FragilityError, match="99"):
            line_probabilities(ieee33, {99})

    def test_curve_mode_overhead(self):
        curves = load_curves(CURVES_YAML)
        ln = overhead(1, 1, 2, poles=10)
        span = 0.01 + 0.02 - 0.01 * 0.02
        assert effective_line_prob(ln, 0.5, curves, mode=CURVE) == pytest.approx(1 - (1 - span) ** 10)
        span_h = 0.001 + 0.002 - 0.001 * 0.002
        assert effective_line_prob(ln, 0.5, curves, True, CURVE) == pytest.approx(1 - (1 - span_h) ** 10)

    def test_curve_mode_cable(self):
        curves = load_curves(CURVES_YAML)
        assert effective_line_prob(cable(1, 1, 2), 0.5, curves, mode=CURVE) == pytest.approx(0.3)

    def test_curve_mode_default_wire(self):
        curves = {k: v for k, v in load_curves(CURVES_YAML).items() if k[0] != "wire"}
        ln = overhead(1, 1, 2, poles=1)
        assert effective_line_prob(ln, 0.5, curves, mode=CURVE) == pytest.approx(0.01 + 0.1 - 0.001)

    def test_curve_mode_missing_curve(self):
        curves = {k: v for k, v in load_curves(CURVES_YAML).items() if k[0] != "cable"}
        with pytest.raises(FragilityError, match="cable"):
            effective_line_prob(cable(4, 1, 2), 0.5, curves, mode=CURVE)

    def test_unknown_mode(self):
        with pytest.raises(FragilityError, match="mode"):
            effective_line_prob(overhead(1, 1, 2), mode="guess")

    def test_pole_probabilities(self, ieee33):
        assert pole_probabilities(ieee33.line(1)) == [(0.88, 0.03)] * 20
        assert pole_probabilities(ieee33.line(18)) == [(0.9, 0.02)]
        curves = load_curves(CURVES_YAML)
        assert pole_probabilities(overhead(1, 1, 2, poles=3), 0.5, curves, CURVE) == [(0.01, 0.001)] * 3
