"""Fragility curves and line failure probabilities.

An overhead line is a chain of spans; each span fails when its pole or its
wire fails. A line fails when any span fails. Cables are evaluated from a
single fragility curve, uniform along the cable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import yaml

from .network import Line, Network

POLE = "pole"
WIRE = "wire"
CABLE_CLASS = "cable"

DIRECT = "direct"
CURVE = "curve"

# Wire failure probabilities at 0.5 g, used when curve mode has no wire curves.
DEFAULT_WIRE_PROB = 0.10
DEFAULT_WIRE_PROB_HARDENED = 0.01


class FragilityError(ValueError):
    pass


@dataclass(frozen=True)
class FragilityCurve:
    """Piecewise-linear map from PGA (g) to failure probability."""

    points: tuple[tuple[float, float], ...]
    hardened: bool = False
    equipment_class: str = POLE

    def __post_init__(self) -> None:
        pts = tuple((float(x), float(p)) for x, p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise FragilityError(f"{self.equipment_class} curve has no points")
        xs = [x for x, _ in pts]
        ps = [p for _, p in pts]
        if xs[0] < 0:
            raise FragilityError("curve intensities must be >= 0")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise FragilityError("curve intensities must be strictly increasing")
        if any(not 0.0 <= p <= 1.0 for p in ps):
            raise FragilityError("curve probabilities must lie in [0, 1]")
        if any(b < a for a, b in zip(ps, ps[1:])):
            raise FragilityError("curve probabilities must be non-decreasing")


@dataclass(frozen=True)
class ComponentProbs:
    pole: float
    wire: float

    def __post_init__(self) -> None:
        for name in ("pole", "wire"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise FragilityError(f"{name} probability must lie in [0, 1]")


CurveSet = Mapping[tuple[str, bool], FragilityCurve]


def eval_curve(curve: FragilityCurve, pga: float) -> float:
    """Interpolate ``curve`` at ``pga``; values outside the covered range are clamped."""
    if not curve.points:
        raise FragilityError("empty curve")
    if pga < 0:
        raise FragilityError(f"pga must be >= 0, got {pga}")
    xs, ps = zip(*curve.points)
    return float(np.interp(pga, xs, ps))


def span_failure_prob(c: ComponentProbs) -> float:
    """Probability that at least one of the independent pole and wire fails."""
    return c.wire + c.pole - c.wire * c.pole


def line_failure_prob(spans: Sequence[float]) -> float:
    """Failure probability of a series chain of independently failing spans."""
    if len(spans) == 0:
        raise FragilityError("a line needs at least one span")
    survive = 1.0
    for p in spans:
        if not 0.0 <= p <= 1.0:
            raise FragilityError(f"span probability must lie in [0, 1], got {p}")
        survive *= 1.0 - p
    return 1.0 - survive


def _curve(curves: CurveSet, cls: str, hardened: bool, line: Line) -> FragilityCurve:
    try:
        return curves[(cls, hardened)]
    except KeyError:
        mode = "hardened" if hardened else "unhardened"
        raise FragilityError(f"line {line.id}: no {mode} '{cls}' fragility curve") from None


def component_probs(line: Line, pga: float, curves: CurveSet, hardened: bool) -> ComponentProbs:
    """Pole and wire failure probabilities of one span of an overhead line."""
    pole = eval_curve(_curve(curves, POLE, hardened, line), pga)
    if (WIRE, hardened) in curves:
        wire = eval_curve(curves[(WIRE, hardened)], pga)
    else:
        wire = DEFAULT_WIRE_PROB_HARDENED if hardened else DEFAULT_WIRE_PROB
    return ComponentProbs(pole=pole, wire=wire)


def effective_line_prob(
    line: Line,
    pga: float = 0.5,
    curves: CurveSet | None = None,
    hardened: bool = False,
    mode: str = DIRECT,
) -> float:
    """Failure probability of ``line`` under the given probability mode.

    In ``direct`` mode the line record's own probabilities are returned. In
    ``curve`` mode overhead lines compose identical per-pole spans and cables
    read the cable curve directly.
    """
    if mode == DIRECT:
        return line.fail_prob_hardened if hardened else line.fail_prob
    if mode != CURVE:
        raise FragilityError(f"unknown probability mode {mode!r}")
    if curves is None:
        raise FragilityError("curve mode needs a fragility curve set")
    if line.is_overhead:
        span = span_failure_prob(component_probs(line, pga, curves, hardened))
        return line_failure_prob([span] * int(line.poles))
    return eval_curve(_curve(curves, CABLE_CLASS, hardened, line), pga)


def line_probabilities(
    net: Network,
    hardened_lines: Iterable[int] = (),
    pga: float = 0.5,
    curves: CurveSet | None = None,
    mode: str = DIRECT,
) -> dict[int, float]:
    """Failure probability for every line, using hardened values for ``hardened_lines``."""
    hardened = set(hardened_lines)
    unknown = hardened - set(net.line_index)
    if unknown:
        raise FragilityError(f"unknown hardened line id(s) {sorted(unknown)}")
    return {
        ln.id: effective_line_prob(ln, pga, curves, ln.id in hardened, mode)
        for ln in net.lines
    }


def pole_probabilities(
    line: Line,
    pga: float = 0.5,
    curves: CurveSet | None = None,
    mode: str = DIRECT,
) -> list[tuple[float, float]]:
    """(unhardened, hardened) failure probability per pole of ``line``.

    Cables contribute a single entry. Direct mode reuses the line-level values
    for every pole.
    """
    count = int(line.poles) if line.is_overhead else 1
    if mode == DIRECT:
        return [(line.fail_prob, line.fail_prob_hardened)] * count
    if curves is None:
        raise FragilityError("curve mode needs a fragility curve set")
    if line.is_overhead:
        pair = (
            eval_curve(_curve(curves, POLE, False, line), pga),
            eval_curve(_curve(curves, POLE, True, line), pga),
        )
    else:
        pair = (
            eval_curve(_curve(curves, CABLE_CLASS, False, line), pga),
            eval_curve(_curve(curves, CABLE_CLASS, True, line), pga),
        )
    return [pair] * count


def load_curves(document: str | Path | list) -> dict[tuple[str, bool], FragilityCurve]:
    """Read a fragility file: a list of ``{equipment_class, hardened, points}`` records."""
    if isinstance(document, Path):
        document = document.read_text()
    if isinstance(document, str):
        document = yaml.safe_load(document)
    if not isinstance(document, list):
        raise FragilityError("fragility document must be a list of curve records")
    out: dict[tuple[str, bool], FragilityCurve] = {}
    for i, rec in enumerate(document):
        try:
            cls = str(rec["equipment_class"])
            hardened = rec["hardened"]
            points = rec["points"]
        except (KeyError, TypeError):
            raise FragilityError(f"curve record {i}: needs equipment_class, hardened and points") from None
        if not isinstance(hardened, bool):
            raise FragilityError(f"curve record {i}: 'hardened' must be a boolean")
        key = (cls, hardened)
        if key in out:
            raise FragilityError(f"curve record {i}: duplicate curve for {key}")
        out[key] = FragilityCurve(tuple(tuple(p) for p in points), hardened, cls)
    return out


def dump_curves(curves: CurveSet) -> str:
    recs = [
        {"equipment_class": c.equipment_class, "hardened": c.hardened, "points": [list(p) for p in c.points]}
        for c in curves.values()
    ]
    return yaml.safe_dump(recs, sort_keys=False)
