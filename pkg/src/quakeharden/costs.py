"""Hardening cost parameters and the per-strategy cost."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .network import Line, Network


@dataclass(frozen=True)
class CostParams:
    c_overhead: float = 500.0      # $ per pole
    c_cable: float = 4_000.0       # $ per mile
    c_base: float = 10_000.0       # substation hardening, paid once per strategy
    gamma: float = 1.0             # return ratio of the event
    omega_common: float = 10.0     # $ per kW of common load

    def __post_init__(self) -> None:
        for name in ("c_overhead", "c_cable", "c_base", "gamma", "omega_common"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def line_hardening_cost(line: Line, p: CostParams) -> float:
    if line.is_overhead:
        return p.c_overhead * line.poles
    return p.c_cable * line.length_miles


def strategy_cost(lines, net: Network, p: CostParams) -> float:
    """Hardening cost of a strategy (or bare line set) plus the fixed substation cost."""
    lines: Iterable[int] = getattr(lines, "lines", lines)
    return sum(line_hardening_cost(net.line(l), p) for l in sorted(set(lines))) + p.c_base
