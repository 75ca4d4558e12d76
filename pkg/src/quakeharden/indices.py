"""Normalised resilience indices and target checks.

All integrals are rectangle sums on the hourly grid of the curve: the sample
at hour ``h`` stands for the interval ``(h - 1, h]``, so the lost area over
``[a, b]`` is ``sum(R_0 - R(h) for h in a+1..b)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulation import ResilienceCurve


class UndefinedIndexError(ValueError):
    """Raised when an index is undefined for the given curve."""


@dataclass(frozen=True)
class ResilienceIndices:
    zeta_v: float
    zeta_d: float
    zeta_e: float
    essential_pct_degraded: float

    def as_dict(self) -> dict[str, float]:
        return {
            "zeta_v": self.zeta_v,
            "zeta_d": self.zeta_d,
            "zeta_e": self.zeta_e,
            "essential_pct_degraded": self.essential_pct_degraded,
        }


@dataclass(frozen=True)
class TargetCriteria:
    max_zeta_v: float = 0.35
    max_zeta_d: float = 0.35
    max_zeta_e: float = 0.25
    min_essential_pct: float = 0.95
    budget: float = 150_000.0

    def __post_init__(self) -> None:
        for name in ("max_zeta_v", "max_zeta_d", "max_zeta_e", "min_essential_pct"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")


@dataclass(frozen=True)
class CriterionCheck:
    name: str
    value: float
    op: str
    threshold: float
    ok: bool


@dataclass(frozen=True)
class TargetReport:
    passed: bool
    checks: tuple[CriterionCheck, ...]

    def __bool__(self) -> bool:
        return self.passed

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.ok]


def _lost_area(curve: ResilienceCurve, start: int, end: int) -> float:
    seg = curve.r[start + 1 : end + 1]
    return float(np.sum(curve.r0 - seg))


def vulnerability_index(curve: ResilienceCurve) -> float:
    r0 = curve.r0
    if r0 <= 0:
        raise UndefinedIndexError("R_0 is zero: the network supplies nothing before the event")
    return (r0 - curve.r_pe) / r0


def degradation_index(curve: ResilienceCurve) -> float:
    """Mean relative shortfall between the event and the degraded state; 0 if they coincide."""
    r0 = curve.r0
    if r0 <= 0:
        raise UndefinedIndexError("R_0 is zero: the network supplies nothing before the event")
    t_e, t_pe = curve.landmarks.t_e, curve.landmarks.t_pe
    if t_pe == t_e:
        return 0.0
    return _lost_area(curve, t_e, t_pe) / (r0 * (t_pe - t_e))


def energy_index(curve: ResilienceCurve) -> float:
    r0 = curve.r0
    if r0 <= 0:
        raise UndefinedIndexError("R_0 is zero: the network supplies nothing before the event")
    t_e, t_pir = curve.landmarks.t_e, curve.landmarks.t_pir
    if t_pir == t_e:
        raise UndefinedIndexError("t_pir equals t_e: no event window to integrate over")
    return _lost_area(curve, t_e, t_pir) / (r0 * (t_pir - t_e))


def degraded_hours(curve: ResilienceCurve) -> np.ndarray:
    """Hour samples of the degraded state: ``t_pe`` up to the hour before recovery starts."""
    t_pe, t_r = curve.landmarks.t_pe, curve.landmarks.t_r
    if t_r > t_pe:
        return np.arange(t_pe, t_r)
    return np.array([t_pe])


def degraded_mean(series: np.ndarray, curve: ResilienceCurve) -> float:
    return float(np.mean(np.asarray(series)[degraded_hours(curve)]))


def essential_pct_degraded(curve: ResilienceCurve) -> float:
    return degraded_mean(curve.essential_fraction, curve)


def compute_indices(curve: ResilienceCurve) -> ResilienceIndices:
    clip = lambda v: min(1.0, max(0.0, v))  # noqa: E731
    return ResilienceIndices(
        zeta_v=clip(vulnerability_index(curve)),
        zeta_d=clip(degradation_index(curve)),
        zeta_e=clip(energy_index(curve)),
        essential_pct_degraded=clip(essential_pct_degraded(curve)),
    )


def meets_targets(idx: ResilienceIndices, t: TargetCriteria) -> TargetReport:
    checks = (
        CriterionCheck("zeta_v", idx.zeta_v, "<=", t.max_zeta_v, idx.zeta_v <= t.max_zeta_v),
        CriterionCheck("zeta_d", idx.zeta_d, "<=", t.max_zeta_d, idx.zeta_d <= t.max_zeta_d),
        CriterionCheck("zeta_e", idx.zeta_e, "<=", t.max_zeta_e, idx.zeta_e <= t.max_zeta_e),
        CriterionCheck("essential_pct", idx.essential_pct_degraded, ">=", t.min_essential_pct,
                       idx.essential_pct_degraded >= t.min_essential_pct),
    )
    return TargetReport(all(c.ok for c in checks), checks)
