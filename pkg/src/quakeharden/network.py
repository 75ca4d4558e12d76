"""Distribution network model: buses, lines, essential loads and connectivity.

Networks are immutable once built. Use :func:`load_network` to read a YAML
document, :func:`builtin_ieee33` for the bundled 33-bus case, and
:func:`connected_components` to split the graph after line outages.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np
import yaml
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

OVERHEAD = "overhead"
CABLE = "cable"
LINE_KINDS = (OVERHEAD, CABLE)


class NetworkError(ValueError):
    """Raised when a network document or object violates the schema or an invariant."""


@dataclass(frozen=True)
class Bus:
    id: int
    gen_capacity: float = 0.0
    common_load: float = 0.0

    def __post_init__(self) -> None:
        if self.gen_capacity < 0:
            raise NetworkError(f"bus {self.id}: gen_capacity must be >= 0, got {self.gen_capacity}")
        if self.common_load < 0:
            raise NetworkError(f"bus {self.id}: common_load must be >= 0, got {self.common_load}")


@dataclass(frozen=True)
class EssentialLoad:
    """A prioritised load with a monetary value density in $/kW."""

    id: str
    bus: int
    amount: float
    value: float

    def __post_init__(self) -> None:
        if not self.amount > 0:
            raise NetworkError(f"essential load {self.id}: amount must be > 0, got {self.amount}")
        if not self.value > 0:
            raise NetworkError(f"essential load {self.id}: value must be > 0, got {self.value}")


@dataclass(frozen=True)
class Line:
    """A branch of the feeder.

    Overhead lines carry ``poles`` (pole count); cables carry ``length_miles``.
    ``fail_prob`` and ``fail_prob_hardened`` are the line-level failure
    probabilities used in direct probability mode.
    """

    id: int
    from_bus: int
    to_bus: int
    kind: str
    poles: int | None = None
    length_miles: float | None = None
    pole_repair_cost: float = 0.0
    fail_prob: float = 0.0
    fail_prob_hardened: float = 0.0
    group: str | None = None

    def __post_init__(self) -> None:
        where = f"line {self.id}"
        if self.kind not in LINE_KINDS:
            raise NetworkError(f"{where}: kind must be one of {LINE_KINDS}, got {self.kind!r}")
        if self.from_bus == self.to_bus:
            raise NetworkError(f"{where}: endpoints must be distinct (both {self.from_bus})")
        if self.kind == OVERHEAD:
            if self.poles is None or self.length_miles is not None:
                raise NetworkError(f"{where}: overhead lines carry 'poles' and no 'length_miles'")
            if isinstance(self.poles, bool) or int(self.poles) != self.poles or self.poles < 1:
                raise NetworkError(f"{where}: poles must be an integer >= 1, got {self.poles}")
        else:
            if self.length_miles is None or self.poles is not None:
                raise NetworkError(f"{where}: cables carry 'length_miles' and no 'poles'")
            if not self.length_miles > 0:
                raise NetworkError(f"{where}: length_miles must be > 0, got {self.length_miles}")
        for name in ("fail_prob", "fail_prob_hardened"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise NetworkError(f"{where}: {name} must lie in [0, 1], got {p}")
        if self.fail_prob_hardened > self.fail_prob:
            raise NetworkError(
                f"{where}: fail_prob_hardened ({self.fail_prob_hardened}) exceeds fail_prob ({self.fail_prob})"
            )
        if self.pole_repair_cost < 0:
            raise NetworkError(f"{where}: pole_repair_cost must be >= 0")

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.from_bus, self.to_bus)

    @property
    def is_overhead(self) -> bool:
        return self.kind == OVERHEAD


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    essential_loads: tuple[EssentialLoad, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "essential_loads", tuple(self.essential_loads))
        self._validate()

    def _validate(self) -> None:
        if not self.buses:
            raise NetworkError("network has no buses")
        seen: set[int] = set()
        for b in self.buses:
            if b.id in seen:
                raise NetworkError(f"duplicate bus id {b.id}")
            seen.add(b.id)
        line_ids: set[int] = set()
        for ln in self.lines:
            if ln.id in line_ids:
                raise NetworkError(f"duplicate line id {ln.id}")
            line_ids.add(ln.id)
            for end in ln.endpoints:
                if end not in seen:
                    raise NetworkError(f"line {ln.id} references unknown bus {end}")
        ess_ids: set[str] = set()
        ess_buses: set[int] = set()
        for e in self.essential_loads:
            if e.id in ess_ids:
                raise NetworkError(f"duplicate essential load id {e.id!r}")
            if e.bus not in seen:
                raise NetworkError(f"essential load {e.id} references unknown bus {e.bus}")
            if e.bus in ess_buses:
                raise NetworkError(f"essential load {e.id}: bus {e.bus} already hosts an essential load")
            ess_ids.add(e.id)
            ess_buses.add(e.bus)

        parts = connected_components(self, ())
        if len(parts) > 1:
            stray = sorted(parts[1])
            raise NetworkError(f"intact network is disconnected: buses {stray} are unreachable from bus {min(parts[0])}")

        demand = self.total_common_load + self.total_essential_load
        if demand > self.total_generation + 1e-9:
            warnings.warn(
                f"total demand {demand:g} kW exceeds total generation {self.total_generation:g} kW",
                stacklevel=3,
            )

    # lookups -------------------------------------------------------------

    @cached_property
    def bus_index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def line_index(self) -> dict[int, int]:
        return {ln.id: i for i, ln in enumerate(self.lines)}

    @cached_property
    def essential_by_id(self) -> dict[str, EssentialLoad]:
        return {e.id: e for e in self.essential_loads}

    def bus(self, bus_id: int) -> Bus:
        return self.buses[self.bus_index[bus_id]]

    def line(self, line_id: int) -> Line:
        try:
            return self.lines[self.line_index[line_id]]
        except KeyError:
            raise NetworkError(f"unknown line id {line_id}") from None

    @cached_property
    def adjacency(self) -> dict[int, tuple[tuple[int, int], ...]]:
        """Bus id -> ((line id, neighbour bus id), ...) sorted by line id."""
        adj: dict[int, list[tuple[int, int]]] = {b.id: [] for b in self.buses}
        for ln in self.lines:
            adj[ln.from_bus].append((ln.id, ln.to_bus))
            adj[ln.to_bus].append((ln.id, ln.from_bus))
        return {k: tuple(sorted(v)) for k, v in adj.items()}

    @property
    def generator_buses(self) -> list[int]:
        return [b.id for b in self.buses if b.gen_capacity > 0]

    @property
    def total_generation(self) -> float:
        return math.fsum(b.gen_capacity for b in self.buses)

    @property
    def total_common_load(self) -> float:
        return math.fsum(b.common_load for b in self.buses)

    @property
    def total_essential_load(self) -> float:
        return math.fsum(e.amount for e in self.essential_loads)

    @property
    def total_demand(self) -> float:
        return self.total_common_load + self.total_essential_load

    def line_ids(self) -> list[int]:
        return [ln.id for ln in self.lines]


def connected_components(net: Network, failed: Iterable[int] = ()) -> list[frozenset[int]]:
    """Partition the buses into connected sub-graphs after removing ``failed`` lines.

    Components are returned ordered by their smallest bus id.
    """
    failed = set(failed)
    index = {b.id: i for i, b in enumerate(net.buses)}
    known = {ln.id for ln in net.lines}
    unknown = failed - known
    if unknown:
        raise NetworkError(f"unknown line id(s) {sorted(unknown)}")
    rows, cols = [], []
    for ln in net.lines:
        if ln.id not in failed:
            rows.append(index[ln.from_bus])
            cols.append(index[ln.to_bus])
    n = len(net.buses)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = _cc(graph, directed=False)
    groups: dict[int, set[int]] = {}
    for b, lab in zip(net.buses, labels):
        groups.setdefault(int(lab), set()).add(b.id)
    return sorted((frozenset(g) for g in groups.values()), key=min)


# serialization --------------------------------------------------------------

_BUS_KEYS = {"id", "gen_kw", "load_kw"}
_LINE_KEYS = {"id", "from", "to", "kind", "poles", "length_miles", "pole_repair_cost",
              "fail_prob", "fail_prob_hardened", "group"}
_ESS_KEYS = {"id", "bus", "amount_kw", "value_per_kw"}


def _require(rec: Mapping[str, Any], key: str, kinds: tuple[type, ...], where: str) -> Any:
    if key not in rec:
        raise NetworkError(f"{where}: missing field '{key}'")
    val = rec[key]
    if isinstance(val, bool) or not isinstance(val, kinds):
        raise NetworkError(f"{where}: field '{key}' has wrong type {type(val).__name__}")
    return val


def _records(doc: Mapping[str, Any], key: str, required: bool = True) -> list[Mapping[str, Any]]:
    if key not in doc:
        if required:
            raise NetworkError(f"network document: missing top-level key '{key}'")
        return []
    recs = doc[key] or []
    if not isinstance(recs, list) or not all(isinstance(r, Mapping) for r in recs):
        raise NetworkError(f"network document: '{key}' must be a list of mappings")
    return recs


def _check_keys(rec: Mapping[str, Any], allowed: set[str], where: str) -> None:
    extra = set(rec) - allowed
    if extra:
        raise NetworkError(f"{where}: unknown field(s) {sorted(extra)}")


def network_from_dict(doc: Mapping[str, Any]) -> Network:
    if not isinstance(doc, Mapping):
        raise NetworkError("network document must be a mapping")
    num = (int, float)
    buses = []
    for i, rec in enumerate(_records(doc, "buses")):
        where = f"buses[{i}]"
        _check_keys(rec, _BUS_KEYS, where)
        bid = _require(rec, "id", (int,), where)
        buses.append(Bus(
            id=bid,
            gen_capacity=float(_require(rec, "gen_kw", num, f"bus {bid}")),
            common_load=float(_require(rec, "load_kw", num, f"bus {bid}")),
        ))
    lines = []
    for i, rec in enumerate(_records(doc, "lines")):
        where = f"lines[{i}]"
        _check_keys(rec, _LINE_KEYS, where)
        lid = _require(rec, "id", (int,), where)
        where = f"line {lid}"
        kind = _require(rec, "kind", (str,), where)
        poles = rec.get("poles")
        length = rec.get("length_miles")
        if poles is not None and (isinstance(poles, bool) or not isinstance(poles, int)):
            raise NetworkError(f"{where}: field 'poles' must be an integer")
        if length is not None and (isinstance(length, bool) or not isinstance(length, num)):
            raise NetworkError(f"{where}: field 'length_miles' must be a number")
        group = rec.get("group")
        lines.append(Line(
            id=lid,
            from_bus=_require(rec, "from", (int,), where),
            to_bus=_require(rec, "to", (int,), where),
            kind=kind,
            poles=poles,
            length_miles=None if length is None else float(length),
            pole_repair_cost=float(_require(rec, "pole_repair_cost", num, where)),
            fail_prob=float(_require(rec, "fail_prob", num, where)),
            fail_prob_hardened=float(_require(rec, "fail_prob_hardened", num, where)),
            group=None if group is None else str(group),
        ))
    essentials = []
    for i, rec in enumerate(_records(doc, "essential_loads", required=False)):
        where = f"essential_loads[{i}]"
        _check_keys(rec, _ESS_KEYS, where)
        eid = str(_require(rec, "id", (str, int), where))
        where = f"essential load {eid}"
        essentials.append(EssentialLoad(
            id=eid,
            bus=_require(rec, "bus", (int,), where),
            amount=float(_require(rec, "amount_kw", num, where)),
            value=float(_require(rec, "value_per_kw", num, where)),
        ))
    return Network(tuple(buses), tuple(lines), tuple(essentials))


def network_to_dict(net: Network) -> dict[str, Any]:
    lines = []
    for ln in net.lines:
        rec: dict[str, Any] = {"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "kind": ln.kind}
        if ln.is_overhead:
            rec["poles"] = ln.poles
        else:
            rec["length_miles"] = ln.length_miles
        rec.update(pole_repair_cost=ln.pole_repair_cost, fail_prob=ln.fail_prob,
                   fail_prob_hardened=ln.fail_prob_hardened)
        if ln.group is not None:
            rec["group"] = ln.group
        lines.append(rec)
    return {
        "buses": [{"id": b.id, "gen_kw": b.gen_capacity, "load_kw": b.common_load} for b in net.buses],
        "lines": lines,
        "essential_loads": [
            {"id": e.id, "bus": e.bus, "amount_kw": e.amount, "value_per_kw": e.value}
            for e in net.essential_loads
        ],
    }


def dump_network(net: Network) -> str:
    return yaml.safe_dump(network_to_dict(net), sort_keys=False)


def load_network(document: str | Path | Mapping[str, Any]) -> Network:
    """Build a validated :class:`Network` from YAML text, a file path or a parsed mapping.

    Raises:
        NetworkError: on schema or invariant violations; the message names the
            offending element.
        OSError: if a path is given and cannot be read.
    """
    if isinstance(document, Path):
        document = document.read_text()
    if isinstance(document, str):
        try:
            document = yaml.safe_load(document)
        except yaml.YAMLError as exc:
            raise NetworkError(f"network document is not valid YAML: {exc}") from exc
    return network_from_dict(document)


def builtin_ieee33() -> Network:
    """The 33-bus case-study feeder with its four essential loads."""
    text = resources.files("quakeharden").joinpath("data", "ieee33.yaml").read_text()
    return load_network(text)
