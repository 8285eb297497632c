"""Transmission grid data model: case parsing, validation, and derived maps.

The case format is JSON with reactance ``x`` per line; susceptance is
``b = -1/x`` so that the flow on an energized line is ``-b * (theta_fr -
theta_to) = (theta_fr - theta_to) / x``, the usual DC convention.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

DEFAULT_ANGLE_LIMIT = 0.6  # rad; used when a case omits per-line angle limits
BASE_MVA = 100.0


class CaseError(ValueError):
    """A case file that cannot be turned into a Network.

    ``location`` names the offending entry, e.g. ``lines[3].from``.
    """

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


@dataclass(frozen=True)
class Bus:
    """Network node; coordinates are degrees and drive default line routing."""

    id: int
    name: str = ""
    lon: float = 0.0
    lat: float = 0.0


@dataclass(frozen=True)
class Generator:
    """Dispatchable unit at a bus, limits in p.u. on the system base."""

    id: int
    bus: int
    g_min: float
    g_max: float


@dataclass(frozen=True)
class Line:
    """Line with DC parameters and a routing polyline of (lon, lat) points."""

    id: int
    from_bus: int
    to_bus: int
    x: float
    f_max: float
    delta_min: float = -DEFAULT_ANGLE_LIMIT
    delta_max: float = DEFAULT_ANGLE_LIMIT
    path: tuple[tuple[float, float], ...] = ()

    @property
    def b(self) -> float:
        """Susceptance -1/x."""
        return -1.0 / self.x


@dataclass(frozen=True)
class Network:
    """Immutable grid; safe to share read-only across concurrent runs."""

    buses: tuple[Bus, ...]
    generators: tuple[Generator, ...]
    lines: tuple[Line, ...]
    base_mva: float = BASE_MVA

    def bus_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses)

    def line_ids(self) -> tuple[int, ...]:
        return tuple(l.id for l in self.lines)

    def generator_ids(self) -> tuple[int, ...]:
        return tuple(g.id for g in self.generators)

    def bus_positions(self) -> dict[int, int]:
        return {b.id: k for k, b in enumerate(self.buses)}

    def line_positions(self) -> dict[int, int]:
        return {l.id: k for k, l in enumerate(self.lines)}


@dataclass(frozen=True)
class Violation:
    """One broken invariant: which entity and which rule."""

    entity: str
    rule: str
    detail: str = ""


@dataclass(frozen=True)
class Incidence:
    """Per-bus maps of incident lines and attached generators.

    Every bus id is present as a key even when its sets are empty; every
    line id occurs in exactly one ``lines_from`` entry and exactly one
    ``lines_to`` entry.
    """

    lines_from: dict[int, tuple[int, ...]]
    lines_to: dict[int, tuple[int, ...]]
    generators: dict[int, tuple[int, ...]]


def _require(obj: Mapping[str, Any], key: str, kinds, location: str):
    if key not in obj:
        raise CaseError(f"missing required field '{key}'", location)
    value = obj[key]
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise CaseError(f"field '{key}' has wrong type {type(value).__name__}", f"{location}.{key}")
    return value


def _as_float(obj: Mapping[str, Any], key: str, location: str, default=None) -> float:
    if default is not None and key not in obj:
        return default
    return float(_require(obj, key, (int, float), location))


def parse_case(source, *, zero_gen_min: bool = True) -> Network:
    """Parse a JSON case (path, JSON text, or already-decoded dict) into a Network.

    Lines without an explicit ``path`` get the straight segment between their
    terminal buses. With ``zero_gen_min`` (the default) generator lower limits
    are forced to 0 at load time, which guarantees the all-lines-off dispatch
    stays feasible.
    """
    if isinstance(source, Mapping):
        raw = source
    else:
        if isinstance(source, Path):
            text = source.read_text()
        elif isinstance(source, str) and source.lstrip().startswith("{"):
            text = source
        else:
            text = Path(source).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CaseError(f"not valid JSON: {exc}", "case") from None
    if not isinstance(raw, Mapping):
        raise CaseError("top level must be an object", "case")

    base_mva = _as_float(raw, "base_mva", "case", default=BASE_MVA)

    buses = []
    seen_bus: dict[int, int] = {}
    for k, entry in enumerate(_require(raw, "buses", list, "case")):
        loc = f"buses[{k}]"
        if not isinstance(entry, Mapping):
            raise CaseError("bus entry must be an object", loc)
        bid = int(_require(entry, "id", int, loc))
        if bid in seen_bus:
            raise CaseError(f"duplicate bus id {bid} (first at buses[{seen_bus[bid]}])", loc)
        seen_bus[bid] = k
        buses.append(
            Bus(
                id=bid,
                name=str(entry.get("name", "")),
                lon=_as_float(entry, "lon", loc, default=0.0),
                lat=_as_float(entry, "lat", loc, default=0.0),
            )
        )

    generators = []
    seen_gen: set[int] = set()
    for k, entry in enumerate(_require(raw, "generators", list, "case")):
        loc = f"generators[{k}]"
        if not isinstance(entry, Mapping):
            raise CaseError("generator entry must be an object", loc)
        gid = int(_require(entry, "id", int, loc))
        if gid in seen_gen:
            raise CaseError(f"duplicate generator id {gid}", loc)
        seen_gen.add(gid)
        bus = int(_require(entry, "bus", int, loc))
        if bus not in seen_bus:
            raise CaseError(f"generator {gid} references unknown bus {bus}", f"{loc}.bus")
        g_min = _as_float(entry, "g_min", loc, default=0.0)
        generators.append(
            Generator(
                id=gid,
                bus=bus,
                g_min=0.0 if zero_gen_min else g_min,
                g_max=_as_float(entry, "g_max", loc),
            )
        )

    lines = []
    seen_line: set[int] = set()
    bus_at = {b.id: b for b in buses}
    for k, entry in enumerate(_require(raw, "lines", list, "case")):
        loc = f"lines[{k}]"
        if not isinstance(entry, Mapping):
            raise CaseError("line entry must be an object", loc)
        lid = int(_require(entry, "id", int, loc))
        if lid in seen_line:
            raise CaseError(f"duplicate line id {lid}", loc)
        seen_line.add(lid)
        from_bus = int(_require(entry, "from", int, loc))
        to_bus = int(_require(entry, "to", int, loc))
        for key, bid in (("from", from_bus), ("to", to_bus)):
            if bid not in seen_bus:
                raise CaseError(f"line {lid} references unknown bus {bid}", f"{loc}.{key}")
        if "path" in entry:
            path_raw = entry["path"]
            if not isinstance(path_raw, list) or not all(
                isinstance(p, (list, tuple)) and len(p) == 2 for p in path_raw
            ):
                raise CaseError("path must be a list of [lon, lat] pairs", f"{loc}.path")
            path = tuple((float(p[0]), float(p[1])) for p in path_raw)
        else:
            a, b = bus_at[from_bus], bus_at[to_bus]
            path = ((a.lon, a.lat), (b.lon, b.lat))
        lines.append(
            Line(
                id=lid,
                from_bus=from_bus,
                to_bus=to_bus,
                x=_as_float(entry, "x", loc),
                f_max=_as_float(entry, "f_max", loc),
                delta_min=_as_float(entry, "delta_min", loc, default=-DEFAULT_ANGLE_LIMIT),
                delta_max=_as_float(entry, "delta_max", loc, default=DEFAULT_ANGLE_LIMIT),
                path=path,
            )
        )

    return Network(
        buses=tuple(buses),
        generators=tuple(generators),
        lines=tuple(lines),
        base_mva=base_mva,
    )


def serialize_case(net: Network) -> dict:
    """Inverse of parse_case: ``parse_case(serialize_case(net)) == net``."""
    return {
        "base_mva": net.base_mva,
        "buses": [
            {"id": b.id, "name": b.name, "lon": b.lon, "lat": b.lat} for b in net.buses
        ],
        "generators": [
            {"id": g.id, "bus": g.bus, "g_min": g.g_min, "g_max": g.g_max}
            for g in net.generators
        ],
        "lines": [
            {
                "id": l.id,
                "from": l.from_bus,
                "to": l.to_bus,
                "x": l.x,
                "f_max": l.f_max,
                "delta_min": l.delta_min,
                "delta_max": l.delta_max,
                "path": [list(p) for p in l.path],
            }
            for l in net.lines
        ],
    }


def validate(net: Network) -> list[Violation]:
    """Check all type invariants; returns one Violation per broken rule.

    Violations are data, not failures: an empty list means the network is
    well formed.
    """
    out: list[Violation] = []
    seen: set[int] = set()
    for b in net.buses:
        ent = f"bus {b.id}"
        if b.id in seen:
            out.append(Violation(ent, "unique_bus_id"))
        seen.add(b.id)
        if not (math.isfinite(b.lon) and math.isfinite(b.lat)):
            out.append(Violation(ent, "finite_coordinates", f"({b.lon}, {b.lat})"))
    bus_ids = {b.id for b in net.buses}

    seen = set()
    for g in net.generators:
        ent = f"generator {g.id}"
        if g.id in seen:
            out.append(Violation(ent, "unique_generator_id"))
        seen.add(g.id)
        if g.bus not in bus_ids:
            out.append(Violation(ent, "generator_bus_exists", f"bus {g.bus}"))
        if not 0.0 <= g.g_min <= g.g_max:
            out.append(Violation(ent, "generator_limits_ordered", f"[{g.g_min}, {g.g_max}]"))

    seen = set()
    for l in net.lines:
        ent = f"line {l.id}"
        if l.id in seen:
            out.append(Violation(ent, "unique_line_id"))
        seen.add(l.id)
        for key, bid in (("from", l.from_bus), ("to", l.to_bus)):
            if bid not in bus_ids:
                out.append(Violation(ent, "line_bus_exists", f"{key} bus {bid}"))
        if l.from_bus == l.to_bus:
            out.append(Violation(ent, "distinct_terminals", f"bus {l.from_bus}"))
        if not l.f_max > 0:
            out.append(Violation(ent, "positive_flow_limit", f"f_max={l.f_max}"))
        if l.x == 0 or not math.isfinite(l.x):
            out.append(Violation(ent, "nonzero_reactance", f"x={l.x}"))
        if not l.delta_min < 0 < l.delta_max:
            out.append(
                Violation(ent, "angle_limits_straddle_zero", f"[{l.delta_min}, {l.delta_max}]")
            )
        if any(not (math.isfinite(p[0]) and math.isfinite(p[1])) for p in l.path):
            out.append(Violation(ent, "finite_path"))
    return out


def compute_big_m(net: Network) -> tuple[float, float]:
    """Constants that disable angle coupling on de-energized lines.

    Returns ``(m_lo, m_hi)`` where ``m_hi`` is the sum of every line's upper
    angle-difference limit and ``m_lo`` the sum of every lower limit, so any
    angle spread reachable through energized lines fits inside them.
    """
    m_lo = sum(l.delta_min for l in net.lines)
    m_hi = sum(l.delta_max for l in net.lines)
    return float(m_lo), float(m_hi)


def incidence(net: Network) -> Incidence:
    """Bus-indexed maps: departing lines, arriving lines, attached generators."""
    lines_from: dict[int, list[int]] = {b.id: [] for b in net.buses}
    lines_to: dict[int, list[int]] = {b.id: [] for b in net.buses}
    gens: dict[int, list[int]] = {b.id: [] for b in net.buses}
    for l in net.lines:
        lines_from[l.from_bus].append(l.id)
        lines_to[l.to_bus].append(l.id)
    for g in net.generators:
        gens[g.bus].append(g.id)
    return Incidence(
        lines_from={k: tuple(v) for k, v in lines_from.items()},
        lines_to={k: tuple(v) for k, v in lines_to.items()},
        generators={k: tuple(v) for k, v in gens.items()},
    )
