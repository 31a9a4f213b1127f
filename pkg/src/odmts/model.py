"""Shared data model: locations, the multimodal arc multigraph, demand, and cost weights.

Times are stored in seconds and distances in miles everywhere; the cost
formulas convert to hours internally because all vehicle rates are per hour.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping


class NetworkBuildError(ValueError):
    """Raised when the arc set cannot be constructed from the given inputs."""


class Mode(Enum):
    SHUTTLE = "shuttle"
    BUS = "bus"
    RAIL = "rail"


@dataclass(frozen=True)
class Location:
    id: str
    lat: float
    lon: float
    is_hub: bool = False
    is_rail_station: bool = False
    rail_lines: tuple[str, ...] = ()

    def __post_init__(self):
        if self.is_rail_station and not self.is_hub:
            raise ValueError(f"rail station {self.id!r} must be a hub")
        if self.rail_lines and not self.is_rail_station:
            raise ValueError(f"location {self.id!r} has rail lines but is not a rail station")


@dataclass(frozen=True)
class Arc:
    """One directed connection. Bus and rail arcs carry a frequency
    (vehicles per horizon); parallel arcs differing in frequency are distinct."""

    id: str
    origin: str
    dest: str
    mode: Mode
    travel_time_s: float
    distance_mi: float
    frequency: int | None = None

    def __post_init__(self):
        if self.origin == self.dest:
            raise ValueError(f"arc {self.id!r} is a self-loop")
        if self.travel_time_s <= 0:
            raise ValueError(f"arc {self.id!r} has non-positive travel time")
        if self.distance_mi < 0:
            raise ValueError(f"arc {self.id!r} has negative distance")
        if (self.frequency is None) == (self.mode is not Mode.SHUTTLE):
            raise ValueError(f"arc {self.id!r}: frequency required iff mode is bus/rail")
        if self.frequency is not None and self.frequency <= 0:
            raise ValueError(f"arc {self.id!r} has non-positive frequency")


@dataclass(frozen=True)
class Trip:
    id: str
    origin: str
    dest: str
    passengers: int
    request_time_s: float = 0.0

    def __post_init__(self):
        if self.passengers < 1:
            raise ValueError(f"trip {self.id!r} has no passengers")
        if self.origin == self.dest:
            raise ValueError(f"trip {self.id!r} has identical origin and destination")


def alpha_from_value_of_time(dollars_per_hour: float) -> float:
    """Convert a value-of-time rate to the duration weight: alpha/(1-alpha) = v."""
    if dollars_per_hour < 0:
        raise ValueError("value of time must be nonnegative")
    return dollars_per_hour / (1.0 + dollars_per_hour)


# Time valued at the US federal minimum wage by default.
DEFAULT_VALUE_OF_TIME = 7.25


@dataclass(frozen=True)
class DesignParameters:
    """Weights and horizon settings for the network design problem."""

    alpha: float = alpha_from_value_of_time(DEFAULT_VALUE_OF_TIME)
    horizon_s: float = 4 * 3600.0
    extended_horizon_s: float = 6 * 3600.0
    transfer_limit: int = 4
    bus_cost_per_hour: float = 72.15
    rail_cost_per_hour: float | None = None  # reporting only, never budgeted
    shuttle_cost_per_hour: float = 27.31
    shuttle_cost_per_mile_estimate: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.transfer_limit < 1:
            raise ValueError("transfer limit must be at least 1")
        if self.extended_horizon_s < self.horizon_s:
            raise ValueError("extended horizon must cover the horizon")


class TravelMatrix:
    """Door-to-door road travel times (s) and distances (mi) between locations."""

    def __init__(self, entries: Mapping[tuple[str, str], tuple[float, float]]):
        self._entries = dict(entries)

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return pair in self._entries or pair[0] == pair[1]

    def seconds(self, origin: str, dest: str) -> float:
        if origin == dest:
            return 0.0
        try:
            return self._entries[(origin, dest)][0]
        except KeyError:
            raise NetworkBuildError(f"no travel time for pair ({origin!r}, {dest!r})") from None

    def miles(self, origin: str, dest: str) -> float:
        if origin == dest:
            return 0.0
        try:
            return self._entries[(origin, dest)][1]
        except KeyError:
            raise NetworkBuildError(f"no distance for pair ({origin!r}, {dest!r})") from None

    def items(self):
        return self._entries.items()


@dataclass
class NetworkModel:
    """Directed multigraph of locations and mode/frequency arcs.

    Immutable after construction; bus arcs are the only design decisions,
    shuttle and rail arcs are always open.
    """

    locations: dict[str, Location]
    arcs: dict[str, Arc]
    bus_frequencies: tuple[int, ...]
    rail_frequency: int
    _hub_arc_ids: tuple[str, ...] = field(init=False, repr=False)

    def __post_init__(self):
        for arc in self.arcs.values():
            for end in (arc.origin, arc.dest):
                if end not in self.locations:
                    raise NetworkBuildError(f"arc {arc.id!r} references unknown location {end!r}")
            if arc.mode in (Mode.BUS, Mode.RAIL):
                if not (self.locations[arc.origin].is_hub and self.locations[arc.dest].is_hub):
                    raise NetworkBuildError(f"{arc.mode.value} arc {arc.id!r} must connect hubs")
            if arc.mode is Mode.BUS and arc.frequency not in self.bus_frequencies:
                raise NetworkBuildError(f"bus arc {arc.id!r} uses frequency outside F^bus")
        hubs = set(self.hub_ids())
        self._hub_arc_ids = tuple(
            a.id for a in self.arcs.values() if a.origin in hubs and a.dest in hubs
        )

    def hub_ids(self) -> list[str]:
        return sorted(l.id for l in self.locations.values() if l.is_hub)

    def rail_station_ids(self) -> list[str]:
        return sorted(l.id for l in self.locations.values() if l.is_rail_station)

    def bus_only_hub_ids(self) -> list[str]:
        return sorted(
            l.id for l in self.locations.values() if l.is_hub and not l.is_rail_station
        )

    def bus_arcs(self) -> list[Arc]:
        return sorted((a for a in self.arcs.values() if a.mode is Mode.BUS), key=lambda a: a.id)

    def hub_arcs(self) -> list[Arc]:
        """All arcs with both endpoints in the hub set, any mode."""
        return [self.arcs[i] for i in sorted(self._hub_arc_ids)]

    def shuttle_arc(self, origin: str, dest: str) -> Arc | None:
        return self.arcs.get(shuttle_arc_id(origin, dest))

    def rail_lines(self) -> dict[str, list[str]]:
        """Stations per line, in the order the locations were supplied."""
        lines: dict[str, list[str]] = {}
        for loc in self.locations.values():
            for line in loc.rail_lines:
                lines.setdefault(line, []).append(loc.id)
        return lines


def shuttle_arc_id(origin: str, dest: str) -> str:
    return f"shuttle:{origin}>{dest}"


def bus_arc_id(origin: str, dest: str, frequency: int) -> str:
    return f"bus:{origin}>{dest}@{frequency}"


def rail_arc_id(origin: str, dest: str, frequency: int) -> str:
    return f"rail:{origin}>{dest}@{frequency}"


def nearest_rail_stations(
    hub: str, stations: Iterable[str], travel: TravelMatrix, count: int = 3
) -> list[str]:
    """The `count` rail stations closest to `hub` by road travel time, ties by id."""
    ranked = sorted(set(stations), key=lambda s: (travel.seconds(hub, s), s))
    return ranked[:count]


def build_network(
    locations: Iterable[Location],
    trips: Iterable[Trip],
    travel: TravelMatrix,
    bus_frequencies: Iterable[int],
    rail_frequency: int = 24,
) -> NetworkModel:
    """Construct the design multigraph.

    Adds (a) rail arcs at the fixed frequency between consecutive stations of
    each line, (b) per-trip shuttle arcs origin->hub, hub->destination and the
    direct origin->destination arc, and (c) bus arcs at every frequency between
    every ordered pair of bus-only hubs and between each bus-only hub and its
    three nearest rail stations.
    """
    loc_list = list(locations)
    loc_map = {l.id: l for l in loc_list}
    if len(loc_map) != len(loc_list):
        raise NetworkBuildError("duplicate location ids")
    hubs = [l.id for l in loc_list if l.is_hub]
    if not hubs:
        raise NetworkBuildError("hub set is empty")
    bus_freqs = tuple(sorted(set(int(f) for f in bus_frequencies)))

    arcs: dict[str, Arc] = {}

    def add(arc: Arc):
        arcs.setdefault(arc.id, arc)

    # Rail: consecutive stations along each line, both directions.
    lines: dict[str, list[str]] = {}
    for loc in loc_list:
        for line in loc.rail_lines:
            lines.setdefault(line, []).append(loc.id)
    for line, stations in lines.items():
        if len(stations) < 2:
            raise NetworkBuildError(f"rail line {line!r} has fewer than two stations")
        for a, b in zip(stations, stations[1:]):
            for o, d in ((a, b), (b, a)):
                add(Arc(rail_arc_id(o, d, rail_frequency), o, d, Mode.RAIL,
                        travel.seconds(o, d), travel.miles(o, d), rail_frequency))

    # Shuttle: per trip, access to every hub, egress from every hub, and direct.
    for trip in trips:
        for h in hubs:
            if h != trip.origin:
                add(Arc(shuttle_arc_id(trip.origin, h), trip.origin, h, Mode.SHUTTLE,
                        travel.seconds(trip.origin, h), travel.miles(trip.origin, h)))
            if h != trip.dest:
                add(Arc(shuttle_arc_id(h, trip.dest), h, trip.dest, Mode.SHUTTLE,
                        travel.seconds(h, trip.dest), travel.miles(h, trip.dest)))
        add(Arc(shuttle_arc_id(trip.origin, trip.dest), trip.origin, trip.dest, Mode.SHUTTLE,
                travel.seconds(trip.origin, trip.dest), travel.miles(trip.origin, trip.dest)))

    # Bus: candidate connections between bus-only hubs and to nearby rail.
    bus_only = sorted(h for h in hubs if not loc_map[h].is_rail_station)
    stations = sorted(h for h in hubs if loc_map[h].is_rail_station)
    pairs: set[tuple[str, str]] = set()
    for a in bus_only:
        for b in bus_only:
            if a != b:
                pairs.add((a, b))
        for s in nearest_rail_stations(a, stations, travel):
            pairs.add((a, s))
            pairs.add((s, a))
    for o, d in sorted(pairs):
        for f in bus_freqs:
            add(Arc(bus_arc_id(o, d, f), o, d, Mode.BUS,
                    travel.seconds(o, d), travel.miles(o, d), f))

    return NetworkModel(loc_map, arcs, bus_freqs, rail_frequency)


def arc_fixed_cost(arc: Arc, params: DesignParameters) -> float:
    """Design cost of opening a bus arc: (1-alpha) * tau_hours * f * c_bus."""
    if arc.mode is not Mode.BUS:
        raise ValueError(f"fixed cost is defined for bus arcs only, got {arc.mode.value}")
    tau_h = arc.travel_time_s / 3600.0
    return (1.0 - params.alpha) * tau_h * arc.frequency * params.bus_cost_per_hour


def arc_trip_cost(arc: Arc, trip: Trip, params: DesignParameters) -> float:
    """Per-trip cost of traversing an arc.

    Shuttle arcs weigh miles against ride time; bus/rail arcs contribute ride
    time plus the expected wait of half a headway, with no variable dollar cost.
    """
    tau_h = arc.travel_time_s / 3600.0
    if arc.mode is Mode.SHUTTLE:
        dollars = arc.distance_mi * params.shuttle_cost_per_mile_estimate
        return trip.passengers * ((1.0 - params.alpha) * dollars + params.alpha * tau_h)
    horizon_h = params.horizon_s / 3600.0
    expected_wait_h = horizon_h / (2.0 * arc.frequency)
    return trip.passengers * params.alpha * (tau_h + expected_wait_h)


def expected_wait_s(arc: Arc, params: DesignParameters) -> float:
    """Design-time expected wait for a fixed-route arc: half a headway, in seconds."""
    if arc.mode is Mode.SHUTTLE:
        return 0.0
    return params.horizon_s / (2.0 * arc.frequency)


_FEET_PER_DEGREE = 364_567.2  # latitude degrees to feet, spherical earth


def straight_line_feet(a: Location, b: Location) -> float:
    dlat = (a.lat - b.lat) * _FEET_PER_DEGREE
    dlon = (a.lon - b.lon) * _FEET_PER_DEGREE * math.cos(math.radians((a.lat + b.lat) / 2))
    return math.hypot(dlat, dlon)


def cluster_stops(
    locations: Iterable[Location],
    trips: Iterable[Trip],
    radius_ft: float = 1500.0,
) -> tuple[dict[str, str], list[Trip]]:
    """Merge stops lying within `radius_ft` of a higher-demand stop.

    Greedy by descending demand; hubs are never merged away. Returns the
    stop->representative map and the rewritten trips. Trips that collapse onto
    a single stop are dropped.
    """
    loc_list = list(locations)
    trip_list = list(trips)
    demand: dict[str, int] = {l.id: 0 for l in loc_list}
    for t in trip_list:
        demand[t.origin] = demand.get(t.origin, 0) + t.passengers
        demand[t.dest] = demand.get(t.dest, 0) + t.passengers

    order = sorted(loc_list, key=lambda l: (not l.is_hub, -demand.get(l.id, 0), l.id))
    assignment: dict[str, str] = {}
    centers: list[Location] = []
    for loc in order:
        if loc.is_hub:
            assignment[loc.id] = loc.id
            centers.append(loc)
            continue
        home = None
        for c in centers:
            if straight_line_feet(loc, c) <= radius_ft:
                home = c.id
                break
        if home is None:
            centers.append(loc)
            home = loc.id
        assignment[loc.id] = home

    rewritten = []
    dropped = 0
    for t in trip_list:
        o, d = assignment.get(t.origin, t.origin), assignment.get(t.dest, t.dest)
        if o == d:
            dropped += 1
            continue
        rewritten.append(Trip(t.id, o, d, t.passengers, t.request_time_s))
    if dropped:
        logging.getLogger(__name__).warning(
            "clustering collapsed %d trip(s) onto a single stop; dropped", dropped
        )
    return assignment, rewritten
