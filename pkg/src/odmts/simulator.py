"""Discrete-event evaluation of a design: riders, fixed vehicles, and shuttles.

Passengers follow their design paths leg by leg. Fixed-route legs queue at the
stop and board the first departure with a free seat (FIFO); shuttle legs post
requests to the epoch dispatcher. The run covers the extended horizon and the
report is truncated to the base horizon. The event loop is single threaded and
fully deterministic: ties break on (time, event-kind rank, entity id).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .dispatch import DispatchConfig, Dispatcher, OnboardRider, ShuttleView
from .model import DesignParameters, Mode, NetworkModel, TravelMatrix, Trip
from .rideshare import ShuttleRequest

# Event ranks: lower fires first at equal times.
_RANK_TRIP = 0
_RANK_MOVE = 1  # shuttle action completions and fixed-route alightings
_RANK_DEPART = 2
_RANK_EPOCH = 3


@dataclass(frozen=True)
class VehicleLine:
    """A repeating vehicle rotation: bus cycle or rail direction."""

    id: str
    mode: Mode
    arc_ids: tuple[str, ...]
    departures_per_horizon: int  # line frequency over the base horizon
    headway_s: float
    duration_s: float  # time to traverse the arc sequence once
    vehicle_count: int
    offsets_s: tuple[float, ...]  # departure offset of each arc in the rotation
    seats: int


@dataclass(frozen=True)
class SimulationConfig:
    shuttle_seats: int = 4
    bus_seats: int = 57
    rail_seats: int = 576
    rail_seats_by_line: tuple[tuple[str, int], ...] = (("green", 192),)
    epoch_s: float = 30.0
    detour_factor: float = 1.5
    base_penalty_s: float = 420.0
    improvement_iterations: int = 200
    overwhelm_window_s: float = 1800.0
    overwhelm_mean_wait_s: float = 900.0
    overwhelm_max_age_s: float = 1800.0

    def rail_seats_for(self, line_name: str) -> int:
        for name, seats in self.rail_seats_by_line:
            if name == line_name:
                return seats
        return self.rail_seats


def form_bus_lines(
    network: NetworkModel,
    open_arcs: dict[str, int],
    horizon_s: float,
    seats: int,
) -> list[VehicleLine]:
    """Group opened bus arcs into cyclic lines.

    Each arc is expanded into one unit departure per vehicle-per-horizon and
    the balanced unit multigraph is decomposed into simple cycles; identical
    cycles merge into one line whose multiplicity is its frequency. Every line
    gets the minimum vehicle count that sustains its headway.
    """
    if not open_arcs:
        return []
    units: list[str] = []  # arc id per unit departure
    out: dict[str, list[int]] = {}
    for arc_id in sorted(open_arcs):
        arc = network.arcs[arc_id]
        for _ in range(open_arcs[arc_id]):
            out.setdefault(arc.origin, []).append(len(units))
            units.append(arc_id)
    for v in out:
        out[v].sort(reverse=True)  # pop() yields the smallest unit index

    cycles: dict[tuple[str, ...], int] = {}
    used = [False] * len(units)
    for u0 in range(len(units)):
        if used[u0]:
            continue
        circuit: list[int] = []
        stack = [network.arcs[units[u0]].origin]
        edge_stack: list[int] = []
        while stack:
            v = stack[-1]
            while out.get(v) and used[out[v][-1]]:
                out[v].pop()
            if out.get(v):
                u = out[v].pop()
                used[u] = True
                edge_stack.append(u)
                stack.append(network.arcs[units[u]].dest)
            else:
                stack.pop()
                if edge_stack and stack:
                    circuit.append(edge_stack.pop())
        circuit.reverse()
        # Split the Eulerian circuit into simple cycles at vertex revisits.
        path: list[int] = []
        pos: dict[str, int] = {}
        v0 = network.arcs[units[circuit[0]]].origin
        pos[v0] = 0
        for u in circuit:
            path.append(u)
            head = network.arcs[units[u]].dest
            if head in pos:
                start = pos[head]
                cycle = tuple(units[i] for i in path[start:])
                cycles[_canonical(cycle)] = cycles.get(_canonical(cycle), 0) + 1
                for i in path[start:]:
                    tail = network.arcs[units[i]].origin
                    pos.pop(tail, None)
                del path[start:]
                pos[head] = len(path)
            else:
                pos[head] = len(path)

    lines = []
    for serial, (cycle, multiplicity) in enumerate(sorted(cycles.items())):
        duration = sum(network.arcs[a].travel_time_s for a in cycle)
        headway = horizon_s / multiplicity
        offsets = []
        t = 0.0
        for a in cycle:
            offsets.append(t)
            t += network.arcs[a].travel_time_s
        lines.append(VehicleLine(
            id=f"bus-line-{serial}",
            mode=Mode.BUS,
            arc_ids=cycle,
            departures_per_horizon=multiplicity,
            headway_s=headway,
            duration_s=duration,
            vehicle_count=max(1, math.ceil(duration / headway - 1e-9)),
            offsets_s=tuple(offsets),
            seats=seats,
        ))
    return lines


def _canonical(cycle: tuple[str, ...]) -> tuple[str, ...]:
    k = cycle.index(min(cycle))
    return cycle[k:] + cycle[:k]


def form_rail_lines(network: NetworkModel, horizon_s: float,
                    cfg: SimulationConfig) -> list[VehicleLine]:
    """One line per rail line and direction, at the network's fixed frequency."""
    lines = []
    freq = network.rail_frequency
    headway = horizon_s / freq
    for name, stations in sorted(network.rail_lines().items()):
        seats = cfg.rail_seats_for(name)
        for direction, seq in ((">", stations), ("<", stations[::-1])):
            arc_ids = []
            offsets = []
            t = 0.0
            for a, b in zip(seq, seq[1:]):
                arc = _rail_arc(network, a, b)
                arc_ids.append(arc.id)
                offsets.append(t)
                t += arc.travel_time_s
            lines.append(VehicleLine(
                id=f"rail-{name}{direction}",
                mode=Mode.RAIL,
                arc_ids=tuple(arc_ids),
                departures_per_horizon=freq,
                headway_s=headway,
                duration_s=t,
                vehicle_count=max(1, math.ceil(t / headway - 1e-9)),
                offsets_s=tuple(offsets),
                seats=seats,
            ))
    return lines


def _rail_arc(network: NetworkModel, a: str, b: str):
    for arc in network.arcs.values():
        if arc.mode is Mode.RAIL and arc.origin == a and arc.dest == b:
            return arc
    raise KeyError(f"no rail arc {a}->{b}")


@dataclass
class _Rider:
    id: str
    trip_id: str
    start_s: float
    legs: list[str]  # arc ids
    leg_no: int = 0
    records: list[dict] = field(default_factory=list)
    done_s: float | None = None

    def wait_s(self) -> float:
        return sum(r["board_s"] - r["ready_s"] for r in self.records)

    def travel_s(self) -> float:
        return sum(r["alight_s"] - r["board_s"] for r in self.records)

    def modes(self) -> set[str]:
        return {r["mode"] for r in self.records}


@dataclass
class _SimShuttle:
    id: int
    loc: str
    free_at: float = 0.0
    queue: list = field(default_factory=list)
    in_flight: object | None = None
    in_flight_eta: float = 0.0
    depart_loc: str = ""
    depart_t: float = 0.0
    onboard: dict[str, tuple[str, str, float]] = field(default_factory=dict)

    def active(self) -> bool:
        return self.in_flight is not None or bool(self.queue) or bool(self.onboard)


@dataclass
class SimulationReport:
    meta: dict
    passengers: dict
    durations: dict
    wait_bins: dict
    capacity: dict
    shuttle: dict
    overwhelmed: bool
    overwhelm_reasons: list[str]
    rider_rows: list[dict]
    occupancy_rows: list[dict]
    road_usage: dict[tuple[str, str, str], int]  # (origin, dest, mode) -> traversals

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "passengers": self.passengers,
            "durations": self.durations,
            "wait_bins": self.wait_bins,
            "capacity": self.capacity,
            "shuttle": self.shuttle,
            "overwhelmed": self.overwhelmed,
            "overwhelm_reasons": self.overwhelm_reasons,
        }


def seed_shuttles(
    fleet_size: int, hubs: list[str], weights: dict[str, float]
) -> dict[str, int]:
    """Largest-remainder apportionment of the fleet over hubs by demand weight."""
    hubs = sorted(hubs)
    total = sum(max(0.0, weights.get(h, 0.0)) for h in hubs)
    if total <= 0:
        weights = {h: 1.0 for h in hubs}
        total = float(len(hubs))
    shares = {h: fleet_size * max(0.0, weights.get(h, 0.0)) / total for h in hubs}
    counts = {h: int(math.floor(shares[h])) for h in hubs}
    remainder = fleet_size - sum(counts.values())
    by_frac = sorted(hubs, key=lambda h: (-(shares[h] - counts[h]), h))
    for h in by_frac[:remainder]:
        counts[h] += 1
    return counts


class Simulation:
    def __init__(
        self,
        network: NetworkModel,
        paths: dict[str, tuple[str, ...]],
        trips: list[Trip],
        fleet_size: int,
        travel: TravelMatrix,
        params: DesignParameters,
        open_bus_arcs: dict[str, int],
        cfg: SimulationConfig | None = None,
        seed: int = 0,
    ):
        self.network = network
        self.paths = paths
        self.trips = sorted(trips, key=lambda t: t.id)
        self.fleet_size = fleet_size
        self.travel = travel
        self.params = params
        self.cfg = cfg or SimulationConfig()
        self.seed = seed
        self.horizon = params.horizon_s
        self.end = params.extended_horizon_s

        self.bus_lines = form_bus_lines(network, open_bus_arcs, self.horizon,
                                        self.cfg.bus_seats)
        self.rail_lines = form_rail_lines(network, self.horizon, self.cfg)
        self.dispatcher = Dispatcher(travel, DispatchConfig(
            epoch_s=self.cfg.epoch_s,
            capacity=self.cfg.shuttle_seats,
            detour_factor=self.cfg.detour_factor,
            base_penalty_s=self.cfg.base_penalty_s,
            improvement_iterations=self.cfg.improvement_iterations,
        ))

        self._heap: list = []
        self._seq = 0
        self._riders: dict[str, _Rider] = {}
        self._waiting: dict[str, list[tuple[float, str]]] = {}  # arc id -> (ready, rider)
        self._request_buffer: list[ShuttleRequest] = []
        self._request_rider: dict[str, str] = {}
        self._request_ready: dict[str, float] = {}
        self._shuttles: list[_SimShuttle] = []
        self._occupancy_rows: list[dict] = []
        self._road: dict[tuple[str, str, str], int] = {}
        self._miles_by_occ: dict[int, float] = {}
        self._shuttle_waits: list[tuple[float, float]] = []  # (ready, wait)
        self._active_series: list[tuple[float, int]] = []
        self._max_pending_age_s = 0.0
        self._violations = 0
        self._max_occ = {"bus": 0, "rail": 0, "shuttle": 0}

    # -- event plumbing -----------------------------------------------------

    def _push(self, t: float, rank: int, entity: str, kind: str, payload):
        self._seq += 1
        heapq.heappush(self._heap, (t, rank, entity, self._seq, kind, payload))

    # -- setup --------------------------------------------------------------

    def _schedule_fixed(self):
        for line in self.bus_lines + self.rail_lines:
            run = 0
            while True:
                start = run * line.headway_s
                if start > self.end:
                    break
                for arc_no, arc_id in enumerate(line.arc_ids):
                    t = start + line.offsets_s[arc_no]
                    if t <= self.end:
                        self._push(t, _RANK_DEPART, f"{line.id}#{arc_no}", "depart",
                                   (line, run, arc_no))
                run += 1

    def _seed_fleet(self):
        weights: dict[str, float] = {}
        for trip in self.trips:
            for arc_id in self.paths[trip.id]:
                arc = self.network.arcs[arc_id]
                if arc.mode is not Mode.SHUTTLE:
                    continue
                if self.network.locations[arc.dest].is_hub:
                    weights[arc.dest] = weights.get(arc.dest, 0.0) + trip.passengers
                elif self.network.locations[arc.origin].is_hub:
                    weights[arc.origin] = weights.get(arc.origin, 0.0) + trip.passengers
        counts = seed_shuttles(self.fleet_size, self.network.hub_ids(), weights)
        sid = 0
        for hub in sorted(counts):
            for _ in range(counts[hub]):
                self._shuttles.append(_SimShuttle(sid, hub))
                sid += 1

    # -- passenger progression ----------------------------------------------

    def _start_leg(self, rider: _Rider, now: float):
        arc = self.network.arcs[rider.legs[rider.leg_no]]
        if arc.mode is Mode.SHUTTLE:
            req_id = f"{rider.id}.{rider.leg_no}"
            self._request_buffer.append(ShuttleRequest(
                req_id, rider.trip_id, arc.origin, arc.dest, now))
            self._request_rider[req_id] = rider.id
            self._request_ready[req_id] = now
        else:
            self._waiting.setdefault(arc.id, []).append((now, rider.id))
            self._waiting[arc.id].sort()

    def _advance_rider(self, rider: _Rider, now: float):
        rider.leg_no += 1
        if rider.leg_no >= len(rider.legs):
            rider.done_s = now
        else:
            self._start_leg(rider, now)

    # -- event handlers -----------------------------------------------------

    def _on_trip(self, rider_id: str, now: float):
        self._start_leg(self._riders[rider_id], now)

    def _on_depart(self, line: VehicleLine, run: int, arc_no: int, now: float):
        arc = self.network.arcs[line.arc_ids[arc_no]]
        queue = self._waiting.get(arc.id, [])
        boarded = []
        while queue and len(boarded) < line.seats and queue[0][0] <= now + 1e-9:
            ready, rider_id = queue.pop(0)
            boarded.append((ready, rider_id))
        vehicle = f"{line.id}/{run % line.vehicle_count}"
        mode = line.mode.value
        occ = len(boarded)
        self._max_occ[mode] = max(self._max_occ[mode], occ)
        if occ > line.seats:
            self._violations += 1
        if now <= self.horizon:
            self._occupancy_rows.append({
                "time_s": now, "mode": mode, "vehicle": vehicle,
                "occupancy": occ, "seats": line.seats,
            })
            self._road[(arc.origin, arc.dest, mode)] = \
                self._road.get((arc.origin, arc.dest, mode), 0) + 1
        for ready, rider_id in boarded:
            rider = self._riders[rider_id]
            rider.records.append({
                "mode": mode, "ready_s": ready, "board_s": now,
                "alight_s": now + arc.travel_time_s, "vehicle": vehicle,
            })
            self._push(now + arc.travel_time_s, _RANK_MOVE, rider_id, "alight", rider_id)

    def _on_alight(self, rider_id: str, now: float):
        self._advance_rider(self._riders[rider_id], now)

    def _on_epoch(self, now: float):
        views = []
        for s in self._shuttles:
            aboard_at_anchor = dict(s.onboard)
            if s.in_flight is not None:
                anchor_loc, anchor_t = s.in_flight.location, s.in_flight_eta
                # The in-flight action completes at the anchor: its rider is
                # then aboard (pickup) or gone (drop-off).
                if s.in_flight.kind == "pickup":
                    rider = self._riders[self._request_rider[s.in_flight.request_id]]
                    arc = self.network.arcs[rider.legs[rider.leg_no]]
                    aboard_at_anchor[s.in_flight.request_id] = (
                        arc.origin, arc.dest, s.in_flight_eta)
                else:
                    aboard_at_anchor.pop(s.in_flight.request_id, None)
            else:
                anchor_loc, anchor_t = s.loc, max(now, s.free_at)
            onboard = tuple(
                OnboardRider(rid, o, d, t0)
                for rid, (o, d, t0) in sorted(aboard_at_anchor.items())
            )
            views.append(ShuttleView(s.id, anchor_loc, anchor_t,
                                     committed=tuple(s.queue), onboard=onboard))
        new = sorted(self._request_buffer, key=lambda r: (r.request_time_s, r.id))
        self._request_buffer = []
        result = self.dispatcher.run_epoch(now, views, new)
        for s in self._shuttles:
            if s.id in result.plans:
                s.queue = list(result.plans[s.id])
            self._advance_shuttle(s, now)
        age = self.dispatcher.max_pending_age_epochs() * self.cfg.epoch_s
        self._max_pending_age_s = max(self._max_pending_age_s, age)
        if now <= self.horizon:
            self._active_series.append((now, sum(1 for s in self._shuttles if s.active())))

    def _advance_shuttle(self, s: _SimShuttle, now: float):
        if s.in_flight is not None or not s.queue:
            return
        action = s.queue.pop(0)
        depart = max(now, s.free_at)
        eta = depart + self.travel.seconds(s.loc, action.location)
        s.in_flight = action
        s.in_flight_eta = eta
        s.depart_loc = s.loc
        s.depart_t = depart
        self._push(eta, _RANK_MOVE, f"s{s.id}", "shuttle", s.id)

    def _on_shuttle(self, sid: int, now: float):
        s = self._shuttles[sid]
        action = s.in_flight
        occ = len(s.onboard)
        if s.depart_loc != action.location and s.depart_t <= self.horizon:
            miles = self.travel.miles(s.depart_loc, action.location)
            self._miles_by_occ[occ] = self._miles_by_occ.get(occ, 0.0) + miles
            self._road[(s.depart_loc, action.location, "shuttle")] = \
                self._road.get((s.depart_loc, action.location, "shuttle"), 0) + 1
        s.loc = action.location
        s.free_at = now
        s.in_flight = None
        rider_id = self._request_rider[action.request_id]
        rider = self._riders[rider_id]
        if action.kind == "pickup":
            ready = self._request_ready[action.request_id]
            arc = self.network.arcs[rider.legs[rider.leg_no]]
            s.onboard[action.request_id] = (arc.origin, arc.dest, now)
            # Per-leg record starts; alighting filled in at drop-off.
            rider.records.append({
                "mode": "shuttle", "ready_s": ready, "board_s": now,
                "alight_s": None, "vehicle": f"shuttle/{sid}",
            })
            if ready <= self.horizon:
                self._shuttle_waits.append((ready, now - ready))
            occ_now = len(s.onboard)
            self._max_occ["shuttle"] = max(self._max_occ["shuttle"], occ_now)
            if occ_now > self.cfg.shuttle_seats:
                self._violations += 1
            if now <= self.horizon:
                self._occupancy_rows.append({
                    "time_s": now, "mode": "shuttle", "vehicle": f"shuttle/{sid}",
                    "occupancy": occ_now, "seats": self.cfg.shuttle_seats,
                })
        else:
            s.onboard.pop(action.request_id, None)
            for rec in reversed(rider.records):
                if rec["mode"] == "shuttle" and rec["alight_s"] is None:
                    rec["alight_s"] = now
                    break
            self._advance_rider(rider, now)
        self._advance_shuttle(s, now)

    # -- run ----------------------------------------------------------------

    def run(self) -> SimulationReport:
        for trip in self.trips:
            legs = list(self.paths[trip.id])
            for k in range(trip.passengers):
                rid = f"{trip.id}.{k}"
                self._riders[rid] = _Rider(rid, trip.id, trip.request_time_s, legs)
                self._push(trip.request_time_s, _RANK_TRIP, rid, "trip", rid)
        self._schedule_fixed()
        self._seed_fleet()
        epochs = int(math.floor(self.end / self.cfg.epoch_s)) + 1
        for k in range(epochs):
            t = k * self.cfg.epoch_s
            if t <= self.end:
                self._push(t, _RANK_EPOCH, "epoch", "epoch", k)

        while self._heap:
            t, _rank, _ent, _seq, kind, payload = heapq.heappop(self._heap)
            if t > self.end + 1e-9:
                break
            if kind == "trip":
                self._on_trip(payload, t)
            elif kind == "depart":
                line, run, arc_no = payload
                self._on_depart(line, run, arc_no, t)
            elif kind == "alight":
                self._on_alight(payload, t)
            elif kind == "shuttle":
                self._on_shuttle(payload, t)
            elif kind == "epoch":
                self._on_epoch(t)
        return self._report()

    # -- reporting ----------------------------------------------------------

    def _peak_mean_wait(self, bin_s: float = 900.0) -> float:
        """Largest 15-min-bin average shuttle wait over the base horizon."""
        bins: dict[int, list[float]] = {}
        for ready, wait in self._shuttle_waits:
            bins.setdefault(int(ready // bin_s), []).append(wait)
        if not bins:
            return 0.0
        return max(sum(v) / len(v) for v in bins.values())

    def _report(self) -> SimulationReport:
        in_window = [r for r in self._riders.values() if r.start_s <= self.horizon]
        completed = [r for r in in_window if r.done_s is not None]
        stranded = [r for r in in_window if r.done_s is None]

        def mean(xs):
            xs = list(xs)
            return sum(xs) / len(xs) if xs else 0.0

        durations = {
            "mean_total_s": mean(r.done_s - r.start_s for r in completed),
            "mean_wait_s": mean(r.wait_s() for r in completed),
            "mean_travel_s": mean(r.travel_s() for r in completed),
        }

        bins = {}
        for mode in ("shuttle", "bus", "rail"):
            users = [r for r in completed if mode in r.modes()]
            counts = {"0-5": 0, "5-10": 0, ">10": 0}
            for r in users:
                w = sum(rec["board_s"] - rec["ready_s"]
                        for rec in r.records if rec["mode"] == mode)
                if w <= 300.0:
                    counts["0-5"] += 1
                elif w <= 600.0:
                    counts["5-10"] += 1
                else:
                    counts[">10"] += 1
            n = len(users)
            bins[mode] = {
                "riders": n,
                "0-5": counts["0-5"] / n if n else 0.0,
                "5-10": counts["5-10"] / n if n else 0.0,
                ">10": counts[">10"] / n if n else 0.0,
            }

        reasons = []
        if self._max_pending_age_s > self.cfg.overwhelm_max_age_s:
            reasons.append(
                f"request unserved for {self._max_pending_age_s:.0f}s")
        window = self.cfg.overwhelm_window_s
        waits = sorted(self._shuttle_waits)
        for i, (t0, _) in enumerate(waits):
            in_win = [w for (tw, w) in waits[i:] if tw <= t0 + window]
            if in_win and mean(in_win) > self.cfg.overwhelm_mean_wait_s:
                reasons.append(f"mean shuttle wait {mean(in_win):.0f}s in window at {t0:.0f}s")
                break

        rider_rows = []
        for r in sorted(self._riders.values(), key=lambda r: r.id):
            if r.start_s > self.horizon:
                continue
            rider_rows.append({
                "rider": r.id,
                "trip": r.trip_id,
                "start_s": r.start_s,
                "done_s": r.done_s if r.done_s is not None else "",
                "wait_s": r.wait_s(),
                "travel_s": r.travel_s(),
                "legs": len(r.records),
                "completed": int(r.done_s is not None),
            })

        report = SimulationReport(
            meta={
                "horizon_s": self.horizon,
                "extended_horizon_s": self.end,
                "fleet_size": self.fleet_size,
                "seed": self.seed,
                "bus_vehicles": sum(l.vehicle_count for l in self.bus_lines),
                "bus_lines": len(self.bus_lines),
                "rail_vehicles": sum(l.vehicle_count for l in self.rail_lines),
            },
            passengers={
                "started": len(in_window),
                "completed": len(completed),
                "stranded": len(stranded),
            },
            durations=durations,
            wait_bins=bins,
            capacity={
                "violations": self._violations,
                "max_occupancy": dict(sorted(self._max_occ.items())),
            },
            shuttle={
                "total_miles": sum(self._miles_by_occ.values()),
                "miles_by_occupancy": {
                    str(k): v for k, v in sorted(self._miles_by_occ.items())
                },
                "active_series": self._active_series,
                "peak_active": max((n for _, n in self._active_series), default=0),
                "mean_wait_s": mean(w for _, w in self._shuttle_waits),
                "peak_mean_wait_s": self._peak_mean_wait(),
            },
            overwhelmed=bool(reasons),
            overwhelm_reasons=reasons,
            rider_rows=rider_rows,
            occupancy_rows=self._occupancy_rows,
            road_usage=self._road,
        )
        return report


def simulate(
    network: NetworkModel,
    paths: dict[str, tuple[str, ...]],
    trips: list[Trip],
    fleet_size: int,
    travel: TravelMatrix,
    params: DesignParameters,
    open_bus_arcs: dict[str, int],
    cfg: SimulationConfig | None = None,
    seed: int = 0,
) -> SimulationReport:
    if fleet_size <= 0:
        raise ValueError("fleet size must be positive")
    sim = Simulation(network, paths, trips, fleet_size, travel, params,
                     open_bus_arcs, cfg, seed)
    return sim.run()


@dataclass
class AutoscaleResult:
    fleet_size: int
    escalations: int
    ok: bool
    report: SimulationReport


def autoscale_fleet(
    network: NetworkModel,
    paths: dict[str, tuple[str, ...]],
    trips: list[Trip],
    initial_fleet: int,
    travel: TravelMatrix,
    params: DesignParameters,
    open_bus_arcs: dict[str, int],
    cfg: SimulationConfig | None = None,
    seed: int = 0,
    max_escalations: int = 10,
) -> AutoscaleResult:
    """Grow the fleet by 10% (rounded up) until the dispatcher keeps up."""
    fleet = max(1, initial_fleet)
    for escalation in range(max_escalations + 1):
        report = simulate(network, paths, trips, fleet, travel, params,
                          open_bus_arcs, cfg, seed)
        if not report.overwhelmed:
            return AutoscaleResult(fleet, escalation, True, report)
        fleet = max(fleet + 1, math.ceil(fleet * 1.1))
    return AutoscaleResult(fleet, max_escalations, False, report)
