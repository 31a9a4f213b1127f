"""Shared shuttle routes and fleet sizing for a finished design.

Per-passenger shuttle requests are read off the design paths, grouped by hub
and direction, covered by minimum-cost shared routes (exact set partitioning
over an enumerated route set), and the selected routes are chained onto the
fewest shuttles via a minimum path cover of the compatibility DAG.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from . import milp
from .model import DesignParameters, Mode, NetworkModel, TravelMatrix, Trip, expected_wait_s


@dataclass(frozen=True)
class ShuttleRequest:
    """One passenger needing one shuttle leg."""

    id: str
    trip_id: str
    origin: str
    dest: str
    request_time_s: float
    hub: str | None = None
    to_hub: bool | None = None  # True: rides toward the hub; False: away; None: direct

    @property
    def kind(self) -> str:
        if self.hub is None:
            return "direct"
        return "to_hub" if self.to_hub else "from_hub"


@dataclass
class RequestSets:
    to_hub: dict[str, list[ShuttleRequest]] = field(default_factory=dict)
    from_hub: dict[str, list[ShuttleRequest]] = field(default_factory=dict)
    direct: list[ShuttleRequest] = field(default_factory=list)

    def all_requests(self) -> list[ShuttleRequest]:
        out = list(self.direct)
        for group in itertools.chain(self.to_hub.values(), self.from_hub.values()):
            out.extend(group)
        return sorted(out, key=lambda r: r.id)


def extract_requests(
    paths: dict[str, tuple[str, ...]],
    trips: list[Trip],
    network: NetworkModel,
    params: DesignParameters,
) -> RequestSets:
    """One request per shuttle arc per passenger, timed by following the path.

    The first leg uses the trip start; later legs add travel plus the design's
    expected waits along the preceding arcs. Requests with a hub destination go
    to that hub's inbound set, hub origins to the outbound set, the rest are
    direct door-to-door rides.
    """
    sets = RequestSets()
    for trip in sorted(trips, key=lambda t: t.id):
        path = paths[trip.id]
        for rider in range(trip.passengers):
            t = trip.request_time_s
            for leg_no, arc_id in enumerate(path):
                arc = network.arcs[arc_id]
                if arc.mode is Mode.SHUTTLE:
                    req_id = f"{trip.id}.{rider}.{leg_no}"
                    req = _classify(req_id, trip.id, arc.origin, arc.dest, t, network)
                    if req.kind == "to_hub":
                        sets.to_hub.setdefault(req.hub, []).append(req)
                    elif req.kind == "from_hub":
                        sets.from_hub.setdefault(req.hub, []).append(req)
                    else:
                        sets.direct.append(req)
                    t += arc.travel_time_s
                else:
                    t += expected_wait_s(arc, params) + arc.travel_time_s
    return sets


def _classify(req_id, trip_id, origin, dest, t, network) -> ShuttleRequest:
    if network.locations[dest].is_hub:
        return ShuttleRequest(req_id, trip_id, origin, dest, t, hub=dest, to_hub=True)
    if network.locations[origin].is_hub:
        return ShuttleRequest(req_id, trip_id, origin, dest, t, hub=origin, to_hub=False)
    return ShuttleRequest(req_id, trip_id, origin, dest, t)


@dataclass(frozen=True)
class RideshareConfig:
    capacity: int = 4  # Q^shuttle
    window_s: float = 30.0  # Delta
    detour_factor: float = 1.5  # rho
    cost_per_mile: float | None = None  # measured cost for redesigns; else the design estimate


@dataclass(frozen=True)
class ShuttleRoute:
    id: str
    request_ids: tuple[str, ...]  # in pickup (to-hub) or drop-off (from-hub) order
    stops: tuple[str, ...]
    start_time_s: float
    end_time_s: float
    distance_mi: float
    cost: float

    @property
    def duration_s(self) -> float:
        return self.end_time_s - self.start_time_s

    @property
    def first_stop(self) -> str:
        return self.stops[0]

    @property
    def last_stop(self) -> str:
        return self.stops[-1]


def _route_for_group(
    group: list[ShuttleRequest],
    order: tuple[int, ...],
    travel: TravelMatrix,
    cfg: RideshareConfig,
    alpha: float,
    per_mile: float,
) -> tuple[float, list] | None:
    """Evaluate one visiting order; None when a rider exceeds the detour bound."""
    to_hub = group[0].to_hub
    hub = group[0].hub
    start = max(r.request_time_s for r in group)
    if to_hub:
        stops = [group[i].origin for i in order] + [hub]
    else:
        stops = [hub] + [group[i].dest for i in order]
    t = start
    arrivals = [start]
    dist = 0.0
    for a, b in zip(stops, stops[1:]):
        t += travel.seconds(a, b)
        dist += travel.miles(a, b)
        arrivals.append(t)
    rider_time_h = 0.0
    for pos, i in enumerate(order):
        r = group[i]
        if to_hub:
            pickup, drop = arrivals[pos], arrivals[-1]
            direct = travel.seconds(r.origin, hub)
        else:
            pickup, drop = start, arrivals[pos + 1]
            direct = travel.seconds(hub, r.dest)
        if drop - pickup > cfg.detour_factor * direct + 1e-9:
            return None
        rider_time_h += (drop - r.request_time_s) / 3600.0
    cost = (1.0 - alpha) * dist * per_mile + alpha * rider_time_h
    return t - start, [stops, t, dist, cost]


def enumerate_routes(
    requests: list[ShuttleRequest],
    travel: TravelMatrix,
    cfg: RideshareConfig,
    alpha: float,
    per_mile: float,
    id_prefix: str,
) -> list[ShuttleRoute]:
    """All feasible groupings up to the vehicle capacity, smallest groups first.

    A group is feasible when its request times span at most the sharing window
    and some visiting order keeps every rider within the detour factor of a
    direct ride; each group keeps its minimum-duration order.
    """
    reqs = sorted(requests, key=lambda r: (r.request_time_s, r.id))
    routes: list[ShuttleRoute] = []
    serial = 0
    for size in range(1, cfg.capacity + 1):
        for combo in itertools.combinations(range(len(reqs)), size):
            group = [reqs[i] for i in combo]
            if group[-1].request_time_s - group[0].request_time_s > cfg.window_s + 1e-9:
                continue
            best = None
            for order in itertools.permutations(range(len(group))):
                evaluated = _route_for_group(group, order, travel, cfg, alpha, per_mile)
                if evaluated is None:
                    continue
                duration, payload = evaluated
                key = (duration, tuple(group[i].id for i in order))
                if best is None or key < best[0]:
                    best = (key, order, payload)
            if best is None:
                continue
            _, order, (stops, end, dist, cost) = best
            start = max(r.request_time_s for r in group)
            routes.append(ShuttleRoute(
                id=f"{id_prefix}#{serial:05d}",
                request_ids=tuple(group[i].id for i in order),
                stops=tuple(stops),
                start_time_s=start,
                end_time_s=end,
                distance_mi=dist,
                cost=cost,
            ))
            serial += 1
    return routes


def direct_route(req: ShuttleRequest, travel, alpha: float, per_mile: float) -> ShuttleRoute:
    tau = travel.seconds(req.origin, req.dest)
    dist = travel.miles(req.origin, req.dest)
    cost = (1.0 - alpha) * dist * per_mile + alpha * tau / 3600.0
    return ShuttleRoute(
        id=f"direct:{req.id}",
        request_ids=(req.id,),
        stops=(req.origin, req.dest),
        start_time_s=req.request_time_s,
        end_time_s=req.request_time_s + tau,
        distance_mi=dist,
        cost=cost,
    )


def solve_set_partitioning(
    requests: list[ShuttleRequest], routes: list[ShuttleRoute]
) -> list[ShuttleRoute]:
    """Cheapest selection covering every request exactly once.

    Ties between optimal selections resolve to the lexicographically smallest
    set of route ids, via prefix-fixing re-solves at the proven optimum.
    """
    if not requests:
        return []
    routes = sorted(routes, key=lambda r: r.id)
    req_index = {r.id: i for i, r in enumerate(sorted(requests, key=lambda r: r.id))}
    n, m = len(routes), len(req_index)
    a_eq = np.zeros((m, n))
    for j, route in enumerate(routes):
        for rid in route.request_ids:
            a_eq[req_index[rid], j] = 1.0
    b_eq = np.ones(m)
    cost = np.array([r.cost for r in routes])

    base = milp.solve_milp(cost, a_eq=a_eq, b_eq=b_eq, integers=tuple(range(n)))
    if not base.optimal:
        raise milp.SolverError("set partitioning did not solve to optimality")
    best = base.objective

    chosen: list[int] = []
    covered: set[str] = set()
    bounds: list[tuple[float, float]] = [(0.0, 1.0)] * n
    for j in range(n):
        if len(covered) == len(req_index):
            bounds[j] = (0.0, 0.0)
            continue
        if any(rid in covered for rid in routes[j].request_ids):
            bounds[j] = (0.0, 0.0)
            continue
        trial = list(bounds)
        trial[j] = (1.0, 1.0)
        res = milp.solve_milp(cost, a_eq=a_eq, b_eq=b_eq, bounds=trial,
                              integers=tuple(range(n)))
        if res.optimal and res.objective <= best + 1e-9 * (1.0 + abs(best)):
            bounds[j] = (1.0, 1.0)
            chosen.append(j)
            covered.update(routes[j].request_ids)
        else:
            bounds[j] = (0.0, 0.0)
    assert len(covered) == len(req_index)
    return [routes[j] for j in chosen]


@dataclass
class FleetPlan:
    size: int
    chains: list[list[str]]  # route ids per shuttle, in service order
    routes: dict[str, ShuttleRoute]


def size_fleet(routes: list[ShuttleRoute], travel: TravelMatrix) -> FleetPlan:
    """Minimum shuttles covering every route once: path cover via matching.

    Route r' can follow r when r ends early enough to relocate to the start of
    r'; the fleet equals routes minus the maximum matching on that DAG.
    """
    ordered = sorted(routes, key=lambda r: (r.start_time_s, r.id))
    n = len(ordered)
    if n == 0:
        return FleetPlan(0, [], {})
    rows, cols = [], []
    for i, r in enumerate(ordered):
        for j, s in enumerate(ordered):
            if i == j:
                continue
            if _can_chain(r, s, travel):
                rows.append(i)
                cols.append(j)
    successor = [-1] * n
    if rows:
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        match = maximum_bipartite_matching(graph, perm_type="column")
        successor = [int(x) for x in match]
    has_pred = {j for j in successor if j >= 0}
    chains = []
    for i in range(n):
        if i in has_pred:
            continue
        chain = [ordered[i].id]
        k = successor[i]
        while k >= 0:
            chain.append(ordered[k].id)
            k = successor[k]
        chains.append(chain)
    return FleetPlan(len(chains), chains, {r.id: r for r in ordered})


def _can_chain(r: ShuttleRoute, s: ShuttleRoute, travel: TravelMatrix) -> bool:
    if (r.last_stop, s.first_stop) not in travel:
        return False
    return r.end_time_s + travel.seconds(r.last_stop, s.first_stop) <= s.start_time_s + 1e-9


@dataclass
class RideshareResult:
    selected_routes: list[ShuttleRoute]
    fleet: FleetPlan
    requests: RequestSets


def plan_fleet(
    paths: dict[str, tuple[str, ...]],
    trips: list[Trip],
    network: NetworkModel,
    params: DesignParameters,
    travel: TravelMatrix,
    cfg: RideshareConfig | None = None,
    threads: int = 1,
) -> RideshareResult:
    """Requests -> shared routes per hub and direction -> fleet size."""
    cfg = cfg or RideshareConfig()
    per_mile = cfg.cost_per_mile if cfg.cost_per_mile is not None \
        else params.shuttle_cost_per_mile_estimate
    sets = extract_requests(paths, trips, network, params)

    groups: list[tuple[str, list[ShuttleRequest]]] = []
    for hub in sorted(sets.to_hub):
        groups.append((f"to:{hub}", sets.to_hub[hub]))
    for hub in sorted(sets.from_hub):
        groups.append((f"from:{hub}", sets.from_hub[hub]))

    def solve_group(item):
        key, requests = item
        routes = enumerate_routes(requests, travel, cfg, params.alpha, per_mile, key)
        return solve_set_partitioning(requests, routes)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_group = list(pool.map(solve_group, groups))
    else:
        per_group = [solve_group(g) for g in groups]

    selected: list[ShuttleRoute] = []
    for routes in per_group:
        selected.extend(routes)
    for req in sorted(sets.direct, key=lambda r: r.id):
        selected.append(direct_route(req, travel, params.alpha, per_mile))

    fleet = size_fleet(selected, travel)
    return RideshareResult(selected, fleet, sets)
