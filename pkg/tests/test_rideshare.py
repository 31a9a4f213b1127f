"""Ridesharing, set partitioning, and fleet sizing tests."""

import itertools

import numpy as np
import pytest

from odmts.milp import solve_lp
from odmts.model import (
    Arc,
    DesignParameters,
    Location,
    Mode,
    NetworkModel,
    TravelMatrix,
    Trip,
    rail_arc_id,
    shuttle_arc_id,
)
from odmts.rideshare import (
    RideshareConfig,
    ShuttleRequest,
    ShuttleRoute,
    direct_route,
    enumerate_routes,
    extract_requests,
    plan_fleet,
    size_fleet,
    solve_set_partitioning,
)

from .oracles import min_chain_cover, min_partition_cost


def hub_network():
    locs = [
        Location("h1", 33.70, -84.40, is_hub=True, is_rail_station=True, rail_lines=("red",)),
        Location("h2", 33.80, -84.40, is_hub=True, is_rail_station=True, rail_lines=("red",)),
        Location("o", 33.60, -84.30),
        Location("d", 33.90, -84.50),
    ]
    entries = {}
    for a, b in itertools.permutations([l.id for l in locs], 2):
        entries[(a, b)] = (600.0, 2.0)
    entries[("o", "h1")] = (300.0, 1.0)
    entries[("h1", "h2")] = (900.0, 8.0)
    entries[("h2", "d")] = (400.0, 1.5)
    travel = TravelMatrix(entries)
    arcs = {}
    for o, dd in (("o", "h1"), ("h2", "d"), ("o", "d")):
        aid = shuttle_arc_id(o, dd)
        arcs[aid] = Arc(aid, o, dd, Mode.SHUTTLE, travel.seconds(o, dd), travel.miles(o, dd))
    for o, dd in (("h1", "h2"), ("h2", "h1")):
        aid = rail_arc_id(o, dd, 24)
        arcs[aid] = Arc(aid, o, dd, Mode.RAIL, travel.seconds(o, dd), travel.miles(o, dd), 24)
    net = NetworkModel({l.id: l for l in locs}, arcs, (8,), 24)
    return net, travel


def test_extract_requests_classes_and_times():
    net, _ = hub_network()
    params = DesignParameters(alpha=0.5, horizon_s=4 * 3600.0)
    start = 21600.0  # 6:00
    trips = [Trip("t1", "o", "d", 1, start)]
    path = (shuttle_arc_id("o", "h1"), rail_arc_id("h1", "h2", 24), shuttle_arc_id("h2", "d"))
    sets = extract_requests({"t1": path}, trips, net, params)
    assert len(sets.to_hub.get("h1", [])) == 1
    first = sets.to_hub["h1"][0]
    assert first.request_time_s == start
    # shuttle 300 s -> 6:05, rail wait L/(2*24) = 300 s, rail 900 s -> arrive 6:25
    second = sets.from_hub["h2"][0]
    assert second.request_time_s == pytest.approx(start + 300 + 300 + 900)
    assert second.kind == "from_hub"


def test_extract_requests_direct_and_multiplicity():
    net, _ = hub_network()
    params = DesignParameters()
    trips = [Trip("t1", "o", "d", 3, 0.0)]
    sets = extract_requests({"t1": (shuttle_arc_id("o", "d"),)}, trips, net, params)
    assert len(sets.direct) == 3
    assert not sets.to_hub and not sets.from_hub


def req(i, origin, hub, t, to_hub=True):
    if to_hub:
        return ShuttleRequest(f"q{i}", "t", origin, hub, t, hub=hub, to_hub=True)
    return ShuttleRequest(f"q{i}", "t", hub, origin, t, hub=hub, to_hub=False)


def line_matrix():
    # Stops on a line: a, b, hub at mile 0, 1, 2; 60 s per mile.
    pts = {"a": 0.0, "b": 1.0, "h": 2.0, "c": 5.0}
    entries = {}
    for x, y in itertools.permutations(pts, 2):
        d = abs(pts[x] - pts[y])
        entries[(x, y)] = (60.0 * d, d)
    return TravelMatrix(entries)


def test_enumerate_routes_singleton():
    travel = line_matrix()
    cfg = RideshareConfig()
    routes = enumerate_routes([req(1, "a", "h", 0.0)], travel, cfg, 0.5, 1.0, "to:h")
    assert len(routes) == 1
    r = routes[0]
    assert r.stops == ("a", "h")
    assert r.duration_s == 120.0
    assert r.cost == pytest.approx(0.5 * 2.0 + 0.5 * (120.0 / 3600.0))


def test_enumerate_routes_shared_pair_present():
    travel = line_matrix()
    cfg = RideshareConfig(detour_factor=1.5)
    requests = [req(1, "a", "h", 0.0), req(2, "b", "h", 0.0)]
    routes = enumerate_routes(requests, travel, cfg, 0.5, 1.0, "to:h")
    sizes = sorted(len(r.request_ids) for r in routes)
    assert sizes == [1, 1, 2]
    shared = next(r for r in routes if len(r.request_ids) == 2)
    # Best order picks up a then b: a's ride 120 s = direct, b's 60 s.
    assert shared.stops == ("a", "b", "h")


def test_enumerate_routes_window_boundary():
    travel = line_matrix()
    cfg = RideshareConfig(window_s=30.0)
    requests = [req(1, "a", "h", 0.0), req(2, "b", "h", 31.0)]
    routes = enumerate_routes(requests, travel, cfg, 0.5, 1.0, "to:h")
    assert all(len(r.request_ids) == 1 for r in routes)
    at_window = enumerate_routes(
        [req(1, "a", "h", 0.0), req(2, "b", "h", 30.0)], travel, cfg, 0.5, 1.0, "to:h")
    assert any(len(r.request_ids) == 2 for r in at_window)


def test_enumerate_routes_detour_excludes_group():
    travel = line_matrix()
    # c is far off; hauling a rider from a via c breaks the 1.5x bound.
    cfg = RideshareConfig(detour_factor=1.5, window_s=600.0)
    requests = [req(1, "a", "h", 0.0), req(2, "c", "h", 0.0)]
    routes = enumerate_routes(requests, travel, cfg, 0.5, 1.0, "to:h")
    assert all(len(r.request_ids) == 1 for r in routes)


def test_from_hub_routes_detour_check():
    travel = line_matrix()
    cfg = RideshareConfig(detour_factor=1.5, window_s=600.0)
    requests = [req(1, "a", "h", 0.0, to_hub=False), req(2, "b", "h", 0.0, to_hub=False)]
    routes = enumerate_routes(requests, travel, cfg, 0.5, 1.0, "from:h")
    shared = [r for r in routes if len(r.request_ids) == 2]
    assert shared and shared[0].stops == ("h", "b", "a")


def test_set_partitioning_singletons_only():
    travel = line_matrix()
    cfg = RideshareConfig(window_s=0.0)
    requests = [req(1, "a", "h", 0.0), req(2, "b", "h", 100.0)]
    routes = enumerate_routes(requests, travel, cfg, 0.5, 1.0, "to:h")
    selected = solve_set_partitioning(requests, routes)
    assert sorted(len(r.request_ids) for r in selected) == [1, 1]


def test_set_partitioning_prefers_cheap_pair():
    travel = line_matrix()
    cfg = RideshareConfig(window_s=60.0)
    requests = [req(1, "a", "h", 0.0), req(2, "b", "h", 0.0), req(3, "c", "h", 0.0)]
    routes = enumerate_routes(requests, travel, cfg, 0.5, 1.0, "to:h")
    selected = solve_set_partitioning(requests, routes)
    covered = sorted(tuple(sorted(r.request_ids)) for r in selected)
    assert covered == [("q1", "q2"), ("q3",)]


def test_set_partitioning_matches_partition_oracle():
    rng = np.random.default_rng(7)
    stops = ["a", "b", "c"]
    for _ in range(10):
        n = int(rng.integers(3, 7))
        requests = [
            req(i, stops[int(rng.integers(0, 3))], "h", float(rng.integers(0, 3) * 10.0))
            for i in range(n)
        ]
        cfg = RideshareConfig(window_s=30.0, detour_factor=2.5)
        routes = enumerate_routes(requests, line_matrix(), cfg, 0.5, 1.0, "to:h")
        selected = solve_set_partitioning(requests, routes)
        value = sum(r.cost for r in selected)
        route_cost = {}
        for r in routes:
            key = frozenset(r.request_ids)
            route_cost[key] = min(r.cost, route_cost.get(key, np.inf))
        oracle = min_partition_cost([r.id for r in requests], route_cost)
        assert value == pytest.approx(oracle, rel=1e-9)


def test_rideshare_monotone_in_window_and_detour():
    rng = np.random.default_rng(13)
    stops = ["a", "b", "c"]
    requests = [
        req(i, stops[int(rng.integers(0, 3))], "h", float(rng.integers(0, 4) * 15.0))
        for i in range(6)
    ]
    travel = line_matrix()

    def optimum(window, detour):
        cfg = RideshareConfig(window_s=window, detour_factor=detour)
        routes = enumerate_routes(requests, travel, cfg, 0.5, 1.0, "to:h")
        return sum(r.cost for r in solve_set_partitioning(requests, routes))

    base = optimum(15.0, 1.2)
    assert optimum(45.0, 1.2) <= base + 1e-9
    assert optimum(15.0, 2.0) <= base + 1e-9


def mk_route(rid, start, end, first, last):
    return ShuttleRoute(rid, (rid,), (first, last), start, end, 1.0, 1.0)


def relocation_matrix(seconds):
    pts = ["X", "Y", "Z"]
    entries = {}
    for a, b in itertools.permutations(pts, 2):
        entries[(a, b)] = (seconds, 1.0)
    return TravelMatrix(entries)


def test_size_fleet_single_route():
    plan = size_fleet([mk_route("r1", 0.0, 100.0, "X", "Y")], relocation_matrix(60.0))
    assert plan.size == 1
    assert plan.chains == [["r1"]]


def test_size_fleet_relocation_boundary():
    # r1 ends 7:00 at X; r2 starts 7:30 at Y.
    r1 = mk_route("r1", 6.5 * 3600, 7.0 * 3600, "X", "X")
    r2 = mk_route("r2", 7.5 * 3600, 8.0 * 3600, "Y", "Y")
    close = size_fleet([r1, r2], relocation_matrix(20 * 60.0))
    assert close.size == 1
    assert close.chains == [["r1", "r2"]]
    far = size_fleet([r1, r2], relocation_matrix(40 * 60.0))
    assert far.size == 2


def min_flow_lp_value(routes, travel):
    """Independent check: the covering min-flow LP from the fleet formulation."""
    from odmts.rideshare import _can_chain

    n = len(routes)
    arcs = [("src", i) for i in range(n)] + [(i, "snk") for i in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and _can_chain(routes[i], routes[j], travel):
                arcs.append((i, j))
    idx = {a: k for k, a in enumerate(arcs)}
    c = np.zeros(len(arcs))
    for i in range(n):
        c[idx[("src", i)]] = 1.0
    a_eq = []
    b_eq = []
    for i in range(n):
        balance = np.zeros(len(arcs))
        covering = np.zeros(len(arcs))
        for (u, v), k in idx.items():
            if v == i:
                balance[k] += 1.0
                covering[k] += 1.0
            if u == i:
                balance[k] -= 1.0
        a_eq.append(balance)
        b_eq.append(0.0)
        a_eq.append(covering)
        b_eq.append(1.0)
    sol = solve_lp(c, a_eq=np.array(a_eq), b_eq=np.array(b_eq),
                   bounds=[(0, None)] * len(arcs))
    assert sol.status == "optimal"
    return sol.objective


def test_size_fleet_matches_chain_cover_oracle_and_lp():
    rng = np.random.default_rng(29)
    from odmts.rideshare import _can_chain

    for _ in range(12):
        n = int(rng.integers(2, 9))
        routes = []
        for i in range(n):
            start = float(rng.uniform(0, 7200))
            routes.append(mk_route(f"r{i}", start, start + float(rng.uniform(300, 1800)),
                                   str(rng.choice(["X", "Y", "Z"])),
                                   str(rng.choice(["X", "Y", "Z"]))))
        travel = relocation_matrix(float(rng.uniform(60, 1200)))
        plan = size_fleet(routes, travel)
        ordered = sorted(routes, key=lambda r: (r.start_time_s, r.id))
        oracle = min_chain_cover(
            len(ordered), lambda i, j: _can_chain(ordered[i], ordered[j], travel))
        assert plan.size == oracle
        lp = min_flow_lp_value(ordered, travel)
        assert lp == pytest.approx(plan.size, abs=1e-6)  # integral LP optimum
        assert sorted(r for chain in plan.chains for r in chain) == sorted(r.id for r in routes)


def test_plan_fleet_end_to_end_with_direct_singletons():
    net, travel = hub_network()
    params = DesignParameters(alpha=0.5)
    trips = [Trip("t1", "o", "d", 2, 0.0), Trip("t2", "o", "d", 1, 40.0)]
    paths = {
        "t1": (shuttle_arc_id("o", "h1"), rail_arc_id("h1", "h2", 24), shuttle_arc_id("h2", "d")),
        "t2": (shuttle_arc_id("o", "d"),),
    }
    result = plan_fleet(paths, trips, net, params, travel)
    served = sorted(r for route in result.selected_routes for r in route.request_ids)
    assert served == sorted(r.id for r in result.requests.all_requests())
    assert result.fleet.size >= 1
    for route in result.selected_routes:
        if len(route.request_ids) > 1:
            assert route.duration_s <= 1.5 * max(
                travel.seconds(route.first_stop, route.last_stop), 1.0) + 1e-9


def test_direct_route_cost_matches_design_gamma():
    travel = line_matrix()
    r = ShuttleRequest("q", "t", "a", "c", 0.0)
    route = direct_route(r, travel, alpha=0.5, per_mile=1.0)
    assert route.cost == pytest.approx(0.5 * 5.0 + 0.5 * (300.0 / 3600.0))
