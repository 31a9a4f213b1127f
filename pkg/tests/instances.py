"""Random and hand-built desk-scale instances shared across tests."""

from __future__ import annotations

import itertools

import numpy as np

from odmts.model import (
    Arc,
    DesignParameters,
    Location,
    Mode,
    NetworkModel,
    TravelMatrix,
    Trip,
    bus_arc_id,
    rail_arc_id,
    shuttle_arc_id,
)


def full_travel_matrix(ids, rng, t_range=(180.0, 1800.0), d_scale=12.0) -> TravelMatrix:
    entries = {}
    for o, d in itertools.permutations(ids, 2):
        t = float(rng.uniform(*t_range))
        entries[(o, d)] = (t, t / 3600.0 * d_scale * float(rng.uniform(0.7, 1.3)))
    return TravelMatrix(entries)


def random_design_instance(
    rng: np.random.Generator,
    *,
    max_hubs: int = 4,
    max_pairs: int = 4,
    max_freqs: int = 3,
    max_trips: int = 10,
    k_choices=(1, 2, 3, 4),
    alpha: float | None = None,
):
    """A sparse network whose feasible designs can be enumerated exhaustively.

    Bus pairs are sampled in reverse-closed form (whenever i->j is a candidate
    so is j->i) so that hub flow balance admits nonzero designs.
    """
    n_hubs = int(rng.integers(2, max_hubs + 1))
    n_rail = int(rng.integers(0, n_hubs + 1))
    if n_rail == 1:
        n_rail = 2 if n_hubs >= 2 else 0
    hubs = [f"h{i}" for i in range(n_hubs)]
    rail = hubs[:n_rail]
    n_stops = int(rng.integers(1, 4))
    stops = [f"p{i}" for i in range(n_stops)]

    locations = []
    for i, h in enumerate(hubs):
        is_rail = h in rail
        locations.append(
            Location(h, lat=float(rng.uniform(33, 34)), lon=float(rng.uniform(-85, -84)),
                     is_hub=True, is_rail_station=is_rail,
                     rail_lines=("line1",) if is_rail else ())
        )
    for s in stops:
        locations.append(Location(s, lat=float(rng.uniform(33, 34)), lon=float(rng.uniform(-85, -84))))

    ids = [l.id for l in locations]
    travel = full_travel_matrix(ids, rng)

    n_freqs = int(rng.integers(1, max_freqs + 1))
    freqs = tuple(sorted(rng.choice([4, 8, 12, 16], size=n_freqs, replace=False).tolist()))

    candidates = list(itertools.permutations(hubs, 2))
    rng.shuffle(candidates)
    pairs: set[tuple[str, str]] = set()
    for o, d in candidates:
        if len(pairs) >= max_pairs:
            break
        pairs.add((o, d))
        if len(pairs) < max_pairs:
            pairs.add((d, o))

    k_max = int(rng.choice(list(k_choices)))
    n_trips = int(rng.integers(1, max_trips + 1))
    points = ids
    trips = []
    for i in range(n_trips):
        o, d = rng.choice(points, size=2, replace=False).tolist()
        trips.append(Trip(f"t{i:02d}", o, d, int(rng.integers(1, 4)),
                          float(rng.uniform(0, 4 * 3600))))

    arcs: dict[str, Arc] = {}
    if len(rail) >= 2:
        for a, b in zip(rail, rail[1:]):
            for o, d in ((a, b), (b, a)):
                arcs[rail_arc_id(o, d, 24)] = Arc(
                    rail_arc_id(o, d, 24), o, d, Mode.RAIL,
                    travel.seconds(o, d), travel.miles(o, d), 24)
    for t in trips:
        for h in hubs:
            if h != t.origin:
                aid = shuttle_arc_id(t.origin, h)
                arcs[aid] = Arc(aid, t.origin, h, Mode.SHUTTLE,
                                travel.seconds(t.origin, h), travel.miles(t.origin, h))
            if h != t.dest:
                aid = shuttle_arc_id(h, t.dest)
                arcs[aid] = Arc(aid, h, t.dest, Mode.SHUTTLE,
                                travel.seconds(h, t.dest), travel.miles(h, t.dest))
        aid = shuttle_arc_id(t.origin, t.dest)
        arcs[aid] = Arc(aid, t.origin, t.dest, Mode.SHUTTLE,
                        travel.seconds(t.origin, t.dest), travel.miles(t.origin, t.dest))
    for o, d in sorted(pairs):
        for f in freqs:
            aid = bus_arc_id(o, d, f)
            arcs[aid] = Arc(aid, o, d, Mode.BUS, travel.seconds(o, d), travel.miles(o, d), f)

    network = NetworkModel({l.id: l for l in locations}, arcs, freqs, 24)
    a = float(rng.uniform(0.2, 0.95)) if alpha is None else alpha
    params = DesignParameters(alpha=a, transfer_limit=k_max)
    return network, trips, params
