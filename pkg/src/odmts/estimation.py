"""Demand estimation from fare transactions and passenger counters.

Transactions group into legs per card (rail tap-in/tap-out pairs, bus tap-ins
with unknown alightings), unknown bus alightings are inferred from the card's
next boarding or sampled from the counter data, and legs chain into trips
within a transfer window. Cash riders, who appear only in the counter data,
are synthesized from the boarding surplus per stop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Location, Mode, Trip, straight_line_feet

BUS_BOARD = "BusBoard"
RAIL_ENTRY = "RailEntry"
RAIL_EXIT = "RailExit"

DEFAULT_TRANSFER_WINDOW_S = 45 * 60.0
DEFAULT_BUCKET_S = 15 * 60.0
_FALLBACK_RIDE_S = 300.0


@dataclass(frozen=True)
class Transaction:
    card_id: str | None
    timestamp_s: float
    terminal: str
    kind: str  # BUS_BOARD | RAIL_ENTRY | RAIL_EXIT


@dataclass(frozen=True)
class ApcRecord:
    stop: str
    route: str
    timestamp_s: float
    boardings: int
    alightings: int

    def __post_init__(self):
        if self.boardings < 0 or self.alightings < 0:
            raise ValueError("counts must be nonnegative")


@dataclass
class Leg:
    card_id: str | None
    board_stop: str
    board_time_s: float
    mode: Mode
    alight_stop: str | None = None
    alight_time_s: float | None = None
    route: str | None = None
    inferred: bool = False


@dataclass
class Diagnostics:
    unmatched_rail_exits: int = 0
    unmatched_rail_entries: int = 0
    anonymous_rail_dropped: int = 0
    legs_without_route: int = 0
    alightings_from_next_boarding: int = 0
    alightings_sampled: int = 0
    uniform_fallbacks: int = 0
    cash_journeys: int = 0
    card_journeys: int = 0
    degenerate_journeys: int = 0
    journeys_aggregated: int = 0

    def to_dict(self) -> dict:
        return dict(sorted(self.__dict__.items()))


def group_legs(transactions: list[Transaction]) -> tuple[list[Leg], Diagnostics]:
    """Pair rail tap-ins with tap-outs and open one bus leg per bus tap-in."""
    diag = Diagnostics()
    by_card: dict[str, list[Transaction]] = {}
    anon = 0
    for tx in transactions:
        if tx.card_id:
            by_card.setdefault(tx.card_id, []).append(tx)
        elif tx.kind == BUS_BOARD:
            by_card.setdefault(f"cash~{anon}", []).append(tx)
            anon += 1
        else:
            diag.anonymous_rail_dropped += 1

    legs: list[Leg] = []
    for card in sorted(by_card):
        open_entry: Transaction | None = None
        for tx in sorted(by_card[card], key=lambda t: (t.timestamp_s, t.kind)):
            if tx.kind == BUS_BOARD:
                legs.append(Leg(card, tx.terminal, tx.timestamp_s, Mode.BUS))
            elif tx.kind == RAIL_ENTRY:
                if open_entry is not None:
                    diag.unmatched_rail_entries += 1
                open_entry = tx
            elif tx.kind == RAIL_EXIT:
                if open_entry is None:
                    diag.unmatched_rail_exits += 1
                    continue
                legs.append(Leg(card, open_entry.terminal, open_entry.timestamp_s,
                                Mode.RAIL, tx.terminal, tx.timestamp_s))
                open_entry = None
            else:
                raise ValueError(f"unknown transaction kind {tx.kind!r}")
        if open_entry is not None:
            diag.unmatched_rail_entries += 1
    return legs, diag


@dataclass
class _RouteInfo:
    stops: list[str] = field(default_factory=list)
    mean_time: dict[str, float] = field(default_factory=dict)
    alightings: dict[str, int] = field(default_factory=dict)
    boardings: dict[str, int] = field(default_factory=dict)


def _route_tables(apc: list[ApcRecord]) -> dict[str, _RouteInfo]:
    infos: dict[str, _RouteInfo] = {}
    sums: dict[tuple[str, str], list[float]] = {}
    for rec in sorted(apc, key=lambda r: (r.route, r.timestamp_s, r.stop)):
        info = infos.setdefault(rec.route, _RouteInfo())
        if rec.stop not in info.mean_time:
            info.stops.append(rec.stop)
        sums.setdefault((rec.route, rec.stop), []).append(rec.timestamp_s)
        info.mean_time[rec.stop] = 0.0
        info.alightings[rec.stop] = info.alightings.get(rec.stop, 0) + rec.alightings
        info.boardings[rec.stop] = info.boardings.get(rec.stop, 0) + rec.boardings
    for (route, stop), times in sums.items():
        infos[route].mean_time[stop] = sum(times) / len(times)
    return infos


def _route_of_stop(infos: dict[str, _RouteInfo]) -> dict[str, str]:
    best: dict[str, tuple[int, str]] = {}
    for route in sorted(infos):
        for stop, count in infos[route].boardings.items():
            key = (-count, route)
            if stop not in best or key < best[stop]:
                best[stop] = key
    return {stop: route for stop, (_, route) in best.items()}


def chain_trips(
    legs: list[Leg],
    apc: list[ApcRecord],
    locations: dict[str, Location],
    rng_seed: int,
    transfer_window_s: float = DEFAULT_TRANSFER_WINDOW_S,
    bucket_s: float = DEFAULT_BUCKET_S,
    diagnostics: Diagnostics | None = None,
) -> tuple[list[Trip], Diagnostics]:
    """Infer unknown alightings, chain legs into journeys, aggregate to trips.

    Unknown bus alightings prefer the downstream stop nearest the card's next
    boarding (wrapping to the day's first boarding, the commuter round-trip
    assumption); remaining unknowns are sampled from the route's counter
    alighting distribution under the given seed. Cash riders come straight
    from the boarding surplus in the counter data.
    """
    diag = diagnostics or Diagnostics()
    rng = np.random.default_rng(rng_seed)
    infos = _route_tables(apc)
    route_of_stop = _route_of_stop(infos)

    by_card: dict[str, list[Leg]] = {}
    for leg in legs:
        by_card.setdefault(leg.card_id or "", []).append(leg)

    card_board_counts: dict[tuple[str, str], int] = {}
    journeys: list[tuple[str, str, float]] = []

    for card in sorted(by_card):
        card_legs = sorted(by_card[card], key=lambda l: l.board_time_s)
        for i, leg in enumerate(card_legs):
            if leg.mode is not Mode.BUS:
                continue
            route = route_of_stop.get(leg.board_stop)
            if route is None:
                diag.legs_without_route += 1
                continue
            leg.route = route
            key = (route, leg.board_stop)
            card_board_counts[key] = card_board_counts.get(key, 0) + 1
            if leg.alight_stop is not None:
                continue
            info = infos[route]
            order = info.stops
            try:
                pos = order.index(leg.board_stop)
            except ValueError:
                pos = -1
            downstream = order[pos + 1:] if pos >= 0 else []
            if not downstream:
                diag.legs_without_route += 1
                continue
            target = None
            if len(card_legs) > 1:
                nxt = card_legs[(i + 1) % len(card_legs)]
                target = nxt.board_stop
            if target is not None and target in locations:
                here = locations.get(leg.board_stop)
                goal = locations[target]
                chosen = min(
                    downstream,
                    key=lambda s: (straight_line_feet(locations[s], goal)
                                   if s in locations else float("inf"), s),
                )
                diag.alightings_from_next_boarding += 1
                _ = here
            else:
                weights = np.array([info.alightings.get(s, 0) for s in downstream],
                                   dtype=float)
                if weights.sum() <= 0:
                    weights = np.ones(len(downstream))
                    diag.uniform_fallbacks += 1
                chosen = downstream[int(rng.choice(len(downstream),
                                                   p=weights / weights.sum()))]
                diag.alightings_sampled += 1
            leg.alight_stop = chosen
            ride = info.mean_time.get(chosen, 0.0) - info.mean_time.get(leg.board_stop, 0.0)
            leg.alight_time_s = leg.board_time_s + (ride if ride > 0 else _FALLBACK_RIDE_S)
            leg.inferred = True

        usable = [l for l in card_legs if l.alight_stop is not None]
        if not usable:
            continue
        chains: list[list[Leg]] = [[usable[0]]]
        for leg in usable[1:]:
            if leg.board_time_s - chains[-1][-1].alight_time_s <= transfer_window_s:
                chains[-1].append(leg)
            else:
                chains.append([leg])
        for chain in chains:
            journeys.append((chain[0].board_stop, chain[-1].alight_stop,
                             chain[0].board_time_s))
            diag.card_journeys += 1

    # Cash riders: per-stop boarding surplus over the card-observed boardings.
    for route in sorted(infos):
        info = infos[route]
        for pos, stop in enumerate(info.stops):
            surplus = info.boardings.get(stop, 0) - card_board_counts.get((route, stop), 0)
            if surplus <= 0:
                continue
            downstream = info.stops[pos + 1:]
            if not downstream:
                continue
            weights = np.array([info.alightings.get(s, 0) for s in downstream],
                               dtype=float)
            if weights.sum() <= 0:
                weights = np.ones(len(downstream))
                diag.uniform_fallbacks += 1
            for _ in range(surplus):
                dest = downstream[int(rng.choice(len(downstream),
                                                 p=weights / weights.sum()))]
                journeys.append((stop, dest, info.mean_time[stop]))
                diag.cash_journeys += 1

    counts: dict[tuple[str, str, int], int] = {}
    for origin, dest, t in journeys:
        if origin == dest:
            diag.degenerate_journeys += 1
            continue
        bucket = int(t // bucket_s)
        counts[(origin, dest, bucket)] = counts.get((origin, dest, bucket), 0) + 1

    trips = []
    for serial, ((origin, dest, bucket), p) in enumerate(sorted(counts.items())):
        trips.append(Trip(f"od{serial:04d}", origin, dest, p, bucket * bucket_s))
        diag.journeys_aggregated += p
    return trips, diag
