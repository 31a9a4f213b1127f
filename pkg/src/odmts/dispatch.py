"""Epoch-batched shuttle dispatching.

Every epoch the dispatcher batches newly arrived shuttle requests, builds a
pool of candidate routes per shuttle (committed actions kept in order, new
pickup/drop-off pairs inserted), and selects one route per shuttle by an exact
MIP over the pool: serve each pending request or postpone it at a penalty that
doubles every ten epochs. Costs and penalties are both in seconds of waiting.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from . import milp
from .model import TravelMatrix
from .rideshare import ShuttleRequest

PICKUP = "pickup"
DROPOFF = "dropoff"


@dataclass(frozen=True)
class Action:
    kind: str  # PICKUP | DROPOFF
    request_id: str
    location: str


@dataclass(frozen=True)
class OnboardRider:
    request_id: str
    origin: str
    dest: str
    pickup_time_s: float


@dataclass(frozen=True)
class ShuttleView:
    """A shuttle as the dispatcher sees it at the start of an epoch.

    The anchor is where and when replanning may begin (after any in-flight
    action); `committed` actions are never revoked and keep their order.
    """

    id: int
    anchor_location: str
    anchor_time_s: float
    committed: tuple[Action, ...] = ()
    onboard: tuple[OnboardRider, ...] = ()


@dataclass(frozen=True)
class DispatchConfig:
    epoch_s: float = 30.0
    capacity: int = 4
    detour_factor: float = 1.5
    base_penalty_s: float = 420.0
    penalty_doubling_epochs: int = 10
    improvement_iterations: int = 200
    exhaustive_pool: bool = False


@dataclass
class PendingRequest:
    request: ShuttleRequest
    epochs_waiting: int = 0

    def penalty_s(self, cfg: DispatchConfig) -> float:
        return cfg.base_penalty_s * 2.0 ** (self.epochs_waiting // cfg.penalty_doubling_epochs)


@dataclass(frozen=True)
class CandidateRoute:
    shuttle_id: int
    actions: tuple[Action, ...]
    serves: frozenset
    cost_s: float  # waiting before pickup, summed over newly served requests


@dataclass
class EpochResult:
    plans: dict[int, tuple[Action, ...]]
    served_by: dict[str, int]
    postponed: list[str]
    objective_s: float
    pool_size: int


class RouteEvaluator:
    """Feasibility and cost of one action sequence for one shuttle."""

    def __init__(self, travel: TravelMatrix, cfg: DispatchConfig,
                 requests: dict[str, ShuttleRequest]):
        self.travel = travel
        self.cfg = cfg
        self.requests = requests

    def evaluate(self, view: ShuttleView, actions: tuple[Action, ...],
                 new_ids: frozenset) -> float | None:
        """Total pre-pickup waiting of the new requests, or None if infeasible."""
        t = view.anchor_time_s
        loc = view.anchor_location
        load = len(view.onboard)
        pickup_at = {r.request_id: r.pickup_time_s for r in view.onboard}
        endpoints = {r.request_id: (r.origin, r.dest) for r in view.onboard}
        for rid in new_ids:
            endpoints[rid] = (self.requests[rid].origin, self.requests[rid].dest)
        for a in actions:
            if a.request_id not in endpoints:
                r = self.requests[a.request_id]
                endpoints[a.request_id] = (r.origin, r.dest)
        waiting = 0.0
        for a in actions:
            t += self.travel.seconds(loc, a.location)
            loc = a.location
            if a.kind == PICKUP:
                load += 1
                if load > self.cfg.capacity:
                    return None
                pickup_at[a.request_id] = t
                if a.request_id in new_ids:
                    waiting += t - self.requests[a.request_id].request_time_s
            else:
                load -= 1
                origin, dest = endpoints[a.request_id]
                ride = t - pickup_at[a.request_id]
                direct = self.travel.seconds(origin, dest)
                if ride > self.cfg.detour_factor * direct + 1e-9:
                    return None
        return waiting


def _pair_insertions(base: tuple[Action, ...], req: ShuttleRequest):
    """Every order-preserving insertion of the request's pickup/drop-off pair."""
    pickup = Action(PICKUP, req.id, req.origin)
    drop = Action(DROPOFF, req.id, req.dest)
    n = len(base)
    for i in range(n + 1):
        for j in range(i, n + 1):
            yield base[:i] + (pickup,) + base[i:j] + (drop,) + base[j:]


def _best_insertion(evaluator, view, base_actions, base_serves, req):
    best = None
    for k, actions in enumerate(_pair_insertions(base_actions, req)):
        cost = evaluator.evaluate(view, actions, base_serves | {req.id})
        if cost is None:
            continue
        if best is None or (cost, k) < (best[0], best[2]):
            best = (cost, actions, k)
    if best is None:
        return None
    return CandidateRoute(view.id, best[1], frozenset(base_serves | {req.id}), best[0])


def generate_candidate_routes(
    views: list[ShuttleView],
    pending: list[PendingRequest],
    travel: TravelMatrix,
    cfg: DispatchConfig,
    known: dict[str, ShuttleRequest] | None = None,
) -> list[CandidateRoute]:
    """Idle routes, all single-request insertions, then bounded improvement.

    Improvement repeatedly extends the cheapest known candidates by one more
    request (best feasible insertion) until the iteration budget runs out, so
    the pool is deterministic for a fixed budget.
    """
    requests = dict(known or {})
    requests.update({p.request.id: p.request for p in pending})
    evaluator = RouteEvaluator(travel, cfg, requests)
    ordered_pending = sorted(pending, key=lambda p: (p.request.request_time_s, p.request.id))
    views = sorted(views, key=lambda v: v.id)

    pool: dict[tuple[int, frozenset], CandidateRoute] = {}

    def offer(c: CandidateRoute | None):
        if c is None:
            return
        key = (c.shuttle_id, c.serves)
        old = pool.get(key)
        if old is None or c.cost_s < old.cost_s - 1e-12:
            pool[key] = c

    for v in views:
        offer(CandidateRoute(v.id, v.committed, frozenset(), 0.0))

    if cfg.exhaustive_pool:
        _exhaustive_pool(views, ordered_pending, evaluator, cfg, offer)
        return sorted(pool.values(), key=lambda c: (c.shuttle_id, sorted(c.serves), c.cost_s))

    view_of = {v.id: v for v in views}
    for v in views:
        for p in ordered_pending:
            offer(_best_insertion(evaluator, v, v.committed, frozenset(), p.request))

    budget = cfg.improvement_iterations
    frontier = sorted(pool.values(), key=lambda c: (c.cost_s, c.shuttle_id, sorted(c.serves)))
    while budget > 0 and frontier:
        grown: list[CandidateRoute] = []
        for cand in frontier:
            if budget <= 0:
                break
            for p in ordered_pending:
                if p.request.id in cand.serves:
                    continue
                budget -= 1
                better = _best_insertion(
                    evaluator, view_of[cand.shuttle_id], cand.actions, cand.serves, p.request)
                if better is not None:
                    key = (better.shuttle_id, better.serves)
                    if key not in pool or better.cost_s < pool[key].cost_s - 1e-12:
                        grown.append(better)
                        offer(better)
                if budget <= 0:
                    break
        frontier = sorted(grown, key=lambda c: (c.cost_s, c.shuttle_id, sorted(c.serves)))
    return sorted(pool.values(), key=lambda c: (c.shuttle_id, sorted(c.serves), c.cost_s))


def _exhaustive_pool(views, ordered_pending, evaluator, cfg, offer):
    """Complete route space for micro instances: every subset of pending and
    every order-preserving interleaving with the committed actions."""
    ids = [p.request.id for p in ordered_pending]
    by_id = {p.request.id: p.request for p in ordered_pending}
    for v in views:
        for size in range(1, len(ids) + 1):
            for subset in itertools.combinations(ids, size):
                serves = frozenset(subset)
                for seq in _all_sequences(v.committed, [by_id[r] for r in subset]):
                    cost = evaluator.evaluate(v, seq, serves)
                    if cost is not None:
                        offer(CandidateRoute(v.id, seq, serves, cost))


def _all_sequences(committed: tuple[Action, ...], reqs: list[ShuttleRequest]):
    """All interleavings keeping committed order and pickup-before-drop-off."""
    chains = [
        (Action(PICKUP, r.id, r.origin), Action(DROPOFF, r.id, r.dest)) for r in reqs
    ]

    def merge(prefix, streams):
        if all(i == len(s) for s, i in streams):
            yield prefix
            return
        for k, (stream, i) in enumerate(streams):
            if i < len(stream):
                advanced = list(streams)
                advanced[k] = (stream, i + 1)
                yield from merge(prefix + (stream[i],), advanced)

    streams = [(tuple(committed), 0)] + [(c, 0) for c in chains]
    yield from merge((), streams)


class Dispatcher:
    """Stateful epoch loop: owns the pending set and commits selected routes."""

    def __init__(self, travel: TravelMatrix, cfg: DispatchConfig | None = None):
        self.travel = travel
        self.cfg = cfg or DispatchConfig()
        self.pending: dict[str, PendingRequest] = {}
        self.known: dict[str, ShuttleRequest] = {}  # committed requests stay resolvable
        self.log: list[dict] = []
        self.epoch_count = 0

    def max_pending_age_epochs(self) -> int:
        if not self.pending:
            return 0
        return max(p.epochs_waiting for p in self.pending.values())

    def run_epoch(
        self,
        now_s: float,
        views: list[ShuttleView],
        new_requests: list[ShuttleRequest],
    ) -> EpochResult:
        """Batch new requests, pick one route per shuttle, commit decisions."""
        for r in sorted(new_requests, key=lambda r: r.id):
            self.pending[r.id] = PendingRequest(r)
            self.known[r.id] = r
        pending = [self.pending[k] for k in sorted(self.pending)]
        self.epoch_count += 1
        if not pending:
            # Nothing to decide: every shuttle keeps its committed route.
            self.log.append({"epoch": self.epoch_count, "time_s": now_s, "pending": 0,
                             "served": 0, "postponed": 0, "objective_s": 0.0})
            return EpochResult({}, {}, [], 0.0, 0)

        pool = generate_candidate_routes(views, pending, self.travel, self.cfg,
                                         known=self.known)
        plans, served_by, objective = self._select(views, pending, pool)

        postponed = [p.request.id for p in pending if p.request.id not in served_by]
        for rid in served_by:
            del self.pending[rid]
        for rid in postponed:
            self.pending[rid] = replace(
                self.pending[rid], epochs_waiting=self.pending[rid].epochs_waiting + 1)
        self.log.append({
            "epoch": self.epoch_count,
            "time_s": now_s,
            "pending": len(pending),
            "served": len(served_by),
            "postponed": len(postponed),
            "objective_s": objective,
        })
        return EpochResult(plans, served_by, postponed, objective, len(pool))

    def _select(self, views, pending, pool) -> tuple[dict, dict, float]:
        """Exact selection MIP: cover-or-postpone rows, one route per shuttle."""
        n = len(pool)
        m = len(pending)
        cost = np.array([c.cost_s for c in pool]
                        + [p.penalty_s(self.cfg) for p in pending])
        req_row = {p.request.id: i for i, p in enumerate(pending)}
        a_eq = np.zeros((m + len(views), n + m))
        b_eq = np.ones(m + len(views))
        for j, cand in enumerate(pool):
            for rid in cand.serves:
                a_eq[req_row[rid], j] = 1.0
        for i, p in enumerate(pending):
            a_eq[i, n + i] = 1.0
        shuttle_row = {v.id: m + i for i, v in enumerate(sorted(views, key=lambda v: v.id))}
        for j, cand in enumerate(pool):
            a_eq[shuttle_row[cand.shuttle_id], j] = 1.0

        res = milp.solve_milp(cost, a_eq=a_eq, b_eq=b_eq,
                              integers=tuple(range(n + m)))
        if not res.optimal:
            raise milp.SolverError("dispatch selection MIP failed")
        plans: dict[int, tuple[Action, ...]] = {}
        served_by: dict[str, int] = {}
        for j, cand in enumerate(pool):
            if res.x[j] > 0.5:
                plans[cand.shuttle_id] = cand.actions
                for rid in cand.serves:
                    served_by[rid] = cand.shuttle_id
        return plans, served_by, float(res.objective)
