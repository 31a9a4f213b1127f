"""Bus network design by Benders decomposition on transfer-expanded graphs.

The master problem picks bus arcs and frequencies; each trip's routing is a
shortest-path subproblem on a layered copy of the network whose layer index
counts legs used, so the transfer limit is structural and the subproblem stays
a totally unimodular min-cost flow. Cuts come from the flow duals.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import milp
from .model import (
    Arc,
    DesignParameters,
    Mode,
    NetworkModel,
    Trip,
    arc_fixed_cost,
    arc_trip_cost,
)

INF = math.inf
_FLOW_EPS = 1e-9


@dataclass(frozen=True)
class TegArc:
    tail: int
    head: int
    cost: float
    source_arc: str
    capacitated: bool  # copy of a bus arc: usable only up to z of the source


class TransferExpandedGraph:
    """Layered routing graph for one trip.

    Vertices: origin, destination, and layers 1..K-1 of every hub. Hub-to-hub
    arcs climb exactly one layer, so every origin->destination path uses at
    most K arcs; the direct shuttle arc keeps the graph feasible for any design.
    """

    def __init__(self, trip: Trip, network: NetworkModel, params: DesignParameters):
        self.trip_id = trip.id
        k_max = params.transfer_limit
        hubs = network.hub_ids()

        self.origin = 0
        self.dest = 1
        index: dict[object, int] = {"o": 0, "d": 1}
        for k in range(1, k_max):
            for h in hubs:
                index[(h, k)] = len(index)
        self.n_vertices = len(index)
        self.vertex_labels = list(index)

        arcs: list[TegArc] = []

        def add(tail, head, source: Arc):
            cost = arc_trip_cost(source, trip, params)
            arcs.append(TegArc(tail, head, cost, source.id, source.mode is Mode.BUS))

        direct = network.shuttle_arc(trip.origin, trip.dest)
        if direct is None:
            raise ValueError(f"trip {trip.id!r} has no direct shuttle arc")
        add(self.origin, self.dest, direct)
        for h in hubs:
            if h != trip.origin and k_max >= 2:
                access = network.shuttle_arc(trip.origin, h)
                if access is not None:
                    add(self.origin, index[(h, 1)], access)
            if h != trip.dest:
                egress = network.shuttle_arc(h, trip.dest)
                if egress is not None:
                    for k in range(1, k_max):
                        add(index[(h, k)], self.dest, egress)
        for a in network.hub_arcs():
            for k in range(1, k_max - 1):
                add(index[(a.origin, k)], index[(a.dest, k + 1)], a)

        self.arcs = arcs
        self.copies: dict[str, list[int]] = {}
        for i, a in enumerate(arcs):
            if a.capacitated:
                self.copies.setdefault(a.source_arc, []).append(i)
        self._out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for i, a in enumerate(arcs):
            self._out[a.tail].append(i)

    def out_arcs(self, v: int) -> list[int]:
        return self._out[v]


def build_teg(trip: Trip, network: NetworkModel, params: DesignParameters) -> TransferExpandedGraph:
    return TransferExpandedGraph(trip, network, params)


@dataclass
class SubproblemResult:
    cost: float
    path: tuple[str, ...] | None  # original arc ids, origin to destination
    mu_by_arc: dict[str, float]  # summed duals per original bus arc, <= 0
    mu_by_copy: dict[int, float]  # per layered copy, for validation
    potentials: list[float]


def solve_subproblem(teg: TransferExpandedGraph, z_hat: dict[str, float]) -> SubproblemResult:
    """Cheapest unit flow origin->destination with bus copies capped at z.

    Successive shortest paths; the direct shuttle arc guarantees feasibility.
    Duals for the capacity rows come from residual-network potentials, choosing
    the minimal-magnitude values for copies of closed arcs.
    """
    arcs = teg.arcs
    n = teg.n_vertices
    cap = np.empty(len(arcs))
    cost = np.empty(len(arcs))
    for i, a in enumerate(arcs):
        cap[i] = max(0.0, z_hat.get(a.source_arc, 0.0)) if a.capacitated else INF
        cost[i] = a.cost
    flow = np.zeros(len(arcs))

    def bellman_ford() -> tuple[list[float], list[tuple[int, bool] | None]]:
        dist = [INF] * n
        pred: list[tuple[int, bool] | None] = [None] * n
        dist[teg.origin] = 0.0
        for _ in range(n):
            changed = False
            for i, a in enumerate(arcs):
                if cap[i] - flow[i] > _FLOW_EPS and dist[a.tail] + cost[i] < dist[a.head] - 1e-12:
                    dist[a.head] = dist[a.tail] + cost[i]
                    pred[a.head] = (i, True)
                    changed = True
                if flow[i] > _FLOW_EPS and dist[a.head] - cost[i] < dist[a.tail] - 1e-12:
                    dist[a.tail] = dist[a.head] - cost[i]
                    pred[a.tail] = (i, False)
                    changed = True
            if not changed:
                break
        return dist, pred

    delivered = 0.0
    guard = 0
    while delivered < 1.0 - _FLOW_EPS:
        guard += 1
        if guard > 10 * len(arcs) + 10:
            raise RuntimeError("augmentation did not converge")
        dist, pred = bellman_ford()
        if math.isinf(dist[teg.dest]):
            raise RuntimeError("destination unreachable despite direct arc")
        push = 1.0 - delivered
        v = teg.dest
        hops = []
        while v != teg.origin:
            i, forward = pred[v]
            hops.append((i, forward))
            if forward:
                push = min(push, cap[i] - flow[i])
                v = arcs[i].tail
            else:
                push = min(push, flow[i])
                v = arcs[i].head
        for i, forward in hops:
            flow[i] += push if forward else -push
        delivered += push

    total_cost = float(np.dot(flow, cost))

    # Potentials: residual distances from the origin. Unreachable vertices carry
    # no flow, so complementary slackness only needs their potentials to respect
    # out-arcs that still have residual capacity; assign the smallest such value
    # (reverse topological order of the layered DAG keeps heads resolved first),
    # which also keeps the duals on closed copies at minimal magnitude.
    dist, _ = bellman_ford()
    order = [teg.dest] + list(range(2, teg.n_vertices))[::-1] + [teg.origin]
    for v in order:
        if not math.isinf(dist[v]):
            continue
        lo = -INF
        for i in teg.out_arcs(v):
            a = arcs[i]
            if cap[i] - flow[i] > _FLOW_EPS and not math.isinf(dist[a.head]):
                lo = max(lo, dist[a.head] - cost[i])
        dist[v] = 0.0 if math.isinf(lo) else lo

    mu_by_copy: dict[int, float] = {}
    mu_by_arc: dict[str, float] = {}
    for source_arc, copy_ids in teg.copies.items():
        total = 0.0
        for i in copy_ids:
            a = arcs[i]
            mu = min(0.0, cost[i] + dist[a.tail] - dist[a.head])
            mu_by_copy[i] = mu
            total += mu
        mu_by_arc[source_arc] = total

    path = _extract_path(teg, flow)
    return SubproblemResult(total_cost, path, mu_by_arc, mu_by_copy, dist)


def _extract_path(teg: TransferExpandedGraph, flow: np.ndarray) -> tuple[str, ...] | None:
    """Original arc ids along the unit path, or None when the flow split."""
    if any(_FLOW_EPS < f < 1.0 - _FLOW_EPS for f in flow):
        return None
    path = []
    v = teg.origin
    seen = 0
    while v != teg.dest:
        seen += 1
        if seen > teg.n_vertices:
            return None
        nxt = [i for i in teg.out_arcs(v) if flow[i] > 0.5]
        if len(nxt) != 1:
            return None
        path.append(teg.arcs[nxt[0]].source_arc)
        v = teg.arcs[nxt[0]].head
    return tuple(path)


@dataclass(frozen=True)
class BendersCut:
    """theta >= intercept + sum coeffs[a] * (z_a - anchor[a])."""

    intercept: float
    coeffs: dict[str, float]
    anchor: dict[str, float]

    def rhs(self, z: dict[str, float]) -> float:
        return self.intercept + sum(
            g * (z.get(a, 0.0) - self.anchor.get(a, 0.0)) for a, g in self.coeffs.items()
        )


@dataclass
class MasterSolution:
    z: dict[str, float]
    theta: float
    objective: float
    optimal: bool


@dataclass
class DesignSolution:
    open_bus_arcs: dict[str, int]  # arc id -> frequency
    objective_total: float
    fixed_cost_part: float
    passenger_part: float
    paths: dict[str, tuple[str, ...]]
    converged: bool
    iterations: int
    gap: float
    trace: list[tuple[int, float, float, int]] = field(default_factory=list)

    def uses_arc(self, arc_id: str) -> bool:
        return arc_id in self.open_bus_arcs


class _MasterProblem:
    """Frequency selection MILP: flow balance per hub, one frequency per pair."""

    def __init__(self, network: NetworkModel, params: DesignParameters):
        self.arcs = network.bus_arcs()
        self.ids = [a.id for a in self.arcs]
        self.beta = np.array([arc_fixed_cost(a, params) for a in self.arcs])
        n = len(self.arcs)
        col = {a.id: j for j, a in enumerate(self.arcs)}
        self._col = col

        eq_rows = []
        for hub in network.hub_ids():
            row = np.zeros(n)
            touched = False
            for j, a in enumerate(self.arcs):
                if a.origin == hub:
                    row[j] += a.frequency
                    touched = True
                if a.dest == hub:
                    row[j] -= a.frequency
                    touched = True
            if touched:
                eq_rows.append(row)
        self.a_eq = np.array(eq_rows) if eq_rows else None
        self.b_eq = np.zeros(len(eq_rows)) if eq_rows else None

        pair_rows: dict[tuple[str, str], np.ndarray] = {}
        for j, a in enumerate(self.arcs):
            row = pair_rows.setdefault((a.origin, a.dest), np.zeros(n))
            row[j] = 1.0
        self.pair_ub = [pair_rows[k] for k in sorted(pair_rows)]

    def _assemble(self, cuts: list[BendersCut]):
        n = len(self.arcs)
        c = np.concatenate([self.beta, [1.0]])
        ub_rows, ub_b = [], []
        for row in self.pair_ub:
            ub_rows.append(np.concatenate([row, [0.0]]))
            ub_b.append(1.0)
        for cut in cuts:
            row = np.zeros(n + 1)
            for arc_id, g in cut.coeffs.items():
                row[self._col[arc_id]] = g
            row[n] = -1.0
            rhs = sum(g * cut.anchor.get(a, 0.0) for a, g in cut.coeffs.items()) - cut.intercept
            ub_rows.append(row)
            ub_b.append(rhs)
        a_ub = np.array(ub_rows) if ub_rows else None
        b_ub = np.array(ub_b) if ub_b else None
        a_eq = None
        b_eq = None
        if self.a_eq is not None:
            a_eq = np.hstack([self.a_eq, np.zeros((self.a_eq.shape[0], 1))])
            b_eq = self.b_eq
        bounds = [(0.0, 1.0)] * n + [(0.0, None)]
        return c, a_ub, b_ub, a_eq, b_eq, bounds

    def solve(self, cuts: list[BendersCut], relaxed: bool) -> MasterSolution:
        n = len(self.arcs)
        c, a_ub, b_ub, a_eq, b_eq, bounds = self._assemble(cuts)
        if relaxed:
            sol = milp.solve_lp(c, a_ub, b_ub, a_eq, b_eq, bounds)
            if sol.status != "optimal":
                raise milp.SolverError("master LP relaxation infeasible")
            x, obj, optimal = sol.x, sol.objective, True
        else:
            res = milp.solve_milp(c, a_ub, b_ub, a_eq, b_eq, bounds, integers=tuple(range(n)))
            if res.x is None:
                raise milp.SolverError("master MILP found no solution")
            x, obj, optimal = res.x, res.objective, res.optimal
        z = {arc_id: float(x[j]) for j, arc_id in enumerate(self.ids)}
        return MasterSolution(z, float(x[n]), float(obj), optimal)


@dataclass
class _Separation:
    phi: float
    cut: BendersCut
    paths: dict[str, tuple[str, ...]]
    costs: dict[str, float]


def _separate(
    tegs: list[TransferExpandedGraph], z_hat: dict[str, float], threads: int
) -> _Separation:
    """Solve every trip subproblem at z_hat and aggregate one cut.

    Subproblems are independent; the reduction is summed in trip-id order so
    the result does not depend on the worker count.
    """
    ordered = sorted(tegs, key=lambda t: t.trip_id)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda t: solve_subproblem(t, z_hat), ordered))
    else:
        results = [solve_subproblem(t, z_hat) for t in ordered]

    phi = 0.0
    coeffs: dict[str, float] = {}
    paths: dict[str, tuple[str, ...]] = {}
    costs: dict[str, float] = {}
    for teg, res in zip(ordered, results):
        phi += res.cost
        costs[teg.trip_id] = res.cost
        if res.path is not None:
            paths[teg.trip_id] = res.path
        for arc_id, mu in res.mu_by_arc.items():
            coeffs[arc_id] = coeffs.get(arc_id, 0.0) + mu
    anchor = {a: z_hat.get(a, 0.0) for a in coeffs}
    return _Separation(phi, BendersCut(phi, coeffs, anchor), paths, costs)


def benders_solve(
    network: NetworkModel,
    trips: list[Trip],
    params: DesignParameters,
    *,
    cut_tol: float = 1e-6,
    rel_gap: float = 1e-6,
    max_iterations: int = 200,
    fractional_rounds: int = 25,
    threads: int = 1,
    on_cut=None,
) -> DesignSolution:
    """Iterate master and subproblems until no cut is violated.

    Cuts are separated both at the master LP optimum (fractional) and at every
    integer master solution. Hitting the iteration cap returns the incumbent
    flagged as non-converged.
    """
    tegs = [build_teg(t, network, params) for t in trips]
    master = _MasterProblem(network, params)
    freq_of = {a.id: a.frequency for a in master.arcs}

    cuts: list[BendersCut] = []
    best_ub = INF
    best: tuple[dict[str, float], dict[str, tuple[str, ...]], float] | None = None
    trace: list[tuple[int, float, float, int]] = []
    lb = 0.0
    converged = False
    iteration = 0

    def violated(theta: float, phi: float) -> bool:
        return phi > theta + cut_tol * (1.0 + abs(theta))

    def add_cut(cut: BendersCut):
        cuts.append(cut)
        if on_cut is not None:
            on_cut(cut)

    for iteration in range(1, max_iterations + 1):
        for _ in range(fractional_rounds):
            frac = master.solve(cuts, relaxed=True)
            sep = _separate(tegs, frac.z, threads)
            if not violated(frac.theta, sep.phi):
                break
            add_cut(sep.cut)

        sol = master.solve(cuts, relaxed=False)
        lb = max(lb, sol.objective)
        sep = _separate(tegs, sol.z, threads)
        fixed = float(np.dot(master.beta, [sol.z[a] for a in master.ids]))
        ub_candidate = fixed + sep.phi
        if ub_candidate < best_ub:
            best_ub = ub_candidate
            best = (dict(sol.z), dict(sep.paths), sep.phi)
        trace.append((iteration, lb, best_ub, len(cuts)))
        if not violated(sol.theta, sep.phi):
            converged = True
            break
        add_cut(sep.cut)

    assert best is not None
    z_best, paths, phi = best
    open_arcs = {
        arc_id: freq_of[arc_id] for arc_id, v in sorted(z_best.items()) if v > 0.5
    }
    fixed = float(np.dot(master.beta, [z_best[a] for a in master.ids]))
    gap = (best_ub - lb) / max(1.0, abs(best_ub))
    return DesignSolution(
        open_bus_arcs=open_arcs,
        objective_total=fixed + phi,
        fixed_cost_part=fixed,
        passenger_part=phi,
        paths=paths,
        converged=converged,
        iterations=iteration,
        gap=max(0.0, gap),
        trace=trace,
    )


def route_trips(
    network: NetworkModel,
    trips: list[Trip],
    params: DesignParameters,
    open_arcs: dict[str, int],
    threads: int = 1,
) -> tuple[dict[str, tuple[str, ...]], float]:
    """Best transfer-limited path per trip for a fixed design (e.g. re-routing
    after a scenario removes the bus subsystem). Returns paths and total cost."""
    z = {arc_id: 1.0 for arc_id in open_arcs}
    tegs = [build_teg(t, network, params) for t in trips]
    sep = _separate(tegs, z, threads)
    return sep.paths, sep.phi
