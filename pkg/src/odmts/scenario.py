"""Pandemic scenarios, vehicle cost rates, and budget arithmetic.

Cost components default to the published per-hour dollar figures (fringe and
depreciation included as reported, not recomputed from raw rates), so the
hourly rates reproduce the reference numbers to the cent; the raw rates stay
available for user-defined cost models via `CostModel.from_rates`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import Mode, Trip


@dataclass(frozen=True)
class CostModel:
    bus_wages_hr: float = 23.52
    bus_fringe_hr: float = 16.03
    bus_maintenance_hr: float = 19.17
    bus_price: float = 625_000.0
    bus_life_yr: float = 12.0
    bus_revenue_hr_yr: float = 3878.0
    bus_depreciation_hr: float = 13.43
    shuttle_wages_hr: float = 14.42
    shuttle_fringe_hr: float = 9.83
    shuttle_maintenance_hr: float = 1.13
    shuttle_maintenance_mi: float = 0.09
    shuttle_price: float = 30_000.0
    shuttle_replacement_yr: float = 4.0
    shuttle_replacement_mi: float = 191_000.0
    shuttle_depreciation_hr: float = 1.93
    bus_cleaning_hr: float = 3.37
    shuttle_cleaning_hr: float = 1.69
    fringe_rate: float = 0.68
    opex_share: float = 0.92
    capex_share: float = 0.08

    @classmethod
    def from_rates(
        cls,
        bus_wages_hr: float,
        bus_maintenance_hr: float,
        bus_price: float,
        bus_life_yr: float,
        bus_revenue_hr_yr: float,
        shuttle_wages_hr: float,
        shuttle_maintenance_mi: float,
        shuttle_miles_per_hr: float,
        shuttle_price: float,
        shuttle_replacement_yr: float,
        fringe_rate: float = 0.68,
        **overrides,
    ) -> "CostModel":
        """Derive the per-hour components from raw rates instead of published values."""
        if bus_revenue_hr_yr <= 0 or bus_life_yr <= 0 or shuttle_replacement_yr <= 0:
            raise ZeroDivisionError("revenue hours and lifetimes must be positive")
        return cls(
            bus_wages_hr=bus_wages_hr,
            bus_fringe_hr=fringe_rate * bus_wages_hr,
            bus_maintenance_hr=bus_maintenance_hr,
            bus_price=bus_price,
            bus_life_yr=bus_life_yr,
            bus_revenue_hr_yr=bus_revenue_hr_yr,
            bus_depreciation_hr=bus_price / (bus_life_yr * bus_revenue_hr_yr),
            shuttle_wages_hr=shuttle_wages_hr,
            shuttle_fringe_hr=fringe_rate * shuttle_wages_hr,
            shuttle_maintenance_hr=shuttle_maintenance_mi * shuttle_miles_per_hr,
            shuttle_maintenance_mi=shuttle_maintenance_mi,
            shuttle_price=shuttle_price,
            shuttle_replacement_yr=shuttle_replacement_yr,
            shuttle_depreciation_hr=shuttle_price
            / (shuttle_replacement_yr * bus_revenue_hr_yr),
            fringe_rate=fringe_rate,
            **overrides,
        )


def vehicle_hourly_cost(mode: Mode, costs: CostModel, cleaning: bool = False) -> float:
    """Dollars per vehicle revenue hour: labor + maintenance + depreciation."""
    if mode is Mode.BUS:
        rate = (costs.bus_wages_hr + costs.bus_fringe_hr
                + costs.bus_maintenance_hr + costs.bus_depreciation_hr)
        return rate + (costs.bus_cleaning_hr if cleaning else 0.0)
    if mode is Mode.SHUTTLE:
        rate = (costs.shuttle_wages_hr + costs.shuttle_fringe_hr
                + costs.shuttle_maintenance_hr + costs.shuttle_depreciation_hr)
        return rate + (costs.shuttle_cleaning_hr if cleaning else 0.0)
    raise ValueError(f"no hourly cost model for mode {mode!r}")


def system_cost(
    bus_count: int,
    shuttle_count: int,
    horizon_h: float,
    costs: CostModel,
    cleaning: bool = False,
) -> float:
    """Bus plus shuttle operating cost over the horizon (rail is excluded)."""
    bus_rate = vehicle_hourly_cost(Mode.BUS, costs, cleaning)
    shuttle_rate = vehicle_hourly_cost(Mode.SHUTTLE, costs, cleaning)
    return (bus_count * bus_rate + shuttle_count * shuttle_rate) * horizon_h


def scenario_budget(
    baseline_budget: float,
    ridership_fraction: float,
    fare_share: float,
    opex_share: float = 0.92,
) -> float:
    """Shrink the baseline budget by the fare revenue lost to reduced ridership.

    Only the operating share of the budget is fare-exposed; capital funding is
    assumed unaffected.
    """
    if not 0.0 < ridership_fraction <= 1.0:
        raise ValueError("ridership fraction must lie in (0, 1]")
    if not 0.0 < fare_share < 1.0:
        raise ValueError("fare share must lie in (0, 1)")
    loss = opex_share * fare_share * (1.0 - ridership_fraction)
    return baseline_budget * (1.0 - loss)


def fit_fleet_to_budget(
    budget: float,
    bus_subsystem_cost: float,
    horizon_h: float,
    costs: CostModel,
    cleaning: bool = False,
) -> int:
    """Largest shuttle count affordable after paying for the bus subsystem."""
    if budget < bus_subsystem_cost - 1e-9:
        raise ValueError(
            f"budget {budget:.2f} is below the bus subsystem cost "
            f"{bus_subsystem_cost:.2f}; redesign the network")
    per_shuttle = vehicle_hourly_cost(Mode.SHUTTLE, costs, cleaning) * horizon_h
    return int(math.floor((budget - bus_subsystem_cost) / per_shuttle + 1e-9))


@dataclass(frozen=True)
class Scenario:
    name: str
    ridership_fraction: float = 1.0
    shuttle_seats: int = 4
    bus_capacity_pct: float = 1.0  # fraction of baseline seats
    rail_capacity_pct: float = 1.0
    cleaning: bool = False
    fare_share: float = 0.33
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.ridership_fraction <= 1.0:
            raise ValueError("ridership fraction must lie in (0, 1]")
        if self.bus_capacity_pct < 0 or self.rail_capacity_pct < 0:
            raise ValueError("capacities must be nonnegative")

    @property
    def bus_enabled(self) -> bool:
        return self.bus_capacity_pct > 0.0

    def bus_seats(self, baseline: int) -> int:
        return int(math.floor(baseline * self.bus_capacity_pct + 1e-9))

    def rail_seats(self, baseline: int) -> int:
        return int(math.floor(baseline * self.rail_capacity_pct + 1e-9))


def standard_scenarios() -> dict[str, Scenario]:
    """The four case-study stages, baseline through strict late pandemic."""
    return {
        "baseline": Scenario("baseline"),
        "early_pandemic": Scenario(
            "early_pandemic", ridership_fraction=0.45, shuttle_seats=1,
            bus_capacity_pct=0.5, rail_capacity_pct=0.5, cleaning=True, seed=1),
        "late_pandemic": Scenario(
            "late_pandemic", ridership_fraction=0.24, shuttle_seats=1,
            bus_capacity_pct=0.5, rail_capacity_pct=0.5, cleaning=True, seed=2),
        "strict_late_pandemic": Scenario(
            "strict_late_pandemic", ridership_fraction=0.24, shuttle_seats=1,
            bus_capacity_pct=0.0, rail_capacity_pct=0.25, cleaning=True, seed=3),
    }


@dataclass
class SampledDemand:
    trips: list[Trip]
    passengers: int
    by_stratum: dict[str, int] = field(default_factory=dict)


def sample_demand(
    trips: list[Trip],
    fraction: float,
    seed: int,
    strata: dict[str, str] | None = None,
) -> SampledDemand:
    """Passenger-level sampling without replacement, stratified so the mix of
    trip classes (e.g. bus-involving vs rail-only) is preserved."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    trips = sorted(trips, key=lambda t: t.id)
    if fraction == 1.0:
        total = sum(t.passengers for t in trips)
        labels = {}
        for t in trips:
            label = (strata or {}).get(t.id, "all")
            labels[label] = labels.get(label, 0) + t.passengers
        return SampledDemand(list(trips), total, labels)

    rng = np.random.default_rng(seed)
    groups: dict[str, list[tuple[str, int]]] = {}
    for t in trips:
        label = (strata or {}).get(t.id, "all")
        groups.setdefault(label, []).extend((t.id, k) for k in range(t.passengers))

    kept_per_trip: dict[str, int] = {}
    by_stratum: dict[str, int] = {}
    for label in sorted(groups):
        units = groups[label]
        target = int(round(fraction * len(units)))
        idx = rng.choice(len(units), size=target, replace=False)
        by_stratum[label] = target
        for i in sorted(int(j) for j in idx):
            trip_id, _ = units[i]
            kept_per_trip[trip_id] = kept_per_trip.get(trip_id, 0) + 1

    sampled = []
    for t in trips:
        kept = kept_per_trip.get(t.id, 0)
        if kept > 0:
            sampled.append(replace(t, passengers=kept))
    return SampledDemand(sampled, sum(by_stratum.values()), by_stratum)
