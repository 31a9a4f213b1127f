"""On-disk formats: CSV inputs, JSON results, GeoJSON map layers.

All CSVs carry a header row and UTF-8 text; numeric column names carry units
(_s seconds, _mi miles). Parse failures raise InputError with file and line.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .design import DesignSolution
from .model import Location, TravelMatrix, Trip
from .rideshare import FleetPlan, ShuttleRoute


class InputError(ValueError):
    """Malformed or missing input data; message carries file and line."""


def _open_reader(path: Path, required: list[str]):
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    reader = csv.DictReader(handle)
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        handle.close()
        raise InputError(f"{path}:1: missing column(s) {', '.join(missing)}")
    return handle, reader


def _parse(path, line, raw, field, conv):
    try:
        return conv(raw[field])
    except (ValueError, TypeError):
        raise InputError(
            f"{path}:{line}: bad value {raw.get(field)!r} for {field}") from None


def _parse_bool(path, line, raw, field):
    v = str(raw.get(field, "")).strip().lower()
    if v in ("1", "true", "yes"):
        return True
    if v in ("0", "false", "no", ""):
        return False
    raise InputError(f"{path}:{line}: bad boolean {raw[field]!r} for {field}")


def read_locations(path) -> list[Location]:
    path = Path(path)
    handle, reader = _open_reader(
        path, ["id", "lat", "lon", "is_hub", "is_rail_station", "rail_line"])
    out = []
    with handle:
        for line, raw in enumerate(reader, start=2):
            lines = tuple(s for s in str(raw["rail_line"] or "").split(";") if s)
            try:
                out.append(Location(
                    id=str(raw["id"]),
                    lat=_parse(path, line, raw, "lat", float),
                    lon=_parse(path, line, raw, "lon", float),
                    is_hub=_parse_bool(path, line, raw, "is_hub"),
                    is_rail_station=_parse_bool(path, line, raw, "is_rail_station"),
                    rail_lines=lines,
                ))
            except ValueError as e:
                raise InputError(f"{path}:{line}: {e}") from None
    return out


def write_locations(path, locations: list[Location]):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["id", "lat", "lon", "is_hub", "is_rail_station", "rail_line"])
        for l in locations:
            w.writerow([l.id, l.lat, l.lon, int(l.is_hub), int(l.is_rail_station),
                        ";".join(l.rail_lines)])


def read_trips(path) -> list[Trip]:
    path = Path(path)
    handle, reader = _open_reader(
        path, ["id", "origin", "dest", "passengers", "request_time_s"])
    out = []
    with handle:
        for line, raw in enumerate(reader, start=2):
            try:
                out.append(Trip(
                    id=str(raw["id"]),
                    origin=str(raw["origin"]),
                    dest=str(raw["dest"]),
                    passengers=_parse(path, line, raw, "passengers", int),
                    request_time_s=_parse(path, line, raw, "request_time_s", float),
                ))
            except ValueError as e:
                raise InputError(f"{path}:{line}: {e}") from None
    return out


def write_trips(path, trips: list[Trip]):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["id", "origin", "dest", "passengers", "request_time_s"])
        for t in trips:
            w.writerow([t.id, t.origin, t.dest, t.passengers, t.request_time_s])


def read_travel_matrix(path) -> TravelMatrix:
    path = Path(path)
    handle, reader = _open_reader(path, ["origin", "dest", "seconds", "miles"])
    entries = {}
    with handle:
        for line, raw in enumerate(reader, start=2):
            entries[(str(raw["origin"]), str(raw["dest"]))] = (
                _parse(path, line, raw, "seconds", float),
                _parse(path, line, raw, "miles", float),
            )
    return TravelMatrix(entries)


def write_travel_matrix(path, travel: TravelMatrix):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["origin", "dest", "seconds", "miles"])
        for (o, d), (s, mi) in sorted(travel.items()):
            w.writerow([o, d, s, mi])


def write_design(path, design: DesignSolution, network) -> None:
    doc = {
        "objective_total": design.objective_total,
        "fixed_cost_part": design.fixed_cost_part,
        "passenger_part": design.passenger_part,
        "converged": design.converged,
        "iterations": design.iterations,
        "relative_gap": design.gap,
        "open_bus_arcs": [
            {
                "id": arc_id,
                "origin": network.arcs[arc_id].origin,
                "dest": network.arcs[arc_id].dest,
                "frequency_per_horizon": freq,
                "travel_time_s": network.arcs[arc_id].travel_time_s,
                "distance_mi": network.arcs[arc_id].distance_mi,
            }
            for arc_id, freq in sorted(design.open_bus_arcs.items())
        ],
        "paths": {t: list(p) for t, p in sorted(design.paths.items())},
    }
    _dump_json(path, doc)


def read_design_paths(path) -> tuple[dict[str, tuple[str, ...]], dict[str, int]]:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    paths = {t: tuple(p) for t, p in doc["paths"].items()}
    open_arcs = {row["id"]: int(row["frequency_per_horizon"])
                 for row in doc["open_bus_arcs"]}
    return paths, open_arcs


def write_benders_trace(path, trace):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["iteration", "lower_bound", "upper_bound", "cuts_added"])
        for row in trace:
            w.writerow(row)


def write_routes(path, routes: list[ShuttleRoute]):
    doc = [
        {
            "id": r.id,
            "requests": list(r.request_ids),
            "stops": list(r.stops),
            "start_time_s": r.start_time_s,
            "end_time_s": r.end_time_s,
            "distance_mi": r.distance_mi,
            "cost": r.cost,
        }
        for r in sorted(routes, key=lambda r: r.id)
    ]
    _dump_json(path, doc)


def write_fleet(path, plan: FleetPlan):
    _dump_json(path, {"shuttles": plan.size, "chains": plan.chains})


def write_report(path, report_dict: dict):
    _dump_json(path, report_dict)


def write_passengers_csv(path, rider_rows: list[dict]):
    cols = ["rider", "trip", "start_s", "done_s", "wait_s", "travel_s", "legs", "completed"]
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(cols)
        for row in rider_rows:
            w.writerow([row[c] for c in cols])


def write_occupancy_csv(path, occupancy_rows: list[dict]):
    cols = ["time_s", "mode", "vehicle", "occupancy", "seats"]
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(cols)
        for row in occupancy_rows:
            w.writerow([row[c] for c in cols])


def write_road_usage_geojson(path, road_usage: dict, locations: dict[str, Location]):
    """RFC 7946 FeatureCollection: one LineString per traversed segment."""
    features = []
    for (origin, dest, mode), count in sorted(road_usage.items()):
        a, b = locations[origin], locations[dest]
        features.append({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [[a.lon, a.lat], [b.lon, b.lat]],
            },
            "properties": {"origin": origin, "dest": dest, "mode": mode,
                           "traversals": count},
        })
    _dump_json(path, {"type": "FeatureCollection", "features": features})


def load_config(path) -> dict:
    """Pipeline configuration: TOML (.toml) or JSON, same schema."""
    path = Path(path)
    try:
        if path.suffix == ".toml":
            import tomli

            with open(path, "rb") as f:
                return tomli.load(f)
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    except (json.JSONDecodeError, ValueError) as e:
        raise InputError(f"{path}: {e}") from None


def _dump_json(path, doc):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
