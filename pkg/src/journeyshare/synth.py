"""Synthetic grid networks for desk-scale experiments.

Stops form a W x H grid; every row and every column carries a line served in
both directions at a fixed headway inside a service window.  The generated
files use the standard stops/timetable CSV formats, so they reload through
load_network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError
from .transit import DAY_MINUTES, TransitNetwork, load_network

KM_PER_DEG_LAT = 111.1949
BASE_LAT = 50.0
BASE_LON = 0.0


@dataclass(frozen=True)
class SyntheticNetworkSpec:
    width: int
    height: int
    spacing_km: float = 8.0
    headway_min: int = 30
    leg_min: int = 10
    mode: str = "rail"
    first_departure: int = 0
    last_arrival: int = DAY_MINUTES
    # per-line phase stagger so that transfers between lines genuinely wait
    line_offset_min: int = 0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1 or self.width * self.height < 2:
            raise InputError("grid must contain at least two stops")
        if self.spacing_km <= 0 or self.headway_min <= 0 or self.leg_min <= 0:
            raise InputError("spacing, headway and leg duration must be positive")
        if not 0 <= self.first_departure < self.last_arrival <= DAY_MINUTES:
            raise InputError("service window must satisfy 0 <= first < last <= 1440")
        if self.line_offset_min < 0:
            raise InputError("line offset must be nonnegative")


def stop_id(col: int, row: int) -> str:
    return f"S{col:02d}{row:02d}"


def _departures(spec: SyntheticNetworkSpec, line_length: int, line_index: int) -> list[int]:
    travel = (line_length - 1) * spec.leg_min
    offset = (line_index * spec.line_offset_min) % spec.headway_min
    deps = []
    t = spec.first_departure + offset
    while t + travel <= spec.last_arrival:
        deps.append(t)
        t += spec.headway_min
    return deps


def expected_run_count(spec: SyntheticNetworkSpec) -> int:
    """Closed-form run count: directions x lines x departures per orientation."""
    count = 0
    line_index = 0
    if spec.height >= 2:
        for _ in range(spec.width):
            count += 2 * len(_departures(spec, spec.height, line_index))
            line_index += 1
    if spec.width >= 2:
        for _ in range(spec.height):
            count += 2 * len(_departures(spec, spec.width, line_index))
            line_index += 1
    return count


def synthetic_rows(spec: SyntheticNetworkSpec) -> tuple[list[str], list[str]]:
    """CSV rows (including headers) for the stops and timetable files."""
    dlat = spec.spacing_km / KM_PER_DEG_LAT
    dlon = spec.spacing_km / (KM_PER_DEG_LAT * math.cos(math.radians(BASE_LAT)))
    stop_rows = ["stop_id,name,lat,lon,mode"]
    for col in range(spec.width):
        for row in range(spec.height):
            lat = BASE_LAT + row * dlat
            lon = BASE_LON + col * dlon
            stop_rows.append(f"{stop_id(col, row)},Grid c{col} r{row},{lat!r},{lon!r},{spec.mode}")

    tt_rows = ["service_id,run_id,seq,from_stop,to_stop,departure_min,duration_min"]

    def emit_line(service: str, stops: list[str], line_index: int) -> None:
        for dep in _departures(spec, len(stops), line_index):
            run = f"{service}T{dep:04d}"
            for k in range(len(stops) - 1):
                departure = dep + k * spec.leg_min
                tt_rows.append(
                    f"{service},{run},{k + 1},{stops[k]},{stops[k + 1]},{departure},{spec.leg_min}"
                )

    line_index = 0
    if spec.height >= 2:
        for col in range(spec.width):
            stops = [stop_id(col, row) for row in range(spec.height)]
            emit_line(f"V{col:02d}A", stops, line_index)
            emit_line(f"V{col:02d}B", stops[::-1], line_index)
            line_index += 1
    if spec.width >= 2:
        for row in range(spec.height):
            stops = [stop_id(col, row) for col in range(spec.width)]
            emit_line(f"H{row:02d}A", stops, line_index)
            emit_line(f"H{row:02d}B", stops[::-1], line_index)
            line_index += 1
    return stop_rows, tt_rows


def build_synthetic_network(spec: SyntheticNetworkSpec) -> TransitNetwork:
    stop_rows, tt_rows = synthetic_rows(spec)
    return load_network(stop_rows, tt_rows)


def generate_synthetic_network(spec: SyntheticNetworkSpec, out_dir: str | Path) -> tuple[Path, Path]:
    """Write stops.csv / timetable.csv for the grid and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stop_rows, tt_rows = synthetic_rows(spec)
    stops_path = out_dir / "stops.csv"
    timetable_path = out_dir / "timetable.csv"
    stops_path.write_text("\n".join(stop_rows) + "\n", encoding="utf-8")
    timetable_path.write_text("\n".join(tt_rows) + "\n", encoding="utf-8")
    return stops_path, timetable_path
