"""Resolve messages to US states: coordinates, then tagged place, then free-text location."""

from __future__ import annotations

import csv
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .records import MessageRecord

EARTH_RADIUS_KM = 6371.0088


@lru_cache(maxsize=1)
def _state_table() -> tuple[tuple[str, str, int, int], ...]:
    text = resources.files("tweetmine.data").joinpath("states.tsv").read_text(encoding="utf-8")
    rows = csv.DictReader(text.splitlines(), delimiter="\t")
    return tuple((r["code"], r["name"], int(r["tile_row"]), int(r["tile_col"])) for r in rows)


STATE_CODES: frozenset[str] = frozenset(code for code, *_ in _state_table())
STATE_NAMES: dict[str, str] = {name: code for code, name, *_ in _state_table()}
STATE_NAME_OF: dict[str, str] = {code: name for code, name, *_ in _state_table()}
# "washington" alone means the state; "washington dc" / "d.c." handled as aliases
_STATE_ALIASES = {"washington dc": "DC", "washington d.c.": "DC", "d.c.": "DC", "dc": "DC"}


def is_state(code: str) -> bool:
    return code in STATE_CODES


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


@dataclass(frozen=True)
class Place:
    name: str
    state: str
    latitude: float
    longitude: float
    population: int


@dataclass
class Gazetteer:
    entries: list[Place]
    cell_deg: float = 1.0
    _by_name: dict[str, list[Place]] = field(default_factory=dict, repr=False)
    _grid: dict[tuple[int, int], list[int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        by_name = defaultdict(list)
        grid = defaultdict(list)
        for i, p in enumerate(self.entries):
            if p.state not in STATE_CODES:
                raise ValueError(f"unknown state code {p.state!r} for {p.name!r}")
            by_name[p.name].append(p)
            grid[self._cell(p.latitude, p.longitude)].append(i)
        self._by_name = dict(by_name)
        self._grid = dict(grid)

    @classmethod
    def from_tsv(cls, path: str | Path | None = None) -> "Gazetteer":
        """Load ``name, state, latitude, longitude, population`` rows (header required)."""
        if path is None:
            text = resources.files("tweetmine.data").joinpath("gazetteer_us.tsv").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        reader = csv.DictReader(text.splitlines(), delimiter="\t")
        missing = {"name", "state", "latitude", "longitude"} - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"gazetteer {path or 'gazetteer_us.tsv'} lacks columns {sorted(missing)}")
        entries = [
            Place(
                name=r["name"].strip().casefold(),
                state=r["state"].strip().upper(),
                latitude=float(r["latitude"]),
                longitude=float(r["longitude"]),
                population=int(float(r.get("population") or 0)),
            )
            for r in reader
        ]
        return cls(entries)

    def _cell(self, lat: float, lon: float) -> tuple[int, int]:
        return (math.floor(lat / self.cell_deg), math.floor(lon / self.cell_deg))

    def places(self, name: str) -> list[Place]:
        return self._by_name.get(name.casefold().strip(), [])

    def nearest(self, lat: float, lon: float, radius_km: float) -> Place | None:
        """Nearest entry within ``radius_km`` using the grid index.

        Ties on distance go to the larger population, then lower entry order.
        """
        # a cell spans at least 111 km of latitude; longitude span shrinks with cos(lat)
        dlat = math.ceil(radius_km / (111.0 * self.cell_deg)) + 1
        max_abs_lat = min(89.9, abs(lat) + dlat * self.cell_deg)
        dlon = math.ceil(radius_km / (111.0 * self.cell_deg * math.cos(math.radians(max_abs_lat)))) + 1
        ci, cj = self._cell(lat, lon)
        ncols = int(round(360 / self.cell_deg))
        candidates = []
        if 2 * dlon + 1 >= ncols:
            candidates = range(len(self.entries))
        else:
            for i in range(ci - dlat, ci + dlat + 1):
                for j in range(cj - dlon, cj + dlon + 1):
                    jj = (j + ncols // 2) % ncols - ncols // 2
                    candidates.extend(self._grid.get((i, jj), ()))
        return self._best(lat, lon, radius_km, sorted(candidates))

    def nearest_bruteforce(self, lat: float, lon: float, radius_km: float) -> Place | None:
        return self._best(lat, lon, radius_km, range(len(self.entries)))

    def _best(self, lat, lon, radius_km, indices) -> Place | None:
        best_key, best = None, None
        for i in indices:
            p = self.entries[i]
            d = haversine_km(lat, lon, p.latitude, p.longitude)
            if d > radius_km:
                continue
            key = (d, -p.population, i)
            if best_key is None or key < best_key:
                best_key, best = key, p
        return best


def reverse_geocode(lat, lon, gaz: Gazetteer, radius_km: float = 100.0) -> str | None:
    if lat is None or lon is None:
        return None
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        return None
    p = gaz.nearest(lat, lon, radius_km)
    return p.state if p else None


_SPLIT_RE = re.compile(r"[,/|;]+|\s+-\s+")
_TOKEN_RE = re.compile(r"[a-z][a-z.']*")


def _lookup_state(text: str) -> str | None:
    t = text.strip().strip(".").strip()
    if not t:
        return None
    if t in _STATE_ALIASES:
        return _STATE_ALIASES[t]
    if t in STATE_NAMES:
        return STATE_NAMES[t]
    up = t.upper()
    if len(t) == 2 and up in STATE_CODES:
        return up
    return None


def text_resolve(location_text: str | None, gaz: Gazetteer) -> str | None:
    """Match free text against state names, abbreviations and gazetteer cities.

    Priority: ``city, state`` where the city exists in that state; a bare
    state name or abbreviation; a city name found in exactly one state.
    """
    if not location_text:
        return None
    text = location_text.casefold().strip()
    if not text:
        return None
    parts = [p.strip() for p in _SPLIT_RE.split(text) if p.strip()]
    if not parts:
        return None

    # (a) city, state
    for i in range(len(parts) - 1):
        state = _lookup_state(parts[i + 1])
        if state and any(p.state == state for p in gaz.places(parts[i])):
            return state
    # "gainesville fl" without comma
    words = text.replace(",", " ").split()
    for cut in range(len(words) - 1, 0, -1):
        state = _lookup_state(" ".join(words[cut:]))
        if state and any(p.state == state for p in gaz.places(" ".join(words[:cut]))):
            return state

    # (b) bare state name or abbreviation as a standalone part or token run
    for part in parts:
        state = _lookup_state(part)
        if state:
            return state
    tokens = _TOKEN_RE.findall(text)
    for n in (3, 2, 1):
        for i in range(len(tokens) - n + 1):
            phrase = " ".join(tokens[i : i + n])
            if phrase in STATE_NAMES:
                return STATE_NAMES[phrase]
    # abbreviations inside longer text only when written in capitals ("IN", "OK", "ME" are words)
    for tok in re.findall(r"\b[A-Z]{2}\b", location_text):
        if tok in STATE_CODES:
            return tok

    # (c) unambiguous bare city
    for part in parts:
        states = {p.state for p in gaz.places(part)}
        if len(states) == 1:
            return next(iter(states))
    return None


TIERS = ("coordinates", "place", "user_location")


def resolve_with_tier(record: MessageRecord, gaz: Gazetteer, radius_km: float = 100.0) -> tuple[str | None, str | None]:
    state = reverse_geocode(record.latitude, record.longitude, gaz, radius_km)
    if state:
        return state, "coordinates"
    state = text_resolve(record.place_name, gaz)
    if state:
        return state, "place"
    state = text_resolve(record.user_location, gaz)
    if state:
        return state, "user_location"
    return None, None


def resolve(record: MessageRecord, gaz: Gazetteer, radius_km: float = 100.0) -> str | None:
    return resolve_with_tier(record, gaz, radius_km)[0]
