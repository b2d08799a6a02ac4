"""SVG state choropleths and word-cloud sizing."""

from __future__ import annotations

import json
import logging
import math
import re
from html import escape
from pathlib import Path
from typing import Mapping, Sequence

from .geocode import _state_table, is_state

logger = logging.getLogger(__name__)

LOW_RGB = (239, 243, 255)
HIGH_RGB = (8, 48, 107)
NEUTRAL_FILL = "#d9d9d9"


def intensity(value: float, vmin: float, vmax: float) -> float:
    """Position of ``value`` on the ramp, clamped to [0, 1]; a degenerate range maps to 1."""
    if vmax <= vmin:
        return 1.0
    return min(1.0, max(0.0, (value - vmin) / (vmax - vmin)))


def ramp_color(t: float) -> str:
    rgb = [round(lo + (hi - lo) * t) for lo, hi in zip(LOW_RGB, HIGH_RGB)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _state_key(props: Mapping) -> str | None:
    names = {name: code for code, name, *_ in _state_table()}
    for key in ("code", "state", "STUSPS", "postal", "abbr"):
        v = props.get(key)
        if isinstance(v, str) and is_state(v.upper()):
            return v.upper()
    for key in ("name", "NAME"):
        v = props.get(key)
        if isinstance(v, str) and v.casefold() in names:
            return names[v.casefold()]
    return None


def load_geometry(path: str | Path) -> dict[str, list[list[list[tuple[float, float]]]]]:
    """Read GeoJSON polygons keyed by state code: state -> polygons -> rings -> (lon, lat)."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    out: dict[str, list] = {}
    for feat in data["features"]:
        code = _state_key(feat.get("properties") or {})
        if code is None:
            continue
        geom = feat["geometry"]
        polys = [geom["coordinates"]] if geom["type"] == "Polygon" else geom["coordinates"]
        out.setdefault(code, []).extend([[tuple(pt[:2]) for pt in ring] for ring in poly] for poly in polys)
    return out


def tile_grid_geojson(size: float = 1.0) -> dict:
    """Square-tile state layout (one tile per state), usable where boundary files are unavailable."""
    feats = []
    for code, name, row, col in _state_table():
        x0, y0 = col * size, -row * size
        ring = [[x0, y0], [x0 + size * 0.95, y0], [x0 + size * 0.95, y0 - size * 0.95], [x0, y0 - size * 0.95], [x0, y0]]
        feats.append({
            "type": "Feature",
            "properties": {"code": code, "name": name},
            "geometry": {"type": "Polygon", "coordinates": [ring]},
        })
    return {"type": "FeatureCollection", "features": feats}


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def render_choropleth(
    values: Mapping[str, float],
    geometry: Mapping[str, Sequence],
    title: str = "",
    vmin: float | None = None,
    vmax: float | None = None,
    width: int = 960,
) -> str:
    """SVG map with states shaded on a linear single-hue ramp between ``vmin`` and ``vmax``.

    The range defaults to the observed min and max. States without a value
    get a neutral fill; values for states missing from ``geometry`` are
    skipped with a warning.
    """
    for s in sorted(values):
        if s not in geometry:
            logger.warning("no geometry for state %s; skipped", s)
    present = [float(v) for s, v in values.items() if s in geometry]
    lo = vmin if vmin is not None else (min(present) if present else 0.0)
    hi = vmax if vmax is not None else (max(present) if present else 1.0)

    lons = [pt[0] for polys in geometry.values() for poly in polys for ring in poly for pt in ring]
    lats = [pt[1] for polys in geometry.values() for poly in polys for ring in poly for pt in ring]
    x0, x1, y0, y1 = min(lons), max(lons), min(lats), max(lats)
    # equirectangular with longitude shrunk at the mid latitude
    kx = math.cos(math.radians((y0 + y1) / 2))
    map_w = width - 40
    scale = map_w / ((x1 - x0) * kx or 1.0)
    map_h = (y1 - y0) * scale
    top = 50
    height = int(math.ceil(top + map_h + 70))

    def proj(pt):
        return (20 + (pt[0] - x0) * kx * scale, top + (y1 - pt[1]) * scale)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<title>{escape(title)}</title>',
        f'<text x="20" y="30" font-family="sans-serif" font-size="18">{escape(title)}</text>',
    ]
    for code in sorted(geometry):
        if code in values:
            fill = ramp_color(intensity(float(values[code]), lo, hi))
            label = f"{code}: {float(values[code]):.4g}"
        else:
            fill, label = NEUTRAL_FILL, f"{code}: no data"
        parts = []
        for poly in geometry[code]:
            for ring in poly:
                pts = [proj(p) for p in ring]
                parts.append("M" + " L".join(f"{x:.2f},{y:.2f}" for x, y in pts) + " Z")
        out.append(
            f'<path id="{code}" d="{" ".join(parts)}" fill="{fill}" stroke="#ffffff" stroke-width="0.8" '
            f'fill-rule="evenodd"><title>{escape(label)}</title></path>'
        )
    ly = top + map_h + 25
    out.append('<defs><linearGradient id="ramp" x1="0" x2="1" y1="0" y2="0">'
               f'<stop offset="0" stop-color="{ramp_color(0.0)}"/><stop offset="1" stop-color="{ramp_color(1.0)}"/>'
               '</linearGradient></defs>')
    out.append(f'<rect x="20" y="{ly:.2f}" width="200" height="12" fill="url(#ramp)" stroke="#888888"/>')
    out.append(f'<text x="20" y="{ly + 28:.2f}" font-family="sans-serif" font-size="12">{_fmt(lo)}</text>')
    out.append(f'<text x="220" y="{ly + 28:.2f}" font-family="sans-serif" font-size="12" text-anchor="end">{_fmt(hi)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def fills(svg: str) -> dict[str, str]:
    """State code -> fill colour parsed back out of a rendered map."""
    return dict(re.findall(r'<path id="([A-Z]{2})" d="[^"]*" fill="(#[0-9a-f]{6})"', svg))


def render_wordcloud_data(top: Sequence[tuple[str, float]]) -> list[tuple[str, float]]:
    """Word sizes proportional to probability, largest scaled to 1."""
    if not top:
        raise ValueError("empty top-word list")
    peak = max(p for _, p in top)
    return [(w, p / peak) for w, p in top]
