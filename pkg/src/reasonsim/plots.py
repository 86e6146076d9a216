"""Minimal SVG 1.1 line charts (polylines, axes, ticks, legend)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 720, 360
MARGIN = (60, 20, 30, 45)  # left, right, top, bottom
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo: float, hi: float, n: int = 5):
    span = hi - lo
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * span:
        out.append(round(v, 10))
        v += step
    return out


def _extent(values, pad=0.05):
    lo, hi = min(values), max(values)
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    d = (hi - lo) * pad
    return lo - d, hi + d


class Chart:
    def __init__(self, title: str, xlabel: str, ylabel: str, xlim=None, ylim=None):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.xlim, self.ylim = xlim, ylim
        self.series = []  # (label, xs, ys, color, dashed)
        self.hlines = []  # (y, label, color)
        self.markers = []  # (x, y, label, color)

    def line(self, xs, ys, label, color=None, dashed=False):
        color = color or PALETTE[len(self.series) % len(PALETTE)]
        self.series.append((label, list(map(float, xs)), list(map(float, ys)), color, dashed))

    def hline(self, y, label, color="#555555"):
        self.hlines.append((float(y), label, color))

    def marker(self, x, y, label, color="#000000"):
        self.markers.append((float(x), float(y), label, color))

    def _limits(self):
        xs = [x for s in self.series for x in s[1]] + [m[0] for m in self.markers]
        ys = [y for s in self.series for y in s[2]] + [h[0] for h in self.hlines] + [m[1] for m in self.markers]
        return self.xlim or _extent(xs, 0.0), self.ylim or _extent(ys)

    def render(self) -> str:
        (x0, x1), (y0, y1) = self._limits()
        left, right, top, bottom = MARGIN
        pw, ph = WIDTH - left - right, HEIGHT - top - bottom

        def X(x):
            return left + (x - x0) / (x1 - x0) * pw

        def Y(y):
            return top + (1.0 - (y - y0) / (y1 - y0)) * ph

        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(self.title)}</text>',
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        for tx in _ticks(x0, x1):
            out.append(f'<line x1="{X(tx):.2f}" y1="{top + ph}" x2="{X(tx):.2f}" y2="{top + ph + 4}" stroke="black"/>')
            out.append(f'<text x="{X(tx):.2f}" y="{top + ph + 16}" text-anchor="middle">{tx:g}</text>')
        for ty in _ticks(y0, y1):
            out.append(f'<line x1="{left - 4}" y1="{Y(ty):.2f}" x2="{left}" y2="{Y(ty):.2f}" stroke="black"/>')
            out.append(f'<text x="{left - 6}" y="{Y(ty) + 4:.2f}" text-anchor="end">{ty:g}</text>')
        out.append(f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 8}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(
            f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(self.ylabel)}</text>'
        )
        for y, label, color in self.hlines:
            out.append(
                f'<line class="hline" x1="{left}" y1="{Y(y):.2f}" x2="{left + pw}" y2="{Y(y):.2f}" '
                f'stroke="{color}" stroke-dasharray="6 4"><title>{escape(label)}</title></line>'
            )
        for label, xs, ys, color, dashed in self.series:
            pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(xs, ys))
            dash = ' stroke-dasharray="4 3"' if dashed else ""
            out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}">'
                f"<title>{escape(label)}</title></polyline>"
            )
        for x, y, label, color in self.markers:
            out.append(
                f'<circle class="marker" cx="{X(x):.2f}" cy="{Y(y):.2f}" r="4" fill="none" stroke="{color}">'
                f"<title>{escape(label)}</title></circle>"
            )
        entries = [(s[0], s[3]) for s in self.series] + [(h[1], h[2]) for h in self.hlines]
        for i, (label, color) in enumerate(entries):
            ly = top + 12 + 14 * i
            out.append(f'<line x1="{left + pw - 150}" y1="{ly - 4}" x2="{left + pw - 130}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{left + pw - 125}" y="{ly}">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())


def trajectory_chart(log, road) -> Chart:
    recs = log.records
    ch = Chart(f"Trajectory ({log.mode})", "x [m]", "y [m]",
               xlim=(0.0, road.road_length), ylim=(road.y_min - 0.5, road.y_max + 0.5))
    ch.line([r.ego.x for r in recs], [r.ego.y for r in recs], "ego")
    ch.line([r.cyclist.x for r in recs], [r.cyclist.y for r in recs], "cyclist")
    for path in log.paths:
        ch.line(path.samples[:, 0], path.samples[:, 1], f"path {path.id}", color="#aaaaaa", dashed=True)
    ch.hline(road.centerline_y, "centerline", "#000000")
    return ch


def scores_chart(log, thresholds) -> Chart:
    recs = log.records
    t = [r.t for r in recs]
    ch = Chart(f"Reason scores ({log.mode})", "t [s]", "score", ylim=(0.0, 1.05))
    ch.line(t, [r.report.r_policymaker for r in recs], "policymaker")
    ch.line(t, [r.report.r_vru for r in recs], "cyclist (VRU)")
    ch.line(t, [r.report.r_driver for r in recs], "driver")
    taus = sorted({thresholds.tau_policymaker, thresholds.tau_vru, thresholds.tau_driver})
    for tau in taus:
        ch.hline(tau, f"tau = {tau:g}")
    for r in recs:
        if r.trigger is not None:
            ch.marker(r.t, r.report.score(r.trigger), f"trigger {r.trigger.value} at t={r.t:.1f}")
    return ch


def speed_chart(log) -> Chart:
    recs = log.records
    t = [r.t for r in recs]
    ch = Chart(f"Speed ({log.mode})", "t [s]", "v [m/s]")
    ch.line(t, [r.ego.v for r in recs], "ego")
    ch.line(t, [r.cyclist.v for r in recs], "cyclist")
    return ch
