"""Self-contained SVG regret plots (no plotting library dependency).

Each chart draws, per algorithm, the across-trial mean as a polyline and a
+- one-standard-deviation band as a filled polygon. Elements carry stable
ids (``mean-<algo>``, ``band-<algo>``) and the axis transform is exposed
through :class:`AxisTransform` so tests can read values back from the
emitted coordinates.
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .bandit import RegretCurve

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 40, 48

PALETTE = {
    "snots": "#1f77b4",
    "nots-fno": "#d62728",
    "sto-nts": "#9467bd",
    "gp-ts": "#2ca02c",
    "bo-logei": "#ff7f0e",
    "bfo": "#8c564b",
    "rs": "#7f7f7f",
}
DASHES = {
    "snots": "",
    "nots-fno": "",
    "sto-nts": "6,3",
    "gp-ts": "4,2",
    "bo-logei": "8,2,2,2",
    "bfo": "2,2",
    "rs": "10,4",
}


@dataclass(frozen=True)
class AxisTransform:
    """Affine data-to-pixel maps used by the renderer (and its tests)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def x_px(self, x):
        span = self.x_max - self.x_min or 1.0
        return MARGIN_L + (np.asarray(x) - self.x_min) / span * (
            WIDTH - MARGIN_L - MARGIN_R
        )

    def y_px(self, y):
        span = self.y_max - self.y_min or 1.0
        return HEIGHT - MARGIN_B - (np.asarray(y) - self.y_min) / span * (
            HEIGHT - MARGIN_T - MARGIN_B
        )

    def y_from_px(self, py):
        span = self.y_max - self.y_min or 1.0
        return self.y_min + (HEIGHT - MARGIN_B - np.asarray(py)) / (
            HEIGHT - MARGIN_T - MARGIN_B
        ) * span


def _fmt(v) -> str:
    return f"{float(v):.3f}"


def _series(curve: RegretCurve, which: str):
    if which == "cumulative":
        return curve.mean_cumulative, curve.std_cumulative
    return curve.mean_average, curve.std_average


def axis_transform(curves: Dict[str, RegretCurve], which: str) -> AxisTransform:
    budget = next(iter(curves.values())).budget
    lo, hi = np.inf, -np.inf
    for curve in curves.values():
        mean, std = _series(curve, which)
        lo = min(lo, float(np.min(mean - std)))
        hi = max(hi, float(np.max(mean + std)))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return AxisTransform(1.0, float(budget), lo - pad, hi + pad)


def render_regret_svg(curves: Dict[str, RegretCurve], which: str, title: str) -> str:
    """One chart; `which` is 'cumulative' or 'average'."""
    if which not in ("cumulative", "average"):
        raise ValueError("which must be 'cumulative' or 'average'")
    tf = axis_transform(curves, which)
    budget = next(iter(curves.values())).budget
    steps = np.arange(1, budget + 1)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{title}</text>',
    ]

    # axes and ticks
    x0, x1 = tf.x_px(tf.x_min), tf.x_px(tf.x_max)
    y0, y1 = tf.y_px(tf.y_min), tf.y_px(tf.y_max)
    parts.append(
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y0)}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0)}" y2="{_fmt(y1)}" stroke="black"/>'
    )
    for frac in np.linspace(0, 1, 6):
        xv = tf.x_min + frac * (tf.x_max - tf.x_min)
        px = tf.x_px(xv)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(y0)}" x2="{_fmt(px)}" y2="{_fmt(y0 + 5)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{_fmt(y0 + 20)}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{xv:.0f}</text>'
        )
        yv = tf.y_min + frac * (tf.y_max - tf.y_min)
        py = tf.y_px(yv)
        parts.append(
            f'<line x1="{_fmt(x0 - 5)}" y1="{_fmt(py)}" x2="{_fmt(x0)}" y2="{_fmt(py)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt(x0 - 8)}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{yv:.3g}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-size="13" font-family="sans-serif">iteration</text>'
    )

    for name in sorted(curves):
        curve = curves[name]
        mean, std = _series(curve, which)
        color = PALETTE.get(name, "#000000")
        xs = tf.x_px(steps)
        upper = tf.y_px(mean + std)
        lower = tf.y_px(mean - std)
        band_pts = " ".join(
            f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, upper)
        ) + " " + " ".join(
            f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs[::-1], lower[::-1])
        )
        parts.append(
            f'<polygon id="band-{name}" points="{band_pts}" fill="{color}" '
            f'fill-opacity="0.18" stroke="none"/>'
        )
        mean_pts = " ".join(
            f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, tf.y_px(mean))
        )
        dash = DASHES.get(name, "")
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        parts.append(
            f'<polyline id="mean-{name}" points="{mean_pts}" fill="none" '
            f'stroke="{color}" stroke-width="1.8"{dash_attr}/>'
        )

    # legend
    ly = MARGIN_T + 6
    for name in sorted(curves):
        color = PALETTE.get(name, "#000000")
        parts.append(
            f'<line x1="{x1 - 150}" y1="{ly}" x2="{x1 - 120}" y2="{ly}" '
            f'stroke="{color}" stroke-width="3"/>'
        )
        parts.append(
            f'<text x="{x1 - 112}" y="{ly + 4}" font-size="12" '
            f'font-family="sans-serif">{name}</text>'
        )
        ly += 18

    parts.append("</svg>")
    return "\n".join(parts)
