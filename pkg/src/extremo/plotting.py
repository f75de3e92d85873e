"""Dependency-free SVG bar charts of extremogram curves.

Output is a pure function of the inputs (fixed number formatting, no
timestamps or random ids), so files can be compared byte-for-byte.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .extremogram import ExtremogramCurve
from .permutation import PermutationBands

WIDTH, HEIGHT = 720, 360
MARGIN = {"left": 56, "right": 16, "top": 36, "bottom": 40}


def _f(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _panel(curve: ExtremogramCurve, bands: PermutationBands | None, title: str, x0: float, width: float) -> list[str]:
    left, top = x0 + MARGIN["left"], MARGIN["top"]
    pw = width - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    values = [v if v == v else 0.0 for v in curve.values.tolist()]
    ymax = max(values + ([bands.flat_upper, float(bands.upper.max())] if bands is not None else []) + [1e-9])
    ymax = min(1.0, ymax * 1.1) if ymax < 0.91 else 1.0

    def y(v):
        return top + ph * (1.0 - v / ymax)

    n = len(values)
    slot = pw / n
    bar = max(slot * 0.8, 0.5)
    out = [
        f'<g class="panel">',
        f'<text x="{_f(x0 + width / 2)}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{_f(left)}" y1="{_f(top + ph)}" x2="{_f(left + pw)}" y2="{_f(top + ph)}" stroke="black"/>',
        f'<line x1="{_f(left)}" y1="{_f(top)}" x2="{_f(left)}" y2="{_f(top + ph)}" stroke="black"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        v = ymax * frac
        out.append(
            f'<text x="{_f(left - 6)}" y="{_f(y(v) + 4)}" text-anchor="end" font-size="10">{v:.2f}</text>'
        )
    lags = curve.lags.tolist()
    for k in sorted({0, n // 2, n - 1}):
        out.append(
            f'<text x="{_f(left + slot * (k + 0.5))}" y="{_f(top + ph + 14)}" text-anchor="middle" '
            f'font-size="10">{lags[k]}</text>'
        )
    out.append(f'<text x="{_f(left + pw / 2)}" y="{HEIGHT - 8}" text-anchor="middle" font-size="11">lag</text>')
    for k, v in enumerate(values):
        h = ph * v / ymax
        out.append(
            f'<rect class="bar" x="{_f(left + slot * k + (slot - bar) / 2)}" y="{_f(top + ph - h)}" '
            f'width="{_f(bar)}" height="{_f(h)}" fill="steelblue"/>'
        )
    if bands is not None and bands.config.band_convention == "per_lag":
        for levels, cls in ((bands.upper, "band-upper"), (bands.lower, "band-lower")):
            pts = " ".join(f"{_f(left + slot * (k + 0.5))},{_f(y(v))}" for k, v in enumerate(levels.tolist()))
            out.append(
                f'<polyline class="{cls}" points="{pts}" fill="none" stroke="firebrick" stroke-dasharray="4 3"/>'
            )
    elif bands is not None:
        for level, cls in ((bands.flat_upper, "band-upper"), (bands.flat_lower, "band-lower")):
            out.append(
                f'<line class="{cls}" x1="{_f(left)}" y1="{_f(y(level))}" x2="{_f(left + pw)}" '
                f'y2="{_f(y(level))}" stroke="firebrick" stroke-dasharray="4 3"/>'
            )
    out.append("</g>")
    return out


def _document(width: float, body: list[str], metadata: str | None) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{HEIGHT}" '
        f'viewBox="0 0 {_f(width)} {HEIGHT}">'
    ]
    if metadata:
        head.append(f"<metadata>{escape(metadata)}</metadata>")
    return "\n".join(head + body + ["</svg>"]) + "\n"


def extremogram_svg(
    curve: ExtremogramCurve,
    bands: PermutationBands | None = None,
    title: str = "",
    metadata: str | None = None,
) -> str:
    """Bars per lag; permutation bands drawn dashed (flat or per lag, following the band convention)."""
    return _document(WIDTH, _panel(curve, bands, title, 0, WIDTH), metadata)


def paired_svg(panels, metadata: str | None = None) -> str:
    """Side-by-side panels; ``panels`` is a sequence of ``(curve, bands, title)``."""
    body = []
    for i, (curve, bands, title) in enumerate(panels):
        if curve is None:
            body.append(
                f'<text x="{_f(i * WIDTH + WIDTH / 2)}" y="{HEIGHT / 2}" text-anchor="middle" '
                f'font-size="14">{escape(title)}: unavailable</text>'
            )
        else:
            body.extend(_panel(curve, bands, title, i * WIDTH, WIDTH))
    return _document(WIDTH * len(panels), body, metadata)
