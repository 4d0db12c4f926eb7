"""Minimal self-contained SVG scree plot (no plotting dependency)."""

from __future__ import annotations

import numpy as np


def scree_svg(spectrum, knee=None, width=640, height=400, title="Scree plot"):
    """Render eigenvalues against dimension as an SVG document string.

    The knee dimension, when given, is marked with a filled circle and a
    label; the marker carries a ``data-knee`` attribute so the plot can
    be checked programmatically.
    """
    spectrum = np.asarray(spectrum, dtype=float)
    p = len(spectrum)
    if p < 2:
        raise ValueError("need at least 2 eigenvalues to draw a scree plot")
    left, right, top, bottom = 60, 20, 40, 50
    plot_w = width - left - right
    plot_h = height - top - bottom
    y_max = float(spectrum.max()) or 1.0

    def sx(i):
        return left + plot_w * (i / (p - 1)) if p > 1 else left

    def sy(value):
        return top + plot_h * (1.0 - value / y_max)

    points = " ".join(f"{sx(i):.1f},{sy(v):.1f}" for i, v in enumerate(spectrum))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
        # axes
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<text x="{left - 8}" y="{top + 5}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">{y_max:.2f}</text>',
        f'<text x="{left - 8}" y="{top + plot_h}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">0</text>',
        f'<text x="{left}" y="{height - 16}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="11">1</text>',
        f'<text x="{left + plot_w}" y="{height - 16}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="11">{p}</text>',
        f'<text x="{width / 2:.0f}" y="{height - 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">dimension</text>',
        f'<polyline points="{points}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>',
    ]
    for i, value in enumerate(spectrum):
        parts.append(f'<circle cx="{sx(i):.1f}" cy="{sy(value):.1f}" r="2.5" fill="#1f6fb2"/>')
    if knee is not None and 1 <= int(knee) <= p:
        k = int(knee)
        parts.append(
            f'<circle data-knee="{k}" cx="{sx(k - 1):.1f}" cy="{sy(spectrum[k - 1]):.1f}" '
            f'r="5" fill="none" stroke="#c23b22" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{sx(k - 1) + 8:.1f}" y="{sy(spectrum[k - 1]) - 8:.1f}" '
            f'font-family="sans-serif" font-size="12" fill="#c23b22">knee = {k}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
