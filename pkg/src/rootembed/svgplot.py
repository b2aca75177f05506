"""Static SVG rendering of barrier regions (time horizontal, space vertical)."""
from __future__ import annotations

import math
from typing import Sequence

from .barrier import Barrier

BLUE = "#1f4fd1"
RED = "#d1301f"
OTHERS = ("#2a9d3a", "#8a2be2", "#e08a00", "#555555")

W, H = 520, 380
LEFT, RIGHT, TOP, BOTTOM = 60, 130, 20, 45


def _f(v: float) -> str:
    return f"{v:.2f}"


def _colour(lam, k: int) -> str:
    if lam is not None and math.isclose(lam, 1.0):
        return BLUE
    if lam is not None and lam < 1.0:
        return RED
    return OTHERS[k % len(OTHERS)]


def render(barriers: Sequence[Barrier], labels: Sequence[str] | None = None, title: str = "") -> str:
    """Filled epigraphs ``{t >= r(x)}``; NEVER nodes contribute nothing up to the horizon.

    Barriers with ``lam < 1`` are drawn first so that the ``lam = 1`` region sits on top.
    """
    if not barriers:
        raise ValueError("nothing to plot")
    if labels is None:
        labels = [f"lambda={b.lam:g}" if b.lam is not None else f"barrier {i}" for i, b in enumerate(barriers)]
    t_max = max(b.horizon for b in barriers) or 1.0
    x_lo = min(b.xs[0] for b in barriers)
    x_hi = max(b.xs[-1] for b in barriers)
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(t):
        return LEFT + pw * t / t_max

    def py(x):
        return TOP + ph * (x_hi - x) / (x_hi - x_lo)

    order = sorted(range(len(barriers)), key=lambda i: (barriers[i].lam is not None and math.isclose(barriers[i].lam, 1.0), i))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{W // 2}" y="14" font-size="12" text-anchor="middle" font-family="sans-serif">{title}</text>')
    for k, i in enumerate(order):
        b = barriers[i]
        xs, r = b.xs, b.r
        edges = [xs[0]] + [(xs[j] + xs[j + 1]) / 2 for j in range(len(xs) - 1)] + [xs[-1]]
        cmds = []
        for j, rj in enumerate(r):
            if math.isinf(rj) or rj >= b.horizon:
                continue
            x0, x1 = edges[j], edges[j + 1]
            if x1 <= x0:
                continue
            cmds.append(f"M{_f(px(rj))} {_f(py(x1))}H{_f(px(b.horizon))}V{_f(py(x0))}H{_f(px(rj))}Z")
        colour = _colour(b.lam, k)
        opacity = "0.85" if colour == BLUE else "0.9"
        out.append(f'<path d="{"".join(cmds)}" fill="{colour}" fill-opacity="{opacity}" stroke="none"/>')
        ly = TOP + 16 + 18 * k
        out.append(f'<rect x="{W - RIGHT + 12}" y="{ly - 9}" width="12" height="10" fill="{colour}"/>')
        out.append(f'<text x="{W - RIGHT + 30}" y="{ly}" font-size="11" font-family="sans-serif">{labels[i]}</text>')
    # axes
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for q in range(5):
        t = t_max * q / 4
        out.append(f'<text x="{_f(px(t))}" y="{H - BOTTOM + 15}" font-size="10" text-anchor="middle" font-family="sans-serif">{t:.3g}</text>')
        x = x_lo + (x_hi - x_lo) * q / 4
        out.append(f'<text x="{LEFT - 6}" y="{_f(py(x) + 3)}" font-size="10" text-anchor="end" font-family="sans-serif">{x:.3g}</text>')
    out.append(f'<text x="{LEFT + pw // 2}" y="{H - 8}" font-size="11" text-anchor="middle" font-family="sans-serif">t</text>')
    out.append(f'<text x="14" y="{TOP + ph // 2}" font-size="11" text-anchor="middle" font-family="sans-serif">x</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
