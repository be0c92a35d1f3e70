"""Deterministic SVG rendering of entanglement regions."""

from __future__ import annotations

import re
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .analysis import RegionGrid

C1_RANGE = (0.0, 6.0)
C2_RANGE = (0.0, 3.0)

_HEX = re.compile(r"^#[0-9a-fA-F]{6}$")


@dataclass(frozen=True)
class PlotStyle:
    cell_px: int = 4
    sp_color: str = "#2ca02c"
    numeric_color: str = "#1f77b4"
    overlay_alpha: float = 0.6

    def __post_init__(self):
        if self.cell_px < 1:
            raise ValueError(f"cell_px must be >= 1, got {self.cell_px}")
        if not 0 < self.overlay_alpha <= 1:
            raise ValueError(f"overlay_alpha must be in (0, 1], got {self.overlay_alpha}")
        for name in ("sp_color", "numeric_color"):
            if not _HEX.match(getattr(self, name)):
                raise ValueError(f"{name} must look like #rrggbb, got {getattr(self, name)!r}")


def _f(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def render_region_svg(r: RegionGrid, style: PlotStyle = PlotStyle()) -> str:
    """SVG of one c3 slice: c1 horizontal over [0, 6], c2 vertical over [0, 3].

    Each grid value ``c`` owns the cell ``[c - step, c]`` on its axis, so a
    grid starting at one step tiles the axis range exactly. The
    stationary-phase region is drawn first, the numerical region on top.
    """
    sx = style.cell_px / r.c1_step
    sy = style.cell_px / r.c2_step
    plot_w = (C1_RANGE[1] - C1_RANGE[0]) * sx
    plot_h = (C2_RANGE[1] - C2_RANGE[0]) * sy
    left, top, right, bottom = 60.0, 40.0, 190.0, 50.0
    width, height = left + plot_w + right, top + plot_h + bottom

    def px(c1: float) -> float:
        return left + (c1 - C1_RANGE[0]) * sx

    def py(c2: float) -> float:
        return top + plot_h - (c2 - C2_RANGE[0]) * sy

    cw, ch = r.c1_step * sx, r.c2_step * sy

    def cells(mask, cls: str, fill: str, extra: str = "") -> list[str]:
        out = []
        for j, c2 in enumerate(r.c2_axis):
            for i, c1 in enumerate(r.c1_axis):
                if mask[i, j]:
                    out.append(
                        f'<rect class="{cls}" x="{_f(px(c1 - r.c1_step))}" y="{_f(py(c2))}" '
                        f'width="{_f(cw)}" height="{_f(ch)}" fill="{fill}"{extra}/>'
                    )
        return out

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_f(width)}" '
        f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">',
        f'<title>Entanglement region, c3 = {escape(format(r.c3, "g"))}</title>',
        f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="#ffffff"/>',
        '<g id="sp-region">',
        *cells(r.sp_mask, "sp-cell", style.sp_color),
        "</g>",
        '<g id="numeric-region">',
        *cells(r.numeric_mask, "numeric-cell", style.numeric_color,
               f' fill-opacity="{_f(style.overlay_alpha)}"'),
        "</g>",
        '<g id="axes" stroke="#000000" stroke-width="1" fill="none">',
        f'<line x1="{_f(px(0))}" y1="{_f(py(0))}" x2="{_f(px(6))}" y2="{_f(py(0))}"/>',
        f'<line x1="{_f(px(0))}" y1="{_f(py(0))}" x2="{_f(px(0))}" y2="{_f(py(3))}"/>',
    ]
    for t in range(7):
        lines.append(f'<line x1="{_f(px(t))}" y1="{_f(py(0))}" x2="{_f(px(t))}" y2="{_f(py(0) + 5)}"/>')
    for t in range(4):
        lines.append(f'<line x1="{_f(px(0) - 5)}" y1="{_f(py(t))}" x2="{_f(px(0))}" y2="{_f(py(t))}"/>')
    lines.append("</g>")
    lines.append('<g id="labels" font-family="sans-serif" font-size="12" fill="#000000">')
    for t in range(7):
        lines.append(f'<text x="{_f(px(t))}" y="{_f(py(0) + 18)}" text-anchor="middle">{t}</text>')
    for t in range(4):
        lines.append(f'<text x="{_f(px(0) - 8)}" y="{_f(py(t) + 4)}" text-anchor="end">{t}</text>')
    lines += [
        f'<text x="{_f(left + plot_w / 2)}" y="{_f(height - 12)}" text-anchor="middle">c1 = kappa L</text>',
        f'<text x="16" y="{_f(top + plot_h / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_f(top + plot_h / 2)})">c2 = kappa Omega sigma^2</text>',
        f'<text x="{_f(left + plot_w / 2)}" y="24" text-anchor="middle" font-size="14">'
        f'c3 = {escape(format(r.c3, "g"))}</text>',
        "</g>",
    ]
    lx, ly = left + plot_w + 20, top + 10
    lines += [
        '<g id="legend" font-family="sans-serif" font-size="12" fill="#000000">',
        f'<circle cx="{_f(lx + 6)}" cy="{_f(ly)}" r="6" fill="{style.sp_color}"/>',
        f'<text x="{_f(lx + 18)}" y="{_f(ly + 4)}">stationary phase</text>',
        f'<circle cx="{_f(lx + 6)}" cy="{_f(ly + 22)}" r="6" fill="{style.numeric_color}" '
        f'fill-opacity="{_f(style.overlay_alpha)}"/>',
        f'<text x="{_f(lx + 18)}" y="{_f(ly + 26)}">numerical</text>',
        "</g>",
        "</svg>",
    ]
    return "\n".join(lines) + "\n"
