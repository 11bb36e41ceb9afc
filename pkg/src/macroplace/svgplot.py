"""Self-contained SVG rendering of a layout and placement: one rect per
site column band, one per macro, dashed rects for regions, and outlines
around cascade shapes."""

from __future__ import annotations

from .model import Design, FpgaLayout, MACRO_RESOURCES, ResourceType

_COLUMN_FILL = {
    "CLB": "#d9d9d9",
    "DSP": "#9ecae1",
    "BRAM": "#a1d99b",
    "IO": "#fdd0a2",
}
_MACRO_FILL = {ResourceType.DSP: "#08519c", ResourceType.BRAM: "#006d2c"}
_DEFAULT_FILL = "#bdbdbd"


def _rect(x, y, w, h, style: str) -> str:
    return f'<rect x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" height="{h:.3f}" {style}/>'


def write_svg(layout: FpgaLayout, design: Design, positions: dict[str, tuple[float, float]]) -> str:
    """Render to an SVG string (y flipped so the chip origin is bottom-left)."""
    W, H = layout.grid_w, layout.grid_h
    scale = max(1.0, 720.0 / max(W, H))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W * scale:.0f}" height="{H * scale:.0f}" '
        f'viewBox="0 0 {W} {H}">',
        f'<g transform="translate(0,{H}) scale(1,-1)">',
        _rect(0, 0, W, H, 'fill="#ffffff" stroke="#000000" stroke-width="0.1"'),
    ]
    for x in sorted(layout.columns):
        st = layout.column_type(x)
        fill = _COLUMN_FILL.get(st.name, _DEFAULT_FILL)
        parts.append(_rect(x, 0, st.width, H, f'fill="{fill}" stroke="none"'))
    for region in design.regions.values():
        for xl, yl, xh, yh in region.rects:
            parts.append(
                _rect(
                    xl, yl, xh - xl, yh - yl,
                    'fill="none" stroke="#e6550d" stroke-width="0.3" stroke-dasharray="1,0.6"',
                )
            )
    shape_members = {m for s in design.shapes for m in s.members}
    for inst in design.instances:
        if inst.resource not in MACRO_RESOURCES or inst.name not in positions:
            continue
        x, y = positions[inst.name]
        fill = _MACRO_FILL[inst.resource]
        parts.append(_rect(x, y, inst.width, inst.height, f'fill="{fill}" fill-opacity="0.8" stroke="none"'))
    for shape in design.shapes:
        pts = [positions[m] for m in shape.members if m in positions]
        if len(pts) != len(shape.members):
            continue
        member = design.instance(shape.members[0])
        xl = min(p[0] for p in pts)
        yl = min(p[1] for p in pts)
        xh = max(p[0] for p in pts) + member.width
        yh = max(p[1] for p in pts) + member.height
        parts.append(
            _rect(xl, yl, xh - xl, yh - yl, 'fill="none" stroke="#756bb1" stroke-width="0.25"')
        )
    parts.append("</g></svg>")
    return "\n".join(parts) + "\n"
