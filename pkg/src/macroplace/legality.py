"""Legality checking for macro placements.

A placement is legal when every DSP/BRAM macro sits on a matching site,
no site slot holds two macros, cascade members occupy consecutive site
indices of one column in order, and every region-constrained instance
lies inside its region. Violations are report entries, never errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import Design, FpgaLayout, MACRO_RESOURCES, ResourceType

EPS = 1e-9


@dataclass(frozen=True)
class Violation:
    kind: str  # off-site | overlap | shape | region
    message: str
    names: tuple[str, ...]


@dataclass
class LegalityReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, message: str, *names: str) -> None:
        self.violations.append(Violation(kind, message, tuple(names)))

    def lines(self) -> list[str]:
        if self.ok:
            return ["OK: no violations"]
        return [f"{v.kind}: {v.message}" for v in self.violations]


def _site_of(layout: FpgaLayout, resource: ResourceType, x: float, y: float):
    """Return (column, site index) if (x, y) is an exact site anchor of
    the resource's hosting type, else None."""
    host = layout.host_type.get(resource)
    if host is None:
        return None
    if x != int(x) or int(x) not in layout.columns:
        return None
    col = int(x)
    if layout.columns[col] != host.name:
        return None
    k, rem = divmod(y, host.height)
    if rem != 0.0:
        return None
    k = int(k)
    if not 0 <= k < layout.grid_h // host.height:
        return None
    return col, k


def check_legality(layout: FpgaLayout, design: Design, positions: dict[str, tuple[float, float]]) -> LegalityReport:
    """Pure function: verify macro site alignment, slot occupancy,
    cascade contiguity/order, and region containment.

    ``positions`` must cover all macro instances; non-macros are checked
    for region containment only when present.
    """
    report = LegalityReport()
    occupied: dict[tuple[int, int], list[str]] = {}
    macro_site: dict[str, tuple[int, int]] = {}

    for inst in design.instances:
        if inst.resource not in MACRO_RESOURCES:
            continue
        if inst.name not in positions:
            report.add("off-site", f"macro {inst.name} has no placement", inst.name)
            continue
        x, y = positions[inst.name]
        site = _site_of(layout, inst.resource, x, y)
        if site is None:
            report.add(
                "off-site",
                f"macro {inst.name} at ({x}, {y}) is not on a {inst.resource.value} site",
                inst.name,
            )
            continue
        macro_site[inst.name] = site
        occupied.setdefault(site, []).append(inst.name)

    for site, names in sorted(occupied.items()):
        col, k = site
        cap = layout.column_type(col).capacity[design.instance(names[0]).resource]
        if len(names) > cap:
            report.add(
                "overlap",
                f"site ({col}, {k}) holds {len(names)} macros: {', '.join(names)}",
                *names,
            )

    for shape in design.shapes:
        sites = [macro_site.get(m) for m in shape.members]
        if any(s is None for s in sites):
            continue  # member already reported off-site
        cols = {c for c, _ in sites}
        if len(cols) != 1:
            report.add("shape", f"shape {shape.id} spans multiple columns", shape.id)
            continue
        ks = [k for _, k in sites]
        if any(ks[j + 1] != ks[j] + 1 for j in range(len(ks) - 1)):
            report.add(
                "shape",
                f"shape {shape.id} members not contiguous/in-order: site indices {ks}",
                shape.id,
            )

    for inst in design.instances:
        if inst.region is None or inst.name not in positions:
            continue
        x, y = positions[inst.name]
        region = design.regions[inst.region]
        if not region.contains(x, y, inst.width, inst.height, EPS):
            report.add(
                "region",
                f"instance {inst.name} at ({x}, {y}) outside region {inst.region}",
                inst.name,
            )

    return report
