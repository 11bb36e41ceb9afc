"""Three-phase macro legalization.

Phase 1 places merged cascade instances greedily, largest first, on the
nearest free run of consecutive sites in one column. Phase 2 legalizes
region-constrained macros region by region (tightest region first) with
a min-cost bipartite matching. Phase 3 matches all remaining macros to
the remaining sites. Site pools shrink monotonically; no site is ever
assigned twice.

Matching arc cost is alpha * precondWL * manhattan(gp position, site),
with alpha = 100 and precondWL the macro's connectivity weight. Costs
are scaled by 2^10 and rounded half-to-even to exact integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .mcf import AssignmentProblem, InfeasibleAssignmentError, solve_assignment
from .model import (
    Design,
    FpgaLayout,
    Instance,
    MACRO_RESOURCES,
    Placement,
    ResourceType,
)
from .wirelength import NetTopology, build_topology

ALPHA = 100.0
COST_SCALE = 1024  # 2**10
K_CAND = 32


class InfeasibleLegalizationError(ValueError):
    """A macro, shape, or region cannot be assigned free sites."""


@dataclass(frozen=True)
class CascadeCandidate:
    column: int
    start: int
    length: int


@dataclass
class SitePool:
    """Free macro sites, tracked per resource as per-column flag arrays."""

    layout: FpgaLayout
    free: dict[ResourceType, dict[int, list[bool]]]

    @classmethod
    def build(cls, layout: FpgaLayout) -> "SitePool":
        free = {}
        for res in MACRO_RESOURCES:
            cols = {}
            for x in layout.columns_for(res):
                cols[x] = [True] * layout.sites_in_column(x)
            free[res] = cols
        return cls(layout, free)

    def consume(self, resource: ResourceType, col: int, k: int) -> None:
        flags = self.free[resource][col]
        if not flags[k]:
            raise InfeasibleLegalizationError(f"site ({col}, {k}) already consumed")
        flags[k] = False

    def consume_footprint(self, resource: ResourceType, x: float, y: float, w: float, h: float) -> None:
        """Consume every site overlapping the given box (used for fixed macros)."""
        host = self.layout.host_type[resource]
        for col, flags in self.free[resource].items():
            if col + host.width <= x or col >= x + w:
                continue
            for k in range(len(flags)):
                if k * host.height < y + h and (k + 1) * host.height > y:
                    flags[k] = False

    def site_anchor(self, resource: ResourceType, col: int, k: int) -> tuple[float, float]:
        return float(col), float(k * self.layout.host_type[resource].height)

    def free_sites(self, resource: ResourceType, region=None) -> list[tuple[int, int]]:
        """Free (column, index) pairs, ascending; optionally only those whose
        footprint lies fully inside ``region``."""
        host = self.layout.host_type.get(resource)
        if host is None:
            return []
        out = []
        for col in sorted(self.free[resource]):
            flags = self.free[resource][col]
            for k, ok in enumerate(flags):
                if not ok:
                    continue
                if region is not None and not region.contains(
                    float(col), float(k * host.height), float(host.width), float(host.height)
                ):
                    continue
                out.append((col, k))
        return out

    def candidate_runs(self, resource: ResourceType, length: int, region=None) -> list[CascadeCandidate]:
        """Starts of ``length`` consecutive free sites in one column; when a
        region is given, only runs whose full footprint lies inside it."""
        host = self.layout.host_type[resource]
        out = []
        for col in sorted(self.free[resource]):
            flags = self.free[resource][col]
            run = 0
            for k, ok in enumerate(flags):
                run = run + 1 if ok else 0
                if run >= length:
                    start = k - length + 1
                    if region is not None and not region.contains(
                        float(col),
                        float(start * host.height),
                        float(host.width),
                        float(length * host.height),
                    ):
                        continue
                    out.append(CascadeCandidate(col, start, length))
        return out

    def count_free_in_region(self, region) -> int:
        return sum(len(self.free_sites(res, region)) for res in MACRO_RESOURCES)


@dataclass
class LegalizeReport:
    phase_counts: dict[str, int] = field(default_factory=dict)
    displacement: dict[str, float] = field(default_factory=dict)
    total_cost: float = 0.0

    def lines(self) -> list[str]:
        out = ["phase,count"]
        for phase in ("cascades", "region_macros", "remaining"):
            out.append(f"{phase},{self.phase_counts.get(phase, 0)}")
        out.append(f"total_cost,{self.total_cost!r}")
        out.append("macro,displacement")
        for name, d in self.displacement.items():
            out.append(f"{name},{d!r}")
        return out


def manhattan(a: tuple[float, float], b: tuple[float, float]) -> float:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def arc_cost(macro: str, site: tuple[float, float], design: Design, positions, top: NetTopology | None = None) -> float:
    """Displacement cost of assigning ``macro`` to the site anchored at
    ``site``: alpha * precondWL * manhattan distance between the macro's
    placement and the site, both lower-left corners. Single-pin nets do
    not contribute to the preconditioner."""
    top = top or build_topology(design)
    precond = float(top.precond_wl[design.index[macro]])
    return ALPHA * precond * manhattan(positions[macro], site)


def _int_cost(alpha_cost: float) -> int:
    return int(round(alpha_cost * COST_SCALE))


class _RegionReservations:
    """Phase-1 guard: track how many free sites each region still needs
    for its own unplaced macros, so cascade runs prefer candidates that
    do not starve a region. Best effort: when every candidate would
    intrude, the nearest one is taken anyway."""

    def __init__(self, pool: SitePool, design: Design):
        self.need: dict[tuple[str, ResourceType], int] = {}
        self.members: dict[tuple[str, ResourceType], set[tuple[int, int]]] = {}
        self.free: dict[tuple[str, ResourceType], int] = {}
        for inst in design.instances:
            if inst.is_macro and not inst.fixed and inst.region is not None:
                key = (inst.region, inst.resource)
                self.need[key] = self.need.get(key, 0) + inst.demand
        for rid, res in self.need:
            sites = set(pool.free_sites(res, design.regions[rid]))
            self.members[(rid, res)] = sites
            self.free[(rid, res)] = len(sites)

    def admissible(self, resource: ResourceType, run: "CascadeCandidate", own_region) -> bool:
        sites = {(run.column, k) for k in range(run.start, run.start + run.length)}
        for (rid, res), member_sites in self.members.items():
            if res != resource:
                continue
            taken = len(sites & member_sites)
            if taken == 0:
                continue
            remaining_need = self.need[(rid, res)] - (run.length if rid == own_region else 0)
            if self.free[(rid, res)] - taken < remaining_need:
                return False
        return True

    def consume(self, resource: ResourceType, col: int, k: int) -> None:
        for (rid, res), member_sites in self.members.items():
            if res == resource and (col, k) in member_sites:
                member_sites.discard((col, k))
                self.free[(rid, res)] -= 1

    def placed(self, inst: Instance) -> None:
        if inst.region is not None:
            self.need[(inst.region, inst.resource)] -= inst.demand


def legalize_cascades(
    pool: SitePool, design: Design, positions: dict, top: NetTopology
) -> dict[str, tuple[int, int]]:
    """Greedy cascade legalization, largest shape first (ties: lower
    instance index). Each shape takes the candidate run whose anchor is
    nearest its placement by manhattan distance (ties: lower column,
    then lower start index), preferring runs that leave every region
    enough free sites for its own macros."""
    shapes = [
        (i, inst)
        for i, inst in enumerate(design.instances)
        if inst.shape is not None and not inst.fixed
    ]
    shapes.sort(key=lambda p: (-p[1].demand, p[0]))
    reservations = _RegionReservations(pool, design)
    assigned: dict[str, tuple[int, int]] = {}
    for _, inst in shapes:
        region = design.regions[inst.region] if inst.region else None
        cands = pool.candidate_runs(inst.resource, inst.demand, region)
        if not cands:
            raise InfeasibleLegalizationError(
                f"no candidate site run fits cascade {inst.name}"
                + (f" in region {inst.region}" if inst.region else "")
            )
        gp = positions[inst.name]
        order = sorted(
            cands,
            key=lambda c: (manhattan(gp, pool.site_anchor(inst.resource, c.column, c.start)), c.column, c.start),
        )
        best = next(
            (c for c in order if reservations.admissible(inst.resource, c, inst.region)),
            order[0],
        )
        for k in range(best.start, best.start + best.length):
            pool.consume(inst.resource, best.column, k)
            reservations.consume(inst.resource, best.column, k)
        reservations.placed(inst)
        assigned[inst.name] = (best.column, best.start)
    return assigned


def _solve_capped(
    pool: SitePool,
    macros: list[tuple[str, Instance]],
    positions: dict,
    top,
    design: Design,
    region,
    what: str,
):
    """Min-cost matching of macros to free sites with candidate capping:
    each macro gets its K_CAND nearest sites, doubling the cap whenever
    the capped matching is infeasible."""
    free_by_res = {}
    for res in sorted({inst.resource.value for _, inst in macros}):
        resource = ResourceType(res)
        free_by_res[resource] = pool.free_sites(resource, region)
        count = sum(1 for _, inst in macros if inst.resource == resource)
        if count > len(free_by_res[resource]):
            raise InfeasibleLegalizationError(
                f"{what}: {count} {res} macros but only {len(free_by_res[resource])} free sites"
            )

    ranked = {}
    max_avail = 0
    for name, inst in macros:
        gp = positions[name]
        sites = free_by_res[inst.resource]
        order = sorted(
            sites, key=lambda s: (manhattan(gp, pool.site_anchor(inst.resource, *s)), s[0], s[1])
        )
        ranked[name] = order
        max_avail = max(max_avail, len(order))

    cap = K_CAND
    while True:
        rights: list[tuple[str, int, int]] = []
        right_index: dict[tuple[str, int, int], int] = {}
        arcs = []
        for li, (name, inst) in enumerate(macros):
            precond = float(top.precond_wl[design.index[name]])
            gp = positions[name]
            for col, k in ranked[name][:cap]:
                key = (inst.resource.value, col, k)
                ri = right_index.get(key)
                if ri is None:
                    ri = len(rights)
                    right_index[key] = ri
                    rights.append(key)
                dist = manhattan(gp, pool.site_anchor(inst.resource, col, k))
                arcs.append((li, ri, _int_cost(ALPHA * precond * dist)))
        problem = AssignmentProblem(
            tuple(name for name, _ in macros), tuple(rights), tuple(arcs)
        )
        try:
            match, _ = solve_assignment(problem)
            break
        except InfeasibleAssignmentError:
            if cap >= max_avail:
                raise InfeasibleLegalizationError(
                    f"{what}: no perfect macro-to-site matching exists"
                ) from None
            cap = min(cap * 2, max_avail)

    out = {}
    for li, (name, inst) in enumerate(macros):
        _, col, k = rights[match[li]]
        out[name] = (col, k)
        pool.consume(inst.resource, col, k)
    return out


def legalize_region_macros(
    pool: SitePool, design: Design, positions: dict, top: NetTopology, skip: set[str]
) -> dict[str, tuple[int, int]]:
    """Per-region matching of region-constrained non-cascade macros,
    processing regions by ascending free-site count (ties: id order).
    Assigned sites leave the global pool before the next region."""
    pending: dict[str, list[tuple[str, Instance]]] = {}
    for inst in design.instances:
        if (
            inst.is_macro
            and not inst.fixed
            and inst.shape is None
            and inst.region is not None
            and inst.name not in skip
        ):
            pending.setdefault(inst.region, []).append((inst.name, inst))
    order = sorted(pending, key=lambda rid: (pool.count_free_in_region(design.regions[rid]), rid))
    assigned: dict[str, tuple[int, int]] = {}
    for rid in order:
        region = design.regions[rid]
        got = _solve_capped(pool, pending[rid], positions, top, design, region, f"region {rid}")
        assigned.update(got)
    return assigned


def legalize_remaining(
    pool: SitePool, design: Design, positions: dict, top: NetTopology, skip: set[str]
) -> dict[str, tuple[int, int]]:
    """Match every macro not yet legalized to the remaining free sites."""
    macros = [
        (inst.name, inst)
        for inst in design.instances
        if inst.is_macro and not inst.fixed and inst.shape is None and inst.region is None
        and inst.name not in skip
    ]
    if not macros:
        return {}
    return _solve_capped(pool, macros, positions, top, design, None, "remaining macros")


def legalize(
    layout: FpgaLayout,
    design: Design,
    positions,
    top: NetTopology | None = None,
) -> tuple[Placement, LegalizeReport]:
    """Run the three phases on a merged design with placed instances and
    expand merged cascades back to their members.

    ``positions`` is a name -> (x, y) mapping or a PlacementState.
    Returns a Placement whose macros are site-exact and tagged legal,
    with non-macro instances kept at their continuous positions.
    """
    if hasattr(positions, "positions"):
        positions = positions.positions
    top = top or build_topology(design)
    pool = SitePool.build(layout)
    for inst in design.instances:
        if inst.is_macro and inst.fixed:
            fx, fy = design.fixed_pos[inst.name]
            pool.consume_footprint(inst.resource, fx, fy, inst.width, inst.height)

    a_cascade = legalize_cascades(pool, design, positions, top)
    a_region = legalize_region_macros(pool, design, positions, top, set(a_cascade))
    done = set(a_cascade) | set(a_region)
    a_rest = legalize_remaining(pool, design, positions, top, done)

    report = LegalizeReport(
        phase_counts={
            "cascades": len(a_cascade),
            "region_macros": len(a_region),
            "remaining": len(a_rest),
        }
    )

    merged_pos = dict(positions)
    legal: set[str] = set()
    for name, (col, k) in {**a_cascade, **a_region, **a_rest}.items():
        inst = design.instance(name)
        site = pool.site_anchor(inst.resource, col, k)
        d = manhattan(positions[name], site)
        report.displacement[name] = d
        report.total_cost += ALPHA * float(top.precond_wl[design.index[name]]) * d
        merged_pos[name] = site

    expanded = {}
    for name, pos in merged_pos.items():
        if name in design.merge_map:
            for member, dy in design.merge_map[name]:
                expanded[member] = (pos[0], pos[1] + dy)
                legal.add(member)
        else:
            expanded[name] = pos
            inst = design.instance(name)
            if inst.is_macro and not inst.fixed:
                legal.add(name)
    return Placement(expanded, legal), report
