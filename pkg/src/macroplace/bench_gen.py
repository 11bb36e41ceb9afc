"""Deterministic synthetic benchmark generation.

Profiles scale from about a thousand instances (tiny) to fifty thousand
(medium) with up to ~300 macros, cascade chains drawn from up to ten
distinct sizes, and up to 19 disjoint region constraints. Generated
instances are feasible by construction: total demand stays below 90% of
chip capacity per resource, region demand below 95% of in-region
capacity, and every cascade fits some column (inside its region when
constrained). Identical (seed, profile) pairs reproduce byte-identical
files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    CascadeShape,
    Design,
    FpgaLayout,
    Instance,
    MACRO_RESOURCES,
    Net,
    Pin,
    Region,
    ResourceType,
    SiteType,
    validate_design,
)

PROFILES = ("tiny", "small", "medium")

_SITE_TYPES = (
    SiteType("CLB", 1, 1, {ResourceType.LUT: 8, ResourceType.FF: 16}),
    SiteType("DSP", 1, 2, {ResourceType.DSP: 1}),
    SiteType("BRAM", 1, 5, {ResourceType.BRAM: 1}),
    SiteType("IO", 1, 1, {ResourceType.IO: 2}),
)


@dataclass(frozen=True)
class _Profile:
    grid_w: int
    grid_h: int
    dsp_cols: tuple[int, ...]
    bram_cols: tuple[int, ...]
    n_lut: int
    n_ff: int
    n_dsp: int
    n_bram: int
    n_io: int
    n_regions: tuple[int, int]  # inclusive range
    cascade_sizes: tuple[int, ...]
    n_cascades: tuple[int, int]  # per macro type, inclusive range


_PROFILES = {
    "tiny": _Profile(
        grid_w=32,
        grid_h=30,
        dsp_cols=(9, 21),
        bram_cols=(5, 16, 26),
        n_lut=520,
        n_ff=260,
        n_dsp=12,
        n_bram=5,
        n_io=6,
        n_regions=(1, 2),
        cascade_sizes=(2, 3),
        n_cascades=(1, 1),
    ),
    "small": _Profile(
        grid_w=64,
        grid_h=60,
        dsp_cols=(13, 30, 46),
        bram_cols=(8, 22, 55),
        n_lut=5200,
        n_ff=2600,
        n_dsp=48,
        n_bram=22,
        n_io=8,
        n_regions=(3, 6),
        cascade_sizes=(2, 3, 4, 5, 6),
        n_cascades=(1, 3),
    ),
    "medium": _Profile(
        grid_w=128,
        grid_h=240,
        dsp_cols=(9, 24, 39, 54, 70, 85, 100, 115),
        bram_cols=(16, 31, 47, 62, 77, 92, 108, 122),
        n_lut=29000,
        n_ff=15000,
        n_dsp=175,
        n_bram=90,
        n_io=16,
        n_regions=(12, 19),
        cascade_sizes=(2, 3, 4, 5, 6, 7, 8, 9, 10, 12),
        n_cascades=(2, 5),
    ),
}


def profile_layout(profile: str) -> FpgaLayout:
    p = _PROFILES[profile]
    columns = {}
    for x in range(p.grid_w):
        if x == 0 or x == p.grid_w - 1:
            columns[x] = "IO"
        elif x in p.dsp_cols:
            columns[x] = "DSP"
        elif x in p.bram_cols:
            columns[x] = "BRAM"
        else:
            columns[x] = "CLB"
    return FpgaLayout(p.grid_w, p.grid_h, _SITE_TYPES, columns)


def _slots(layout: FpgaLayout, resource: ResourceType) -> int:
    host = layout.host_type[resource]
    cols = layout.columns_for(resource)
    return len(cols) * (layout.grid_h // host.height) * host.capacity[resource]


def _region_slots(layout: FpgaLayout, region: Region, resource: ResourceType) -> int:
    host = layout.host_type.get(resource)
    if host is None:
        return 0
    count = 0
    for col in layout.columns_for(resource):
        for k in range(layout.grid_h // host.height):
            if region.contains(float(col), float(k * host.height), float(host.width), float(host.height)):
                count += host.capacity[resource]
    return count


def _region_max_run(layout: FpgaLayout, region: Region, resource: ResourceType) -> int:
    host = layout.host_type[resource]
    best = 0
    for col in layout.columns_for(resource):
        run = 0
        for k in range(layout.grid_h // host.height):
            if region.contains(float(col), float(k * host.height), float(host.width), float(host.height)):
                run += 1
                best = max(best, run)
            else:
                run = 0
    return best


def feasibility_report(layout: FpgaLayout, design: Design) -> list[str]:
    """Capacity-counting pre-scan; empty list means the instance demand,
    region demand, and cascade runs are all within their margins."""
    problems = []
    demand: dict[ResourceType, int] = {}
    for inst in design.instances:
        demand[inst.resource] = demand.get(inst.resource, 0) + inst.demand
    for res, d in sorted(demand.items(), key=lambda kv: kv[0].value):
        cap = _slots(layout, res)
        limit = cap if res is ResourceType.IO else 0.9 * cap
        if d > limit:
            problems.append(f"{res.value}: demand {d} exceeds margin of capacity {cap}")

    region_demand: dict[tuple[str, ResourceType], int] = {}
    for inst in design.instances:
        if inst.region is not None:
            key = (inst.region, inst.resource)
            region_demand[key] = region_demand.get(key, 0) + inst.demand
    for (rid, res), d in sorted(region_demand.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        cap = _region_slots(layout, design.regions[rid], res)
        if d > 0.95 * cap:
            problems.append(f"region {rid}: {res.value} demand {d} exceeds 95% of {cap}")

    members = {m: s for s in design.shapes for m in s.members}
    for shape in design.shapes:
        host = layout.host_type[shape.resource]
        n = len(shape.members)
        if n * host.height > layout.grid_h:
            problems.append(f"shape {shape.id}: length {n} taller than any column")
            continue
        region_id = design.instance(shape.members[0]).region
        if region_id is not None:
            if _region_max_run(layout, design.regions[region_id], shape.resource) < n:
                problems.append(f"shape {shape.id}: no run of {n} sites inside region {region_id}")
    return problems


def _round3(v: float) -> float:
    return round(v, 3)


def _sample_distinct(rng, n: int, k: int) -> list[int]:
    picked: list[int] = []
    seen: set[int] = set()
    while len(picked) < k:
        for v in rng.integers(0, n, size=k - len(picked)):
            v = int(v)
            if v not in seen:
                seen.add(v)
                picked.append(v)
    return picked


def _make_nets(rng, names: list[str], dims: dict[str, tuple[float, float]], n_nets: int):
    degrees = [2] * 55 + [3] * 20 + [4] * 10 + [5] * 6 + [6] * 4 + [8] * 3 + [12] * 2
    nets = []
    pinned: set[str] = set()
    for i in range(n_nets):
        deg = degrees[int(rng.integers(0, len(degrees)))]
        deg = min(deg, len(names))
        members = _sample_distinct(rng, len(names), deg)
        pins = []
        for mi in sorted(members):
            name = names[mi]
            w, h = dims[name]
            pins.append(Pin(name, min(w, _round3(rng.uniform(0, w))), min(h, _round3(rng.uniform(0, h)))))
            pinned.add(name)
        nets.append(Net(f"n{i}", tuple(pins)))
    return nets, pinned


def generate_benchmark(seed: int, profile: str) -> tuple[FpgaLayout, Design]:
    """Seeded, feasible benchmark instance for the given profile."""
    if profile not in _PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {PROFILES}")
    p = _PROFILES[profile]
    layout = profile_layout(profile)
    rng = np.random.default_rng(seed)

    for _ in range(50):
        design = _attempt(rng, layout, p, f"{profile}-s{seed}")
        if design is not None and not feasibility_report(layout, design):
            validate_design(design, layout)
            return layout, design
    raise RuntimeError(f"could not generate a feasible {profile} benchmark for seed {seed}")


def _attempt(rng, layout: FpgaLayout, p: _Profile, name: str):
    dims = {res: layout.instance_dims(res) for res in ResourceType}
    instances: list[Instance] = []
    shapes: list[CascadeShape] = []
    regions: dict[str, Region] = {}
    fixed_pos: dict[str, tuple[float, float]] = {}
    region_of: dict[str, str] = {}

    def scaled(base: int) -> int:
        return max(1, int(base * rng.uniform(0.9, 1.1)))

    n_lut, n_ff = scaled(p.n_lut), scaled(p.n_ff)
    n_dsp, n_bram = scaled(p.n_dsp), scaled(p.n_bram)

    # cascade shapes claim a prefix of each macro population
    cascade_members: dict[ResourceType, list[list[str]]] = {r: [] for r in MACRO_RESOURCES}
    counts = {ResourceType.DSP: n_dsp, ResourceType.BRAM: n_bram}
    sizes_drawn: list[int] = []
    for res in MACRO_RESOURCES:
        n_shapes = int(rng.integers(p.n_cascades[0], p.n_cascades[1] + 1))
        used = 0
        host_h = layout.host_type[res].height
        max_len = layout.grid_h // host_h
        for _ in range(n_shapes):
            size = int(p.cascade_sizes[int(rng.integers(0, len(p.cascade_sizes)))])
            size = min(size, max_len)
            if used + size > max(2, int(0.6 * counts[res])):
                break
            base = len(cascade_members[res])
            prefix = "dsp" if res is ResourceType.DSP else "bram"
            cascade_members[res].append([f"{prefix}{used + j}" for j in range(size)])
            used += size
            sizes_drawn.append(size)

    for res, prefix, count in (
        (ResourceType.DSP, "dsp", n_dsp),
        (ResourceType.BRAM, "bram", n_bram),
    ):
        w, h = dims[res]
        for i in range(count):
            instances.append(Instance(f"{prefix}{i}", res, 1, w, h, False, None, None))
    for i in range(n_lut):
        w, h = dims[ResourceType.LUT]
        instances.append(Instance(f"lut{i}", ResourceType.LUT, 1, w, h, False, None, None))
    for i in range(n_ff):
        w, h = dims[ResourceType.FF]
        instances.append(Instance(f"ff{i}", ResourceType.FF, 1, w, h, False, None, None))

    io_cols = layout.columns_for(ResourceType.IO)
    io_sites = [(c, k) for c in io_cols for k in range(layout.grid_h)]
    step = max(1, len(io_sites) // p.n_io)
    w, h = dims[ResourceType.IO]
    for i in range(p.n_io):
        col, k = io_sites[(i * step) % len(io_sites)]
        io_name = f"io{i}"
        instances.append(Instance(io_name, ResourceType.IO, 1, w, h, True, None, None))
        fixed_pos[io_name] = (float(col), float(k))

    # disjoint region rectangles carved from a coarse cell grid
    n_regions = int(rng.integers(p.n_regions[0], p.n_regions[1] + 1))
    cells_x = max(2, min(5, layout.grid_w // 12))
    cells_y = max(2, min(4, layout.grid_h // 15))
    cell_ids = [(cx, cy) for cx in range(cells_x) for cy in range(cells_y)]
    order = rng.permutation(len(cell_ids))
    chosen = [cell_ids[int(i)] for i in order[: min(n_regions, len(cell_ids))]]
    cw, ch = layout.grid_w / cells_x, layout.grid_h / cells_y
    for ridx, (cx, cy) in enumerate(chosen):
        xl = int(math.floor(cx * cw + rng.uniform(0, cw * 0.2)))
        xh = int(math.ceil((cx + 1) * cw - rng.uniform(0, cw * 0.2)))
        yl = int(math.floor(cy * ch + rng.uniform(0, ch * 0.2)))
        yh = int(math.ceil((cy + 1) * ch - rng.uniform(0, ch * 0.2)))
        xl, yl = max(0, xl), max(0, yl)
        xh, yh = min(layout.grid_w, max(xh, xl + 4)), min(layout.grid_h, max(yh, yl + 6))
        if xh - xl < 3 or yh - yl < 5:
            continue
        rid = f"rg{ridx}"
        regions[rid] = Region(rid, ((float(xl), float(yl), float(xh), float(yh)),))

    # region membership: macros within 60% of in-region slots, some cascades,
    # and a bounded share of LUT/FF
    unassigned = {
        ResourceType.DSP: [f"dsp{i}" for i in range(n_dsp)],
        ResourceType.BRAM: [f"bram{i}" for i in range(n_bram)],
    }
    in_cascade = {m for res in MACRO_RESOURCES for grp in cascade_members[res] for m in grp}
    for res in MACRO_RESOURCES:
        unassigned[res] = [m for m in unassigned[res] if m not in in_cascade]
    free_cascades = {res: list(range(len(cascade_members[res]))) for res in MACRO_RESOURCES}
    lut_pool = [f"lut{i}" for i in range(n_lut)]
    ff_pool = [f"ff{i}" for i in range(n_ff)]
    lut_take = ff_take = 0

    for rid in sorted(regions):
        region = regions[rid]
        util = rng.uniform(0.25, 0.6)
        for res in MACRO_RESOURCES:
            slots = _region_slots(layout, region, res)
            budget = int(slots * util)
            for si in list(free_cascades[res]):
                size = len(cascade_members[res][si])
                if size <= budget and _region_max_run(layout, region, res) >= size and rng.random() < 0.5:
                    for m in cascade_members[res][si]:
                        region_of[m] = rid
                    budget -= size
                    free_cascades[res].remove(si)
                    break
            take = min(budget, len(unassigned[res]))
            take = int(take * rng.uniform(0.4, 1.0))
            for _ in range(take):
                region_of[unassigned[res].pop()] = rid
        clb_slots = _region_slots(layout, region, ResourceType.LUT)
        n_l = min(int(clb_slots * util * 0.25), 1500, len(lut_pool) - lut_take)
        for _ in range(max(0, n_l)):
            region_of[lut_pool[lut_take]] = rid
            lut_take += 1
        ff_slots = _region_slots(layout, region, ResourceType.FF)
        n_f = min(int(ff_slots * util * 0.15), 1000, len(ff_pool) - ff_take)
        for _ in range(max(0, n_f)):
            region_of[ff_pool[ff_take]] = rid
            ff_take += 1

    for res in MACRO_RESOURCES:
        for grp in cascade_members[res]:
            shapes.append(
                CascadeShape(f"cs{len(shapes)}", res, tuple(grp))
            )

    shape_of = {m: s.id for s in shapes for m in s.members}
    instances = [
        Instance(
            i.name, i.resource, i.demand, i.width, i.height, i.fixed,
            region_of.get(i.name), shape_of.get(i.name),
        )
        for i in instances
    ]

    name_dims = {i.name: (i.width, i.height) for i in instances}
    names = [i.name for i in instances]
    n_nets = int(len(names) * 1.05)
    nets, pinned = _make_nets(rng, names, name_dims, n_nets)
    extra = []
    for inst in instances:
        if inst.is_macro and inst.name not in pinned:
            anchor = names[int(rng.integers(0, len(names)))]
            w, h = name_dims[anchor]
            extra.append(
                Net(
                    f"n{n_nets + len(extra)}",
                    (
                        Pin(inst.name, 0.0, 0.0),
                        Pin(anchor, min(w, _round3(rng.uniform(0, w))), min(h, _round3(rng.uniform(0, h)))),
                    ),
                )
            )
    design = Design(
        name=name,
        instances=tuple(instances),
        nets=tuple(nets + extra),
        shapes=tuple(shapes),
        regions=regions,
        fixed_pos=fixed_pos,
    )
    return design


def generate_contention(seed: int) -> tuple[FpgaLayout, Design]:
    """Stress instance: regions filled to >= 95% of their macro sites with
    large cascades inside, pulling nets anchored at far-away IOs. Used to
    exercise the divergence rollback path; remains legalizable (demand
    never exceeds available sites)."""
    layout = profile_layout("tiny")
    rng = np.random.default_rng(seed)
    dims = {res: layout.instance_dims(res) for res in ResourceType}

    regions = {
        "rga": Region("rga", ((4.0, 0.0, 11.0, 15.0),)),   # DSP col 9, BRAM col 5
        "rgb": Region("rgb", ((15.0, 15.0, 23.0, 30.0),)),  # DSP col 21, BRAM col 16
    }
    instances: list[Instance] = []
    shapes: list[CascadeShape] = []
    fixed_pos: dict[str, tuple[float, float]] = {}

    # each region holds one DSP column (7 sites within its y span) and
    # one BRAM column (3 sites); demand is pinned at >= 95% of that.
    specs = [
        (ResourceType.DSP, "rga", "dspA", 7),
        (ResourceType.DSP, "rgb", "dspB", 7),
        (ResourceType.BRAM, "rga", "bramA", 3),
        (ResourceType.BRAM, "rgb", "bramB", 3),
    ]
    for res, rid, prefix, budget in specs:
        region = regions[rid]
        slots = _region_slots(layout, region, res)
        max_run = _region_max_run(layout, region, res)
        take = max(1, math.floor(slots * 0.95 + 1e-9))
        take = min(take, slots)
        w, h = dims[res]
        cas_len = min(max_run, max(2, take - 1))
        members = []
        for j in range(take):
            name = f"{prefix}{j}"
            instances.append(Instance(name, res, 1, w, h, False, rid, None))
            if j < cas_len and cas_len >= 2:
                members.append(name)
        if len(members) >= 2:
            shapes.append(CascadeShape(f"cs_{prefix}", res, tuple(members)))

    w, h = dims[ResourceType.LUT]
    for i in range(700):
        rid = "rga" if i < 120 else ("rgb" if i < 240 else None)
        instances.append(Instance(f"lut{i}", ResourceType.LUT, 1, w, h, False, rid, None))
    w, h = dims[ResourceType.FF]
    for i in range(350):
        instances.append(Instance(f"ff{i}", ResourceType.FF, 1, w, h, False, None, None))
    w, h = dims[ResourceType.IO]
    for i, (col, k) in enumerate([(0, 2), (0, 27), (31, 2), (31, 27)]):
        io_name = f"io{i}"
        instances.append(Instance(io_name, ResourceType.IO, 1, w, h, True, None, None))
        fixed_pos[io_name] = (float(col), float(k))

    shape_of = {m: s.id for s in shapes for m in s.members}
    instances = [
        Instance(i.name, i.resource, i.demand, i.width, i.height, i.fixed, i.region, shape_of.get(i.name))
        for i in instances
    ]
    name_dims = {i.name: (i.width, i.height) for i in instances}
    names = [i.name for i in instances]
    nets, pinned = _make_nets(rng, names, name_dims, int(len(names) * 1.2))
    extra = []
    ios = [f"io{i}" for i in range(4)]
    for inst in instances:
        if inst.is_macro:
            far = ios[int(rng.integers(0, 4))]
            extra.append(
                Net(f"n{len(nets) + len(extra)}", (Pin(inst.name, 0.0, 0.0), Pin(far, 0.0, 0.0)))
            )
    design = Design(
        name=f"contention-s{seed}",
        instances=tuple(instances),
        nets=tuple(nets + extra),
        shapes=tuple(shapes),
        regions=regions,
        fixed_pos=fixed_pos,
    )
    validate_design(design, layout)
    return layout, design
