"""Domain model: FPGA layout, design, constraints, and placement state.

All value types are immutable after construction and safe to share
across threads. Coordinates are in grid units with the origin at the
lower-left corner of the chip; an instance position is its lower-left
corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional


class ResourceType(Enum):
    LUT = "LUT"
    FF = "FF"
    DSP = "DSP"
    BRAM = "BRAM"
    IO = "IO"


#: Resource kinds that occupy dedicated macro sites.
MACRO_RESOURCES = (ResourceType.DSP, ResourceType.BRAM)

#: Resource kinds modelled by an electrostatic density system.
DENSITY_RESOURCES = (ResourceType.LUT, ResourceType.FF, ResourceType.DSP, ResourceType.BRAM)


class ValidationError(ValueError):
    """Raised when a layout or design violates a structural invariant."""


class InfeasibleRegionError(ValueError):
    """Raised when an instance cannot fit inside any rectangle of its region."""


@dataclass(frozen=True)
class SiteType:
    """A site kind occupying ``width`` x ``height`` grid units.

    ``capacity`` maps each hostable resource to the number of instances
    a single site can hold (e.g. a CLB hosting 8 LUTs and 16 FFs).
    """

    name: str
    width: int
    height: int
    capacity: dict[ResourceType, int]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError(f"site type {self.name}: width/height must be >= 1")
        if not any(c > 0 for c in self.capacity.values()):
            raise ValidationError(f"site type {self.name}: needs at least one capacity entry > 0")
        for res in MACRO_RESOURCES:
            if self.capacity.get(res, 0) > 1:
                raise ValidationError(
                    f"site type {self.name}: macro resource {res.value} requires capacity 1 "
                    "(macros occupy dedicated sites)"
                )


@dataclass(frozen=True)
class FpgaLayout:
    """Column-based site grid. Each column x hosts one site type whose
    sites tile the column from y=0 in steps of the type's height."""

    grid_w: int
    grid_h: int
    site_types: tuple[SiteType, ...]
    columns: dict[int, str]

    def __post_init__(self):
        by_name = {st.name: st for st in self.site_types}
        if len(by_name) != len(self.site_types):
            raise ValidationError("duplicate site type name")
        covered = {}
        for x, tname in self.columns.items():
            st = by_name.get(tname)
            if st is None:
                raise ValidationError(f"column {x}: unknown site type {tname}")
            if self.grid_h % st.height != 0:
                raise ValidationError(
                    f"column {x}: height {st.height} does not tile column of grid_h {self.grid_h}"
                )
            for dx in range(st.width):
                if x + dx in covered:
                    raise ValidationError(f"column {x + dx}: covered twice")
                if not 0 <= x + dx < self.grid_w:
                    raise ValidationError(f"column {x + dx}: outside grid of width {self.grid_w}")
                covered[x + dx] = tname
        missing = [x for x in range(self.grid_w) if x not in covered]
        if missing:
            raise ValidationError(f"columns not covered: {missing[:8]}")
        # exactly one site type may host each resource (keeps instance
        # dimensions well defined)
        hosts: dict[ResourceType, str] = {}
        for st in self.site_types:
            for res, cap in st.capacity.items():
                if cap > 0:
                    if res in hosts and hosts[res] != st.name:
                        raise ValidationError(
                            f"resource {res.value} hosted by both {hosts[res]} and {st.name}"
                        )
                    hosts[res] = st.name

    @cached_property
    def site_type_by_name(self) -> dict[str, SiteType]:
        return {st.name: st for st in self.site_types}

    @cached_property
    def host_type(self) -> dict[ResourceType, SiteType]:
        """The unique site type hosting each resource."""
        out: dict[ResourceType, SiteType] = {}
        for st in self.site_types:
            for res, cap in st.capacity.items():
                if cap > 0:
                    out[res] = st
        return out

    def column_type(self, x: int) -> SiteType:
        return self.site_type_by_name[self.columns[x]]

    def columns_for(self, resource: ResourceType) -> list[int]:
        """Declared column anchors whose site type hosts ``resource``, ascending."""
        host = self.host_type.get(resource)
        if host is None:
            return []
        return sorted(x for x, t in self.columns.items() if t == host.name)

    def sites_in_column(self, x: int) -> int:
        return self.grid_h // self.column_type(x).height

    def instance_dims(self, resource: ResourceType) -> tuple[float, float]:
        """Width/height of a single instance of ``resource``.

        Macro and IO instances fill a site; LUT/FF instances get
        area = site_area / capacity, shaped square.
        """
        st = self.host_type.get(resource)
        if st is None:
            raise ValidationError(f"no site type hosts {resource.value}")
        cap = st.capacity[resource]
        if resource in MACRO_RESOURCES:
            return float(st.width), float(st.height)
        area = st.width * st.height / cap
        side = math.sqrt(area)
        return side, side


@dataclass(frozen=True)
class Instance:
    name: str
    resource: ResourceType
    demand: int = 1
    width: float = 1.0
    height: float = 1.0
    fixed: bool = False
    region: Optional[str] = None
    shape: Optional[str] = None

    @property
    def is_macro(self) -> bool:
        return self.resource in MACRO_RESOURCES

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class Pin:
    instance: str
    dx: float
    dy: float


@dataclass(frozen=True)
class Net:
    name: str
    pins: tuple[Pin, ...]


@dataclass(frozen=True)
class CascadeShape:
    """Ordered group of same-type macros that must occupy consecutive
    site indices in one column, bottom-to-top in member order."""

    id: str
    resource: ResourceType
    members: tuple[str, ...]


@dataclass(frozen=True)
class Region:
    """Union of axis-aligned rectangles (xl, yl, xh, yh)."""

    id: str
    rects: tuple[tuple[float, float, float, float], ...]

    def __post_init__(self):
        if not self.rects:
            raise ValidationError(f"region {self.id}: needs at least one rect")
        object.__setattr__(
            self, "rects", tuple(tuple(float(v) for v in rect) for rect in self.rects)
        )
        for xl, yl, xh, yh in self.rects:
            if not (xl < xh and yl < yh):
                raise ValidationError(f"region {self.id}: degenerate rect {(xl, yl, xh, yh)}")

    def contains(self, x: float, y: float, w: float, h: float, eps: float = 1e-9) -> bool:
        """True if the w x h footprint at (x, y) lies inside some member rect."""
        for xl, yl, xh, yh in self.rects:
            if x >= xl - eps and y >= yl - eps and x + w <= xh + eps and y + h <= yh + eps:
                return True
        return False


@dataclass(eq=True)
class Design:
    """The placement problem statement: instances, nets, cascade shapes,
    regions, and fixed coordinates."""

    name: str
    instances: tuple[Instance, ...]
    nets: tuple[Net, ...]
    shapes: tuple[CascadeShape, ...]
    regions: dict[str, Region]
    fixed_pos: dict[str, tuple[float, float]]
    # merged cascade id -> ordered (member id, y offset); filled by merge_cascades
    merge_map: dict[str, tuple[tuple[str, float], ...]] = field(default_factory=dict)

    @cached_property
    def index(self) -> dict[str, int]:
        return {inst.name: i for i, inst in enumerate(self.instances)}

    def instance(self, name: str) -> Instance:
        return self.instances[self.index[name]]


@dataclass(frozen=True)
class PlacementState:
    """Continuous (x, y) per instance plus per-resource filler positions.

    Immutable snapshot; the optimizer produces a new state per step.
    """

    positions: dict[str, tuple[float, float]]
    filler_positions: dict[ResourceType, tuple[tuple[float, float], ...]]
    iteration: int = 0


@dataclass
class Placement:
    """Final placement output: positions by instance name, with the set
    of names whose coordinates are site-exact (legalized)."""

    positions: dict[str, tuple[float, float]]
    legal: set[str] = field(default_factory=set)


def validate_design(design: Design, layout: FpgaLayout) -> None:
    """Cross-check references and structural invariants; raises ValidationError."""
    idx = design.index
    seen_members: dict[str, str] = {}
    for shape in design.shapes:
        if len(shape.members) < 2:
            raise ValidationError(f"shape {shape.id}: needs >= 2 members")
        if shape.resource not in MACRO_RESOURCES:
            raise ValidationError(f"shape {shape.id}: resource must be DSP or BRAM")
        for m in shape.members:
            if m not in idx:
                raise ValidationError(f"shape {shape.id}: member {m} missing")
            if m in seen_members:
                raise ValidationError(
                    f"shape {shape.id}: member {m} already in shape {seen_members[m]}"
                )
            seen_members[m] = shape.id
            inst = design.instance(m)
            if inst.resource != shape.resource:
                raise ValidationError(
                    f"shape {shape.id}: member {m} has resource {inst.resource.value}, "
                    f"expected {shape.resource.value}"
                )
    for net in design.nets:
        if not net.pins:
            raise ValidationError(f"net {net.name}: empty")
        for pin in net.pins:
            if pin.instance not in idx:
                raise ValidationError(f"net {net.name}: pin on unknown instance {pin.instance}")
    for inst in design.instances:
        if inst.region is not None and inst.region not in design.regions:
            raise ValidationError(f"instance {inst.name}: unknown region {inst.region}")
        if inst.resource is ResourceType.IO and not inst.fixed:
            raise ValidationError(f"instance {inst.name}: IO instances must be fixed")
    for name in design.fixed_pos:
        if name not in idx:
            raise ValidationError(f"fixed position for unknown instance {name}")
    for region in design.regions.values():
        for xl, yl, xh, yh in region.rects:
            if xl < 0 or yl < 0 or xh > layout.grid_w or yh > layout.grid_h:
                raise ValidationError(f"region {region.id}: rect outside chip")


def merge_cascades(design: Design) -> Design:
    """Replace each cascade shape by a single merged instance.

    The merged instance takes the shape id as its name, demand equal to
    the member count, and height = demand * member height. Member pins
    are re-homed onto the merged instance with their y offset shifted by
    ordinal * member height. A reverse map (merged id -> ordered members
    with offsets) is recorded for expansion after legalization.
    """
    if not design.shapes:
        return replace(design, merge_map=dict(design.merge_map))

    member_of: dict[str, tuple[str, int]] = {}
    merged_insts: list[Instance] = []
    merge_map: dict[str, tuple[tuple[str, float], ...]] = dict(design.merge_map)

    for shape in design.shapes:
        if shape.id in design.index:
            raise ValidationError(f"shape {shape.id}: id collides with an instance name")
        members = [design.instance(m) if m in design.index else None for m in shape.members]
        for m, inst in zip(shape.members, members):
            if inst is None:
                raise ValidationError(f"shape {shape.id}: member {m} missing")
            if inst.resource != shape.resource or inst.resource not in MACRO_RESOURCES:
                raise ValidationError(f"shape {shape.id}: mixed or non-macro resource types")
            if m in member_of:
                raise ValidationError(f"shape {shape.id}: member {m} in two shapes")
            if inst.fixed:
                raise ValidationError(f"shape {shape.id}: member {m} is fixed")
            member_of[m] = (shape.id, shape.members.index(m))
        regions = {inst.region for inst in members}
        if len(regions) != 1:
            raise ValidationError(f"shape {shape.id}: members disagree on region constraint")
        base = members[0]
        n = len(members)
        merged_insts.append(
            Instance(
                name=shape.id,
                resource=shape.resource,
                demand=n,
                width=base.width,
                height=n * base.height,
                fixed=False,
                region=base.region,
                shape=shape.id,
            )
        )
        merge_map[shape.id] = tuple((m, j * base.height) for j, m in enumerate(shape.members))

    kept = tuple(inst for inst in design.instances if inst.name not in member_of)
    new_instances = kept + tuple(merged_insts)

    member_height = {m: design.instance(m).height for m in member_of}
    new_nets = []
    for net in design.nets:
        pins = []
        for pin in net.pins:
            if pin.instance in member_of:
                sid, ordinal = member_of[pin.instance]
                pins.append(Pin(sid, pin.dx, pin.dy + ordinal * member_height[pin.instance]))
            else:
                pins.append(pin)
        new_nets.append(Net(net.name, tuple(pins)))

    return Design(
        name=design.name,
        instances=new_instances,
        nets=tuple(new_nets),
        shapes=(),
        regions=dict(design.regions),
        fixed_pos=dict(design.fixed_pos),
        merge_map=merge_map,
    )


def expand_placement(merged: Design, positions: dict[str, tuple[float, float]]) -> dict[str, tuple[float, float]]:
    """Map positions of a merged design back onto original instance names."""
    out: dict[str, tuple[float, float]] = {}
    for name, (x, y) in positions.items():
        if name in merged.merge_map:
            for member, dy in merged.merge_map[name]:
                out[member] = (x, y + dy)
        else:
            out[name] = (x, y)
    return out


def clamp_to_rect(
    x: float, y: float, w: float, h: float, rect: tuple[float, float, float, float]
) -> tuple[float, float]:
    """Clamp a w x h box at (x, y) into a single rectangle."""
    xl, yl, xh, yh = rect
    cx = min(max(x, xl), xh - w)
    cy = min(max(y, yl), yh - h)
    return cx, cy


def region_clamp(
    pos: tuple[float, float],
    size: tuple[float, float],
    region: Region,
    who: str = "instance",
) -> tuple[float, float]:
    """Clamp a box into its region, choosing the member rectangle that
    minimizes the post-clamp displacement (squared Euclidean; ties go to
    the lower rect index). Idempotent, and the identity for boxes
    already inside a member rect.
    """
    x, y = pos
    w, h = size
    best = None
    best_d = math.inf
    for rect in region.rects:
        xl, yl, xh, yh = rect
        if w > xh - xl or h > yh - yl:
            continue
        cx, cy = clamp_to_rect(x, y, w, h, rect)
        d = (cx - x) * (cx - x) + (cy - y) * (cy - y)
        if d < best_d:
            best_d = d
            best = (cx, cy)
    if best is None:
        raise InfeasibleRegionError(
            f"{who}: size {size} fits no rect of region {region.id}"
        )
    return best
