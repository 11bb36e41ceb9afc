"""Per-resource electrostatic density systems.

Instance area is positive charge, site capacity is negative charge; the
potential solves a Poisson equation with zero-Neumann boundaries via a
2-D discrete cosine transform, exactly diagonalizing the mirror-extended
five-point Laplacian. The field is the spectral derivative of the
potential. Each resource type gets an independent system; fillers pad
total instance area up to capacity so the systems stay charge neutral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn, dst, idct, idctn

from . import kernels
from .model import DENSITY_RESOURCES, Design, FpgaLayout, ResourceType


def bin_count(n_instances: int) -> int:
    """Smallest power of two >= sqrt(n), clamped to [16, 512]."""
    target = math.isqrt(max(n_instances, 1))
    if target * target < n_instances:
        target += 1
    bins = 16
    while bins < target and bins < 512:
        bins *= 2
    return bins


@dataclass
class ElectroSystem:
    """Bin grids and multipliers for one resource type."""

    resource: ResourceType
    bins_x: int
    bins_y: int
    bin_w: float
    bin_h: float
    capacity: np.ndarray  # fixed negative charge (site area per bin)
    inst_idx: np.ndarray  # design instance indices (movable, this resource)
    inst_w: np.ndarray
    inst_h: np.ndarray
    inst_area: np.ndarray
    movable_area: float
    fixed_density: np.ndarray  # immovable positive charge (fixed instances)
    n_fillers: int
    filler_side: float
    filler_area: float
    density: np.ndarray = field(default=None, repr=False)
    inst_density: np.ndarray = field(default=None, repr=False)  # without fillers
    potential: np.ndarray = field(default=None, repr=False)
    field_x: np.ndarray = field(default=None, repr=False)
    field_y: np.ndarray = field(default=None, repr=False)
    energy: float = 0.0  # potential energy of the system
    lam: float = 0.0  # density multiplier
    c_quad: float = 0.0  # quadratic penalty constant


def build_system(layout: FpgaLayout, design: Design, resource: ResourceType):
    """Create the electrostatic system for one resource, or None when the
    design has no movable instance of it."""
    movable = [
        (i, inst)
        for i, inst in enumerate(design.instances)
        if inst.resource == resource and not inst.fixed
    ]
    if not movable:
        return None
    fixed = [inst for inst in design.instances if inst.resource == resource and inst.fixed]

    bins = bin_count(len(movable) + len(fixed))
    bw = layout.grid_w / bins
    bh = layout.grid_h / bins

    host = layout.host_type[resource]
    cols = layout.columns_for(resource)
    cx = np.array([float(x) for x in cols])
    capacity = kernels.density_scatter(
        cx,
        np.zeros(len(cols)),
        np.full(len(cols), float(host.width)),
        np.full(len(cols), float(layout.grid_h)),
        bw,
        bh,
        bins,
        bins,
    )

    if fixed:
        fx = np.array([design.fixed_pos[i.name][0] for i in fixed])
        fy = np.array([design.fixed_pos[i.name][1] for i in fixed])
        fixed_density = kernels.density_scatter(
            fx,
            fy,
            np.array([i.width for i in fixed]),
            np.array([i.height for i in fixed]),
            bw,
            bh,
            bins,
            bins,
        )
    else:
        fixed_density = np.zeros((bins, bins))

    inst_area = np.array([inst.area for inst in (m for _, m in movable)])
    total_inst_area = float(np.sum(inst_area)) + sum(i.area for i in fixed)
    slack = float(np.sum(capacity)) - total_inst_area
    if slack > 0:
        n_fillers = max(64, len(movable))
        filler_area = slack / n_fillers
        filler_side = math.sqrt(filler_area)
    else:
        n_fillers = 0
        filler_area = 0.0
        filler_side = 0.0

    return ElectroSystem(
        resource=resource,
        bins_x=bins,
        bins_y=bins,
        bin_w=bw,
        bin_h=bh,
        capacity=capacity,
        inst_idx=np.array([i for i, _ in movable], dtype=np.int64),
        inst_w=np.array([m.width for _, m in movable]),
        inst_h=np.array([m.height for _, m in movable]),
        inst_area=inst_area,
        movable_area=float(np.sum(inst_area)),
        fixed_density=fixed_density,
        n_fillers=n_fillers,
        filler_side=filler_side,
        filler_area=filler_area,
    )


def build_systems(layout: FpgaLayout, design: Design) -> dict[ResourceType, ElectroSystem]:
    out = {}
    for res in DENSITY_RESOURCES:
        system = build_system(layout, design, res)
        if system is not None:
            out[res] = system
    return out


def update_density(system: ElectroSystem, x, y, filler_x=None, filler_y=None) -> np.ndarray:
    """Rebuild the density grids from lower-left positions of the system's
    movable instances (in ``inst_idx`` order) plus filler positions.

    ``density`` (instances + fillers) feeds the potential solve;
    ``inst_density`` (no fillers) feeds the overflow metric."""
    xs, ys = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    system.inst_density = system.fixed_density + kernels.density_scatter(
        xs, ys, system.inst_w, system.inst_h, system.bin_w, system.bin_h, system.bins_x, system.bins_y
    )
    if filler_x is not None and len(filler_x) > 0:
        n = len(filler_x)
        fill = kernels.density_scatter(
            np.asarray(filler_x, dtype=float),
            np.asarray(filler_y, dtype=float),
            np.full(n, system.filler_side),
            np.full(n, system.filler_side),
            system.bin_w,
            system.bin_h,
            system.bins_x,
            system.bins_y,
        )
        system.density = system.inst_density + fill
    else:
        system.density = system.inst_density
    return system.density


def bin_density(system: ElectroSystem, design: Design, placement) -> np.ndarray:
    """Placement-level wrapper over update_density; accepts a PlacementState
    or a plain name -> (x, y) mapping (then without fillers)."""
    positions = placement.positions if hasattr(placement, "positions") else placement
    x = np.array([positions[design.instances[i].name][0] for i in system.inst_idx])
    y = np.array([positions[design.instances[i].name][1] for i in system.inst_idx])
    fillers = getattr(placement, "filler_positions", {}).get(system.resource, ())
    fx = np.array([p[0] for p in fillers])
    fy = np.array([p[1] for p in fillers])
    return update_density(system, x, y, fx, fy)


def solve_poisson_grids(rho: np.ndarray, hx: float, hy: float):
    """Solve lap(psi) = -rho with zero-Neumann boundaries on a regular
    grid; returns (psi, field_x, field_y) with field = -grad(psi) by
    spectral differentiation. ``rho`` is mean-subtracted internally."""
    m, n = rho.shape
    rho = rho - rho.mean()
    coeff = dctn(rho, type=2)
    ku = (2.0 - 2.0 * np.cos(np.pi * np.arange(m) / m)) / (hx * hx)
    kv = (2.0 - 2.0 * np.cos(np.pi * np.arange(n) / n)) / (hy * hy)
    denom = ku[:, None] + kv[None, :]
    denom[0, 0] = 1.0
    coeff = coeff / denom
    coeff[0, 0] = 0.0
    psi = idctn(coeff, type=2)

    wu = np.pi * np.arange(m) / (m * hx)
    tx = idct(coeff, type=2, axis=1) * (wu / m)[:, None]
    cx = np.zeros_like(tx)
    cx[: m - 1, :] = tx[1:, :]
    field_x = 0.5 * dst(cx, type=3, axis=0)

    wv = np.pi * np.arange(n) / (n * hy)
    ty = idct(coeff, type=2, axis=0) * (wv / n)[None, :]
    cy = np.zeros_like(ty)
    cy[:, : n - 1] = ty[:, 1:]
    field_y = 0.5 * dst(cy, type=3, axis=1)
    return psi, field_x, field_y


def solve_poisson(system: ElectroSystem) -> None:
    """Update potential, field, and energy from the current density."""
    rho = system.density - system.capacity
    rho = rho - rho.mean()
    psi, fx, fy = solve_poisson_grids(rho, system.bin_w, system.bin_h)
    system.potential = psi
    system.field_x = fx
    system.field_y = fy
    system.energy = float(np.sum(rho * psi))


def _bilinear2(grid_a: np.ndarray, grid_b: np.ndarray, u: np.ndarray, v: np.ndarray):
    """Bilinear samples of two grids at shared fractional coordinates."""
    m, n = grid_a.shape
    i0 = np.clip(np.floor(u).astype(np.int64), 0, max(m - 2, 0))
    j0 = np.clip(np.floor(v).astype(np.int64), 0, max(n - 2, 0))
    fu = np.clip(u - i0, 0.0, 1.0)
    fv = np.clip(v - j0, 0.0, 1.0)
    i1 = np.minimum(i0 + 1, m - 1)
    j1 = np.minimum(j0 + 1, n - 1)
    w00 = (1 - fu) * (1 - fv)
    w10 = fu * (1 - fv)
    w01 = (1 - fu) * fv
    w11 = fu * fv
    a = grid_a[i0, j0] * w00 + grid_a[i1, j0] * w10 + grid_a[i0, j1] * w01 + grid_a[i1, j1] * w11
    b = grid_b[i0, j0] * w00 + grid_b[i1, j0] * w10 + grid_b[i0, j1] * w01 + grid_b[i1, j1] * w11
    return a, b


def field_at(system: ElectroSystem, cx, cy):
    """Sample the field at box centers by bilinear interpolation between
    bin centers (clamped at the chip border)."""
    u = np.asarray(cx, dtype=float) / system.bin_w - 0.5
    v = np.asarray(cy, dtype=float) / system.bin_h - 0.5
    return _bilinear2(system.field_x, system.field_y, u, v)


def gradient_arrays(system: ElectroSystem, x, y, w, h, area):
    """True energy gradient d(energy)/d(position) for boxes of the given
    sizes at lower-left (x, y): the energy is quadratic in the charge, so
    the gradient is -2 * area * field at the box center. The descent
    direction (the force) points away from overfilled bins."""
    ex, ey = field_at(system, np.asarray(x) + np.asarray(w) / 2.0, np.asarray(y) + np.asarray(h) / 2.0)
    return -2.0 * area * ex, -2.0 * area * ey


def density_gradient(system: ElectroSystem, design: Design, placement):
    """Per-instance energy gradient for the system's resource; instances
    of other resources get zeros. Returns dict name -> (dPhi/dx, dPhi/dy)."""
    positions = placement.positions if hasattr(placement, "positions") else placement
    out = {inst.name: (0.0, 0.0) for inst in design.instances}
    if len(system.inst_idx) == 0:
        return out
    x = np.array([positions[design.instances[i].name][0] for i in system.inst_idx])
    y = np.array([positions[design.instances[i].name][1] for i in system.inst_idx])
    gx, gy = gradient_arrays(system, x, y, system.inst_w, system.inst_h, system.inst_area)
    for k, i in enumerate(system.inst_idx):
        out[design.instances[i].name] = (float(gx[k]), float(gy[k]))
    return out


def overflow(system: ElectroSystem) -> float:
    """Total instance density exceeding capacity, normalized by the
    movable instance area of the resource; 0 when nothing overflows or
    the system has no movable area. Filler charge drives the spreading
    forces but is not counted here."""
    if system.movable_area <= 0.0:
        return 0.0
    grid = system.inst_density if system.inst_density is not None else system.density
    excess = float(np.sum(np.maximum(grid - system.capacity, 0.0)))
    return excess / system.movable_area
