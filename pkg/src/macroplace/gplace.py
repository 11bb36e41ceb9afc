"""Global placement: Nesterov-accelerated gradient descent on weighted
wirelength plus per-resource electrostatic penalties.

Each iteration assembles the gradient of

    WA(x, y) + sum_s lam_s * (phi_s + c_s * phi_s^2)

at the momentum lookahead point, preconditions it by pin count plus
lam * area, takes a Barzilai-Borwein-sized step, clamps every
region-constrained instance into its region and everything onto the
chip, and grows each lam_s geometrically. The loop keeps the best
checkpoint seen (lowest macro overflow, then lowest HPWL) and rolls back
to it on divergence or when the overflow thresholds are never reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import ElectroSystem, build_systems, gradient_arrays, overflow, solve_poisson, update_density
from .model import (
    DENSITY_RESOURCES,
    Design,
    FpgaLayout,
    InfeasibleRegionError,
    MACRO_RESOURCES,
    PlacementState,
    Region,
    ResourceType,
    ValidationError,
    clamp_to_rect,
)
from .wirelength import build_topology, gamma_schedule, hpwl_arrays, wa_arrays

_EPS = 1e-6


@dataclass(frozen=True)
class GpConfig:
    max_iters: int = 1000
    ovfl_stop_nonmacro: float = 0.1
    ovfl_stop_macro: float = 0.2
    lambda_growth: float = 1.05
    seed: int = 0
    checkpoint_every: int = 50
    divergence_window: int = 100
    divergence_factor: float = 2.0

    def __post_init__(self):
        if not (0 < self.ovfl_stop_nonmacro <= 1 and 0 < self.ovfl_stop_macro <= 1):
            raise ValidationError("overflow thresholds must lie in (0, 1]")
        if self.lambda_growth <= 1:
            raise ValidationError("lambda_growth must be > 1")
        if self.max_iters < 0 or self.checkpoint_every < 1 or self.divergence_window < 1:
            raise ValidationError("iteration counts must be positive")
        if self.divergence_factor <= 1:
            raise ValidationError("divergence_factor must be > 1")


@dataclass
class Checkpoint:
    """Decoupled snapshot of the optimizer at one iteration."""

    iteration: int
    x: np.ndarray
    y: np.ndarray
    lam: dict[ResourceType, float]
    gamma: float
    macro_overflow: float
    hpwl: float


@dataclass
class GpTrace:
    """Per-iteration metrics. HPWL and overflows are evaluated at the
    placement iterate; the smooth wirelength and potential energies come
    from the force evaluation at the momentum lookahead point."""

    rows: list[dict] = field(default_factory=list)
    rolled_back: bool = False
    converged: bool = False
    iterations: int = 0
    final_overflows: dict[ResourceType, float] = field(default_factory=dict)

    _RES_ORDER = ("lut", "ff", "dsp", "bram")

    def csv_lines(self) -> list[str]:
        header = ["iter", "hpwl", "wa"]
        header += [f"phi_{r}" for r in self._RES_ORDER]
        header += [f"lam_{r}" for r in self._RES_ORDER]
        header += [f"ovfl_{r}" for r in self._RES_ORDER]
        header.append("gamma")
        out = [
            f"# rolled_back={str(self.rolled_back).lower()} converged={str(self.converged).lower()}",
            ",".join(header),
        ]
        for row in self.rows:
            vals = [str(row["iter"]), repr(row["hpwl"]), repr(row["wa"])]
            for group in ("phi", "lam", "ovfl"):
                vals += [repr(row[group].get(r, 0.0)) for r in self._RES_ORDER]
            vals.append(repr(row["gamma"]))
            out.append(",".join(vals))
        return out


class GpEngine:
    """Array-based optimizer state over movable instances and fillers."""

    def __init__(self, layout: FpgaLayout, design: Design, config: GpConfig, systems=None):
        if design.shapes:
            raise ValidationError("global placement expects a merged design (no unmerged shapes)")
        self.layout = layout
        self.design = design
        self.config = config
        self.top = build_topology(design)
        self.systems: dict[ResourceType, ElectroSystem] = (
            systems if systems is not None else build_systems(layout, design)
        )

        insts = design.instances
        self.movable_idx = np.array([i for i, m in enumerate(insts) if not m.fixed], dtype=np.int64)
        self.n_mov = len(self.movable_idx)
        for i, inst in enumerate(insts):
            if inst.fixed and inst.name not in design.fixed_pos:
                raise ValidationError(f"fixed instance {inst.name} has no coordinates")

        # entity vector: movable instances, then fillers per resource order
        ent_w = [insts[i].width for i in self.movable_idx]
        ent_h = [insts[i].height for i in self.movable_idx]
        ent_area = [insts[i].area for i in self.movable_idx]
        ent_pins = [float(self.top.pin_count[i]) for i in self.movable_idx]
        self.sys_entities: dict[ResourceType, np.ndarray] = {}
        self.fill_slice: dict[ResourceType, slice] = {}
        mov_ent_of_design = {int(di): e for e, di in enumerate(self.movable_idx)}
        pos = self.n_mov
        for res in DENSITY_RESOURCES:
            system = self.systems.get(res)
            if system is None:
                continue
            self.sys_entities[res] = np.array(
                [mov_ent_of_design[int(di)] for di in system.inst_idx], dtype=np.int64
            )
            self.fill_slice[res] = slice(pos, pos + system.n_fillers)
            ent_w += [system.filler_side] * system.n_fillers
            ent_h += [system.filler_side] * system.n_fillers
            ent_area += [system.filler_area] * system.n_fillers
            ent_pins += [0.0] * system.n_fillers
            pos += system.n_fillers
        self.n_ent = pos
        self.ent_w = np.asarray(ent_w)
        self.ent_h = np.asarray(ent_h)
        self.ent_area = np.asarray(ent_area)
        self.ent_pins = np.asarray(ent_pins)

        # region clamp groups over movable entities
        groups: dict[str, list[int]] = {}
        for e, di in enumerate(self.movable_idx):
            region = insts[di].region
            if region is not None:
                groups.setdefault(region, []).append(e)
        self.region_groups = [
            (design.regions[rid], np.array(idx, dtype=np.int64)) for rid, idx in sorted(groups.items())
        ]

        # capacity homing for macro entities: (entity idx, candidate column
        # anchors, column width, drift cap). A macro whose footprint overlaps
        # no hosting column sits where legality is impossible and where the
        # field carries no signal once its surroundings neutralize; a small
        # drift toward the nearest admissible column restores the slope.
        self.homing: list[tuple[int, np.ndarray, float, float]] = []
        for res in MACRO_RESOURCES:
            system = self.systems.get(res)
            if system is None or not hasattr(layout, "host_type"):
                continue  # snapshot stepping carries no column geometry
            host = layout.host_type[res]
            all_cols = np.array(layout.columns_for(res), dtype=float)
            for e in self.sys_entities[res]:
                inst = insts[self.movable_idx[e]]
                cols = all_cols
                if inst.region is not None:
                    rects = design.regions[inst.region].rects
                    cols = np.array(
                        [c for c in all_cols if any(xl <= c and c + host.width <= xh for xl, _, xh, _ in rects)],
                        dtype=float,
                    )
                if len(cols):
                    self.homing.append((int(e), cols, float(host.width), 0.25 * system.bin_w))

        self.fixed_x = np.zeros(len(insts))
        self.fixed_y = np.zeros(len(insts))
        for i, inst in enumerate(insts):
            if inst.fixed:
                self.fixed_x[i], self.fixed_y[i] = design.fixed_pos[inst.name]

        self.x = np.zeros(self.n_ent)
        self.y = np.zeros(self.n_ent)
        self.vx = np.zeros(self.n_ent)
        self.vy = np.zeros(self.n_ent)
        self.t_k = 1.0
        self.alpha = 0.0
        self.prev_v: tuple[np.ndarray, np.ndarray] | None = None
        self.prev_g: tuple[np.ndarray, np.ndarray] | None = None
        self.gamma = gamma_schedule(1.0, self._ref_bin_width())
        self.iteration = 0
        self.diverged_nonfinite = False

    def _ref_bin_width(self) -> float:
        if not self.systems:
            return max(self.layout.grid_w / 16.0, 1e-9)
        return min(s.bin_w for s in self.systems.values())

    # -- initialization ------------------------------------------------

    def seed_positions(self) -> None:
        """Movable instances at the chip center plus seeded jitter of up
        to two bin widths; region-constrained instances spread uniformly
        over their displacement-minimizing rectangle (a centered start
        collapses whole region populations onto one clamp corner, which
        the density force can never pull apart); fillers uniform."""
        rng = np.random.default_rng(self.config.seed)
        w2, h2 = self.layout.grid_w / 2.0, self.layout.grid_h / 2.0
        insts = self.design.instances
        jitter = rng.uniform(-2.0, 2.0, size=(self.n_mov, 2))
        for e, di in enumerate(self.movable_idx):
            inst = insts[di]
            cx, cy = w2 - inst.width / 2.0, h2 - inst.height / 2.0
            if inst.region is not None:
                rect = _nearest_rect(
                    self.design.regions[inst.region], cx, cy, inst.width, inst.height, inst.name
                )
                frac = (jitter[e] + 2.0) / 4.0  # reuse the draw as a rect fraction
                self.x[e] = rect[0] + frac[0] * max(rect[2] - rect[0] - inst.width, 0.0)
                self.y[e] = rect[1] + frac[1] * max(rect[3] - rect[1] - inst.height, 0.0)
                continue
            system = self.systems[inst.resource]
            self.x[e] = cx + jitter[e, 0] * system.bin_w
            self.y[e] = cy + jitter[e, 1] * system.bin_h
        for res in DENSITY_RESOURCES:
            system = self.systems.get(res)
            if system is None or system.n_fillers == 0:
                continue
            sl = self.fill_slice[res]
            u = rng.uniform(0.0, 1.0, size=(system.n_fillers, 2))
            self.x[sl] = u[:, 0] * (self.layout.grid_w - system.filler_side)
            self.y[sl] = u[:, 1] * (self.layout.grid_h - system.filler_side)
        self._clamp(self.x, self.y)
        self.vx[:] = self.x
        self.vy[:] = self.y

    def _home_stranded_macros(self, x: np.ndarray) -> None:
        """Drift macro entities whose footprint overlaps no hosting column
        toward the nearest admissible column (bounded step, x only:
        columns span the full chip height)."""
        for e, cols, col_w, cap in self.homing:
            xe = x[e]
            w = self.ent_w[e]
            # overlap test against column intervals [c, c + col_w)
            if np.any((cols < xe + w) & (cols + col_w > xe)):
                continue
            deltas = cols - xe
            target = deltas[np.argmin(np.abs(deltas))]
            x[e] = xe + float(np.clip(target, -cap, cap))

    # -- clamping ------------------------------------------------------

    def _clamp(self, x: np.ndarray, y: np.ndarray) -> None:
        for region, idx in self.region_groups:
            _clamp_region_many(x, y, self.ent_w, self.ent_h, idx, region)
            _spread_coincident(x, y, self.ent_w, self.ent_h, idx, region)
        np.clip(x, 0.0, self.layout.grid_w - self.ent_w, out=x)
        np.clip(y, 0.0, self.layout.grid_h - self.ent_h, out=y)

    # -- evaluation ----------------------------------------------------

    def _instance_coords(self, x: np.ndarray, y: np.ndarray):
        ix = self.fixed_x.copy()
        iy = self.fixed_y.copy()
        ix[self.movable_idx] = x[: self.n_mov]
        iy[self.movable_idx] = y[: self.n_mov]
        return ix, iy

    def _bin_all(self, x: np.ndarray, y: np.ndarray) -> None:
        for res, system in self.systems.items():
            ent = self.sys_entities[res]
            sl = self.fill_slice[res]
            update_density(system, x[ent], y[ent], x[sl], y[sl])

    def overflows(self) -> dict[ResourceType, float]:
        return {res: overflow(system) for res, system in self.systems.items()}

    def macro_overflow(self, ovfl: dict[ResourceType, float]) -> float:
        vals = [v for res, v in ovfl.items() if res in MACRO_RESOURCES]
        return max(vals) if vals else 0.0

    def metrics_at(self, x: np.ndarray, y: np.ndarray):
        """Overflow and HPWL of the given entity positions (density grids
        are rebuilt; potentials are left untouched)."""
        self._bin_all(x, y)
        ovfl = self.overflows()
        ix, iy = self._instance_coords(x, y)
        total, _ = hpwl_arrays(self.top, ix, iy)
        return ovfl, total

    def converged(self, ovfl: dict[ResourceType, float]) -> bool:
        for res, v in ovfl.items():
            limit = (
                self.config.ovfl_stop_macro
                if res in MACRO_RESOURCES
                else self.config.ovfl_stop_nonmacro
            )
            if v >= limit:
                return False
        return True

    # -- stepping ------------------------------------------------------

    def _gradient_at_lookahead(self):
        """Density solve + total preconditioned gradient at (vx, vy).
        Returns (gx, gy, wa_value); initializes c_s and lam_s on first use."""
        self._bin_all(self.vx, self.vy)
        max_ovfl = 0.0
        for system in self.systems.values():
            solve_poisson(system)
            max_ovfl = max(max_ovfl, overflow(system))
            if system.c_quad == 0.0:
                system.c_quad = 1.0 / max(system.energy, 1e-12)
        self.gamma = gamma_schedule(max_ovfl, self._ref_bin_width())

        ix, iy = self._instance_coords(self.vx, self.vy)
        wa_total, wa_gx, wa_gy = wa_arrays(self.top, ix, iy, self.gamma)
        gx = np.zeros(self.n_ent)
        gy = np.zeros(self.n_ent)
        gx[: self.n_mov] = wa_gx[self.movable_idx]
        gy[: self.n_mov] = wa_gy[self.movable_idx]

        dens_g: dict[ResourceType, tuple[np.ndarray, np.ndarray]] = {}
        for res, system in self.systems.items():
            ent = self.sys_entities[res]
            sl = self.fill_slice[res]
            ex = np.concatenate([self.vx[ent], self.vx[sl]])
            ey = np.concatenate([self.vy[ent], self.vy[sl]])
            ew = np.concatenate([system.inst_w, np.full(system.n_fillers, system.filler_side)])
            eh = np.concatenate([system.inst_h, np.full(system.n_fillers, system.filler_side)])
            ea = np.concatenate([system.inst_area, np.full(system.n_fillers, system.filler_area)])
            dens_g[res] = (ent, sl, *gradient_arrays(system, ex, ey, ew, eh, ea))

        if self.iteration == 0:
            wl_norm = float(np.sum(np.abs(gx)) + np.sum(np.abs(gy)))
            for res, system in self.systems.items():
                _, _, dgx, dgy = dens_g[res]
                d_norm = float(np.sum(np.abs(dgx)) + np.sum(np.abs(dgy)))
                system.lam = wl_norm / d_norm if d_norm > 0 and wl_norm > 0 else 1.0

        lam_ent = np.zeros(self.n_ent)
        for res, system in self.systems.items():
            ent, sl, dgx, dgy = dens_g[res]
            scale = system.lam * (1.0 + 2.0 * system.c_quad * system.energy)
            k = len(ent)
            gx[ent] += scale * dgx[:k]
            gy[ent] += scale * dgy[:k]
            gx[sl] += scale * dgx[k:]
            gy[sl] += scale * dgy[k:]
            lam_ent[ent] = system.lam
            lam_ent[sl] = system.lam

        precond = np.maximum(_EPS, self.ent_pins + lam_ent * self.ent_area)
        gx /= precond
        gy /= precond
        return gx, gy, wa_total

    def step(self) -> dict:
        """One optimizer iteration; returns the trace row. Non-finite
        values set ``diverged_nonfinite`` and leave positions unchanged."""
        gx, gy, wa_total = self._gradient_at_lookahead()
        if self.n_ent == 0:
            self.iteration += 1
            return self._trace_row(wa_total)
        if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))):
            self.diverged_nonfinite = True
            return self._trace_row(wa_total)

        if self.prev_v is None:
            gmax = max(float(np.max(np.abs(gx))), float(np.max(np.abs(gy))), 1e-12)
            self.alpha = 0.01 * min(self.layout.grid_w, self.layout.grid_h) / gmax
        else:
            sx = self.vx - self.prev_v[0]
            sy = self.vy - self.prev_v[1]
            yx = gx - self.prev_g[0]
            yy = gy - self.prev_g[1]
            sy_dot = float(np.dot(sx, yx) + np.dot(sy, yy))
            yy_dot = float(np.dot(yx, yx) + np.dot(yy, yy))
            if yy_dot > 0:
                self.alpha = abs(sy_dot) / yy_dot
            gmax = max(float(np.max(np.abs(gx))), float(np.max(np.abs(gy))), 1e-12)
            cap = 0.25 * max(self.layout.grid_w, self.layout.grid_h) / gmax
            self.alpha = min(self.alpha, cap)
        self.prev_v = (self.vx.copy(), self.vy.copy())
        self.prev_g = (gx, gy)

        ux = self.vx - self.alpha * gx
        uy = self.vy - self.alpha * gy
        self._home_stranded_macros(ux)
        self._clamp(ux, uy)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * self.t_k * self.t_k))
        beta = (self.t_k - 1.0) / t_next
        self.vx = ux + beta * (ux - self.x)
        self.vy = uy + beta * (uy - self.y)
        self._clamp(self.vx, self.vy)
        self.x, self.y = ux, uy
        self.t_k = t_next

        row = self._trace_row(wa_total)
        for system in self.systems.values():
            system.lam *= self.config.lambda_growth
        self.iteration += 1
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            self.diverged_nonfinite = True
        return row

    def _trace_row(self, wa_total: float) -> dict:
        ovfl, hp = self.metrics_at(self.x, self.y)
        return {
            "iter": self.iteration,
            "hpwl": hp,
            "wa": wa_total,
            "phi": {res.value.lower(): s.energy for res, s in self.systems.items()},
            "lam": {res.value.lower(): s.lam for res, s in self.systems.items()},
            "ovfl": {res.value.lower(): v for res, v in ovfl.items()},
            "gamma": self.gamma,
            "_ovfl_raw": ovfl,
        }

    # -- snapshots -----------------------------------------------------

    def snapshot(self) -> PlacementState:
        return self.snapshot_of(self.x, self.y, self.iteration)

    def snapshot_of(self, x: np.ndarray, y: np.ndarray, iteration: int) -> PlacementState:
        ix, iy = self._instance_coords(x, y)
        positions = {
            inst.name: (float(ix[i]), float(iy[i])) for i, inst in enumerate(self.design.instances)
        }
        fillers = {}
        for res in DENSITY_RESOURCES:
            if res in self.fill_slice:
                sl = self.fill_slice[res]
                fillers[res] = tuple((float(a), float(b)) for a, b in zip(x[sl], y[sl]))
        return PlacementState(positions=positions, filler_positions=fillers, iteration=iteration)

    def load_state(self, state: PlacementState) -> None:
        for e, di in enumerate(self.movable_idx):
            name = self.design.instances[di].name
            self.x[e], self.y[e] = state.positions[name]
        for res, sl in self.fill_slice.items():
            pts = state.filler_positions.get(res, ())
            if len(pts) != sl.stop - sl.start:
                raise ValidationError(f"filler count mismatch for {res.value}")
            for off, (a, b) in enumerate(pts):
                self.x[sl.start + off] = a
                self.y[sl.start + off] = b
        self.vx[:] = self.x
        self.vy[:] = self.y
        self.iteration = state.iteration


def _nearest_rect(region: Region, x: float, y: float, w: float, h: float, who: str):
    best = None
    best_d = math.inf
    for rect in region.rects:
        xl, yl, xh, yh = rect
        if w > xh - xl or h > yh - yl:
            continue
        cx, cy = clamp_to_rect(x, y, w, h, rect)
        d = (cx - x) ** 2 + (cy - y) ** 2
        if d < best_d:
            best_d = d
            best = rect
    if best is None:
        raise InfeasibleRegionError(f"{who}: size ({w}, {h}) fits no rect of region {region.id}")
    return best


def _spread_coincident(x, y, w, h, idx, region: Region) -> None:
    """Deterministically fan out entities clamped onto one exact point.

    Hard clamping can collapse a whole population onto a rectangle corner;
    exactly coincident charges all sample the same field and can never be
    pulled apart again, deadlocking the spreading phase. Duplicates are
    re-spaced along the rectangle's longer free span (stable entity
    order), staying inside the rectangle."""
    if len(idx) < 2:
        return
    px, py = x[idx], y[idx]
    order = np.lexsort((py, px))
    sx, sy = px[order], py[order]
    same = (sx[1:] == sx[:-1]) & (sy[1:] == sy[:-1])
    if not same.any():
        return
    boundary = np.flatnonzero(~same) + 1
    starts = np.concatenate([[0], boundary, [len(idx)]])
    for g in range(len(starts) - 1):
        dup_start, i = int(starts[g]), int(starts[g + 1])
        k = i - dup_start
        if k > 1:
            members = idx[order[dup_start:i]]
            bx, by = float(x[members[0]]), float(y[members[0]])
            rect = _nearest_rect(region, bx, by, float(np.max(w[members])), float(np.max(h[members])), "spread")
            span_right = rect[2] - np.max(w[members]) - bx
            span_left = bx - rect[0]
            span_up = rect[3] - np.max(h[members]) - by
            span_down = by - rect[1]
            sx = max(span_right, span_left)
            sy = max(span_up, span_down)
            ranks = np.arange(1, k, dtype=float) / k
            tail = members[1:]
            if sx >= sy:
                direction = 1.0 if span_right >= span_left else -1.0
                x[tail] = bx + direction * ranks * sx
            else:
                direction = 1.0 if span_up >= span_down else -1.0
                y[tail] = by + direction * ranks * sy


def _clamp_region_many(x, y, w, h, idx, region: Region) -> None:
    """Vectorized region clamp for the entities in ``idx``: each goes to
    the member rectangle minimizing its squared displacement (ties to the
    lower rect index)."""
    px, py = x[idx], y[idx]
    pw, ph = w[idx], h[idx]
    best_d = np.full(len(idx), np.inf)
    bx, by = px.copy(), py.copy()
    feasible_any = np.zeros(len(idx), dtype=bool)
    for xl, yl, xh, yh in region.rects:
        feas = (pw <= xh - xl) & (ph <= yh - yl)
        cx = np.clip(px, xl, np.maximum(xh - pw, xl))
        cy = np.clip(py, yl, np.maximum(yh - ph, yl))
        d = (cx - px) ** 2 + (cy - py) ** 2
        upd = feas & (d < best_d)
        bx[upd] = cx[upd]
        by[upd] = cy[upd]
        best_d[upd] = d[upd]
        feasible_any |= feas
    if not np.all(feasible_any):
        bad = int(idx[np.flatnonzero(~feasible_any)[0]])
        raise InfeasibleRegionError(f"entity {bad}: fits no rect of region {region.id}")
    x[idx] = bx
    y[idx] = by


def init_placement(layout: FpgaLayout, design: Design, seed: int) -> PlacementState:
    """Seeded initial placement: centered with deterministic jitter,
    region-constrained instances inside their regions, fixed instances
    at their coordinates, fillers uniform."""
    engine = GpEngine(layout, design, GpConfig(seed=seed))
    engine.seed_positions()
    return engine.snapshot()


def gp_step(
    state: PlacementState,
    systems: dict[ResourceType, ElectroSystem],
    design: Design,
    config: GpConfig,
) -> PlacementState:
    """One public optimizer step from a placement snapshot.

    Rebuilds densities for the snapshot, takes a single gradient step
    with clamping, and grows every lam_s. A non-finite gradient is a
    divergence signal: the returned state equals the input (the caller
    is expected to roll back), never a crash.
    """
    some = next(iter(systems.values()))
    grid_w = int(round(some.bins_x * some.bin_w))
    grid_h = int(round(some.bins_y * some.bin_h))
    layout = _layout_stub(design, grid_w, grid_h)
    engine = GpEngine(layout, design, config, systems=systems)
    engine.load_state(state)
    engine.iteration = max(state.iteration, 1)  # keep preset lam/c values
    if all(s.c_quad == 0.0 for s in systems.values()) and all(s.lam == 0.0 for s in systems.values()):
        engine.iteration = 0  # fresh systems: initialize lam and c on this step
    engine.step()
    if engine.diverged_nonfinite:
        return state
    return engine.snapshot_of(engine.x, engine.y, state.iteration + 1)


def _layout_stub(design: Design, grid_w: int, grid_h: int):
    """Minimal chip-extent carrier for engine clamping when stepping from
    a snapshot without the original layout object."""

    class _Stub:
        pass

    stub = _Stub()
    stub.grid_w = grid_w
    stub.grid_h = grid_h
    return stub


def run_global_placement(
    layout: FpgaLayout, design: Design, config: GpConfig
) -> tuple[PlacementState, GpTrace]:
    """Optimize until every overflow is under its stop threshold, the
    iteration budget runs out, or the divergence detector fires.

    The best checkpoint (lowest macro overflow, ties to lower HPWL) is
    refreshed every ``checkpoint_every`` iterations. On divergence, or
    when the budget ends without reaching the thresholds, the result is
    rolled back to the best checkpoint and the trace is flagged.
    """
    trace = GpTrace()
    engine = GpEngine(layout, design, config)
    engine.seed_positions()
    if config.max_iters == 0:
        return engine.snapshot(), trace

    best: Checkpoint | None = None

    def consider_checkpoint(iteration, ovfl, hp):
        nonlocal best
        mo = engine.macro_overflow(ovfl)
        if best is None or (mo, hp) < (best.macro_overflow, best.hpwl):
            best = Checkpoint(
                iteration=iteration,
                x=engine.x.copy(),
                y=engine.y.copy(),
                lam={res: s.lam for res, s in engine.systems.items()},
                gamma=engine.gamma,
                macro_overflow=mo,
                hpwl=hp,
            )

    ovfl0, hp0 = engine.metrics_at(engine.x, engine.y)
    consider_checkpoint(0, ovfl0, hp0)
    if engine.converged(ovfl0):
        trace.converged = True
        trace.final_overflows = ovfl0
        return engine.snapshot(), trace

    regress_run = 0
    rolled_back = False
    converged = False
    final_ovfl = ovfl0
    for k in range(1, config.max_iters + 1):
        row = engine.step()
        trace.rows.append({k2: v for k2, v in row.items() if not k2.startswith("_")})
        trace.rows[-1]["iter"] = k
        ovfl = row["_ovfl_raw"]
        final_ovfl = ovfl
        if engine.diverged_nonfinite:
            rolled_back = True
            break
        if k % config.checkpoint_every == 0:
            consider_checkpoint(k, ovfl, row["hpwl"])
        if engine.converged(ovfl):
            converged = True
            break
        # regression counts only once macro overflow is genuinely bad:
        # above the stop threshold and a factor beyond the best seen
        mo = engine.macro_overflow(ovfl)
        if best is not None and mo > max(
            config.divergence_factor * best.macro_overflow, config.ovfl_stop_macro
        ):
            regress_run += 1
            if regress_run >= config.divergence_window:
                rolled_back = True
                break
        else:
            regress_run = 0

    trace.iterations = len(trace.rows)
    if converged:
        trace.converged = True
        trace.final_overflows = final_ovfl
        return engine.snapshot(), trace

    # budget exhausted or diverged: fall back to the best known placement
    row_hp = trace.rows[-1]["hpwl"] if trace.rows else hp0
    consider_checkpoint(engine.iteration, final_ovfl, row_hp)
    trace.rolled_back = True
    state = engine.snapshot_of(best.x, best.y, best.iteration)
    ovfl_best, _ = engine.metrics_at(best.x, best.y)
    trace.final_overflows = ovfl_best
    return state, trace
