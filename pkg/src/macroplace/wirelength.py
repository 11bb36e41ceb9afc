"""HPWL and the differentiable weighted-average wirelength.

The weighted-average model replaces each net's max/min coordinate by
exp-weighted averages with smoothing temperature gamma; it always
underestimates HPWL by at most 2*gamma*ln(#pins) per net and axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import Design, ValidationError


@dataclass(frozen=True)
class WlParams:
    gamma: float  # smoothing temperature, grid units

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValidationError("gamma must be > 0")


@dataclass
class NetTopology:
    """Pin-compressed view of a design's nets.

    Pins are grouped by net in net index order; ``net_start`` is the CSR
    offset array. ``precond_wl`` is the per-instance connectivity weight
    sum(1 / (|e| - 1)) over its distinct nets with >= 2 pins.
    """

    pin_inst: np.ndarray
    pin_dx: np.ndarray
    pin_dy: np.ndarray
    net_start: np.ndarray
    net_names: tuple[str, ...]
    n_instances: int
    pin_count: np.ndarray
    precond_wl: np.ndarray


def build_topology(design: Design) -> NetTopology:
    index = design.index
    n = len(design.instances)
    pin_inst, pin_dx, pin_dy, net_start = [], [], [], [0]
    precond = np.zeros(n, dtype=np.float64)
    for net in design.nets:
        for pin in net.pins:
            pin_inst.append(index[pin.instance])
            pin_dx.append(pin.dx)
            pin_dy.append(pin.dy)
        net_start.append(len(pin_inst))
        deg = len(net.pins)
        if deg >= 2:
            w = 1.0 / (deg - 1)
            for i in sorted({index[p.instance] for p in net.pins}):
                precond[i] += w
    pin_inst = np.asarray(pin_inst, dtype=np.int64)
    return NetTopology(
        pin_inst=pin_inst,
        pin_dx=np.asarray(pin_dx, dtype=np.float64),
        pin_dy=np.asarray(pin_dy, dtype=np.float64),
        net_start=np.asarray(net_start, dtype=np.int64),
        net_names=tuple(net.name for net in design.nets),
        n_instances=n,
        pin_count=np.bincount(pin_inst, minlength=n).astype(np.int64),
        precond_wl=precond,
    )


def _positions_array(design: Design, placement) -> tuple[np.ndarray, np.ndarray]:
    positions = placement.positions if hasattr(placement, "positions") else placement
    x = np.empty(len(design.instances))
    y = np.empty(len(design.instances))
    for i, inst in enumerate(design.instances):
        try:
            x[i], y[i] = positions[inst.name]
        except KeyError:
            raise ValidationError(f"instance {inst.name} referenced by a pin is unplaced") from None
    return x, y


def hpwl_arrays(top: NetTopology, x: np.ndarray, y: np.ndarray):
    """Total and per-net half-perimeter wirelength from position arrays."""
    if len(top.net_names) == 0:
        return 0.0, np.zeros(0)
    px = x[top.pin_inst] + top.pin_dx
    py = y[top.pin_inst] + top.pin_dy
    starts = top.net_start[:-1]
    lengths = np.diff(top.net_start)
    per_net = (
        np.maximum.reduceat(px, starts)
        - np.minimum.reduceat(px, starts)
        + np.maximum.reduceat(py, starts)
        - np.minimum.reduceat(py, starts)
    )
    per_net[lengths < 2] = 0.0
    return float(np.sum(per_net)), per_net


def hpwl(design: Design, placement, top: NetTopology | None = None):
    """Half-perimeter wirelength: per net, (max-min pin x) + (max-min pin y).

    Returns (total, per-net list in net order); single-pin nets count 0.
    """
    top = top or build_topology(design)
    x, y = _positions_array(design, placement)
    return hpwl_arrays(top, x, y)


def wa_arrays(top: NetTopology, x: np.ndarray, y: np.ndarray, gamma: float, movable_mask=None):
    """Weighted-average wirelength and analytic per-instance gradient.

    Gradients accumulate over pins in net index order. When given,
    ``movable_mask`` zeroes the gradient of non-movable instances.
    """
    n = top.n_instances
    gx = np.zeros(n)
    gy = np.zeros(n)
    if len(top.net_names) == 0:
        return 0.0, gx, gy
    px = x[top.pin_inst] + top.pin_dx
    py = y[top.pin_inst] + top.pin_dy
    total_x, grad_px = kernels.wa_axis(px, top.net_start, gamma)
    total_y, grad_py = kernels.wa_axis(py, top.net_start, gamma)
    gx = np.bincount(top.pin_inst, weights=grad_px, minlength=n)
    gy = np.bincount(top.pin_inst, weights=grad_py, minlength=n)
    if movable_mask is not None:
        gx[~movable_mask] = 0.0
        gy[~movable_mask] = 0.0
    return total_x + total_y, gx, gy


def wa_wirelength(design: Design, placement, params: WlParams, top: NetTopology | None = None) -> float:
    top = top or build_topology(design)
    x, y = _positions_array(design, placement)
    total, _, _ = wa_arrays(top, x, y, params.gamma)
    return total


def wa_gradient(design: Design, placement, params: WlParams, top: NetTopology | None = None):
    """Partial derivatives of the weighted-average wirelength with respect
    to every instance position; fixed instances get zeros.

    Returns a dict name -> (dW/dx, dW/dy).
    """
    top = top or build_topology(design)
    x, y = _positions_array(design, placement)
    movable = np.array([not inst.fixed for inst in design.instances])
    _, gx, gy = wa_arrays(top, x, y, params.gamma, movable_mask=movable)
    return {inst.name: (gx[i], gy[i]) for i, inst in enumerate(design.instances)}


_GAMMA_LO = math.log10(0.1)
_GAMMA_HI = math.log10(8.0)


def gamma_schedule(overflow: float, bin_width: float) -> float:
    """Annealed smoothing temperature: 0.5 * bin width scaled by a
    multiplier shrinking from 8.0 at full overflow to 0.1 at none."""
    t = min(max(overflow, 0.0), 1.0)
    return 0.5 * bin_width * 10.0 ** (_GAMMA_LO + (_GAMMA_HI - _GAMMA_LO) * t)
