"""Kernel selection: compiled Cython extension when built, numpy fallback
otherwise. The choice is made once at import; ``available()`` exposes
both implementations for the parity tests and the benchmark.
"""

from . import fallback

try:
    from . import _ckernels as compiled
except ImportError:
    compiled = None

active = compiled if compiled is not None else fallback
IMPL = active.IMPL


def available() -> dict:
    impls = {"python": fallback}
    if compiled is not None:
        impls["compiled"] = compiled
    return impls


def wa_axis(coords, net_start, gamma):
    return active.wa_axis(coords, net_start, gamma)


def density_scatter(xlo, ylo, w, h, bw, bh, nbx, nby):
    return active.density_scatter(xlo, ylo, w, h, bw, bh, nbx, nby)
