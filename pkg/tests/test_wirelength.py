import math

import numpy as np
import pytest

from macroplace.model import Design, Instance, Net, Pin, ResourceType
from macroplace.wirelength import (
    WlParams,
    build_topology,
    gamma_schedule,
    hpwl,
    wa_gradient,
    wa_wirelength,
)


def build(n_inst, nets, fixed=()):
    instances = tuple(
        Instance(f"i{k}", ResourceType.LUT, 1, 0.5, 0.5, f"i{k}" in fixed, None, None)
        for k in range(n_inst)
    )
    return Design("t", instances, tuple(nets), (), {}, {})


def random_case(rng, n_inst=20, n_nets=50, span=100.0):
    nets = []
    for j in range(n_nets):
        deg = int(rng.integers(1, 6))
        members = rng.choice(n_inst, size=min(deg, n_inst), replace=False)
        pins = tuple(
            Pin(f"i{int(m)}", float(rng.uniform(0, 1)), float(rng.uniform(0, 1))) for m in members
        )
        nets.append(Net(f"n{j}", pins))
    design = build(n_inst, nets)
    placement = {
        f"i{k}": (float(rng.uniform(0, span)), float(rng.uniform(0, span))) for k in range(n_inst)
    }
    return design, placement


class TestHpwl:
    def test_rectangle_half_perimeter(self):
        design = build(2, [Net("n0", (Pin("i0", 0.0, 0.0), Pin("i1", 0.0, 0.0)))])
        total, per_net = hpwl(design, {"i0": (0.0, 0.0), "i1": (3.0, 4.0)})
        assert total == 7.0
        assert list(per_net) == [7.0]

    def test_single_pin_net(self):
        design = build(1, [Net("n0", (Pin("i0", 0.2, 0.3),))])
        total, per_net = hpwl(design, {"i0": (5.0, 5.0)})
        assert total == 0.0 and per_net[0] == 0.0

    def test_matches_bruteforce_scan(self):
        rng = np.random.default_rng(11)
        design, placement = random_case(rng)
        total, per_net = hpwl(design, placement)
        # independent per-net min/max scan
        ref_total = 0.0
        for j, net in enumerate(design.nets):
            xs, ys = [], []
            for pin in net.pins:
                px, py = placement[pin.instance]
                xs.append(px + pin.dx)
                ys.append(py + pin.dy)
            ref = (max(xs) - min(xs) + max(ys) - min(ys)) if len(xs) > 1 else 0.0
            assert per_net[j] == pytest.approx(ref, abs=1e-12)
            ref_total += ref
        assert total == pytest.approx(ref_total, rel=1e-12)

    def test_unplaced_instance(self):
        design = build(2, [Net("n0", (Pin("i0", 0.0, 0.0), Pin("i1", 0.0, 0.0)))])
        with pytest.raises(Exception, match="i1"):
            hpwl(design, {"i0": (0.0, 0.0)})


class TestWaWirelength:
    def test_coincident_pins_zero(self):
        design = build(2, [Net("n0", (Pin("i0", 0.0, 0.0), Pin("i1", 0.0, 0.0)))])
        value = wa_wirelength(design, {"i0": (2.0, 2.0), "i1": (2.0, 2.0)}, WlParams(1.0))
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_two_pin_closed_form(self):
        # pins at x = 0 and 1 on one y: x term is (e - 1) / (e + 1)
        design = build(2, [Net("n0", (Pin("i0", 0.0, 0.0), Pin("i1", 0.0, 0.0)))])
        value = wa_wirelength(design, {"i0": (0.0, 5.0), "i1": (1.0, 5.0)}, WlParams(1.0))
        expected = (math.e - 1.0) / (math.e + 1.0)
        assert value == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.46212, abs=5e-6)

    def test_small_gamma_approaches_hpwl(self):
        rng = np.random.default_rng(5)
        design, placement = random_case(rng, n_nets=30)
        ref, per_net = hpwl(design, placement)
        spans = [v for v in per_net if v > 1.0]
        gamma = 0.01 * float(np.mean(spans))
        value = wa_wirelength(design, placement, WlParams(gamma))
        assert abs(value - ref) / ref < 0.02

    def test_underestimates_with_log_bound(self):
        rng = np.random.default_rng(17)
        design, placement = random_case(rng, n_nets=40)
        gamma = 2.0
        value = wa_wirelength(design, placement, WlParams(gamma))
        ref, _ = hpwl(design, placement)
        assert value <= ref + 1e-9
        bound = sum(
            2.0 * gamma * math.log(len(net.pins)) * 2.0  # both axes
            for net in design.nets
            if len(net.pins) >= 2
        )
        assert ref - value <= bound + 1e-9

    def test_gamma_must_be_positive(self):
        with pytest.raises(Exception):
            WlParams(0.0)


class TestWaGradient:
    def test_single_pin_zero(self):
        design = build(1, [Net("n0", (Pin("i0", 0.0, 0.0),))])
        grads = wa_gradient(design, {"i0": (1.0, 1.0)}, WlParams(1.0))
        assert grads["i0"] == (0.0, 0.0)

    def test_fixed_instances_zeroed(self):
        design = build(2, [Net("n0", (Pin("i0", 0.0, 0.0), Pin("i1", 0.0, 0.0)))], fixed=("i1",))
        grads = wa_gradient(design, {"i0": (0.0, 0.0), "i1": (4.0, 4.0)}, WlParams(1.0))
        assert grads["i1"] == (0.0, 0.0)
        assert grads["i0"] != (0.0, 0.0)

    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(23)
        design, placement = random_case(rng, n_inst=20, n_nets=40, span=100.0)
        params = WlParams(2.0)
        grads = wa_gradient(design, placement, params)
        h = 1e-4 * 100.0
        g_ref, g_got = [], []
        for name in placement:
            for axis in (0, 1):
                up = dict(placement)
                dn = dict(placement)
                up[name] = (up[name][0] + h, up[name][1]) if axis == 0 else (up[name][0], up[name][1] + h)
                dn[name] = (dn[name][0] - h, dn[name][1]) if axis == 0 else (dn[name][0], dn[name][1] - h)
                fd = (wa_wirelength(design, up, params) - wa_wirelength(design, dn, params)) / (2 * h)
                g_ref.append(fd)
                g_got.append(grads[name][axis])
        g_ref, g_got = np.array(g_ref), np.array(g_got)
        rel = np.linalg.norm(g_got - g_ref) / np.linalg.norm(g_ref)
        assert rel < 1e-4

    def test_translation_invariance(self):
        rng = np.random.default_rng(31)
        design, placement = random_case(rng)
        params = WlParams(1.5)
        g0 = wa_gradient(design, placement, params)
        shifted = {k: (v[0] + 17.5, v[1] + 17.5) for k, v in placement.items()}
        g1 = wa_gradient(design, shifted, params)
        for name in g0:
            assert g0[name][0] == pytest.approx(g1[name][0], rel=1e-9, abs=1e-12)
            assert g0[name][1] == pytest.approx(g1[name][1], rel=1e-9, abs=1e-12)

    def test_linearity_over_nets(self):
        """The gradient of a two-net design equals the sum of the
        single-net designs' gradients."""
        rng = np.random.default_rng(37)
        net_a = Net("a", (Pin("i0", 0.0, 0.0), Pin("i1", 0.3, 0.1)))
        net_b = Net("b", (Pin("i0", 0.1, 0.2), Pin("i2", 0.0, 0.0), Pin("i1", 0.0, 0.0)))
        placement = {f"i{k}": (float(rng.uniform(0, 10)), float(rng.uniform(0, 10))) for k in range(3)}
        params = WlParams(0.7)
        g_both = wa_gradient(build(3, [net_a, net_b]), placement, params)
        g_a = wa_gradient(build(3, [net_a]), placement, params)
        g_b = wa_gradient(build(3, [net_b]), placement, params)
        for name in g_both:
            assert g_both[name][0] == pytest.approx(g_a[name][0] + g_b[name][0], abs=1e-12)
            assert g_both[name][1] == pytest.approx(g_a[name][1] + g_b[name][1], abs=1e-12)

    def test_accumulation_deterministic(self):
        rng = np.random.default_rng(41)
        design, placement = random_case(rng)
        params = WlParams(1.0)
        a = wa_gradient(design, placement, params)
        b = wa_gradient(design, placement, params)
        assert a == b


def test_gamma_schedule_monotone_and_bounded():
    bw = 0.5
    hi = gamma_schedule(1.0, bw)
    lo = gamma_schedule(0.0, bw)
    assert hi == pytest.approx(0.5 * bw * 8.0)
    assert lo == pytest.approx(0.5 * bw * 0.1)
    prev = lo
    for t in np.linspace(0.0, 1.0, 20):
        g = gamma_schedule(float(t), bw)
        assert g >= prev - 1e-12
        prev = g
    assert gamma_schedule(5.0, bw) == hi  # clamped


def test_topology_precond_and_pin_counts():
    nets = [
        Net("n0", (Pin("i0", 0.0, 0.0), Pin("i1", 0.0, 0.0))),            # |e|=2 -> 1
        Net("n1", (Pin("i0", 0.0, 0.0), Pin("i1", 0.0, 0.0), Pin("i2", 0.0, 0.0))),  # |e|=3 -> 1/2
        Net("n2", (Pin("i0", 0.1, 0.1),)),                                 # single pin ignored
    ]
    top = build_topology(build(3, nets))
    assert top.precond_wl[0] == pytest.approx(1.0 + 0.5)
    assert top.precond_wl[2] == pytest.approx(0.5)
    assert top.pin_count[0] == 3
    # a net with two pins on one instance counts the net once
    nets = [Net("n0", (Pin("i0", 0.0, 0.0), Pin("i0", 0.5, 0.0), Pin("i1", 0.0, 0.0)))]
    top = build_topology(build(2, nets))
    assert top.precond_wl[0] == pytest.approx(0.5)
