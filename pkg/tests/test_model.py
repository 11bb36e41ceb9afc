import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from macroplace.model import (
    CascadeShape,
    Design,
    InfeasibleRegionError,
    Instance,
    Net,
    Pin,
    Region,
    ResourceType,
    ValidationError,
    expand_placement,
    merge_cascades,
    region_clamp,
    validate_design,
)


def make_design(instances, nets=(), shapes=(), regions=None, fixed=None):
    return Design(
        name="t",
        instances=tuple(instances),
        nets=tuple(nets),
        shapes=tuple(shapes),
        regions=regions or {},
        fixed_pos=fixed or {},
    )


def macro(name, res=ResourceType.BRAM, h=5.0, region=None, shape=None):
    return Instance(name, res, 1, 1.0, h, False, region, shape)


class TestMergeCascades:
    def test_three_member_bram_shape(self):
        shape = CascadeShape("cs0", ResourceType.BRAM, ("m0", "m1", "m2"))
        design = make_design(
            [macro(f"m{i}", shape="cs0") for i in range(3)], shapes=[shape]
        )
        merged = merge_cascades(design)
        inst = merged.instance("cs0")
        assert inst.demand == 3
        assert inst.height == 15.0
        assert inst.width == 1.0
        assert all(m not in merged.index for m in ("m0", "m1", "m2"))

    def test_zero_shapes_identity(self):
        design = make_design([macro("m0"), macro("m1")], nets=[Net("n0", (Pin("m0", 0.0, 0.0),))])
        merged = merge_cascades(design)
        assert merged == design

    def test_pin_rehoming_offset(self):
        # pin on the second member of a DSP pair (height 2) at (0, 1) lands at (0, 3)
        shape = CascadeShape("cs0", ResourceType.DSP, ("m1", "m2"))
        design = make_design(
            [macro("m1", ResourceType.DSP, 2.0, shape="cs0"), macro("m2", ResourceType.DSP, 2.0, shape="cs0")],
            nets=[Net("n0", (Pin("m2", 0.0, 1.0),))],
            shapes=[shape],
        )
        merged = merge_cascades(design)
        pin = merged.nets[0].pins[0]
        assert pin.instance == "cs0"
        assert (pin.dx, pin.dy) == (0.0, 3.0)
        # expanding and recomputing the absolute pin position reproduces the original
        pos = expand_placement(merged, {"cs0": (4.0, 6.0)})
        assert pos["m2"] == (4.0, 6.0 + 2.0)
        orig_abs = (pos["m2"][0] + 0.0, pos["m2"][1] + 1.0)
        merged_abs = (4.0 + pin.dx, 6.0 + pin.dy)
        assert orig_abs == merged_abs

    def test_internal_net_retained(self):
        shape = CascadeShape("cs0", ResourceType.DSP, ("m1", "m2"))
        design = make_design(
            [macro("m1", ResourceType.DSP, 2.0, shape="cs0"), macro("m2", ResourceType.DSP, 2.0, shape="cs0")],
            nets=[Net("n0", (Pin("m1", 0.0, 0.0), Pin("m2", 0.0, 0.0)))],
            shapes=[shape],
        )
        merged = merge_cascades(design)
        assert len(merged.nets) == 1
        assert all(p.instance == "cs0" for p in merged.nets[0].pins)

    def test_missing_member(self):
        shape = CascadeShape("cs0", ResourceType.BRAM, ("m0", "ghost"))
        design = make_design([macro("m0", shape="cs0")], shapes=[shape])
        with pytest.raises(ValidationError, match="cs0"):
            merge_cascades(design)

    def test_mixed_resource(self):
        shape = CascadeShape("cs0", ResourceType.BRAM, ("m0", "d0"))
        design = make_design(
            [macro("m0", shape="cs0"), macro("d0", ResourceType.DSP, 2.0, shape="cs0")], shapes=[shape]
        )
        with pytest.raises(ValidationError, match="cs0"):
            merge_cascades(design)

    def test_duplicate_membership(self):
        s0 = CascadeShape("cs0", ResourceType.BRAM, ("m0", "m1"))
        s1 = CascadeShape("cs1", ResourceType.BRAM, ("m1", "m2"))
        design = make_design([macro(f"m{i}") for i in range(3)], shapes=[s0, s1])
        with pytest.raises(ValidationError, match="two shapes|already in shape"):
            merge_cascades(design)

    def test_region_disagreement(self):
        region = {"r0": Region("r0", ((0, 0, 10, 10),)), "r1": Region("r1", ((0, 0, 10, 10),))}
        shape = CascadeShape("cs0", ResourceType.BRAM, ("m0", "m1"))
        design = make_design(
            [macro("m0", region="r0", shape="cs0"), macro("m1", region="r1", shape="cs0")],
            shapes=[shape],
            regions=region,
        )
        with pytest.raises(ValidationError, match="disagree"):
            merge_cascades(design)

    def test_region_inherited_from_first_member(self):
        region = {"r0": Region("r0", ((0, 0, 30, 30),))}
        shape = CascadeShape("cs0", ResourceType.BRAM, ("m0", "m1"))
        design = make_design(
            [macro("m0", region="r0", shape="cs0"), macro("m1", region="r0", shape="cs0")],
            shapes=[shape],
            regions=region,
        )
        assert merge_cascades(design).instance("cs0").region == "r0"

    @given(
        n_members=st.integers(2, 6),
        base=st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
        offsets=st.lists(st.tuples(st.floats(0, 1), st.floats(0, 5)), min_size=1, max_size=8),
        data=st.data(),
    )
    @settings(max_examples=60, deadline=None)
    def test_merge_then_expand_reproduces_pin_positions(self, n_members, base, offsets, data):
        h = 5.0
        members = [macro(f"m{i}", h=h, shape="cs0") for i in range(n_members)]
        shape = CascadeShape("cs0", ResourceType.BRAM, tuple(m.name for m in members))
        pins = []
        for dx, dy in offsets:
            owner = data.draw(st.integers(0, n_members - 1))
            pins.append((owner, Pin(f"m{owner}", dx, dy)))
        design = make_design(members, nets=[Net("n0", tuple(p for _, p in pins))], shapes=[shape])
        merged = merge_cascades(design)
        expanded = expand_placement(merged, {"cs0": base})
        for (owner, pin), mpin in zip(pins, merged.nets[0].pins):
            ox, oy = expanded[f"m{owner}"]
            assert ox + pin.dx == pytest.approx(base[0] + mpin.dx, abs=1e-12)
            assert oy + pin.dy == pytest.approx(base[1] + mpin.dy, abs=1e-12)


class TestRegionClamp:
    RECT = Region("r", ((0.0, 0.0, 10.0, 10.0),))

    def test_clamp_low_side(self):
        assert region_clamp((-2.0, 5.0), (1.0, 1.0), self.RECT) == (0.0, 5.0)

    def test_interior_unchanged(self):
        assert region_clamp((3.0, 3.0), (1.0, 1.0), self.RECT) == (3.0, 3.0)

    def test_clamp_high_side(self):
        assert region_clamp((9.5, 9.8), (1.0, 1.0), self.RECT) == (9.0, 9.0)

    def test_infeasible_size(self):
        with pytest.raises(InfeasibleRegionError, match="inst7.*r"):
            region_clamp((0.0, 0.0), (11.0, 1.0), self.RECT, who="inst7")

    def test_multi_rect_picks_nearest(self):
        region = Region("r", ((0.0, 0.0, 4.0, 4.0), (10.0, 0.0, 14.0, 4.0)))
        assert region_clamp((9.5, 1.0), (1.0, 1.0), region) == (10.0, 1.0)
        assert region_clamp((4.5, 1.0), (1.0, 1.0), region) == (3.0, 1.0)

    def test_multi_rect_tie_breaks_to_lower_index(self):
        region = Region("r", ((0.0, 0.0, 4.0, 4.0), (7.0, 0.0, 11.0, 4.0)))
        # clamp targets are x=3 and x=7, both 2 away from x=5: tie -> first rect
        assert region_clamp((5.0, 1.0), (1.0, 1.0), region) == (3.0, 1.0)

    def test_skips_too_small_rect(self):
        region = Region("r", ((0.0, 0.0, 2.0, 2.0), (5.0, 5.0, 20.0, 20.0)))
        assert region_clamp((0.0, 0.0), (3.0, 3.0), region) == (5.0, 5.0)

    @given(
        px=st.floats(-30, 30),
        py=st.floats(-30, 30),
        xl=st.floats(-10, 10),
        yl=st.floats(-10, 10),
        w=st.floats(0.1, 5),
        h=st.floats(0.1, 5),
        bw=st.floats(6, 20),
        bh=st.floats(6, 20),
    )
    @settings(max_examples=200, deadline=None)
    def test_idempotent_inbox_interior(self, px, py, xl, yl, w, h, bw, bh):
        region = Region("r", ((xl, yl, xl + bw, yl + bh),))
        c1 = region_clamp((px, py), (w, h), region)
        assert region_clamp(c1, (w, h), region) == c1
        assert region.contains(c1[0], c1[1], w, h)
        if region.contains(px, py, w, h, eps=0.0):
            assert c1 == (px, py)


class TestValidation:
    def test_empty_net_rejected(self, mini_layout):
        design = make_design([macro("m0")], nets=[Net("n0", ())])
        with pytest.raises(ValidationError, match="n0"):
            validate_design(design, mini_layout)

    def test_io_must_be_fixed(self, mini_layout):
        io = Instance("io0", ResourceType.IO, 1, 1.0, 1.0, False, None, None)
        with pytest.raises(ValidationError, match="io0"):
            validate_design(make_design([io]), mini_layout)

    def test_instances_are_immutable(self):
        inst = macro("m0")
        with pytest.raises(dataclasses.FrozenInstanceError):
            inst.width = 2.0
