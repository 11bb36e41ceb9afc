"""Line-oriented text formats for layouts, designs, placements, and metrics.

All formats are whitespace-separated with ``#`` comments. Grammar:

  layout    GRID W H
            SITETYPE name width height RES:cap[,RES:cap...]
            COLUMN x sitetype
  design    INST name RES [REGION id]
            SHAPE id RES m1 m2 ...
            REGION id xl yl xh yh [xl yl xh yh ...]
            NET name inst:dx:dy ...
            FIXED name x y
  placement name x y [LEGAL]
  metrics   DESIGN name t_mp=<min> t_pr=<hr> l_short=a,b,c,d l_global=a,b,c,d dri=<n> [hidden]

Parsers reject dangling references and report 1-based line numbers.
Writers emit the canonical form: ``parse(write(x)) == x``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    CascadeShape,
    Design,
    FpgaLayout,
    Instance,
    Net,
    Pin,
    Placement,
    Region,
    ResourceType,
    SiteType,
    ValidationError,
    validate_design,
)


class ParseError(ValueError):
    """Input text violating a grammar or referencing undefined names."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(eq=True)
class MetricsRecord:
    """Per-design measurements feeding the contest score arithmetic."""

    design: str
    t_mp: float  # macro placement runtime, minutes
    t_pr: float  # place-and-route runtime, hours
    l_short: tuple[float, float, float, float]
    l_global: tuple[float, float, float, float]
    dri: int  # detailed router outer iterations
    hidden: bool = False

    def __post_init__(self):
        if self.t_mp < 0 or self.t_pr < 0:
            raise ValidationError(f"{self.design}: negative runtime")
        if len(self.l_short) != 4 or len(self.l_global) != 4:
            raise ValidationError(f"{self.design}: congestion levels need exactly 4 directions")
        if self.dri < 1:
            raise ValidationError(f"{self.design}: dri must be >= 1")


def _lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield i, line.split()


def _resource(tok: str, line_no: int) -> ResourceType:
    try:
        return ResourceType(tok)
    except ValueError:
        raise ParseError(line_no, f"unknown resource {tok}") from None


def _num(tok: str, line_no: int, kind=float):
    try:
        return kind(tok)
    except ValueError:
        raise ParseError(line_no, f"bad number {tok!r}") from None


def parse_layout(text: str) -> FpgaLayout:
    grid = None
    site_types: list[SiteType] = []
    columns: dict[int, str] = {}
    names = set()
    for line_no, toks in _lines(text):
        kw = toks[0]
        if kw == "GRID":
            if len(toks) != 3:
                raise ParseError(line_no, "GRID needs W H")
            grid = (_num(toks[1], line_no, int), _num(toks[2], line_no, int))
        elif kw == "SITETYPE":
            if len(toks) != 5:
                raise ParseError(line_no, "SITETYPE needs name width height caps")
            name = toks[1]
            if name in names:
                raise ParseError(line_no, f"duplicate site type {name}")
            names.add(name)
            caps = {}
            for part in toks[4].split(","):
                if ":" not in part:
                    raise ParseError(line_no, f"bad capacity entry {part!r}")
                res, cap = part.split(":", 1)
                caps[_resource(res, line_no)] = _num(cap, line_no, int)
            try:
                site_types.append(
                    SiteType(name, _num(toks[2], line_no, int), _num(toks[3], line_no, int), caps)
                )
            except ValidationError as exc:
                raise ParseError(line_no, str(exc)) from None
        elif kw == "COLUMN":
            if len(toks) != 3:
                raise ParseError(line_no, "COLUMN needs x sitetype")
            x = _num(toks[1], line_no, int)
            if x in columns:
                raise ParseError(line_no, f"duplicate column {x}")
            if toks[2] not in names:
                raise ParseError(line_no, f"unknown site type {toks[2]}")
            columns[x] = toks[2]
        else:
            raise ParseError(line_no, f"unknown keyword {kw}")
    if grid is None:
        raise ParseError(1, "missing GRID")
    try:
        return FpgaLayout(grid[0], grid[1], tuple(site_types), columns)
    except ValidationError as exc:
        raise ParseError(1, str(exc)) from None


def write_layout(layout: FpgaLayout) -> str:
    out = [f"GRID {layout.grid_w} {layout.grid_h}"]
    for st in layout.site_types:
        caps = ",".join(f"{res.value}:{cap}" for res, cap in st.capacity.items())
        out.append(f"SITETYPE {st.name} {st.width} {st.height} {caps}")
    for x in sorted(layout.columns):
        out.append(f"COLUMN {x} {layout.columns[x]}")
    return "\n".join(out) + "\n"


def parse_design(text: str, layout: FpgaLayout, name: str = "design") -> Design:
    instances: list[Instance] = []
    inst_lines: dict[str, int] = {}
    shapes: list[tuple[int, CascadeShape]] = []
    regions: dict[str, Region] = {}
    nets: list[tuple[int, Net]] = []
    fixed_lines: dict[str, int] = {}
    fixed_pos: dict[str, tuple[float, float]] = {}
    pending_region: list[tuple[int, str]] = []  # (line, region id) to resolve

    for line_no, toks in _lines(text):
        kw = toks[0]
        if kw == "INST":
            if len(toks) not in (3, 5):
                raise ParseError(line_no, "INST needs name RES [REGION id]")
            iname, res = toks[1], _resource(toks[2], line_no)
            if iname in inst_lines:
                raise ParseError(line_no, f"duplicate instance {iname}")
            region = None
            if len(toks) == 5:
                if toks[3] != "REGION":
                    raise ParseError(line_no, f"expected REGION, got {toks[3]}")
                region = toks[4]
                pending_region.append((line_no, region))
            try:
                w, h = layout.instance_dims(res)
            except ValidationError as exc:
                raise ParseError(line_no, str(exc)) from None
            instances.append(Instance(iname, res, 1, w, h, False, region, None))
            inst_lines[iname] = line_no
        elif kw == "SHAPE":
            if len(toks) < 5:
                raise ParseError(line_no, "SHAPE needs id RES and >= 2 members")
            shapes.append((line_no, CascadeShape(toks[1], _resource(toks[2], line_no), tuple(toks[3:]))))
        elif kw == "REGION":
            if (len(toks) - 2) % 4 != 0 or len(toks) < 6:
                raise ParseError(line_no, "REGION needs id and groups of 4 coordinates")
            vals = [_num(t, line_no) for t in toks[2:]]
            rects = tuple(tuple(vals[i : i + 4]) for i in range(0, len(vals), 4))
            try:
                regions[toks[1]] = Region(toks[1], rects)
            except ValidationError as exc:
                raise ParseError(line_no, str(exc)) from None
        elif kw == "NET":
            if len(toks) < 3:
                raise ParseError(line_no, "NET needs name and >= 1 pin")
            pins = []
            for tok in toks[2:]:
                parts = tok.split(":")
                if len(parts) != 3:
                    raise ParseError(line_no, f"bad pin {tok!r}, expected inst:dx:dy")
                pins.append(Pin(parts[0], _num(parts[1], line_no), _num(parts[2], line_no)))
            nets.append((line_no, Net(toks[1], tuple(pins))))
        elif kw == "FIXED":
            if len(toks) != 4:
                raise ParseError(line_no, "FIXED needs name x y")
            fixed_pos[toks[1]] = (_num(toks[2], line_no), _num(toks[3], line_no))
            fixed_lines[toks[1]] = line_no
        else:
            raise ParseError(line_no, f"unknown keyword {kw}")

    # resolve references with line numbers
    for line_no, rid in pending_region:
        if rid not in regions:
            raise ParseError(line_no, f"unknown region {rid}")
    index = {inst.name: i for i, inst in enumerate(instances)}
    for line_no, net in nets:
        for pin in net.pins:
            if pin.instance not in index:
                raise ParseError(line_no, f"net {net.name}: pin on unknown instance {pin.instance}")
    for line_no, shape in shapes:
        for m in shape.members:
            if m not in index:
                raise ParseError(line_no, f"shape {shape.id}: unknown member {m}")
    for fixed_name, line_no in fixed_lines.items():
        if fixed_name not in index:
            raise ParseError(line_no, f"fixed position for unknown instance {fixed_name}")

    fixed_names = set(fixed_pos)
    shape_of = {m: s.id for _, s in shapes for m in s.members}
    final_instances = tuple(
        Instance(
            i.name, i.resource, i.demand, i.width, i.height,
            i.name in fixed_names, i.region, shape_of.get(i.name),
        )
        for i in instances
    )
    design = Design(
        name=name,
        instances=final_instances,
        nets=tuple(net for _, net in nets),
        shapes=tuple(shape for _, shape in shapes),
        regions=regions,
        fixed_pos=fixed_pos,
    )
    validate_design(design, layout)
    return design


def write_design(design: Design) -> str:
    out = []
    for rid in sorted(design.regions):
        coords = " ".join(repr(v) for rect in design.regions[rid].rects for v in rect)
        out.append(f"REGION {rid} {coords}")
    for inst in design.instances:
        line = f"INST {inst.name} {inst.resource.value}"
        if inst.region is not None:
            line += f" REGION {inst.region}"
        out.append(line)
    for shape in design.shapes:
        out.append(f"SHAPE {shape.id} {shape.resource.value} " + " ".join(shape.members))
    for net in design.nets:
        pins = " ".join(f"{p.instance}:{p.dx!r}:{p.dy!r}" for p in net.pins)
        out.append(f"NET {net.name} {pins}")
    for name, (x, y) in design.fixed_pos.items():
        out.append(f"FIXED {name} {x!r} {y!r}")
    return "\n".join(out) + "\n"


def parse_placement(text: str, design: Design) -> Placement:
    positions: dict[str, tuple[float, float]] = {}
    legal: set[str] = set()
    for line_no, toks in _lines(text):
        if len(toks) not in (3, 4):
            raise ParseError(line_no, "placement line needs: name x y [LEGAL]")
        name = toks[0]
        if name not in design.index:
            raise ParseError(line_no, f"unknown instance {name}")
        if name in positions:
            raise ParseError(line_no, f"duplicate placement for {name}")
        positions[name] = (_num(toks[1], line_no), _num(toks[2], line_no))
        if len(toks) == 4:
            if toks[3] != "LEGAL":
                raise ParseError(line_no, f"unexpected token {toks[3]}")
            legal.add(name)
    return Placement(positions, legal)


def write_placement(placement: Placement) -> str:
    out = []
    for name, (x, y) in placement.positions.items():
        tag = " LEGAL" if name in placement.legal else ""
        out.append(f"{name} {x!r} {y!r}{tag}")
    return "\n".join(out) + "\n"


def parse_metrics(text: str) -> list[MetricsRecord]:
    records = []
    for line_no, toks in _lines(text):
        if toks[0] != "DESIGN":
            raise ParseError(line_no, f"unknown keyword {toks[0]}")
        if len(toks) < 7:
            raise ParseError(line_no, "DESIGN needs name and 5 key=value fields")
        name = toks[1]
        fields: dict[str, str] = {}
        hidden = False
        for tok in toks[2:]:
            if tok == "hidden":
                hidden = True
                continue
            if "=" not in tok:
                raise ParseError(line_no, f"bad field {tok!r}")
            key, val = tok.split("=", 1)
            fields[key] = val
        try:
            quad = lambda v: tuple(float(p) for p in v.split(","))
            record = MetricsRecord(
                design=name,
                t_mp=float(fields["t_mp"]),
                t_pr=float(fields["t_pr"]),
                l_short=quad(fields["l_short"]),
                l_global=quad(fields["l_global"]),
                dri=int(fields["dri"]),
                hidden=hidden,
            )
        except KeyError as exc:
            raise ParseError(line_no, f"missing field {exc.args[0]}") from None
        except (ValueError, ValidationError) as exc:
            raise ParseError(line_no, str(exc)) from None
        records.append(record)
    return records


def write_metrics(records: list[MetricsRecord]) -> str:
    out = []
    for r in records:
        ls = ",".join(repr(v) for v in r.l_short)
        lg = ",".join(repr(v) for v in r.l_global)
        line = f"DESIGN {r.design} t_mp={r.t_mp!r} t_pr={r.t_pr!r} l_short={ls} l_global={lg} dri={r.dri}"
        if r.hidden:
            line += " hidden"
        out.append(line)
    return "\n".join(out) + "\n"
