"""Plain-text format for sketches.

Layout of a sketch file::

    sketch Cat

    nodes ar ar2 ob

    source : ar -> ob
    lfac : ar2 -> ar

    diagram ar2_cone.base {
      node l = ar
      arrow ls : l -> ob = source
    }
    cone ar2_cone vertex ar2 base ar2_cone.base
      proj l -> lfac

    diagram assoc {
      ...
    }

Arrow lines use display names; the parser assigns ids, qualifying with
``@source`` exactly when a display name occurs more than once.  Cone
projection arrows named ``<cone>.<baseid>`` are implied by their proj
lines and never written as arrow lines.  Diagram sections referenced by
a cone's base clause are cone bases; every other section is a
distinguished diagram.  Serialization is deterministic and parsing it
back reproduces the sketch exactly.
"""
from __future__ import annotations

import re

from .diagrams import Cone, Diagram
from .graphs import Graph, arrow_display_name
from .sketches import Sketch


class SketchSyntaxError(ValueError):
    pass


_NODE_RE = re.compile(
    r'^node\s+(\S+)\s*=\s*(\S+)(?:\s+"((?:[^"\\]|\\.)*)")?$'
)
_ARROW_RE = re.compile(r"^arrow\s+(\S+)\s*:\s*(\S+)\s*->\s*(\S+)\s*=\s*(\S+)$")
_GRAPH_ARROW_RE = re.compile(r"^(\S+)\s*:\s*(\S+)\s*->\s*(\S+)$")
_CONE_RE = re.compile(r"^cone\s+(\S+)\s+vertex\s+(\S+)\s+base\s+(\S+)$")
_PROJ_RE = re.compile(r"^proj\s+(\S+)\s*->\s*(\S+)$")


def _unescape(s: str) -> str:
    return s.replace('\\"', '"').replace("\\\\", "\\")


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _strip(line: str) -> str:
    if "#" in line:
        line = line[: line.index("#")]
    return line.strip()


def parse_diagram_section(
    lines: list[str], start: int, label: str
) -> tuple[dict, int]:
    """Parse the body of a ``{ ... }`` block from ``start``.

    Returns raw content: node ids with labels and annotations, arrow
    rows with unresolved display names.  Resolution against a target
    graph happens in the caller.
    """
    nodes: dict[str, tuple[str, str | None]] = {}
    arrows: dict[str, tuple[str, str, str]] = {}
    i = start
    while i < len(lines):
        line = _strip(lines[i])
        i += 1
        if not line:
            continue
        if line == "}":
            return {"nodes": nodes, "arrows": arrows}, i
        m = _NODE_RE.match(line)
        if m:
            nid, nlabel, ann = m.group(1), m.group(2), m.group(3)
            if nid in nodes:
                raise SketchSyntaxError(f"line {i}: duplicate node id {nid!r}")
            nodes[nid] = (nlabel, _unescape(ann) if ann is not None else None)
            continue
        m = _ARROW_RE.match(line)
        if m:
            aid, s, t, name = m.groups()
            if aid in arrows:
                raise SketchSyntaxError(f"line {i}: duplicate arrow id {aid!r}")
            arrows[aid] = (s, t, name)
            continue
        raise SketchSyntaxError(f"line {i}: bad line in {label}: {line!r}")
    raise SketchSyntaxError(f"unterminated block in {label}")


def realize_diagram(raw: dict, target: Graph, label: str) -> Diagram:
    """Turn a parsed section into a diagram over ``target``."""
    shape = Graph()
    node_label: dict[str, str] = {}
    annot: dict[str, str] = {}
    for nid, (nlabel, ann) in raw["nodes"].items():
        shape.add_node(nid)
        if nlabel not in target.nodes:
            raise SketchSyntaxError(f"{label}: unknown node label {nlabel!r}")
        node_label[nid] = nlabel
        if ann is not None:
            annot[nid] = ann
    arrow_label: dict[str, str] = {}
    for aid, (s, t, name) in raw["arrows"].items():
        if s not in node_label or t not in node_label:
            raise SketchSyntaxError(
                f"{label}: arrow {aid!r} references unknown shape node"
            )
        shape.add_arrow(aid, s, t)
        try:
            arrow_label[aid] = target.resolve_arrow(name, node_label[s])
        except Exception as e:
            raise SketchSyntaxError(f"{label}: arrow {aid!r}: {e}") from None
    d = Diagram(shape, target, node_label, arrow_label, annot)
    d.check()
    return d


def serialize_diagram_body(d: Diagram, indent: str = "  ") -> list[str]:
    out = []
    for n in sorted(d.shape.nodes):
        line = f"{indent}node {n} = {d.node_label[n]}"
        if n in d.annot:
            line += f' "{_escape(d.annot[n])}"'
        out.append(line)
    for a in sorted(d.shape.arrows):
        s, t = d.shape.arrows[a]
        name = arrow_display_name(d.arrow_label[a])
        out.append(f"{indent}arrow {a} : {s} -> {t} = {name}")
    return out


def parse_sketch(text: str) -> Sketch:
    lines = text.splitlines()
    name: str | None = None
    node_names: list[str] = []
    arrow_rows: list[tuple[int, str, str, str]] = []
    sections: dict[str, dict] = {}
    cone_rows: list[tuple[int, str, str, str, list[tuple[str, str]]]] = []

    i = 0
    while i < len(lines):
        line = _strip(lines[i])
        i += 1
        if not line:
            continue
        if line.startswith("sketch "):
            if name is not None:
                raise SketchSyntaxError(f"line {i}: repeated sketch header")
            name = line.split(None, 1)[1].strip()
            continue
        if line.startswith("nodes"):
            node_names.extend(line.split()[1:])
            continue
        if line.startswith("diagram "):
            m = re.match(r"^diagram\s+(\S+)\s*\{$", line)
            if not m:
                raise SketchSyntaxError(f"line {i}: bad diagram header: {line!r}")
            dname = m.group(1)
            if dname in sections:
                raise SketchSyntaxError(f"line {i}: duplicate diagram {dname!r}")
            raw, i = parse_diagram_section(lines, i, f"diagram {dname!r}")
            sections[dname] = raw
            continue
        m = _CONE_RE.match(line)
        if m:
            cname, vertex, basename = m.groups()
            projs: list[tuple[str, str]] = []
            while i < len(lines):
                nxt = _strip(lines[i])
                if not nxt:
                    i += 1
                    continue
                pm = _PROJ_RE.match(nxt)
                if not pm:
                    break
                projs.append((pm.group(1), pm.group(2)))
                i += 1
            cone_rows.append((i, cname, vertex, basename, projs))
            continue
        m = _GRAPH_ARROW_RE.match(line)
        if m:
            arrow_rows.append((i, m.group(1), m.group(2), m.group(3)))
            continue
        raise SketchSyntaxError(f"line {i}: unrecognized line: {line!r}")

    if name is None:
        raise SketchSyntaxError("missing sketch header")

    g = Graph()
    for n in node_names:
        if n in g.nodes:
            raise SketchSyntaxError(f"duplicate node {n!r}")
        g.add_node(n)
    counts: dict[str, int] = {}
    for _, disp, _, _ in arrow_rows:
        counts[disp] = counts.get(disp, 0) + 1
    for ln, disp, src, tgt in arrow_rows:
        aid = disp if counts[disp] == 1 else f"{disp}@{src}"
        try:
            g.add_arrow(aid, src, tgt)
        except Exception as e:
            raise SketchSyntaxError(f"line {ln}: {e}") from None

    sk = Sketch(name=name, graph=g)
    base_sections: set[str] = set()
    for ln, cname, vertex, basename, projs in cone_rows:
        if basename not in sections:
            raise SketchSyntaxError(
                f"line {ln}: cone {cname!r} references missing diagram {basename!r}"
            )
        base_sections.add(basename)
        if vertex not in g.nodes:
            raise SketchSyntaxError(f"line {ln}: unknown cone vertex {vertex!r}")
        base = realize_diagram(sections[basename], g, f"cone base {basename!r}")
        projections: dict[str, str] = {}
        for bid, arrname in projs:
            if bid not in base.shape.nodes:
                raise SketchSyntaxError(
                    f"line {ln}: cone {cname!r} projects unknown base node {bid!r}"
                )
            try:
                projections[bid] = g.resolve_arrow(arrname, src=vertex)
            except Exception:
                if arrname == f"{cname}.{bid}":
                    g.add_arrow(arrname, vertex, base.node_label[bid])
                    projections[bid] = arrname
                else:
                    raise SketchSyntaxError(
                        f"line {ln}: cone {cname!r}: unknown projection arrow "
                        f"{arrname!r}"
                    ) from None
        cone = Cone(name=cname, vertex=vertex, base=base, projections=projections)
        cone.check(g)
        if cname in sk.cones:
            raise SketchSyntaxError(f"duplicate cone {cname!r}")
        sk.cones[cname] = cone
    for dname in sections:
        if dname in base_sections:
            continue
        sk.diagrams[dname] = realize_diagram(sections[dname], g, f"diagram {dname!r}")
    return sk


def _generated_projection_arrows(sk: Sketch) -> set[str]:
    gen = set()
    for cname, cone in sk.cones.items():
        for bid, arr in cone.projections.items():
            if arr == f"{cname}.{bid}":
                gen.add(arr)
    return gen


def serialize_sketch(sk: Sketch) -> str:
    out = [f"sketch {sk.name}", ""]
    if sk.graph.nodes:
        out.append("nodes " + " ".join(sorted(sk.graph.nodes)))
        out.append("")
    gen = _generated_projection_arrows(sk)
    rows = []
    for aid, (s, t) in sk.graph.arrows.items():
        if aid in gen:
            continue
        rows.append((arrow_display_name(aid), s, t))
    for disp, s, t in sorted(rows):
        out.append(f"{disp} : {s} -> {t}")
    if rows:
        out.append("")
    for cname in sorted(sk.cones):
        cone = sk.cones[cname]
        basename = f"{cname}.base"
        out.append(f"diagram {basename} {{")
        out.extend(serialize_diagram_body(cone.base))
        out.append("}")
        out.append(f"cone {cname} vertex {cone.vertex} base {basename}")
        for bid in sorted(cone.projections):
            arr = cone.projections[bid]
            disp = arr if arr in gen else arrow_display_name(arr)
            out.append(f"  proj {bid} -> {disp}")
        out.append("")
    for dname in sorted(sk.diagrams):
        out.append(f"diagram {dname} {{")
        out.extend(serialize_diagram_body(sk.diagrams[dname]))
        out.append("}")
        out.append("")
    return "\n".join(out).rstrip() + "\n"


def sketch_equal(a: Sketch, b: Sketch) -> bool:
    """Exact equality: same ids, labels, cones, diagrams, annotations."""
    if a.name != b.name:
        return False
    if a.graph.nodes != b.graph.nodes or a.graph.arrows != b.graph.arrows:
        return False
    if set(a.diagrams) != set(b.diagrams) or set(a.cones) != set(b.cones):
        return False

    def diag_eq(d1: Diagram, d2: Diagram) -> bool:
        return (
            d1.shape.nodes == d2.shape.nodes
            and d1.shape.arrows == d2.shape.arrows
            and d1.node_label == d2.node_label
            and d1.arrow_label == d2.arrow_label
            and d1.annot == d2.annot
        )

    for k in a.diagrams:
        if not diag_eq(a.diagrams[k], b.diagrams[k]):
            return False
    for k in a.cones:
        c1, c2 = a.cones[k], b.cones[k]
        if (
            c1.vertex != c2.vertex
            or c1.projections != c2.projections
            or not diag_eq(c1.base, c2.base)
        ):
            return False
    return True


__all__ = [
    "SketchSyntaxError",
    "parse_sketch",
    "serialize_sketch",
    "sketch_equal",
    "parse_diagram_section",
    "realize_diagram",
    "serialize_diagram_body",
]
