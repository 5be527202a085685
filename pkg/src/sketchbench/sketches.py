"""Sketches: a graph with distinguished diagrams and cones.

Also home to module templates, reusable diagram fragments that get
glued onto a host diagram along annotated interface items.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .diagrams import Cone, Diagram, DiagramError, full_subdiagram, subdiagram
from .graphs import Graph


@dataclass
class Sketch:
    name: str
    graph: Graph
    diagrams: dict[str, Diagram] = field(default_factory=dict)
    cones: dict[str, Cone] = field(default_factory=dict)


def validate_sketch(sketch: Sketch) -> tuple[bool, list[str]]:
    problems: list[str] = []
    try:
        sketch.graph.check()
    except Exception as e:
        return False, [f"graph: {e}"]
    for name in sorted(sketch.diagrams):
        d = sketch.diagrams[name]
        try:
            if d.target is not sketch.graph and (
                d.target.nodes != sketch.graph.nodes
                or d.target.arrows != sketch.graph.arrows
            ):
                raise DiagramError("target is not the sketch graph")
            d.check()
        except Exception as e:
            problems.append(f"diagram {name!r}: {e}")
    for name in sorted(sketch.cones):
        c = sketch.cones[name]
        try:
            c.check(sketch.graph)
        except Exception as e:
            problems.append(f"cone {name!r}: {e}")
    return not problems, problems


def cone_vertices(sketch: Sketch) -> set[str]:
    return {c.vertex for c in sketch.cones.values()}


def distinguished_base(sketch: Sketch, d: Diagram) -> str | None:
    """Name of a cone whose base is equivalent to d, if any."""
    from .diagrams import diagrams_equivalent

    for name in sorted(sketch.cones):
        if diagrams_equivalent(sketch.cones[name].base, d):
            return name
    return None


# -- module templates ------------------------------------------------


@dataclass
class ModuleTemplate:
    """A diagram fragment glued onto hosts along annotated items.

    ``interface`` lists the pattern shape items (nodes and arrows) a
    binding may identify with host items.  Unbound pattern items are
    adjoined fresh.
    """

    name: str
    pattern: Diagram
    interface_nodes: set[str]
    interface_arrows: set[str]

    def check(self) -> None:
        self.pattern.check()
        for n in self.interface_nodes:
            if n not in self.pattern.shape.nodes:
                raise DiagramError(f"module {self.name!r}: bad interface node {n!r}")
        for a in self.interface_arrows:
            if a not in self.pattern.shape.arrows:
                raise DiagramError(f"module {self.name!r}: bad interface arrow {a!r}")
            s, t = self.pattern.shape.arrows[a]
            if s not in self.interface_nodes or t not in self.interface_nodes:
                raise DiagramError(
                    f"module {self.name!r}: interface arrow {a!r} leaves the interface"
                )


def expand_module(
    host: Diagram,
    mod: ModuleTemplate,
    binding: dict[str, str],
) -> Diagram:
    """Pushout of host and module pattern along the bound interface.

    ``binding`` maps interface items of the pattern to host shape items
    with equal labels and, where the pattern annotates a node, equal
    annotations.  Unbound pattern items enter with fresh ids prefixed
    by the module name.
    """
    node_binding: dict[str, str] = {}
    arrow_binding: dict[str, str] = {}
    for item, img in binding.items():
        if item in mod.interface_nodes:
            if img not in host.shape.nodes:
                raise DiagramError(f"binding target {img!r} is not a host node")
            if host.node_label[img] != mod.pattern.node_label[item]:
                raise DiagramError(
                    f"binding {item!r} -> {img!r}: labels differ "
                    f"({mod.pattern.node_label[item]} vs {host.node_label[img]})"
                )
            pa = mod.pattern.annot.get(item)
            if pa is not None and host.annot.get(img) != pa:
                raise DiagramError(
                    f"binding {item!r} -> {img!r}: annotations differ "
                    f"({pa!r} vs {host.annot.get(img)!r})"
                )
            node_binding[item] = img
        elif item in mod.interface_arrows:
            if img not in host.shape.arrows:
                raise DiagramError(f"binding target {img!r} is not a host arrow")
            if host.arrow_label[img] != mod.pattern.arrow_label[item]:
                raise DiagramError(f"binding arrow {item!r} -> {img!r}: labels differ")
            arrow_binding[item] = img
        else:
            raise DiagramError(f"binding item {item!r} is not in the interface")
    for a, img in arrow_binding.items():
        s, t = mod.pattern.shape.arrows[a]
        hs, ht = host.shape.arrows[img]
        if node_binding.get(s, hs) != hs or node_binding.get(t, ht) != ht:
            raise DiagramError(f"binding arrow {a!r} endpoints disagree with node binding")
        node_binding.setdefault(s, hs)
        node_binding.setdefault(t, ht)

    def fresh(base: str, taken: set[str]) -> str:
        cand = f"{mod.name}.{base}"
        k = 2
        while cand in taken:
            cand = f"{mod.name}.{base}.{k}"
            k += 1
        return cand

    out = host.copy()
    node_img: dict[str, str] = dict(node_binding)
    for n in sorted(mod.pattern.shape.nodes):
        if n in node_img:
            continue
        nid = fresh(n, out.shape.nodes)
        out.shape.add_node(nid)
        out.node_label[nid] = mod.pattern.node_label[n]
        if n in mod.pattern.annot:
            out.annot[nid] = mod.pattern.annot[n]
        node_img[n] = nid
    for a in sorted(mod.pattern.shape.arrows):
        if a in arrow_binding:
            continue
        s, t = mod.pattern.shape.arrows[a]
        aid = fresh(a, set(out.shape.arrows))
        out.shape.add_arrow(aid, node_img[s], node_img[t])
        out.arrow_label[aid] = mod.pattern.arrow_label[a]
    out.check()
    return out


__all__ = [
    "Sketch",
    "validate_sketch",
    "cone_vertices",
    "distinguished_base",
    "ModuleTemplate",
    "expand_module",
    "subdiagram",
    "full_subdiagram",
]
