"""Diagrams: graphs labeled in a target graph, up to shape isomorphism.

A diagram is a shape graph together with a labeling of its nodes and
arrows by nodes and arrows of a target graph, subject to typing: a shape
arrow s -> t labeled by a target arrow must connect the labels of s and
t.  Two diagrams count as the same when a shape isomorphism matches the
labelings; the canonical form computed here makes that a key equality.

Annotations are a separate mapping from shape nodes to strings.  They
carry bookkeeping superscripts for display and module matching and never
participate in equality.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from .graphs import Graph, GraphError, GraphMorphism


class DiagramError(ValueError):
    pass


@dataclass
class Diagram:
    shape: Graph
    target: Graph
    node_label: dict[str, str]
    arrow_label: dict[str, str]
    annot: dict[str, str] = field(default_factory=dict)

    def check(self) -> None:
        self.shape.check()
        for n in self.shape.nodes:
            lab = self.node_label.get(n)
            if lab not in self.target.nodes:
                raise DiagramError(f"shape node {n!r} has bad label {lab!r}")
        for a, (s, t) in self.shape.arrows.items():
            lab = self.arrow_label.get(a)
            if lab not in self.target.arrows:
                raise DiagramError(f"shape arrow {a!r} has bad label {lab!r}")
            want = (self.node_label[s], self.node_label[t])
            if self.target.arrows[lab] != want:
                raise DiagramError(
                    f"shape arrow {a!r}: label {lab!r} connects "
                    f"{self.target.arrows[lab]}, shape expects {want}"
                )
        for n in self.annot:
            if n not in self.shape.nodes:
                raise DiagramError(f"annotation on unknown shape node {n!r}")

    # -- canonical form ------------------------------------------------

    def canonical_order(self) -> tuple[str, ...]:
        """Shape nodes in the order realizing the least encoding."""
        return _canonical(self)[0]

    def canonical_form(self) -> tuple:
        """Hashable iso-invariant of shape + labeling (annotations ignored)."""
        return _canonical(self)[1]

    def copy(self) -> Diagram:
        return Diagram(
            self.shape.copy(),
            self.target,
            dict(self.node_label),
            dict(self.arrow_label),
            dict(self.annot),
        )

    def relabel_shape(self, node_map: dict[str, str], arrow_map: dict[str, str]) -> Diagram:
        """Rename shape ids.  Maps must be injective and total."""
        g = Graph(
            {node_map[n] for n in self.shape.nodes},
            {
                arrow_map[a]: (node_map[s], node_map[t])
                for a, (s, t) in self.shape.arrows.items()
            },
        )
        if len(g.nodes) != len(self.shape.nodes) or len(g.arrows) != len(self.shape.arrows):
            raise DiagramError("shape relabeling is not injective")
        return Diagram(
            g,
            self.target,
            {node_map[n]: l for n, l in self.node_label.items()},
            {arrow_map[a]: l for a, l in self.arrow_label.items()},
            {node_map[n]: s for n, s in self.annot.items()},
        )


def _encode(d: Diagram, order: tuple[str, ...]) -> tuple:
    pos = {n: i for i, n in enumerate(order)}
    nodes = tuple(d.node_label[n] for n in order)
    arrows = tuple(
        sorted(
            (pos[s], pos[t], d.arrow_label[a])
            for a, (s, t) in d.shape.arrows.items()
        )
    )
    return (nodes, arrows)


def _refine_colors(d: Diagram) -> dict[str, tuple]:
    color: dict[str, tuple] = {n: (d.node_label[n],) for n in d.shape.nodes}
    while True:
        nxt: dict[str, tuple] = {}
        for n in d.shape.nodes:
            outs = sorted(
                (d.arrow_label[a], color[d.shape.tgt(a)])
                for a in d.shape.arrows_from(n)
            )
            ins = sorted(
                (d.arrow_label[a], color[d.shape.src(a)])
                for a in d.shape.arrows_into(n)
            )
            nxt[n] = (color[n], tuple(outs), tuple(ins))
        # stable once the partition stops splitting
        old_classes = len(set(color.values()))
        new_classes = len(set(nxt.values()))
        color = nxt
        if new_classes == old_classes:
            return color


def _canonical(d: Diagram) -> tuple[tuple[str, ...], tuple]:
    cached = getattr(d, "_canon_cache", None)
    state = (frozenset(d.shape.nodes), frozenset(d.shape.arrows.items()))
    if cached is not None and cached[0] == state:
        return cached[1]
    color = _refine_colors(d)
    cells: dict[tuple, list[str]] = {}
    for n, c in color.items():
        cells.setdefault(c, []).append(n)
    ordered_cells = [sorted(cells[c]) for c in sorted(cells)]
    best: tuple | None = None
    best_order: tuple[str, ...] | None = None
    for perm_choice in itertools.product(
        *[itertools.permutations(cell) for cell in ordered_cells]
    ):
        order = tuple(itertools.chain.from_iterable(perm_choice))
        enc = _encode(d, order)
        if best is None or enc < best:
            best, best_order = enc, order
    assert best is not None and best_order is not None
    result = (best_order, best)
    d._canon_cache = (state, result)  # type: ignore[attr-defined]
    return result


def canonical_node_ids(d: Diagram) -> dict[str, str]:
    """Deterministic renaming shape node -> n0, n1, ... by canonical order."""
    return {n: f"n{i}" for i, n in enumerate(d.canonical_order())}


def same_target(d1: Diagram, d2: Diagram) -> bool:
    g1, g2 = d1.target, d2.target
    return g1 is g2 or (g1.nodes == g2.nodes and g1.arrows == g2.arrows)


def diagrams_equivalent(d1: Diagram, d2: Diagram) -> bool:
    if not same_target(d1, d2):
        return False
    return d1.canonical_form() == d2.canonical_form()


def find_diagram_iso(d1: Diagram, d2: Diagram) -> dict[str, str] | None:
    """Label-preserving shape iso d1 -> d2 (nodes only), or None."""
    if not diagrams_equivalent(d1, d2):
        return None
    o1, o2 = d1.canonical_order(), d2.canonical_order()
    return dict(zip(o1, o2))


def find_label_embedding(
    pattern: Diagram,
    host: Diagram,
    partial: dict[str, str] | None = None,
    *,
    injective: bool = True,
    node_pool: set[str] | None = None,
    arrow_pool: set[str] | None = None,
    must_cover_arrow: str | None = None,
) -> tuple[dict[str, str], dict[str, str]] | None:
    """Least label-preserving morphism shape(pattern) -> shape(host).

    ``partial`` pre-pins pattern nodes.  ``node_pool``/``arrow_pool``
    restrict images.  ``must_cover_arrow`` demands the host arrow appear
    as some pattern arrow's image.  Annotations are ignored throughout.
    """
    nodes = sorted(pattern.shape.nodes)
    npool = node_pool if node_pool is not None else host.shape.nodes
    apool = arrow_pool if arrow_pool is not None else set(host.shape.arrows)
    base = dict(partial or {})
    for n, img in base.items():
        if img not in npool or pattern.node_label[n] != host.node_label[img]:
            return None

    host_arrows_between: dict[tuple[str, str, str], list[str]] = {}
    for a in sorted(apool):
        s, t = host.shape.arrows[a]
        key = (s, t, host.arrow_label[a])
        host_arrows_between.setdefault(key, []).append(a)

    pat_arrows = sorted(pattern.shape.arrows)

    def assign_arrows(node_map: dict[str, str]) -> dict[str, str] | None:
        arrow_map: dict[str, str] = {}
        used: set[str] = set()
        covered = False

        def place(k: int) -> bool:
            nonlocal covered
            if k == len(pat_arrows):
                return must_cover_arrow is None or covered
            a = pat_arrows[k]
            s, t = pattern.shape.arrows[a]
            key = (node_map[s], node_map[t], pattern.arrow_label[a])
            for cand in host_arrows_between.get(key, []):
                if injective and cand in used:
                    continue
                was = covered
                arrow_map[a] = cand
                used.add(cand)
                if cand == must_cover_arrow:
                    covered = True
                if place(k + 1):
                    return True
                used.discard(cand)
                del arrow_map[a]
                covered = was
            return False

        return arrow_map if place(0) else None

    free = [n for n in nodes if n not in base]

    def assign_nodes(k: int, node_map: dict[str, str]) -> tuple[dict, dict] | None:
        if k == len(free):
            am = assign_arrows(node_map)
            if am is not None:
                return dict(node_map), am
            return None
        n = free[k]
        for cand in sorted(npool):
            if host.node_label[cand] != pattern.node_label[n]:
                continue
            if injective and cand in node_map.values():
                continue
            node_map[n] = cand
            got = assign_nodes(k + 1, node_map)
            if got is not None:
                return got
            del node_map[n]
        return None

    return assign_nodes(0, dict(base))


# -- subdiagrams -----------------------------------------------------


def subdiagram(d: Diagram, nodes: set[str], arrows: set[str]) -> Diagram:
    for a in arrows:
        s, t = d.shape.arrows[a]
        if s not in nodes or t not in nodes:
            raise DiagramError(f"subdiagram arrow {a!r} has endpoint outside node set")
    g = Graph(set(nodes), {a: d.shape.arrows[a] for a in arrows})
    return Diagram(
        g,
        d.target,
        {n: d.node_label[n] for n in nodes},
        {a: d.arrow_label[a] for a in arrows},
        {n: s for n, s in d.annot.items() if n in nodes},
    )


def full_subdiagram(d: Diagram, nodes: set[str]) -> Diagram:
    arrows = {
        a
        for a, (s, t) in d.shape.arrows.items()
        if s in nodes and t in nodes
    }
    return subdiagram(d, nodes, arrows)


def is_subdiagram(small: Diagram, big: Diagram) -> bool:
    return (
        small.shape.nodes <= big.shape.nodes
        and all(big.shape.arrows.get(a) == e for a, e in small.shape.arrows.items())
        and all(big.node_label[n] == l for n, l in small.node_label.items())
        and all(big.arrow_label[a] == l for a, l in small.arrow_label.items())
    )


# -- cones and diagram morphisms -------------------------------------


@dataclass
class Cone:
    name: str
    vertex: str
    base: Diagram
    projections: dict[str, str]

    def check(self, graph: Graph) -> None:
        self.base.check()
        if self.vertex not in graph.nodes:
            raise DiagramError(f"cone {self.name!r}: unknown vertex {self.vertex!r}")
        missing = self.base.shape.nodes - set(self.projections)
        if missing:
            raise DiagramError(f"cone {self.name!r}: unprojected base nodes {sorted(missing)}")
        for n, arr in self.projections.items():
            if n not in self.base.shape.nodes:
                raise DiagramError(f"cone {self.name!r}: projection for non-base node {n!r}")
            if arr not in graph.arrows:
                raise DiagramError(f"cone {self.name!r}: unknown projection arrow {arr!r}")
            want = (self.vertex, self.base.node_label[n])
            if graph.arrows[arr] != want:
                raise DiagramError(
                    f"cone {self.name!r}: projection {arr!r} connects "
                    f"{graph.arrows[arr]}, expected {want}"
                )


@dataclass
class DiagramMorphism:
    """Map of diagrams delta' -> delta.

    ``shape_map`` runs contravariantly, from the shape of ``cod`` to the
    shape of ``dom``.  ``components`` optionally names a target arrow
    per cod-shape node; when absent the morphism is strict and the
    labelings must agree on the nose.
    """

    dom: Diagram
    cod: Diagram
    shape_map: GraphMorphism
    components: dict[str, str] | None = None

    @property
    def strict(self) -> bool:
        return self.components is None

    def check(self) -> None:
        sm = self.shape_map
        if set(sm.node_map) != self.cod.shape.nodes:
            raise DiagramError("shape map must cover all cod shape nodes")
        sm.check()
        if not self.strict:
            return
        for i in self.cod.shape.nodes:
            if self.dom.node_label[sm.node_map[i]] != self.cod.node_label[i]:
                raise DiagramError(f"strict morphism changes label at node {i!r}")
        for a in self.cod.shape.arrows:
            if self.dom.arrow_label[sm.arrow_map[a]] != self.cod.arrow_label[a]:
                raise DiagramError(f"strict morphism changes label at arrow {a!r}")


def strict_morphism(
    dom: Diagram, cod: Diagram, node_map: dict[str, str]
) -> DiagramMorphism:
    """Strict morphism from a node map cod-shape -> dom-shape.

    The arrow map is derived; parallel same-labeled dom arrows make the
    derivation ambiguous and raise.
    """
    arrow_map: dict[str, str] = {}
    for a, (s, t) in cod.shape.arrows.items():
        want = (node_map[s], node_map[t], cod.arrow_label[a])
        cands = [
            b
            for b, (bs, bt) in dom.shape.arrows.items()
            if (bs, bt, dom.arrow_label[b]) == want
        ]
        if not cands:
            raise DiagramError(f"no image for shape arrow {a!r} under strict morphism")
        if len(cands) > 1:
            raise DiagramError(f"ambiguous image for shape arrow {a!r}: {sorted(cands)}")
        arrow_map[a] = cands[0]
    m = DiagramMorphism(
        dom,
        cod,
        GraphMorphism(cod.shape, dom.shape, dict(node_map), arrow_map),
    )
    m.check()
    return m


# -- extension classification ----------------------------------------

EqOracle = Callable[[tuple[str, ...], str, tuple[str, ...], str], bool]
# eq(pre1, i, pre2, j): do the label paths pre1, pre2 (application order),
# composed after the projections at shape nodes i and j of the small
# diagram, give equal arrows out of its limit?


@dataclass
class Classification:
    kind: str
    cone: str | None = None
    diagram: str | None = None
    node_match: dict[str, str] | None = None
    arrow_match: dict[str, str] | None = None
    projections: dict[str, str] | None = None
    checked: list[tuple] = field(default_factory=list)
    obligations: list[str] = field(default_factory=list)


def classify_extension(big: Diagram, small: Diagram, sketch, eq: EqOracle) -> Classification:
    """Decide what kind of one-step extension big makes over small.

    The kinds are tried in a fixed order: composite, commutative
    cocone, limit, fill-in.  ``sketch`` supplies distinguished diagrams
    and cones; ``eq`` answers equality questions about arrows out of
    the limit of ``small``.
    """
    if not is_subdiagram(small, big):
        raise DiagramError("small must be a subdiagram of big (shared shape ids)")
    new_nodes = sorted(big.shape.nodes - small.shape.nodes)
    new_arrows = sorted(set(big.shape.arrows) - set(small.shape.arrows))
    if not new_nodes and not new_arrows:
        return Classification("identity")

    obligations: list[str] = []

    got = _try_composite(big, small, sketch, eq, new_nodes, new_arrows, obligations)
    if got:
        return got
    got = _try_cocone(big, small, eq, new_nodes, new_arrows, obligations)
    if got:
        return got
    got = _try_limit(big, small, sketch, new_nodes, new_arrows, obligations)
    if got:
        return got
    got = _try_fillin(big, small, sketch, eq, new_nodes, new_arrows, obligations)
    if got:
        return got
    return Classification("unrecognized", obligations=obligations)


def _try_composite(big, small, sketch, eq, new_nodes, new_arrows, obligations):
    if new_nodes or len(new_arrows) != 1:
        return None
    a = new_arrows[0]
    i, j = big.shape.arrows[a]
    lab = big.arrow_label[a]
    if eq((lab,), i, (), j):
        return Classification(
            "composite", diagram=None, checked=[((lab,), i, (), j)]
        )
    for name in sorted(sketch.diagrams):
        dd = sketch.diagrams[name]
        got = find_label_embedding(
            dd,
            big,
            injective=False,
            node_pool=small.shape.nodes,
            arrow_pool=set(small.shape.arrows) | {a},
            must_cover_arrow=a,
        )
        if got is not None:
            nm, am = got
            return Classification(
                "composite", diagram=name, node_match=nm, arrow_match=am
            )
    obligations.append(
        f"composite: {lab}.P[{i}] = P[{j}] not derivable and no distinguished "
        f"diagram instance is completed by {a!r}"
    )
    return None


def _try_cocone(big, small, eq, new_nodes, new_arrows, obligations):
    if len(new_nodes) != 1:
        return None
    v = new_nodes[0]
    for a in new_arrows:
        s, t = big.shape.arrows[a]
        if t != v or s not in small.shape.nodes:
            return None
    if not new_arrows:
        return None
    legs = [(a, big.shape.arrows[a][0], big.arrow_label[a]) for a in new_arrows]
    checked = []
    for (a1, i1, l1), (a2, i2, l2) in itertools.combinations(legs, 2):
        if not eq((l1,), i1, (l2,), i2):
            obligations.append(
                f"cocone: legs {a1!r} and {a2!r} disagree: {l1}.P[{i1}] vs {l2}.P[{i2}]"
            )
            return None
        checked.append(((l1,), i1, (l2,), i2))
    return Classification("cocone", checked=checked)


def _try_limit(big, small, sketch, new_nodes, new_arrows, obligations):
    if len(new_nodes) != 1:
        return None
    v = new_nodes[0]
    if big.shape.arrows_into(v):
        return None
    for a in new_arrows:
        s, t = big.shape.arrows[a]
        if s != v or t not in small.shape.nodes:
            return None
    vlabel = big.node_label[v]
    for cname in sorted(sketch.cones):
        cone = sketch.cones[cname]
        if cone.vertex != vlabel:
            continue
        proj_of_label = {}
        ok = True
        for bnode, parrow in cone.projections.items():
            proj_of_label.setdefault(parrow, []).append(bnode)
        partial: dict[str, str] = {}
        decl: dict[str, str] = {}
        for a in new_arrows:
            lab = big.arrow_label[a]
            bnodes = proj_of_label.get(lab, [])
            if len(bnodes) != 1:
                ok = False
                break
            b = bnodes[0]
            if b in partial:
                ok = False
                break
            partial[b] = big.shape.arrows[a][1]
            decl[b] = a
        if not ok:
            continue
        got = find_label_embedding(
            cone.base,
            small,
            partial,
            injective=True,
        )
        if got is None:
            obligations.append(f"limit: cone {cname!r} base does not embed compatibly")
            continue
        nm, am = got
        image_nodes = set(nm.values())
        image_arrows = set(am.values())
        extra = {
            b
            for b, (s, t) in small.shape.arrows.items()
            if s in image_nodes and t in image_nodes and b not in image_arrows
        }
        if extra:
            obligations.append(
                f"limit: cone {cname!r} instance is not full, stray arrows {sorted(extra)}"
            )
            continue
        return Classification(
            "limit", cone=cname, node_match=nm, arrow_match=am, projections=decl
        )
    return None


def _try_fillin(big, small, sketch, eq, new_nodes, new_arrows, obligations):
    if new_nodes or len(new_arrows) != 1:
        return None
    a = new_arrows[0]
    m, n = big.shape.arrows[a]
    flabel = big.arrow_label[a]
    nlabel = big.node_label[n]
    for cname in sorted(sketch.cones):
        cone = sketch.cones[cname]
        if cone.vertex != nlabel:
            continue
        proj_arrows = {}
        for q in small.shape.arrows_from(n):
            qlab = small.arrow_label[q]
            for bnode, parrow in cone.projections.items():
                if parrow == qlab and bnode not in proj_arrows:
                    proj_arrows[bnode] = q
        if not proj_arrows:
            obligations.append(
                f"fill-in: no projection arrows of cone {cname!r} leave {n!r}"
            )
            continue
        checked = []
        ok = True
        for bnode in sorted(proj_arrows):
            q = proj_arrows[bnode]
            x = small.shape.arrows[q][1]
            qlab = small.arrow_label[q]
            if not eq((flabel, qlab), m, (), x):
                obligations.append(
                    f"fill-in: {qlab}.{flabel}.P[{m}] = P[{x}] not derivable"
                )
                ok = False
                break
            checked.append(((flabel, qlab), m, (), x))
        if ok:
            return Classification("fillin", cone=cname, checked=checked)
    return None


# -- dot export ------------------------------------------------------


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def diagram_dot(d: Diagram, name: str = "diagram") -> str:
    lines = [f"digraph {_dot_quote(name)} {{"]
    for n in sorted(d.shape.nodes):
        lab = d.node_label[n]
        if n in d.annot:
            lab = f"{lab}^{d.annot[n]}"
        lines.append(f"  {_dot_quote(n)} [label={_dot_quote(lab)}];")
    for a in sorted(d.shape.arrows):
        s, t = d.shape.arrows[a]
        lines.append(
            f"  {_dot_quote(s)} -> {_dot_quote(t)} [label={_dot_quote(d.arrow_label[a])}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_dot(g: Graph, name: str = "graph") -> str:
    lines = [f"digraph {_dot_quote(name)} {{"]
    for n in sorted(g.nodes):
        lines.append(f"  {_dot_quote(n)};")
    for a in sorted(g.arrows):
        s, t = g.arrows[a]
        lines.append(f"  {_dot_quote(s)} -> {_dot_quote(t)} [label={_dot_quote(a)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def build_diagram(
    target: Graph,
    nodes: dict[str, str | tuple[str, str]],
    arrows: dict[str, tuple[str, str, str]],
) -> Diagram:
    """Compact constructor.  ``nodes``: id -> label or (label, annotation);
    ``arrows``: id -> (src id, tgt id, arrow name), names resolved against
    the source node's label when overloaded."""
    node_label: dict[str, str] = {}
    annot: dict[str, str] = {}
    for nid, spec in nodes.items():
        if isinstance(spec, tuple):
            node_label[nid], annot[nid] = spec
        else:
            node_label[nid] = spec
    g = Graph(set(node_label))
    arrow_label: dict[str, str] = {}
    for aid, (s, t, name) in arrows.items():
        g.add_arrow(aid, s, t)
        arrow_label[aid] = target.resolve_arrow(name, node_label[s])
    d = Diagram(g, target, node_label, arrow_label, annot)
    d.check()
    return d
