"""Finite-set semantics: models of a graph and what they satisfy.

This module is deliberately independent of the proof machinery.  It
interprets everything by brute enumeration over small carriers, so it
can serve as an oracle against which the symbolic side is checked.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .diagrams import Cone, Diagram
from .graphs import Graph


class ModelError(ValueError):
    pass


@dataclass
class FinSetModel:
    """Carriers are element-name tuples; maps are target index tables."""

    graph: Graph
    carriers: dict[str, tuple[str, ...]]
    maps: dict[str, tuple[int, ...]]
    name: str = "model"

    def check(self) -> None:
        for n in self.graph.nodes:
            if n not in self.carriers:
                raise ModelError(f"no carrier for node {n!r}")
        for a, (s, t) in self.graph.arrows.items():
            table = self.maps.get(a)
            if table is None:
                raise ModelError(f"no map for arrow {a!r}")
            if len(table) != len(self.carriers[s]):
                raise ModelError(f"map for {a!r} has wrong domain size")
            for v in table:
                if not 0 <= v < len(self.carriers[t]):
                    raise ModelError(f"map for {a!r} has out-of-range value {v}")

    def apply(self, arrow_id: str, idx: int) -> int:
        return self.maps[arrow_id][idx]

    def apply_path(self, path: tuple[str, ...], idx: int) -> int:
        """Compose along a path of arrow ids in application order."""
        for a in path:
            idx = self.maps[a][idx]
        return idx


# -- text format -----------------------------------------------------
#
#   model <name>
#   node <node> = {e0, e1}
#   arrow <name>: <src> -> <tgt> = [0, 1]
#
# Arrow names may be bare; the src part picks the overload.


def _split_commas(inner: str) -> tuple[str, ...]:
    """Split on commas outside parentheses; element names may nest."""
    out, depth, cur = [], 0, []
    for c in inner:
        if c == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
            continue
        depth += c == "("
        depth -= c == ")"
        cur.append(c)
    out.append("".join(cur).strip())
    return tuple(out)


def parse_model(text: str, graph: Graph) -> FinSetModel:
    carriers: dict[str, tuple[str, ...]] = {}
    maps: dict[str, tuple[int, ...]] = {}
    name = "model"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("model "):
                name = line.split(None, 1)[1].strip()
            elif line.startswith("node "):
                head, _, rhs = line[5:].partition("=")
                node = head.strip()
                rhs = rhs.strip()
                if not (rhs.startswith("{") and rhs.endswith("}")):
                    raise ModelError("carrier must be {e0, ...}")
                inner = rhs[1:-1].strip()
                elems = _split_commas(inner) if inner else ()
                if node not in graph.nodes:
                    raise ModelError(f"unknown node {node!r}")
                carriers[node] = elems
            elif line.startswith("arrow "):
                head, _, rhs = line[6:].partition("=")
                sig = head.strip()
                aname, _, ends = sig.partition(":")
                src, _, tgt = ends.partition("->")
                aid = graph.resolve_arrow(aname.strip(), src.strip())
                if graph.arrows[aid] != (src.strip(), tgt.strip()):
                    raise ModelError(f"arrow {aname.strip()!r} signature mismatch")
                rhs = rhs.strip()
                if not (rhs.startswith("[") and rhs.endswith("]")):
                    raise ModelError("map must be [i0, ...]")
                inner = rhs[1:-1].strip()
                table = tuple(int(v) for v in inner.split(",")) if inner else ()
                maps[aid] = table
            else:
                raise ModelError(f"unrecognized line: {line!r}")
        except ModelError as e:
            raise ModelError(f"line {lineno}: {e}") from None
    m = FinSetModel(graph, carriers, maps, name)
    m.check()
    return m


def serialize_model(m: FinSetModel) -> str:
    out = [f"model {m.name}"]
    for n in sorted(m.carriers):
        out.append(f"node {n} = {{{', '.join(m.carriers[n])}}}")
    for a in sorted(m.maps):
        s, t = m.graph.arrows[a]
        table = ", ".join(str(v) for v in m.maps[a])
        out.append(f"arrow {a}: {s} -> {t} = [{table}]")
    return "\n".join(out) + "\n"


# -- satisfaction ----------------------------------------------------


def diagram_commutes(model: FinSetModel, d: Diagram) -> bool:
    """All parallel path pairs agree, the empty path counting as identity.

    Checking simple paths and simple cycles suffices: any path factors
    through them once every simple cycle acts as the identity.
    """
    for i in sorted(d.shape.nodes):
        for j in sorted(d.shape.nodes):
            paths = d.shape.simple_paths(i, j)
            if len(paths) < 2:
                continue
            carrier = model.carriers[d.node_label[i]]
            images = []
            for p in paths:
                labels = tuple(d.arrow_label[a] for a in p)
                images.append(tuple(model.apply_path(labels, v) for v in range(len(carrier))))
            if any(img != images[0] for img in images[1:]):
                return False
    return True


@dataclass
class LimitResult:
    """Limit of a diagram: compatible tuples over sorted shape nodes."""

    diagram: Diagram
    node_order: tuple[str, ...]
    elements: list[tuple[int, ...]]
    index: dict[tuple[int, ...], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.index:
            self.index = {t: k for k, t in enumerate(self.elements)}

    def coordinate(self, elem: int, node: str) -> int:
        return self.elements[elem][self.node_order.index(node)]

    def tokens(self) -> tuple[str, ...]:
        return tuple(f"t{k}" for k in range(len(self.elements)))


def limit(model: FinSetModel, d: Diagram) -> LimitResult:
    """Tuples over the shape nodes compatible with every shape arrow.

    Streamed, assigning one node at a time and pruning as soon as a
    constraint both of whose endpoints are placed fails.  Nodes are
    placed connectivity-first so the pruning bites early; ties fall
    back to name order, which keeps the result deterministic.
    """
    remaining = set(d.shape.nodes)
    chosen: list[str] = []
    while remaining:
        def _score(n: str) -> int:
            placed = set(chosen)
            return sum(
                1
                for (s, t) in d.shape.arrows.values()
                if (s == n and t in placed) or (t == n and s in placed)
            )
        best = min(remaining, key=lambda n: (-_score(n), n))
        chosen.append(best)
        remaining.discard(best)
    order = tuple(chosen)
    pos = {n: k for k, n in enumerate(order)}
    sizes = [len(model.carriers[d.node_label[n]]) for n in order]
    # constraints indexed by the later-placed endpoint
    by_latest: dict[int, list[tuple[int, int, str]]] = {k: [] for k in range(len(order))}
    for a, (s, t) in d.shape.arrows.items():
        ps, pt = pos[s], pos[t]
        by_latest[max(ps, pt)].append((ps, pt, d.arrow_label[a]))
    out: list[tuple[int, ...]] = []
    assign = [0] * len(order)

    def place(k: int) -> None:
        if k == len(order):
            out.append(tuple(assign))
            return
        for v in range(sizes[k]):
            assign[k] = v
            if all(
                model.apply(lab, assign[ps]) == assign[pt]
                for ps, pt, lab in by_latest[k]
            ):
                place(k + 1)

    if all(sizes) or not order:
        place(0)
    elif 0 in sizes:
        # some carrier is empty: the limit may still be nonempty only
        # when that node is absent, which it is not
        pass
    return LimitResult(d, order, out)


def is_limit_cone(model: FinSetModel, cone: Cone) -> bool:
    """The vertex carrier maps bijectively onto the base limit via the
    projections, and every base arrow's triangle commutes."""
    for n, arr in cone.projections.items():
        want = (cone.vertex, cone.base.node_label[n])
        if model.graph.arrows[arr] != want:
            return False
    lim = limit(model, cone.base)
    vertex_size = len(model.carriers[cone.vertex])
    seen: set[tuple[int, ...]] = set()
    for v in range(vertex_size):
        tup = tuple(model.apply(cone.projections[n], v) for n in lim.node_order)
        if tup not in lim.index or tup in seen:
            return False
        seen.add(tup)
    if len(seen) != len(lim.elements):
        return False
    for a, (s, t) in cone.base.shape.arrows.items():
        lab = cone.base.arrow_label[a]
        ps, pt = cone.projections[s], cone.projections[t]
        for v in range(vertex_size):
            if model.apply(lab, model.apply(ps, v)) != model.apply(pt, v):
                return False
    return True


def is_sketch_model(model: FinSetModel, sketch) -> tuple[bool, list[str]]:
    """Check carriers, maps, distinguished commutativity, and cones."""
    problems: list[str] = []
    try:
        model.check()
    except ModelError as e:
        return False, [str(e)]
    for name in sorted(sketch.diagrams):
        if not diagram_commutes(model, sketch.diagrams[name]):
            problems.append(f"diagram {name!r} does not commute")
    for name in sorted(sketch.cones):
        if not is_limit_cone(model, sketch.cones[name]):
            problems.append(f"cone {name!r} is not a limit cone")
    return not problems, problems


def restriction_map(
    model: FinSetModel,
    big_lim: LimitResult,
    small_lim: LimitResult,
    node_map: dict[str, str] | None = None,
) -> list[int]:
    """For each big-limit element, the index of its restriction.

    ``node_map`` sends small shape nodes to big shape nodes (identity
    by default).  Raises if some restriction is not a small-limit
    element, which cannot happen when small is a subdiagram.
    """
    nm = node_map or {n: n for n in small_lim.node_order}
    cols = [big_lim.node_order.index(nm[n]) for n in small_lim.node_order]
    out = []
    for tup in big_lim.elements:
        proj = tuple(tup[c] for c in cols)
        if proj not in small_lim.index:
            raise ModelError("restriction leaves the small limit")
        out.append(small_lim.index[proj])
    return out


def satisfies_pf(model: FinSetModel, pf) -> tuple[bool, list[int] | None]:
    """Does every hypothesis instance extend to a claim instance?

    ``pf`` needs diagrams ``wksp``, ``hyp``, ``claim`` and node maps
    ``hyp_map``/``claim_map`` from the workspace shape into the other
    two shapes.  Returns (holds, witness): the witness gives, per
    hypothesis-limit element, the least claim-limit element with the
    same workspace restriction.
    """
    wk = limit(model, pf.wksp)
    hy = limit(model, pf.hyp)
    cl = limit(model, pf.claim)
    h_res = restriction_map(model, hy, wk, {n: pf.hyp_map[n] for n in wk.node_order})
    c_res = restriction_map(model, cl, wk, {n: pf.claim_map[n] for n in wk.node_order})
    by_wk: dict[int, int] = {}
    for k, w in enumerate(c_res):
        if w not in by_wk:
            by_wk[w] = k
    witness: list[int] = []
    for k, w in enumerate(h_res):
        if w not in by_wk:
            return False, None
        witness.append(by_wk[w])
    return True, witness
