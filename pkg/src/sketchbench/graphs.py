"""Directed multigraphs with named, possibly overloaded arrows.

A graph here is the carrier for everything else in the package: sketches
label their diagrams by graph arrows, models interpret graph nodes as
finite sets.  Arrow names may be overloaded across different source
nodes; each arrow nevertheless has a unique id, formed as ``name@src``
when the bare name is ambiguous.
"""
from __future__ import annotations

from dataclasses import dataclass, field


class GraphError(ValueError):
    pass


def arrow_display_name(arrow_id: str) -> str:
    """Bare name of an arrow id (strips the ``@src`` disambiguator)."""
    return arrow_id.split("@", 1)[0]


@dataclass
class Graph:
    """Finite directed multigraph.  ``arrows`` maps arrow id -> (src, tgt)."""

    nodes: set[str] = field(default_factory=set)
    arrows: dict[str, tuple[str, str]] = field(default_factory=dict)

    def add_node(self, name: str) -> None:
        self.nodes.add(name)

    def add_arrow(self, arrow_id: str, src: str, tgt: str) -> None:
        if arrow_id in self.arrows:
            raise GraphError(f"duplicate arrow id {arrow_id!r}")
        if src not in self.nodes or tgt not in self.nodes:
            raise GraphError(f"arrow {arrow_id!r}: unknown endpoint {src!r} or {tgt!r}")
        self.arrows[arrow_id] = (src, tgt)

    def src(self, arrow_id: str) -> str:
        return self.arrows[arrow_id][0]

    def tgt(self, arrow_id: str) -> str:
        return self.arrows[arrow_id][1]

    def arrows_from(self, node: str) -> list[str]:
        return sorted(a for a, (s, _) in self.arrows.items() if s == node)

    def arrows_into(self, node: str) -> list[str]:
        return sorted(a for a, (_, t) in self.arrows.items() if t == node)

    def resolve_arrow(self, name: str, src: str | None = None) -> str:
        """Arrow id for a bare ``name``, using ``src`` to disambiguate overloads."""
        if name in self.arrows:
            if src is not None and self.arrows[name][0] != src:
                raise GraphError(f"arrow {name!r} does not start at {src!r}")
            return name
        matches = [
            a
            for a in self.arrows_named(name)
            if src is None or self.arrows[a][0] == src
        ]
        if len(matches) == 1:
            return matches[0]
        if not matches:
            raise GraphError(f"no arrow named {name!r}" + (f" from {src!r}" if src else ""))
        raise GraphError(f"arrow name {name!r} is ambiguous: {matches}")

    def arrows_named(self, name: str) -> list[str]:
        return sorted(a for a in self.arrows if arrow_display_name(a) == name)

    def copy(self) -> Graph:
        return Graph(set(self.nodes), dict(self.arrows))

    def is_subgraph_of(self, other: Graph) -> bool:
        return self.nodes <= other.nodes and all(
            other.arrows.get(a) == ends for a, ends in self.arrows.items()
        )

    def check(self) -> None:
        for a, (s, t) in self.arrows.items():
            if s not in self.nodes or t not in self.nodes:
                raise GraphError(f"arrow {a!r} has dangling endpoint")

    def simple_paths(self, src: str, tgt: str) -> list[tuple[str, ...]]:
        """All arrow-id paths src -> tgt visiting no node twice.

        When src == tgt this returns the simple cycles at the node, plus
        the empty path.  Paths are in traversal order (first arrow first).
        """
        out: list[tuple[str, ...]] = []
        if src == tgt:
            out.append(())

        def walk(here: str, seen: frozenset[str], acc: tuple[str, ...]) -> None:
            for a in self.arrows_from(here):
                nxt = self.tgt(a)
                if nxt == tgt:
                    out.append(acc + (a,))
                    continue
                if nxt in seen:
                    continue
                walk(nxt, seen | {nxt}, acc + (a,))

        walk(src, frozenset({src}), ())
        return sorted(set(out))


@dataclass
class GraphMorphism:
    """Structure-preserving map between graphs."""

    dom: Graph
    cod: Graph
    node_map: dict[str, str]
    arrow_map: dict[str, str]

    def check(self) -> None:
        for n in self.dom.nodes:
            if self.node_map.get(n) not in self.cod.nodes:
                raise GraphError(f"node {n!r} not mapped into codomain")
        for a, (s, t) in self.dom.arrows.items():
            img = self.arrow_map.get(a)
            if img not in self.cod.arrows:
                raise GraphError(f"arrow {a!r} not mapped into codomain")
            if self.cod.arrows[img] != (self.node_map[s], self.node_map[t]):
                raise GraphError(f"arrow {a!r}: endpoints not preserved")

    def __call__(self, item: str) -> str:
        if item in self.node_map:
            return self.node_map[item]
        return self.arrow_map[item]

    def compose(self, other: GraphMorphism) -> GraphMorphism:
        """self after other."""
        return GraphMorphism(
            other.dom,
            self.cod,
            {n: self.node_map[v] for n, v in other.node_map.items()},
            {a: self.arrow_map[v] for a, v in other.arrow_map.items()},
        )
