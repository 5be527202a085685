"""Derivation engine for equalities of arrows generated by a sketch.

Objects are the sketch's own nodes plus freshly constructed limits of
diagrams.  Arrows are composites, written as tuples of atoms in
application order: the first atom acts first, the empty tuple is an
identity.  Atoms are sketch arrows, limit projections, and fill-in
arrows induced into limits.

Equalities live in a union-find over composite terms and grow by
bounded saturation:

* rewriting replaces a contiguous segment of a known term by an equal
  class member, capped so a term never grows past the depth bound
  (shrinking is always allowed);
* a uniqueness round merges parallel arrows into a limit-like object
  whenever all their projection composites already agree.

Seeds come from distinguished diagrams (parallel path pairs, cycles
against the empty path), cone commutation triangles, triangles of
constructed limits, and the defining equations of fill-ins.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .diagrams import Diagram, canonical_node_ids, diagrams_equivalent, find_diagram_iso
from .graphs import arrow_display_name
from .sketches import Sketch


class TheoryError(ValueError):
    pass


# -- objects and atoms -----------------------------------------------


@dataclass(frozen=True)
class Base:
    node: str

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("Base", self.node)))

    def __hash__(self):
        return self._h


@dataclass(frozen=True)
class LimitOf:
    key: tuple

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("LimitOf", self.key)))

    def __hash__(self):
        return self._h


@dataclass(frozen=True)
class Gen:
    arrow: str

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("Gen", self.arrow)))

    def __hash__(self):
        return self._h


@dataclass(frozen=True)
class Proj:
    limit: tuple
    node: str
    label: str

    def __post_init__(self):
        object.__setattr__(
            self, "_h", hash(("Proj", self.limit, self.node, self.label))
        )

    def __hash__(self):
        return self._h


@dataclass(frozen=True)
class Fill:
    target: object
    source: object
    components: tuple  # ((internal id, atoms tuple), ...) sorted

    def __post_init__(self):
        object.__setattr__(
            self, "_h", hash(("Fill", self.target, self.source, self.components))
        )

    def __hash__(self):
        return self._h


Atoms = tuple
Term = tuple  # (object, atoms)


def _term_key(t: Term) -> tuple:
    return (len(t[1]), repr(t))


class LimitHandle:
    """Access to a constructed limit through one diagram's shape ids."""

    def __init__(self, theory: "Theory", diagram: Diagram, obj, key,
                 id_map: dict[str, str], proj_atoms: dict[str, tuple]):
        self.theory = theory
        self.diagram = diagram
        self.obj = obj
        self.key = key  # None when redirected to a declared cone vertex
        self._map = id_map
        self._proj = proj_atoms

    def internal(self, shape_id: str) -> str:
        return self._map[shape_id]

    def proj(self, shape_id: str) -> tuple:
        return self._proj[self._map[shape_id]]

    def internal_ids(self) -> list[str]:
        return sorted(self._proj)


class Theory:
    def __init__(self, sketch: Sketch, depth: int = 6, max_terms: int = 200_000):
        self.sketch = sketch
        self.depth = depth
        self.max_terms = max_terms
        self.trace: list[str] = []
        self.terms: set[Term] = set()
        self._parent: dict[Term, Term] = {}
        self._cod_cache: dict[Term, object] = {}
        self._key_cache: dict[Term, tuple] = {}
        self._seen_rules: set[tuple] = set()
        self._seen_terms: set[Term] = set()
        self._limits: dict[tuple, LimitHandle] = {}
        self._lim_names: dict[tuple, str] = {}
        self._dirty = True
        self._vertex_cone = {}
        for cname in sorted(sketch.cones):
            cone = sketch.cones[cname]
            self._vertex_cone.setdefault(cone.vertex, cone)
        self._seed_diagrams()
        self._seed_cone_triangles()

    # -- atom typing -------------------------------------------------

    def _atom_dom(self, a) -> object:
        if isinstance(a, Gen):
            return Base(self.sketch.graph.src(a.arrow))
        if isinstance(a, Proj):
            return LimitOf(a.limit)
        if isinstance(a, Fill):
            return a.source
        raise TheoryError(f"bad atom {a!r}")

    def _atom_cod(self, a) -> object:
        if isinstance(a, Gen):
            return Base(self.sketch.graph.tgt(a.arrow))
        if isinstance(a, Proj):
            return Base(a.label)
        if isinstance(a, Fill):
            return a.target
        raise TheoryError(f"bad atom {a!r}")

    def cod(self, term: Term) -> object:
        got = self._cod_cache.get(term)
        if got is None:
            got = term[0] if not term[1] else self._atom_cod(term[1][-1])
            self._cod_cache[term] = got
        return got

    def gen(self, label: str) -> tuple:
        if label not in self.sketch.graph.arrows:
            raise TheoryError(f"unknown sketch arrow {label!r}")
        return (Gen(label),)

    def gens(self, labels) -> tuple:
        out: tuple = ()
        for lab in labels:
            out = out + self.gen(lab)
        return out

    # -- union-find --------------------------------------------------

    def _tkey(self, t: Term) -> tuple:
        got = self._key_cache.get(t)
        if got is None:
            got = _term_key(t)
            self._key_cache[t] = got
        return got

    def _find(self, t: Term) -> Term:
        root = t
        while self._parent.get(root, root) != root:
            root = self._parent[root]
        while self._parent.get(t, t) != t:
            self._parent[t], t = root, self._parent[t]
        return root

    def _add_term(self, t: Term) -> bool:
        if t in self.terms:
            return False
        obj, atoms = t
        here = obj
        for a in atoms:
            if self._atom_dom(a) != here:
                raise TheoryError(f"ill-typed term: {self.render(t)}")
            here = self._atom_cod(a)
        self.terms.add(t)
        if len(self.terms) > self.max_terms:
            raise TheoryError(f"term universe exceeded {self.max_terms}")
        self._dirty = True
        return True

    def _merge(self, t1: Term, t2: Term, rule: str, detail: str) -> bool:
        self._add_term(t1)
        self._add_term(t2)
        if self.cod(t1) != self.cod(t2) or t1[0] != t2[0]:
            raise TheoryError(
                f"cannot equate non-parallel terms {self.render(t1)} and {self.render(t2)}"
            )
        r1, r2 = self._find(t1), self._find(t2)
        if r1 == r2:
            return False
        if self._tkey(r2) < self._tkey(r1):
            r1, r2 = r2, r1
        self._parent[r2] = r1
        self._dirty = True
        if rule != "CONG" or detail:
            self.trace.append(f"RULE {rule} {detail} => {self.render(r1)}")
        return True

    def record_equality(self, dom, atoms1: tuple, atoms2: tuple,
                        rule: str = "SEED", detail: str = "") -> None:
        self._merge((dom, atoms1), (dom, atoms2), rule, detail)

    # -- seeding -----------------------------------------------------

    def _seed_diagrams(self) -> None:
        for name in sorted(self.sketch.diagrams):
            d = self.sketch.diagrams[name]
            for x in sorted(d.shape.nodes):
                for y in sorted(d.shape.nodes):
                    paths = d.shape.simple_paths(x, y)
                    for p, q in itertools.combinations(paths, 2):
                        self.record_equality(
                            Base(d.node_label[x]),
                            self.gens(d.arrow_label[a] for a in p),
                            self.gens(d.arrow_label[a] for a in q),
                            "DIAG", f"{name}:{x}->{y}",
                        )

    def _seed_cone_triangles(self) -> None:
        for cname in sorted(self.sketch.cones):
            cone = self.sketch.cones[cname]
            for a in sorted(cone.base.shape.arrows):
                s, t = cone.base.shape.arrows[a]
                f = cone.base.arrow_label[a]
                self.record_equality(
                    Base(cone.vertex),
                    (Gen(cone.projections[s]), Gen(f)),
                    (Gen(cone.projections[t]),),
                    "LIM", f"{cname}:{s}->{t}",
                )

    # -- constructed limits ------------------------------------------

    def limit(self, d: Diagram) -> LimitHandle:
        for cname in sorted(self.sketch.cones):
            cone = self.sketch.cones[cname]
            if diagrams_equivalent(d, cone.base):
                iso = find_diagram_iso(d, cone.base)
                assert iso is not None
                proj_atoms = {
                    b: (Gen(arr),) for b, arr in cone.projections.items()
                }
                return LimitHandle(self, d, Base(cone.vertex), None, iso, proj_atoms)
        key = d.canonical_form()
        ids = canonical_node_ids(d)
        if key not in self._limits:
            name = f"Lim{len(self._limits)}"
            self._lim_names[key] = name
            labels = {ids[n]: d.node_label[n] for n in d.shape.nodes}
            proj_atoms = {
                cid: (Proj(key, cid, lab),) for cid, lab in labels.items()
            }
            handle = LimitHandle(self, d, LimitOf(key), key, dict(ids), proj_atoms)
            self._limits[key] = handle
            for cid in sorted(proj_atoms):
                self._add_term((LimitOf(key), proj_atoms[cid]))
            for a in sorted(d.shape.arrows):
                s, t = d.shape.arrows[a]
                self.record_equality(
                    LimitOf(key),
                    proj_atoms[ids[s]] + (Gen(d.arrow_label[a]),),
                    proj_atoms[ids[t]],
                    "LIM", f"{name}:{ids[s]}->{ids[t]}",
                )
            return handle
        cached = self._limits[key]
        return LimitHandle(self, d, cached.obj, key, dict(ids), cached._proj)

    def fillin(self, handle: LimitHandle, dom, components: dict[str, tuple],
               *, check: bool = True, detail: str = "") -> tuple:
        """Arrow into the limit with the given projection composites.

        ``components`` is keyed by shape ids of the handle's diagram and
        must cover all of them.  When ``check`` is set the components
        must provably commute with the diagram's arrows.
        """
        internal: dict[str, tuple] = {}
        for sid in handle.diagram.shape.nodes:
            if sid not in components:
                raise TheoryError(f"fill-in misses component for {sid!r}")
            internal[handle.internal(sid)] = components[sid]
        if check:
            for a in sorted(handle.diagram.shape.arrows):
                s, t = handle.diagram.shape.arrows[a]
                f = handle.diagram.arrow_label[a]
                if not self.arrows_equal(
                    dom,
                    components[s] + (Gen(f),),
                    components[t],
                ):
                    raise TheoryError(
                        f"fill-in components do not commute with arrow {a!r} ({f})"
                    )
        fill = Fill(
            target=handle.obj,
            source=dom,
            components=tuple(sorted(internal.items())),
        )
        for iid in sorted(internal):
            self.record_equality(
                dom,
                (fill,) + handle._proj[iid],
                internal[iid],
                "CFIA", f"{detail or 'fill'}:{iid}",
            )
        return (fill,)

    # -- saturation --------------------------------------------------

    def _local_doms(self, t: Term) -> list:
        obj, atoms = t
        doms = [obj]
        for a in atoms:
            doms.append(self._atom_cod(a))
        return doms

    def _rewrite_pass(self) -> bool:
        changed = False
        groups: dict[Term, list[Term]] = {}
        for t in self.terms:
            groups.setdefault(self._find(t), []).append(t)
        # rules indexed by leading atom, so a term position only sees
        # candidates that can match there; empty left sides by domain.
        # A rule already run against the whole universe is only applied
        # to terms added since; merging never invalidates old skips.
        by_first: dict[object, list] = {}
        empty_by_dom: dict[object, list] = {}
        new_by_first: dict[object, list] = {}
        new_empty_by_dom: dict[object, list] = {}
        all_rules: set[tuple] = set()
        for root in sorted(groups, key=self._tkey):
            members = groups[root]
            if len(members) < 2:
                continue
            rep = min(members, key=self._tkey)
            for m in sorted(members, key=self._tkey):
                if m == rep:
                    continue
                for (sd, sa), (_, ra) in ((m, rep), (rep, m)):
                    all_rules.add((sd, sa, ra))
                    row = (sd, sa, ra)
                    fresh = row not in self._seen_rules
                    if sa:
                        by_first.setdefault(sa[0], []).append(row)
                        if fresh:
                            new_by_first.setdefault(sa[0], []).append(row)
                    else:
                        empty_by_dom.setdefault(sd, []).append(ra)
                        if fresh:
                            new_empty_by_dom.setdefault(sd, []).append(ra)
        if not all_rules:
            return False
        snapshot = sorted(self.terms, key=self._tkey)
        for t in snapshot:
            obj, atoms = t
            seen_t = t in self._seen_terms
            firsts = by_first if not seen_t else new_by_first
            empties = empty_by_dom if not seen_t else new_empty_by_dom
            if seen_t and not (new_by_first or new_empty_by_dom):
                continue
            doms = self._local_doms(t)
            la = len(atoms)
            cap = max(self.depth, la)

            def apply(k: int, n: int, ra: tuple) -> None:
                nonlocal changed
                t2 = (obj, atoms[:k] + ra + atoms[k + n :])
                if t2 == t:
                    return
                existed = t2 in self.terms
                if existed and self._find(t2) == self._find(t):
                    return
                if self._merge(t, t2, "CONG", f"at {k}" if existed else ""):
                    changed = True
                elif not existed:
                    changed = True

            for k in range(la + 1):
                dk = doms[k]
                for ra in empties.get(dk, ()):
                    if la + len(ra) <= cap:
                        apply(k, 0, ra)
                if k == la:
                    break
                for sd, sa, ra in firsts.get(atoms[k], ()):
                    n = len(sa)
                    if k + n > la or la - n + len(ra) > cap:
                        continue
                    if sd != dk or atoms[k : k + n] != sa:
                        continue
                    apply(k, n, ra)
        self._seen_rules |= all_rules
        self._seen_terms.update(snapshot)
        return changed

    def _projections_of(self, cod) -> list | None:
        if isinstance(cod, LimitOf):
            handle = self._limits.get(cod.key)
            if handle is None:
                return None
            return [handle._proj[iid][0] for iid in sorted(handle._proj)]
        if isinstance(cod, Base):
            cone = self._vertex_cone.get(cod.node)
            if cone is None:
                return None
            return [Gen(cone.projections[b]) for b in sorted(cone.projections)]
        return None

    def _uniq_pass(self) -> bool:
        changed = False
        by_sig: dict[tuple, list[Term]] = {}
        for t in self.terms:
            by_sig.setdefault((t[0], self.cod(t)), []).append(t)
        for sig in sorted(by_sig, key=repr):
            ts = sorted(by_sig[sig], key=self._tkey)
            if len(ts) < 2:
                continue
            projs = self._projections_of(self.cod(ts[0]))
            if projs is None:
                continue
            for t1, t2 in itertools.combinations(ts, 2):
                if self._find(t1) == self._find(t2):
                    continue
                ok = True
                for p in projs:
                    c1 = (t1[0], t1[1] + (p,))
                    c2 = (t2[0], t2[1] + (p,))
                    fresh = False
                    for c in (c1, c2):
                        if c not in self.terms:
                            self._add_term(c)
                            changed = True
                            fresh = True
                    if fresh or self._find(c1) != self._find(c2):
                        ok = False
                        break
                if ok:
                    if self._merge(t1, t2, "UNIQ", self._obj_str(sig[1])):
                        changed = True
        return changed

    def saturate(self) -> None:
        if not self._dirty:
            return
        self._dirty = False
        while True:
            changed = self._rewrite_pass()
            if self._uniq_pass():
                changed = True
            if not changed:
                break

    # -- queries -----------------------------------------------------

    def arrows_equal(self, dom, atoms1: tuple, atoms2: tuple) -> bool:
        t1, t2 = (dom, atoms1), (dom, atoms2)
        self._add_term(t1)
        self._add_term(t2)
        if self.cod(t1) != self.cod(t2):
            return False
        self.saturate()
        return self._find(t1) == self._find(t2)

    # -- rendering ---------------------------------------------------

    def _obj_str(self, obj) -> str:
        if isinstance(obj, Base):
            return obj.node
        if isinstance(obj, LimitOf):
            return self._lim_names.get(obj.key, "Lim?")
        return str(obj)

    def _atom_str(self, a) -> str:
        if isinstance(a, Gen):
            return arrow_display_name(a.arrow)
        if isinstance(a, Proj):
            return f"P[{a.node}]"
        if isinstance(a, Fill):
            return f"fill->{self._obj_str(a.target)}"
        return str(a)

    def render(self, t: Term) -> str:
        obj, atoms = t
        body = " ; ".join(self._atom_str(a) for a in atoms) if atoms else "id"
        return f"{self._obj_str(obj)} |- {body}"


__all__ = [
    "Theory",
    "TheoryError",
    "LimitHandle",
    "Base",
    "LimitOf",
    "Gen",
    "Proj",
    "Fill",
]
