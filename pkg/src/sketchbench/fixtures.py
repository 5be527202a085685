"""Worked configurations, replay scripts and small concrete models.

Two reference deductions ship here: composing a square with a
diagonal into its outer composites, and pushing a composite through a
curried application.  The model half builds machine-checkable
finite-set models of the builtin sketches out of tiny categories:
posets with enough structure, and one-object monoid categories.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .builtins import builtin_sketch
from .diagrams import Diagram, build_diagram
from .finset import FinSetModel, ModelError
from .forms import PF
from .sketches import Sketch, cone_vertices


# -- tiny categories -------------------------------------------------


@dataclass
class FinCat:
    """A finite category given by tables.

    Arrow values only need to be hashable; composition is "g after f"
    and is total on the composable pairs.
    """

    name: str
    objects: list
    arrows: list
    src: dict
    tgt: dict
    ident: dict
    table: dict

    def comp(self, g, f):
        if self.tgt[f] != self.src[g]:
            raise ModelError(f"{self.name}: {g!r} after {f!r} is not composable")
        return self.table[(g, f)]

    def check(self) -> None:
        for o in self.objects:
            i = self.ident[o]
            if self.src[i] != o or self.tgt[i] != o:
                raise ModelError(f"{self.name}: bad identity at {o!r}")
        for f in self.arrows:
            for g in self.arrows:
                if self.tgt[f] != self.src[g]:
                    continue
                h = self.table[(g, f)]
                if self.src[h] != self.src[f] or self.tgt[h] != self.tgt[g]:
                    raise ModelError(f"{self.name}: composite {g!r}{f!r} mistyped")
        for f in self.arrows:
            if self.table[(f, self.ident[self.src[f]])] != f:
                raise ModelError(f"{self.name}: right unit fails at {f!r}")
            if self.table[(self.ident[self.tgt[f]], f)] != f:
                raise ModelError(f"{self.name}: left unit fails at {f!r}")


class FinPoset:
    """A finite poset, with the lattice operations computed on demand."""

    def __init__(self, name: str, elems: list[str], pairs: set[tuple[str, str]]):
        self.name = name
        self.elems = list(elems)
        rel = set(pairs) | {(x, x) for x in elems}
        grown = True
        while grown:
            grown = False
            for x, y in list(rel):
                for y2, z in list(rel):
                    if y == y2 and (x, z) not in rel:
                        rel.add((x, z))
                        grown = True
        for x, y in rel:
            if x != y and (y, x) in rel:
                raise ModelError(f"{name}: not antisymmetric at {x!r},{y!r}")
        self.rel = rel

    def leq(self, x: str, y: str) -> bool:
        return (x, y) in self.rel

    def top(self) -> str:
        tops = [t for t in self.elems if all(self.leq(x, t) for x in self.elems)]
        if len(tops) != 1:
            raise ModelError(f"{self.name}: no greatest element")
        return tops[0]

    def meet(self, a: str, b: str) -> str:
        lows = [c for c in self.elems if self.leq(c, a) and self.leq(c, b)]
        best = [c for c in lows if all(self.leq(d, c) for d in lows)]
        if len(best) != 1:
            raise ModelError(f"{self.name}: no meet of {a!r},{b!r}")
        return best[0]

    def imp(self, a: str, b: str) -> str:
        cands = [c for c in self.elems if self.leq(self.meet(c, a), b)]
        best = [c for c in cands if all(self.leq(d, c) for d in cands)]
        if len(best) != 1:
            raise ModelError(f"{self.name}: no implication {a!r}=>{b!r}")
        return best[0]

    def category(self) -> FinCat:
        arrows = sorted((x, y) for (x, y) in self.rel)
        fc = FinCat(
            name=self.name,
            objects=list(self.elems),
            arrows=arrows,
            src={a: a[0] for a in arrows},
            tgt={a: a[1] for a in arrows},
            ident={o: (o, o) for o in self.elems},
            table={
                (g, f): (f[0], g[1])
                for f in arrows
                for g in arrows
                if f[1] == g[0]
            },
        )
        fc.check()
        return fc


def terminal_category() -> FinCat:
    return FinPoset("pt", ["*"], set()).category()


def square_lattice() -> FinPoset:
    return FinPoset(
        "square",
        ["0", "a", "b", "1"],
        {("0", "a"), ("0", "b"), ("a", "1"), ("b", "1")},
    )


def two_chain() -> FinPoset:
    return FinPoset("chain2", ["0", "1"], {("0", "1")})


def monoid_category(name: str, elems: list[str], unit: str, mul) -> FinCat:
    fc = FinCat(
        name=name,
        objects=["*"],
        arrows=list(elems),
        src={e: "*" for e in elems},
        tgt={e: "*" for e in elems},
        ident={"*": unit},
        table={(g, f): mul(g, f) for g in elems for f in elems},
    )
    fc.check()
    return fc


def cyclic2_monoid() -> FinCat:
    return monoid_category(
        "z2", ["e", "s"], "e", lambda g, f: "e" if g == f else "s"
    )


def idempotent_monoid() -> FinCat:
    return monoid_category(
        "band", ["e", "a"], "e", lambda g, f: "a" if "a" in (g, f) else "e"
    )


# -- generic model assembly ------------------------------------------


def _ename(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, tuple):
        return "(" + ",".join(_ename(c) for c in v) + ")"
    return repr(v)


def _pruned_tuples(ids, domains, constraints):
    """All assignments of ``domains`` to ``ids`` meeting the constraints.

    ``constraints`` rows are (src id, tgt id, unary function); nodes
    are placed connectivity-first so failures prune whole subtrees.
    """
    remaining = set(ids)
    order: list[str] = []
    while remaining:
        placed = set(order)
        best = min(
            remaining,
            key=lambda n: (
                -sum(
                    1
                    for s, t, _ in constraints
                    if (s == n and t in placed) or (t == n and s in placed)
                ),
                n,
            ),
        )
        order.append(best)
        remaining.discard(best)
    pos = {n: k for k, n in enumerate(order)}
    by_latest: dict[int, list] = {k: [] for k in range(len(order))}
    for s, t, fn in constraints:
        by_latest[max(pos[s], pos[t])].append((pos[s], pos[t], fn))
    out = []
    assign = [None] * len(order)

    def place(k: int) -> None:
        if k == len(order):
            out.append({n: assign[pos[n]] for n in ids})
            return
        for v in domains[order[k]]:
            assign[k] = v
            if all(fn(assign[ps]) == assign[pt] for ps, pt, fn in by_latest[k]):
                place(k + 1)

    place(0)
    return out


def build_sketch_model(
    sketch: Sketch, name: str, carriers: dict[str, list], actions: dict
) -> FinSetModel:
    """Assemble a model from base carriers and non-projection actions.

    Cone vertices receive the tuples of their base limit; every
    projection, declared or generated, becomes a coordinate map.  The
    supplied actions work on the semantic values and are indexed into
    the finite-set format at the end.
    """
    carriers = {k: list(v) for k, v in carriers.items()}
    proj_owner: dict[str, tuple[str, str]] = {}
    for cname in sorted(sketch.cones):
        cone = sketch.cones[cname]
        for bid, arr in cone.projections.items():
            proj_owner[arr] = (cname, bid)

    def action_of(aid: str):
        if aid in proj_owner:
            cname, bid = proj_owner[aid]
            idx = sorted(sketch.cones[cname].base.shape.nodes).index(bid)
            return lambda v: v[idx]
        if aid in actions:
            return actions[aid]
        raise ModelError(f"model {name!r}: no action for arrow {aid!r}")

    pending = [c for c in sorted(sketch.cones) if sketch.cones[c].vertex not in carriers]
    while pending:
        progress = []
        for cname in pending:
            cone = sketch.cones[cname]
            base = cone.base
            if any(base.node_label[b] not in carriers for b in base.shape.nodes):
                continue
            ids = sorted(base.shape.nodes)
            rows = _pruned_tuples(
                ids,
                {b: carriers[base.node_label[b]] for b in ids},
                [
                    (s, t, action_of(base.arrow_label[a]))
                    for a, (s, t) in sorted(base.shape.arrows.items())
                ],
            )
            carriers[cone.vertex] = [tuple(r[b] for b in ids) for r in rows]
            progress.append(cname)
        if not progress:
            raise ModelError(
                f"model {name!r}: cannot order cones {pending} by dependency"
            )
        pending = [c for c in pending if c not in progress]

    missing = set(sketch.graph.nodes) - set(carriers)
    if missing:
        raise ModelError(f"model {name!r}: no carrier for nodes {sorted(missing)}")

    named = {n: tuple(_ename(v) for v in vs) for n, vs in carriers.items()}
    for n, names in named.items():
        if len(set(names)) != len(names):
            raise ModelError(f"model {name!r}: colliding element names at {n!r}")
    index = {
        n: {v: k for k, v in enumerate(carriers[n])} for n in carriers
    }
    maps = {}
    for aid in sorted(sketch.graph.arrows):
        s, t = sketch.graph.arrows[aid]
        fn = action_of(aid)
        row = []
        for v in carriers[s]:
            w = fn(v)
            if w not in index[t]:
                raise ModelError(
                    f"model {name!r}: action {aid!r} sends {_ename(v)} outside {t!r}"
                )
            row.append(index[t][w])
        maps[aid] = tuple(row)
    return FinSetModel(sketch.graph, named, maps, name=name)


# -- actions for the builtin sketches --------------------------------


def _cat_actions(sk: Sketch, fc: FinCat) -> dict:
    R = lambda n, s: sk.graph.resolve_arrow(n, src=s)
    return {
        R("source", "ar"): lambda a: fc.src[a],
        R("target", "ar"): lambda a: fc.tgt[a],
        R("unit", "ob"): lambda o: fc.ident[o],
        R("id", "ar"): lambda a: a,
        R("comp", "ar2"): lambda v: fc.comp(v[0], v[2]),
        R("lass", "ar3"): lambda v: (fc.comp(v[0], v[1]), v[3], v[4]),
        R("rass", "ar3"): lambda v: (v[0], v[2], fc.comp(v[1], v[4])),
        R("lpair", "ar3"): lambda v: (v[0], v[2], v[1]),
        R("rpair", "ar3"): lambda v: (v[1], v[3], v[4]),
        R("lunit", "ar"): lambda a: (fc.ident[fc.tgt[a]], fc.tgt[a], a),
        R("runit", "ar"): lambda a: (a, fc.src[a], fc.ident[fc.src[a]]),
    }


def _poset_prod_actions(sk: Sketch, P: FinPoset) -> dict:
    R = lambda n, s: sk.graph.resolve_arrow(n, src=s)
    top = P.top()

    def prod(p):
        m = P.meet(p[0], p[1])
        return ((m, p[0]), m, (m, p[1]))

    def mkfill(cg):
        gl, ov, gr = cg
        oa, ob_ = gl[1], gr[1]
        ol = P.meet(oa, ob_)
        po = (oa, ob_)
        cl = ((ol, oa), ol, (ol, ob_))
        h = (ov, ol)
        ll, lr = (ol, oa), (ol, ob_)
        # layout: 2l 2r cg cl gl gr h ll lr oa ob ol ov po
        return (
            (ll, ol, h), (lr, ol, h), cg, cl, gl, gr, h, ll, lr,
            oa, ob_, ol, ov, po,
        )

    return {
        R("terminal", "one"): lambda _: top,
        R("bang", "ob"): lambda o: ((o, top), top, ()),
        R("id", "ob"): lambda o: o,
        R("id", "termarr"): lambda v: v,
        R("prod", "obpair"): prod,
        R("mkfill", "bicone"): mkfill,
    }


def _poset_ccc_actions(sk: Sketch, P: FinPoset) -> dict:
    R = lambda n, s: sk.graph.resolve_arrow(n, src=s)
    top = P.top()
    return {
        R("expo", "obpair"): lambda p: P.imp(p[1], p[0]),
        R("evmap", "obpair"): lambda p: (P.meet(P.imp(p[1], p[0]), p[1]), p[0]),
        R("curry", "twovar"): lambda v: (v[1], v[2], v[0], (v[2], top)),
    }


def category_model(sk: Sketch, fc: FinCat, name: str | None = None) -> FinSetModel:
    carriers: dict[str, list] = {"ob": list(fc.objects), "ar": list(fc.arrows)}
    if "one" not in cone_vertices(sk):
        carriers["one"] = ["*"]
    return build_sketch_model(sk, name or fc.name, carriers, _cat_actions(sk, fc))


def poset_model(sk: Sketch, P: FinPoset, name: str | None = None) -> FinSetModel:
    """Model of any builtin sketch layer a poset with structure supports."""
    fc = P.category()
    carriers: dict[str, list] = {"ob": list(fc.objects), "ar": list(fc.arrows)}
    if "one" not in cone_vertices(sk):
        carriers["one"] = ["*"]
    actions = _cat_actions(sk, fc)
    if "obpair" in sk.graph.nodes:
        actions.update(_poset_prod_actions(sk, P))
    if "twovar" in sk.graph.nodes:
        actions.update(_poset_ccc_actions(sk, P))
    return build_sketch_model(sk, name or P.name, carriers, actions)


def cat_fixture_models() -> list[FinSetModel]:
    sk = builtin_sketch("Cat")
    return [
        category_model(sk, terminal_category()),
        poset_model(sk, square_lattice()),
        category_model(sk, cyclic2_monoid()),
        category_model(sk, idempotent_monoid()),
    ]


def finprod_fixture_models() -> list[FinSetModel]:
    sk = builtin_sketch("FinProd")
    return [
        poset_model(sk, FinPoset("pt", ["*"], set())),
        poset_model(sk, square_lattice()),
    ]


def ccc_fixture_models() -> list[FinSetModel]:
    sk = builtin_sketch("CCC")
    return [
        poset_model(sk, FinPoset("pt", ["*"], set())),
        poset_model(sk, two_chain()),
        poset_model(sk, square_lattice()),
    ]


def all_fixture_models() -> dict[str, list[FinSetModel]]:
    return {
        "Cat": cat_fixture_models(),
        "FinProd": finprod_fixture_models(),
        "FinLim": [],
        "CCC": ccc_fixture_models(),
    }


# -- the square-with-diagonal deduction ------------------------------

_SQ_NODES = {
    "nA": ("ob", "A"), "nB": ("ob", "B"), "nC": ("ob", "C"), "nD": ("ob", "D"),
    "nf": ("ar", "f"), "ng": ("ar", "g"), "nx": ("ar", "x"),
    "nh": ("ar", "h"), "nk": ("ar", "k"),
    "n2gf": ("ar2", "(g,f)"), "n2xf": ("ar2", "(x,f)"),
    "n2kx": ("ar2", "(k,x)"), "n2kh": ("ar2", "(k,h)"),
}

_SQ_ARROWS = {
    "f_s": ("nf", "nA", "source"), "f_t": ("nf", "nC", "target"),
    "g_s": ("ng", "nC", "source"), "g_t": ("ng", "nD", "target"),
    "x_s": ("nx", "nC", "source"), "x_t": ("nx", "nB", "target"),
    "h_s": ("nh", "nA", "source"), "h_t": ("nh", "nB", "target"),
    "k_s": ("nk", "nB", "source"), "k_t": ("nk", "nD", "target"),
    "gf_l": ("n2gf", "ng", "lfac"), "gf_r": ("n2gf", "nf", "rfac"),
    "xf_l": ("n2xf", "nx", "lfac"), "xf_r": ("n2xf", "nf", "rfac"),
    "kx_l": ("n2kx", "nk", "lfac"), "kx_r": ("n2kx", "nx", "rfac"),
    "kh_l": ("n2kh", "nk", "lfac"), "kh_r": ("n2kh", "nh", "rfac"),
}


def square_diagonal_pf() -> PF:
    """Given x.f = h and k.x = g, conclude that g.f and k.h agree."""
    sk = builtin_sketch("Cat")
    wksp = build_diagram(sk.graph, dict(_SQ_NODES), dict(_SQ_ARROWS))
    hyp = build_diagram(
        sk.graph,
        dict(_SQ_NODES),
        dict(_SQ_ARROWS)
        | {"cxf": ("n2xf", "nh", "comp"), "ckx": ("n2kx", "ng", "comp")},
    )
    claim = build_diagram(
        sk.graph,
        dict(_SQ_NODES) | {"ncomp": ("ar", "k . x . f")},
        dict(_SQ_ARROWS)
        | {"cgf": ("n2gf", "ncomp", "comp"), "ckh": ("n2kh", "ncomp", "comp")},
    )
    pf = PF(
        sk, wksp, hyp, claim,
        {n: n for n in wksp.shape.nodes},
        {n: n for n in wksp.shape.nodes},
    )
    pf.check()
    return pf


def square_diagonal_script() -> str:
    return "\n".join(
        [
            'extend limit ntrip=ar3 "(k,x,f)" '
            "proj lfac -> nk proj mfac -> nx proj rfac -> nf",
            "extend fillin fkx=lpair : ntrip -> n2kx",
            "extend fillin fxf=rpair : ntrip -> n2xf",
            "extend fillin fgf=lass : ntrip -> n2gf",
            "extend fillin fkh=rass : ntrip -> n2kh",
            'extend cocone ncomp=ar "k . x . f" '
            "arrow cgf=comp : n2gf arrow ckh=comp : n2kh",
            "restrict to claim",
        ]
    ) + "\n"


# -- the curried-application deduction -------------------------------

_EV_CORE_NODES = {
    "n_obC": ("ob", "C"), "n_obD": ("ob", "D"), "n_f": ("ar", "f"),
    "n_obCBB": ("ob", "C^B x B"), "n_obDBB": ("ob", "D^B x B"),
    "n_obAB": ("ob", "A x B"),
    "n_lgid": ("ar", "curry(g) x id(B)"), "n_fbid": ("ar", "f^B x id(B)"),
    "n_evalL": ("ar", "eval"), "n_evalR": ("ar", "eval"),
}

_EV_CORE_ARROWS = {
    "lgid_s": ("n_lgid", "n_obAB", "source"),
    "lgid_t": ("n_lgid", "n_obCBB", "target"),
    "fbid_s": ("n_fbid", "n_obCBB", "source"),
    "fbid_t": ("n_fbid", "n_obDBB", "target"),
    "evL_s": ("n_evalL", "n_obCBB", "source"),
    "evL_t": ("n_evalL", "n_obC", "target"),
    "evR_s": ("n_evalR", "n_obDBB", "source"),
    "evR_t": ("n_evalR", "n_obD", "target"),
    "f_s": ("n_f", "n_obC", "source"),
    "f_t": ("n_f", "n_obD", "target"),
}

_EV_HYP_NODES = {
    "n_th": ("ar2", "(eval, f^B x id(B))"),
    "n_fe": ("ar", "f . eval"),
    "n_2fe": ("ar2", "(f, eval)"),
    "n_2phi": ("ar2", "(f . eval, curry(g) x id(B))"),
    "n_phi": ("ar", "phi"),
}

_EV_HYP_ARROWS = {
    "th_l": ("n_th", "n_evalR", "lfac"),
    "th_r": ("n_th", "n_fbid", "rfac"),
    "fe_s": ("n_fe", "n_obCBB", "source"),
    "fe_t": ("n_fe", "n_obD", "target"),
    "2fe_r": ("n_2fe", "n_evalL", "rfac"),
    "2fe_l": ("n_2fe", "n_f", "lfac"),
    "2fe_c": ("n_2fe", "n_fe", "comp"),
    "2phi_r": ("n_2phi", "n_lgid", "rfac"),
    "2phi_l": ("n_2phi", "n_fe", "lfac"),
    "2phi_c": ("n_2phi", "n_phi", "comp"),
    "phi_s": ("n_phi", "n_obAB", "source"),
}


def eval_substitution_pf() -> PF:
    """A composite with an evaluation is itself a curried application."""
    sk = builtin_sketch("CCC")
    wksp = build_diagram(sk.graph, dict(_EV_CORE_NODES), dict(_EV_CORE_ARROWS))
    hyp = build_diagram(
        sk.graph,
        dict(_EV_CORE_NODES) | dict(_EV_HYP_NODES),
        dict(_EV_CORE_ARROWS) | dict(_EV_HYP_ARROWS),
    )
    claim = build_diagram(
        sk.graph,
        dict(_EV_CORE_NODES) | dict(_EV_HYP_NODES),
        dict(_EV_CORE_ARROWS)
        | dict(_EV_HYP_ARROWS)
        | {"th_c": ("n_th", "n_fe", "comp")},
    )
    pf = PF(
        sk, wksp, hyp, claim,
        {n: n for n in wksp.shape.nodes},
        {n: n for n in wksp.shape.nodes},
    )
    pf.check()
    return pf


def eval_substitution_script() -> str:
    return "extend composite th_c=comp : n_th -> n_fe\nrestrict to claim\n"
