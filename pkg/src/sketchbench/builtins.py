"""Built-in sketches: categories, finite products, equalizers, exponentials.

Each sketch is assembled from layered tables of nodes, arrows, cones and
distinguished diagrams.  Arrow ids follow the display policy: a bare
name when unique in the sketch, otherwise ``name@source``.  Cone
projections left unnamed in the tables get generated arrows named
``<cone>.<baseid>``.
"""
from __future__ import annotations

from .diagrams import Diagram, build_diagram, Cone
from .graphs import Graph
from .sketches import ModuleTemplate, Sketch

BUILTIN_NAMES = ("Cat", "FinProd", "FinLim", "CCC")

# -- tables ----------------------------------------------------------

_CAT_NODES = ["one", "ob", "ar", "ar2", "ar3"]

_CAT_ARROWS = [
    ("unit", "ob", "ar"),
    ("source", "ar", "ob"),
    ("target", "ar", "ob"),
    ("id", "ar", "ar"),
    ("comp", "ar2", "ar"),
    ("lfac", "ar2", "ar"),
    ("rfac", "ar2", "ar"),
    ("lfac", "ar3", "ar"),
    ("mfac", "ar3", "ar"),
    ("rfac", "ar3", "ar"),
    ("lass", "ar3", "ar2"),
    ("rass", "ar3", "ar2"),
    ("lpair", "ar3", "ar2"),
    ("rpair", "ar3", "ar2"),
    ("lunit", "ar", "ar2"),
    ("runit", "ar", "ar2"),
]

# cone table rows: (name, vertex, base nodes, base arrows, named projections)
_CAT_CONES = [
    ("ar2_cone", "ar2",
     {"l": "ar", "r": "ar", "ob": "ob"},
     {"ls": ("l", "ob", "source"), "rt": ("r", "ob", "target")},
     {"l": "lfac", "r": "rfac"}),
    ("ar3_cone", "ar3",
     {"l": "ar", "obl": "ob", "m": "ar", "obr": "ob", "r": "ar"},
     {"ls": ("l", "obl", "source"), "mt": ("m", "obl", "target"),
      "ms": ("m", "obr", "source"), "rt": ("r", "obr", "target")},
     {"l": "lfac", "m": "mfac", "r": "rfac"}),
]

_CAT_DIAGRAMS = [
    # lass(t) = (comp(lpair t), rfac t)
    ("lass_def",
     {"a3": "ar3", "t": "ar2", "l": "ar", "r": "ar", "b": "ar2"},
     {"pair": ("a3", "t", "lpair"), "tc": ("t", "l", "comp"),
      "rf": ("a3", "r", "rfac"), "st": ("a3", "b", "lass"),
      "bl": ("b", "l", "lfac"), "br": ("b", "r", "rfac")}),
    # rass(t) = (lfac t, comp(rpair t))
    ("rass_def",
     {"a3": "ar3", "t": "ar2", "l": "ar", "r": "ar", "b": "ar2"},
     {"pair": ("a3", "t", "rpair"), "tc": ("t", "r", "comp"),
      "lf": ("a3", "l", "lfac"), "st": ("a3", "b", "rass"),
      "bl": ("b", "l", "lfac"), "br": ("b", "r", "rfac")}),
    # lunit(f) = (unit of target f, f)
    ("lunit_def",
     {"t": "ar", "o": "ob", "l": "ar", "r": "ar", "m": "ar2"},
     {"tt": ("t", "o", "target"), "un": ("o", "l", "unit"),
      "idr": ("t", "r", "id"), "st": ("t", "m", "lunit"),
      "ml": ("m", "l", "lfac"), "mr": ("m", "r", "rfac")}),
    # runit(f) = (f, unit of source f)
    ("runit_def",
     {"t": "ar", "o": "ob", "l": "ar", "r": "ar", "m": "ar2"},
     {"ts": ("t", "o", "source"), "un": ("o", "r", "unit"),
      "idl": ("t", "l", "id"), "st": ("t", "m", "runit"),
      "ml": ("m", "l", "lfac"), "mr": ("m", "r", "rfac")}),
    # composing with a unit changes nothing
    ("unit_laws",
     {"l": "ar", "r": "ar", "m": "ar2", "b": "ar"},
     {"ru": ("l", "m", "runit"), "lu": ("r", "m", "lunit"),
      "idl": ("l", "b", "id"), "idr": ("r", "b", "id"),
      "c": ("m", "b", "comp")}),
    # composition is associative
    ("assoc",
     {"a3": "ar3", "t": "ar2", "b": "ar2", "r": "ar"},
     {"ra": ("a3", "t", "rass"), "la": ("a3", "b", "lass"),
      "tc": ("t", "r", "comp"), "bc": ("b", "r", "comp")}),
    # lpair keeps the left and middle factors
    ("lpair_def",
     {"a3": "ar3", "p": "ar2", "l": "ar", "r": "ar"},
     {"pr": ("a3", "p", "lpair"), "lf": ("a3", "l", "lfac"),
      "mf": ("a3", "r", "mfac"), "pl": ("p", "l", "lfac"),
      "prr": ("p", "r", "rfac")}),
    # rpair keeps the middle and right factors
    ("rpair_def",
     {"a3": "ar3", "p": "ar2", "l": "ar", "r": "ar"},
     {"pr": ("a3", "p", "rpair"), "mf": ("a3", "l", "mfac"),
      "rf": ("a3", "r", "rfac"), "pl": ("p", "l", "lfac"),
      "prr": ("p", "r", "rfac")}),
]

_FINPROD_NODES = _CAT_NODES + ["obpair", "termarr", "bicone", "filldiag"]

_FINPROD_ARROWS = _CAT_ARROWS + [
    ("terminal", "one", "ob"),
    ("bang", "ob", "termarr"),
    ("incl", "termarr", "ar"),
    ("id", "ob", "ob"),
    ("id", "termarr", "termarr"),
    ("p1", "obpair", "ob"),
    ("p2", "obpair", "ob"),
    ("prod", "obpair", "bicone"),
    ("lproj", "bicone", "ar"),
    ("rproj", "bicone", "ar"),
    ("srccone", "filldiag", "bicone"),
    ("tgtcone", "filldiag", "bicone"),
    ("mkfill", "bicone", "filldiag"),
    ("fillar", "filldiag", "ar"),
]

_FINPROD_CONES = _CAT_CONES + [
    ("one_cone", "one", {}, {}, {}),
    ("obpair_cone", "obpair",
     {"a": "ob", "b": "ob"},
     {},
     {"a": "p1", "b": "p2"}),
    ("termarr_cone", "termarr",
     {"a": "ar", "ob": "ob", "one": "one"},
     {"at": ("a", "ob", "target"), "ut": ("one", "ob", "terminal")},
     {"a": "incl"}),
    ("bicone_cone", "bicone",
     {"l": "ar", "ob": "ob", "r": "ar"},
     {"ls": ("l", "ob", "source"), "rs": ("r", "ob", "source")},
     {"l": "lproj", "r": "rproj"}),
    # fill-in data for a span against a product span over the same pair
    ("filldiag_cone", "filldiag",
     {"2l": "ar2", "gl": "ar", "cg": "bicone", "gr": "ar", "ov": "ob",
      "oa": "ob", "ob": "ob", "po": "obpair", "cl": "bicone", "2r": "ar2",
      "h": "ar", "ll": "ar", "lr": "ar", "ol": "ob"},
     {"lc": ("2l", "gl", "comp"), "ll_": ("2l", "ll", "lfac"),
      "lh": ("2l", "h", "rfac"),
      "gls": ("gl", "ov", "source"), "glt": ("gl", "oa", "target"),
      "cgl": ("cg", "gl", "lproj"), "cgr": ("cg", "gr", "rproj"),
      "grs": ("gr", "ov", "source"), "grt": ("gr", "ob", "target"),
      "pp1": ("po", "oa", "p1"), "pp2": ("po", "ob", "p2"),
      "ppr": ("po", "cl", "prod"),
      "rc": ("2r", "gr", "comp"), "rl": ("2r", "lr", "lfac"),
      "rh": ("2r", "h", "rfac"),
      "hs": ("h", "ov", "source"), "ht": ("h", "ol", "target"),
      "lls": ("ll", "ol", "source"), "llt": ("ll", "oa", "target"),
      "cll": ("cl", "ll", "lproj"), "clr": ("cl", "lr", "rproj"),
      "lrs": ("lr", "ol", "source"), "lrt": ("lr", "ob", "target")},
     {"cg": "srccone", "cl": "tgtcone", "h": "fillar"}),
]

_FINPROD_DIAGRAMS = _CAT_DIAGRAMS + [
    # the arrow part of a terminal arrow starts where bang started
    ("bang_source",
     {"o": "ob", "t": "termarr", "a": "ar", "s": "ob"},
     {"bg": ("o", "t", "bang"), "ic": ("t", "a", "incl"),
      "sr": ("a", "s", "source"), "idd": ("o", "s", "id")}),
    # bang of the source recovers the terminal arrow
    ("bang_retract",
     {"t": "termarr", "a": "ar", "o": "ob", "r": "termarr"},
     {"ic": ("t", "a", "incl"), "sr": ("a", "o", "source"),
      "bg": ("o", "r", "bang"), "idd": ("t", "r", "id")}),
    # mkfill and srccone are mutually inverse
    ("fill_unique",
     {"c": "bicone", "f": "filldiag"},
     {"mk": ("c", "f", "mkfill"), "sc": ("f", "c", "srccone")}),
    # product spans point at the paired objects
    ("proj_targets",
     {"po": "obpair", "a": "ob", "b": "ob", "c": "bicone",
      "l": "ar", "r": "ar"},
     {"pp1": ("po", "a", "p1"), "pp2": ("po", "b", "p2"),
      "pr": ("po", "c", "prod"), "lp": ("c", "l", "lproj"),
      "rp": ("c", "r", "rproj"), "lt": ("l", "a", "target"),
      "rt": ("r", "b", "target")}),
]

_FINLIM_NODES = _FINPROD_NODES + ["parpair", "eqcone", "eqfill"]

_FINLIM_ARROWS = _FINPROD_ARROWS + [
    ("topar", "parpair", "ar"),
    ("botar", "parpair", "ar"),
    ("srcob", "parpair", "ob"),
    ("equalize", "parpair", "eqcone"),
    ("etop", "eqcone", "ar"),
    ("ebot", "eqcone", "ar"),
    ("esrccone", "eqfill", "eqcone"),
    ("etgtcone", "eqfill", "eqcone"),
    ("emkfill", "eqcone", "eqfill"),
    ("efillar", "eqfill", "ar"),
]

# base shared by the two equalizer cones: an arrow e whose composites
# with both halves of a parallel pair agree
_ECONE_NODES = {"2t": "ar2", "f": "ar", "c": "ar", "e": "ar",
                "a": "ob", "b": "ob", "2b": "ar2", "g": "ar"}
_ECONE_ARROWS = {
    "tr": ("2t", "e", "rfac"), "tl": ("2t", "f", "lfac"),
    "tc": ("2t", "c", "comp"),
    "fs": ("f", "a", "source"), "ft": ("f", "b", "target"),
    "et": ("e", "a", "target"),
    "bc": ("2b", "c", "comp"), "bl": ("2b", "g", "lfac"),
    "br": ("2b", "e", "rfac"),
    "gs": ("g", "a", "source"), "gt": ("g", "b", "target"),
}

_FINLIM_CONES = _FINPROD_CONES + [
    ("parpair_cone", "parpair",
     {"f": "ar", "g": "ar", "a": "ob", "ob": "ob"},
     {"fs": ("f", "a", "source"), "ft": ("f", "ob", "target"),
      "gs": ("g", "a", "source"), "gt": ("g", "ob", "target")},
     {"f": "topar", "g": "botar", "a": "srcob"}),
    ("eqcone_cone", "eqcone", _ECONE_NODES, _ECONE_ARROWS,
     {"f": "etop", "g": "ebot"}),
    ("eqfill_cone", "eqfill",
     {**_ECONE_NODES,
      "v": "ar", "u": "ar", "2x": "ar2", "ox": "ob", "oe": "ob"},
     {**_ECONE_ARROWS,
      "vt": ("v", "oe", "target"), "vs": ("v", "ox", "source"),
      "us": ("u", "ox", "source"), "ut": ("u", "a", "target"),
      "xr": ("2x", "v", "rfac"), "xc": ("2x", "u", "comp"),
      "xl": ("2x", "e", "lfac"), "es": ("e", "oe", "source")},
     {"v": "efillar"}),
]

_FINLIM_DIAGRAMS = _FINPROD_DIAGRAMS + [
    # emkfill and esrccone are mutually inverse
    ("eqfill_unique",
     {"c": "eqcone", "f": "eqfill"},
     {"mk": ("c", "f", "emkfill"), "sc": ("f", "c", "esrccone")}),
    # the constructed equalizer cone sits over the given pair
    ("equalize_top",
     {"p": "parpair", "c": "eqcone", "a": "ar"},
     {"eq": ("p", "c", "equalize"), "et": ("c", "a", "etop"),
      "tp": ("p", "a", "topar")}),
    ("equalize_bot",
     {"p": "parpair", "c": "eqcone", "a": "ar"},
     {"eq": ("p", "c", "equalize"), "eb": ("c", "a", "ebot"),
      "bp": ("p", "a", "botar")}),
]

_CCC_NODES = _FINPROD_NODES + ["twovar", "curried"]

_CCC_ARROWS = _FINPROD_ARROWS + [
    ("expo", "obpair", "ob"),
    ("evmap", "obpair", "ar"),
    ("tsource", "twovar", "ob"),
    ("ttarget", "twovar", "ob"),
    ("arrow", "twovar", "ar"),
    ("curry", "twovar", "curried"),
    ("csource", "curried", "ob"),
    ("ctarget", "curried", "ob"),
    ("arrow", "curried", "ar"),
]

_CCC_CONES = _FINPROD_CONES + [
    ("twovar_cone", "twovar",
     {"s": "ob", "f": "ar", "t": "ob"},
     {"fs": ("f", "s", "source"), "ft": ("f", "t", "target")},
     {"s": "tsource", "f": "arrow", "t": "ttarget"}),
    ("curried_cone", "curried",
     {"po": "obpair", "ct": "ob", "g": "ar", "cs": "ob"},
     {"ex": ("po", "ct", "expo"), "gt": ("g", "ct", "target"),
      "gs": ("g", "cs", "source")},
     {"ct": "ctarget", "g": "arrow", "cs": "csource"}),
]

_CCC_DIAGRAMS = _FINPROD_DIAGRAMS + [
    # typing of the evaluation arrow
    ("eval_type",
     {"s": ("ob", "B^A x A"), "e": ("ar", "eval"), "t": ("ob", "B")},
     {"src": ("e", "s", "source"), "tgt": ("e", "t", "target")}),
    # typing of currying
    ("curry_type",
     {"tv": ("twovar", "f"), "ba": ("ob", "B x A"), "c": ("ob", "C"),
      "cu": ("curried", "curry(f)"), "ca": ("ob", "C^A"),
      "b": ("ob", "B")},
     {"ts": ("tv", "ba", "tsource"), "tt": ("tv", "c", "ttarget"),
      "cr": ("tv", "cu", "curry"), "cs": ("cu", "b", "csource"),
      "ct": ("cu", "ca", "ctarget")}),
    # evaluating a curried arrow times the identity recovers it
    ("curry_eval",
     {"ba": ("ob", "B x A"), "lf": ("ar", "curry(f) x id(A)"),
      "ca": ("ob", "C^A x A"), "a2": ("ar2", "(eval, curry(f) x id(A))"),
      "f": ("ar", "f"), "c": ("ob", "C"), "ev": ("ar", "eval")},
     {"ls": ("lf", "ba", "source"), "lt": ("lf", "ca", "target"),
      "rf": ("a2", "lf", "rfac"), "cm": ("a2", "f", "comp"),
      "le": ("a2", "ev", "lfac"), "fs": ("f", "ba", "source"),
      "ft": ("f", "c", "target"), "es": ("ev", "ca", "source"),
      "et": ("ev", "c", "target")}),
    # any candidate matching the evaluation equation is a currying
    ("curry_unique",
     {"ca": ("ob", "C^A x A"), "ev": ("ar", "eval"), "c": ("ob", "C"),
      "b": ("ob", "B"), "gi": ("ar", "g x id(A)"),
      "a2": ("ar2", "(eval, g x id(A))"), "g": ("ar", "g"),
      "ea": ("ob", "C^A"), "ba": ("ob", "B x A"),
      "eg": ("ar", "eval . (g x id(A))"), "cu": "curried",
      "tv": "twovar"},
     {"es": ("ev", "ca", "source"), "et": ("ev", "c", "target"),
      "gt": ("gi", "ca", "target"), "gs": ("gi", "ba", "source"),
      "lf": ("a2", "ev", "lfac"), "rf": ("a2", "gi", "rfac"),
      "cm": ("a2", "eg", "comp"), "g1": ("g", "b", "source"),
      "g2": ("g", "ea", "target"), "e1": ("eg", "ba", "source"),
      "e2": ("eg", "c", "target"), "ar1": ("cu", "g", "arrow"),
      "t1": ("tv", "ba", "tsource"), "t2": ("tv", "c", "ttarget"),
      "t3": ("tv", "eg", "arrow"), "t4": ("tv", "cu", "curry")}),
]

_TABLES = {
    "Cat": (_CAT_NODES, _CAT_ARROWS, _CAT_CONES, _CAT_DIAGRAMS),
    "FinProd": (_FINPROD_NODES, _FINPROD_ARROWS, _FINPROD_CONES,
                _FINPROD_DIAGRAMS),
    "FinLim": (_FINLIM_NODES, _FINLIM_ARROWS, _FINLIM_CONES,
               _FINLIM_DIAGRAMS),
    "CCC": (_CCC_NODES, _CCC_ARROWS, _CCC_CONES, _CCC_DIAGRAMS),
}


# -- assembly --------------------------------------------------------


def _assign_ids(arrows: list[tuple[str, str, str]]) -> list[tuple[str, str, str, str]]:
    seen: dict[str, int] = {}
    for name, _, _ in arrows:
        seen[name] = seen.get(name, 0) + 1
    out = []
    for name, src, tgt in arrows:
        aid = name if seen[name] == 1 else f"{name}@{src}"
        out.append((aid, name, src, tgt))
    return out


def builtin_sketch(name: str) -> Sketch:
    """A fresh copy of one of the built-in sketches."""
    if name not in _TABLES:
        raise KeyError(f"unknown builtin sketch {name!r}")
    nodes, arrows, cones, diagrams = _TABLES[name]
    g = Graph()
    for n in nodes:
        g.add_node(n)
    for aid, _, src, tgt in _assign_ids(arrows):
        g.add_arrow(aid, src, tgt)
    sk = Sketch(name=name, graph=g)
    for cname, vertex, base_nodes, base_arrows, named in cones:
        base = build_diagram(g, dict(base_nodes), dict(base_arrows))
        projections: dict[str, str] = {}
        for bid in sorted(base_nodes):
            if bid in named:
                projections[bid] = g.resolve_arrow(named[bid], src=vertex)
            else:
                gen = f"{cname}.{bid}"
                g.add_arrow(gen, vertex, base_nodes[bid])
                projections[bid] = gen
        cone = Cone(name=cname, vertex=vertex, base=base,
                    projections=projections)
        cone.check(g)
        sk.cones[cname] = cone
    for dname, dnodes, darrows in diagrams:
        d = build_diagram(g, dict(dnodes), dict(darrows))
        sk.diagrams[dname] = d
    return sk


# -- module templates ------------------------------------------------


def _clean(s: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in s)


def product_module(sketch: Sketch, m: str, n: str) -> ModuleTemplate:
    """Binary product of the objects annotated ``m`` and ``n``.

    The pattern carries the two projections as plain arrows together
    with the span and pairing witnesses that tie them to ``prod``.
    """
    pattern = build_diagram(
        sketch.graph,
        {"m": ("ob", m), "n": ("ob", n), "mn": ("ob", f"{m} x {n}"),
         "po": ("obpair", f"({m},{n})"), "co": "bicone",
         "p1a": ("ar", f"p1({m},{n})"), "p2a": ("ar", f"p2({m},{n})")},
        {"p1s": ("p1a", "mn", "source"), "p1t": ("p1a", "m", "target"),
         "p2s": ("p2a", "mn", "source"), "p2t": ("p2a", "n", "target"),
         "pp1": ("po", "m", "p1"), "pp2": ("po", "n", "p2"),
         "ppr": ("po", "co", "prod"),
         "cl": ("co", "p1a", "lproj"), "cr": ("co", "p2a", "rproj")},
    )
    mod = ModuleTemplate(
        name=f"product_{_clean(m)}_{_clean(n)}",
        pattern=pattern,
        interface_nodes=set(pattern.shape.nodes),
        interface_arrows=set(pattern.shape.arrows),
    )
    mod.check()
    return mod


def function_space_module(sketch: Sketch, m: str, n: str) -> ModuleTemplate:
    """Exponential object for the objects annotated ``m`` and ``n``."""
    pattern = build_diagram(
        sketch.graph,
        {"m": ("ob", m), "n": ("ob", n), "mn": ("ob", f"{m}^{n}"),
         "po": ("obpair", f"({m},{n})")},
        {"pp1": ("po", "m", "p1"), "pfs": ("po", "mn", "expo"),
         "pp2": ("po", "n", "p2")},
    )
    mod = ModuleTemplate(
        name=f"expo_{_clean(m)}_{_clean(n)}",
        pattern=pattern,
        interface_nodes=set(pattern.shape.nodes),
        interface_arrows=set(pattern.shape.arrows),
    )
    mod.check()
    return mod


# -- worked module example: naturality of projections ----------------


def proj_naturality_core(sketch: Sketch) -> Diagram:
    """Squares relating the projections of K x N and M x N along u."""
    return build_diagram(
        sketch.graph,
        {"ok": ("ob", "K"), "on": ("ob", "N"), "om": ("ob", "M"),
         "okn": ("ob", "K x N"), "omn": ("ob", "M x N"),
         "p1k": ("ar", "p1(K,N)"), "p2k": ("ar", "p2(K,N)"),
         "p1m": ("ar", "p1(M,N)"), "p2m": ("ar", "p2(M,N)"),
         "u": ("ar", "u"), "uid": ("ar", "u x id(N)"),
         "mid": ("ar", "u . p1(K,N)"),
         "a2top": ("ar2", "(u, p1(K,N))"),
         "a2mid": ("ar2", "(p1(M,N), u x id(N))"),
         "a2phi": ("ar2", "(p2(M,N), u x id(N))")},
        {"p1k_src": ("p1k", "okn", "source"), "p1k_tgt": ("p1k", "ok", "target"),
         "p2k_src": ("p2k", "okn", "source"), "p2k_tgt": ("p2k", "on", "target"),
         "u_src": ("u", "ok", "source"), "u_tgt": ("u", "om", "target"),
         "top_l": ("a2top", "u", "lfac"), "top_r": ("a2top", "p1k", "rfac"),
         "top_c": ("a2top", "mid", "comp"),
         "mid_c": ("a2mid", "mid", "comp"), "mid_l": ("a2mid", "p1m", "lfac"),
         "mid_r": ("a2mid", "uid", "rfac"),
         "uid_src": ("uid", "okn", "source"), "uid_tgt": ("uid", "omn", "target"),
         "phi_l": ("a2phi", "p2m", "lfac"), "phi_r": ("a2phi", "uid", "rfac"),
         "phi_c": ("a2phi", "p2k", "comp"),
         "p1m_src": ("p1m", "omn", "source"), "p1m_tgt": ("p1m", "om", "target"),
         "p2m_src": ("p2m", "omn", "source"), "p2m_tgt": ("p2m", "on", "target")},
    )


def proj_naturality_full(sketch: Sketch) -> Diagram:
    """The core squares with both product modules attached."""
    from .sketches import expand_module

    d = proj_naturality_core(sketch)
    mod_mn = product_module(sketch, "M", "N")
    d = expand_module(d, mod_mn, {
        "m": "om", "n": "on", "mn": "omn", "p1a": "p1m", "p2a": "p2m",
        "p1s": "p1m_src", "p1t": "p1m_tgt",
        "p2s": "p2m_src", "p2t": "p2m_tgt",
    })
    mod_kn = product_module(sketch, "K", "N")
    d = expand_module(d, mod_kn, {
        "m": "ok", "n": "on", "mn": "okn", "p1a": "p1k", "p2a": "p2k",
        "p1s": "p1k_src", "p1t": "p1k_tgt",
        "p2s": "p2k_src", "p2t": "p2k_tgt",
    })
    return d


__all__ = [
    "BUILTIN_NAMES",
    "builtin_sketch",
    "product_module",
    "function_space_module",
    "proj_naturality_core",
    "proj_naturality_full",
]
