"""Potential factorizations and their deduction scripts.

A potential factorization names three descriptions over one sketch:
a workspace, a hypothesis extending it, and a claim extending it.
Checking one means replaying a script of extension steps that grows
the hypothesis description until the claim is reached, while the
derivation engine certifies every side condition.  The result is a
certificate carrying the composed verification arrow from the limit
of the hypothesis to the limit of the claim.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field

from .builtins import builtin_sketch, function_space_module, product_module
from .diagrams import (
    Cone,
    Diagram,
    classify_extension,
    find_label_embedding,
    is_subdiagram,
    subdiagram,
)
from .graphs import Graph, arrow_display_name
from .sketch_dsl import (
    SketchSyntaxError,
    parse_diagram_section,
    realize_diagram,
    serialize_diagram_body,
)
from .sketches import ModuleTemplate, Sketch, expand_module
from .theory import Base, Fill, Gen, LimitOf, Proj, Theory, TheoryError


class PfError(ValueError):
    """An ill-formed potential factorization or script."""


# -- forms -----------------------------------------------------------


@dataclass
class Form:
    """A named description over a sketch, usable as a type of instances."""

    name: str
    sketch: Sketch
    description: Diagram


def syncat(form: Form) -> Sketch:
    """Extend the sketch with a classifying node for the form.

    The new node receives a distinguished cone over the form's
    description, so models interpret it as the set of instances, and
    an inert arrow from ``one`` names a generic instance.
    """
    sk = form.sketch
    if "one" not in sk.graph.nodes:
        raise PfError(f"sketch {sk.name!r} has no node 'one' to anchor {form.name!r}")
    graph = sk.graph.copy()
    tnode = f"{form.name}.type"
    cname = f"{form.name}.type_cone"
    if tnode in graph.nodes:
        raise PfError(f"node {tnode!r} already present in {sk.name!r}")
    graph.add_node(tnode)
    base = form.description.copy()
    base.check()
    projections: dict[str, str] = {}
    for bid in sorted(base.shape.nodes):
        pid = f"{cname}.{bid}"
        graph.add_arrow(pid, tnode, base.node_label[bid])
        projections[bid] = pid
    graph.add_arrow(form.name, "one", tnode)
    cones = dict(sk.cones)
    cones[cname] = Cone(cname, tnode, base, projections)
    cones[cname].check(graph)
    out = Sketch(
        name=f"{sk.name}+{form.name}",
        graph=graph,
        diagrams={k: v for k, v in sk.diagrams.items()},
        cones=cones,
    )
    return out


# -- potential factorizations ----------------------------------------


@dataclass
class PF:
    """Workspace, hypothesis and claim descriptions over one sketch.

    The two maps send workspace shape ids into the hypothesis and
    claim shapes; with the shared-id convention both are identities.
    """

    sketch: Sketch
    wksp: Diagram
    hyp: Diagram
    claim: Diagram
    hyp_map: dict[str, str]
    claim_map: dict[str, str]

    def check(self) -> None:
        for d in (self.wksp, self.hyp, self.claim):
            d.check()
            if d.target is not self.sketch.graph:
                d.target.check()
        for side, dmap, dest in (
            ("hyp", self.hyp_map, self.hyp),
            ("claim", self.claim_map, self.claim),
        ):
            if set(dmap) != self.wksp.shape.nodes:
                raise PfError(f"{side} map does not cover the workspace nodes")
            for w, x in dmap.items():
                if x not in dest.shape.nodes:
                    raise PfError(f"{side} map sends {w!r} to unknown node {x!r}")
                if dest.node_label[x] != self.wksp.node_label[w]:
                    raise PfError(
                        f"{side} map breaks labels at {w!r}: "
                        f"{self.wksp.node_label[w]} vs {dest.node_label[x]}"
                    )
            if len(set(dmap.values())) != len(dmap):
                raise PfError(f"{side} map is not injective")
            for a in self.wksp.shape.arrows:
                s, t = self.wksp.shape.arrows[a]
                lab = self.wksp.arrow_label[a]
                cands = [
                    b
                    for b, (bs, bt) in dest.shape.arrows.items()
                    if bs == dmap[s] and bt == dmap[t] and dest.arrow_label[b] == lab
                ]
                if not cands:
                    raise PfError(
                        f"{side} side misses the image of workspace arrow {a!r}"
                    )


def _identity_map(wksp: Diagram, dest: Diagram, side: str) -> dict[str, str]:
    if not is_subdiagram(wksp, dest):
        raise PfError(f"workspace is not contained in the {side} description")
    return {n: n for n in wksp.shape.nodes}


def parse_pf(text: str, resolver=None) -> PF:
    """Read a potential factorization from its block file format."""
    resolver = resolver or builtin_sketch
    lines = text.splitlines()
    sketch: Sketch | None = None
    raws: dict[str, dict] = {}
    cons: dict[str, dict[str, str] | str] = {}
    i = 0
    while i < len(lines):
        line = lines[i].split("#", 1)[0].strip()
        i += 1
        if not line:
            continue
        parts = line.split()
        if parts[0] == "pf":
            if len(parts) != 3 or parts[1] != "over":
                raise PfError(f"line {i}: expected 'pf over <sketch>'")
            sketch = resolver(parts[2])
            continue
        if parts[0] in ("workspace", "hyp", "claim") and parts[-1] == "{":
            if parts[0] in raws:
                raise PfError(f"line {i}: duplicate {parts[0]} block")
            try:
                raws[parts[0]], i = parse_diagram_section(lines, i, parts[0])
            except SketchSyntaxError as e:
                raise PfError(str(e)) from e
            continue
        if parts[0] in ("hypcon", "claimcon"):
            if len(parts) == 2 and parts[1] == "identity":
                cons[parts[0]] = "identity"
                continue
            if len(parts) == 2 and parts[1] == "{":
                body: dict[str, str] = {}
                while i < len(lines):
                    row = lines[i].split("#", 1)[0].strip()
                    i += 1
                    if not row:
                        continue
                    if row == "}":
                        break
                    rp = row.split()
                    if len(rp) != 3 or rp[1] != "->":
                        raise PfError(f"line {i}: expected '<wkspid> -> <id>'")
                    body[rp[0]] = rp[2]
                cons[parts[0]] = body
                continue
        raise PfError(f"line {i}: cannot read {line!r}")
    if sketch is None:
        raise PfError("missing 'pf over <sketch>' header")
    for want in ("workspace", "hyp", "claim"):
        if want not in raws:
            raise PfError(f"missing {want} block")
    try:
        wksp = realize_diagram(raws["workspace"], sketch.graph, "workspace")
        hyp = realize_diagram(raws["hyp"], sketch.graph, "hyp")
        claim = realize_diagram(raws["claim"], sketch.graph, "claim")
    except SketchSyntaxError as e:
        raise PfError(str(e)) from e
    hm = cons.get("hypcon", "identity")
    cm = cons.get("claimcon", "identity")
    hyp_map = _identity_map(wksp, hyp, "hyp") if hm == "identity" else dict(hm)
    claim_map = _identity_map(wksp, claim, "claim") if cm == "identity" else dict(cm)
    pf = PF(sketch, wksp, hyp, claim, hyp_map, claim_map)
    try:
        pf.check()
    except (PfError, Exception) as e:
        raise PfError(f"invalid potential factorization: {e}") from e
    return pf


def serialize_pf(pf: PF) -> str:
    out = [f"pf over {pf.sketch.name}", ""]
    for head, d in (
        ("workspace", pf.wksp),
        ("hyp", pf.hyp),
        ("claim", pf.claim),
    ):
        out.append(head + " {")
        out.extend(serialize_diagram_body(d))
        out.append("}")
        out.append("")
    for head, dmap in (("hypcon", pf.hyp_map), ("claimcon", pf.claim_map)):
        if all(k == v for k, v in dmap.items()):
            out.append(f"{head} identity")
        else:
            out.append(head + " {")
            for k in sorted(dmap):
                out.append(f"  {k} -> {dmap[k]}")
            out.append("}")
    return "\n".join(out) + "\n"


# -- scripts ---------------------------------------------------------


@dataclass
class ExtendLimit:
    node: str
    label: str
    ann: str | None
    projs: list[tuple[str, str]]


@dataclass
class ExtendArrow:
    kind: str  # composite | fillin
    arrow: str
    label: str
    src: str
    tgt: str


@dataclass
class ExtendCocone:
    node: str
    label: str
    ann: str | None
    legs: list[tuple[str, str, str]]  # (arrow id, label, source node)


@dataclass
class UseDiagram:
    name: str
    bind: dict[str, str]


@dataclass
class AttachModule:
    name: str
    bind: dict[str, str]


@dataclass
class Restrict:
    to_claim: bool
    nodes: list[str] = field(default_factory=list)
    arrows: list[str] = field(default_factory=list)


Step = ExtendLimit | ExtendArrow | ExtendCocone | UseDiagram | AttachModule | Restrict


def _eq_pair(tok: str, where: str) -> tuple[str, str]:
    if "=" not in tok:
        raise PfError(f"{where}: expected '<id>=<label>', got {tok!r}")
    a, b = tok.split("=", 1)
    if not a or not b:
        raise PfError(f"{where}: expected '<id>=<label>', got {tok!r}")
    return a, b


def parse_script(text: str) -> list[Step]:
    steps: list[Step] = []
    for lineno, rawline in enumerate(text.splitlines(), 1):
        try:
            toks = shlex.split(rawline, comments=True)
        except ValueError as e:
            raise PfError(f"line {lineno}: {e}") from e
        if not toks:
            continue
        where = f"line {lineno}"
        if toks[0] == "extend" and len(toks) >= 3:
            kind = toks[1]
            if kind == "limit":
                node, label = _eq_pair(toks[2], where)
                i = 3
                ann = None
                if i < len(toks) and toks[i] != "proj":
                    ann = toks[i]
                    i += 1
                projs = []
                while i < len(toks):
                    if toks[i] != "proj" or i + 3 >= len(toks) or toks[i + 2] != "->":
                        raise PfError(f"{where}: expected 'proj <arrow> -> <node>'")
                    projs.append((toks[i + 1], toks[i + 3]))
                    i += 4
                if not projs:
                    raise PfError(f"{where}: limit extension needs projections")
                steps.append(ExtendLimit(node, label, ann, projs))
                continue
            if kind in ("composite", "fillin"):
                if len(toks) != 7 or toks[3] != ":" or toks[5] != "->":
                    raise PfError(
                        f"{where}: expected 'extend {kind} <id>=<label> : <src> -> <tgt>'"
                    )
                arrow, label = _eq_pair(toks[2], where)
                steps.append(ExtendArrow(kind, arrow, label, toks[4], toks[6]))
                continue
            if kind == "cocone":
                node, label = _eq_pair(toks[2], where)
                i = 3
                ann = None
                if i < len(toks) and toks[i] != "arrow":
                    ann = toks[i]
                    i += 1
                legs = []
                while i < len(toks):
                    if toks[i] != "arrow" or i + 3 >= len(toks) or toks[i + 2] != ":":
                        raise PfError(f"{where}: expected 'arrow <id>=<label> : <src>'")
                    aid, alab = _eq_pair(toks[i + 1], where)
                    legs.append((aid, alab, toks[i + 3]))
                    i += 4
                if not legs:
                    raise PfError(f"{where}: cocone extension needs arrows")
                steps.append(ExtendCocone(node, label, ann, legs))
                continue
            raise PfError(f"{where}: unknown extension kind {kind!r}")
        if toks[0] == "use" and len(toks) >= 3 and toks[1] == "diagram":
            bind: dict[str, str] = {}
            rest = toks[3:]
            if rest:
                if rest[0] != "bind":
                    raise PfError(f"{where}: expected 'bind' after diagram name")
                for tok in rest[1:]:
                    k, v = _eq_pair(tok, where)
                    bind[k] = v
            steps.append(UseDiagram(toks[2], bind))
            continue
        if toks[0] == "attach" and len(toks) >= 3 and toks[1] == "module":
            bind = {}
            rest = toks[3:]
            if rest:
                if rest[0] != "bind":
                    raise PfError(f"{where}: expected 'bind' after module name")
                for tok in rest[1:]:
                    k, v = _eq_pair(tok, where)
                    bind[k] = v
            steps.append(AttachModule(toks[2], bind))
            continue
        if toks[0] == "restrict":
            if toks[1:] == ["to", "claim"]:
                steps.append(Restrict(to_claim=True))
                continue
            if len(toks) >= 2 and toks[1] == "nodes":
                nodes: list[str] = []
                arrows: list[str] = []
                bucket = nodes
                for tok in toks[2:]:
                    if tok == "arrows":
                        bucket = arrows
                        continue
                    bucket.append(tok)
                steps.append(Restrict(False, nodes, arrows))
                continue
            raise PfError(f"{where}: cannot read restriction")
        raise PfError(f"{where}: cannot read {rawline.strip()!r}")
    return steps


def serialize_script(steps: list[Step]) -> str:
    out = []
    for st in steps:
        if isinstance(st, ExtendLimit):
            bits = [f"extend limit {st.node}={st.label}"]
            if st.ann is not None:
                bits.append('"%s"' % st.ann)
            for lab, tgt in st.projs:
                bits.append(f"proj {lab} -> {tgt}")
            out.append(" ".join(bits))
        elif isinstance(st, ExtendArrow):
            out.append(
                f"extend {st.kind} {st.arrow}={st.label} : {st.src} -> {st.tgt}"
            )
        elif isinstance(st, ExtendCocone):
            bits = [f"extend cocone {st.node}={st.label}"]
            if st.ann is not None:
                bits.append('"%s"' % st.ann)
            for aid, alab, src in st.legs:
                bits.append(f"arrow {aid}={alab} : {src}")
            out.append(" ".join(bits))
        elif isinstance(st, UseDiagram):
            line = f"use diagram {st.name}"
            if st.bind:
                line += " bind " + " ".join(
                    f"{k}={v}" for k, v in sorted(st.bind.items())
                )
            out.append(line)
        elif isinstance(st, AttachModule):
            line = f"attach module {st.name}"
            if st.bind:
                line += " bind " + " ".join(
                    f"{k}={v}" for k, v in sorted(st.bind.items())
                )
            out.append(line)
        elif isinstance(st, Restrict):
            if st.to_claim:
                out.append("restrict to claim")
            else:
                out.append(
                    "restrict nodes "
                    + " ".join(st.nodes)
                    + " arrows "
                    + " ".join(st.arrows)
                )
    return "\n".join(out) + "\n"


# -- module registry -------------------------------------------------


def _bound_annotation(host: Diagram, bind: dict[str, str], key: str) -> str:
    if key not in bind:
        raise PfError(f"module binding misses {key!r}")
    node = bind[key]
    if node not in host.annot:
        raise PfError(f"bound node {node!r} carries no annotation")
    return host.annot[node]


def _product_factory(sketch: Sketch, host: Diagram, bind: dict[str, str]):
    return product_module(
        sketch, _bound_annotation(host, bind, "m"), _bound_annotation(host, bind, "n")
    )


def _expo_factory(sketch: Sketch, host: Diagram, bind: dict[str, str]):
    return function_space_module(
        sketch, _bound_annotation(host, bind, "m"), _bound_annotation(host, bind, "n")
    )


DEFAULT_MODULES = {
    "product": _product_factory,
    "expo": _expo_factory,
}


# -- certificates ----------------------------------------------------


@dataclass
class Certificate:
    pf: PF
    status: str  # deducible | unknown
    verif: tuple
    steps: list[str]
    obligations: list[str]
    trace: list[str]


@dataclass
class CheckResult:
    status: str  # deducible | unknown | ill-formed
    certificate: Certificate | None
    messages: list[str]

    @property
    def exit_code(self) -> int:
        return {"deducible": 0, "unknown": 2, "ill-formed": 1}[self.status]


class _Checker:
    def __init__(self, pf: PF, *, depth: int, modules=None):
        self.pf = pf
        self.sketch = pf.sketch
        self.th = Theory(pf.sketch, depth=depth)
        self.D = pf.hyp.copy()
        self.L = self.th.limit(self.D)
        self.L0 = self.L
        self.verif: tuple = ()
        self.steps: list[str] = []
        self.obligations: list[str] = []
        self.modules = DEFAULT_MODULES if modules is None else modules
        self.failed = False

    # answer limit-level equality questions about the current description
    def _eq(self, pre1, i, pre2, j) -> bool:
        return self.th.arrows_equal(
            self.L.obj,
            self.L.proj(i) + self.th.gens(pre1),
            self.L.proj(j) + self.th.gens(pre2),
        )

    def _give_up(self, msg: str) -> None:
        self.obligations.append(msg)
        self.failed = True

    def _node_label(self, nid: str, where: str) -> str:
        if nid not in self.D.shape.nodes:
            raise PfError(f"{where}: unknown node {nid!r}")
        return self.D.node_label[nid]

    def _resolve(self, name: str, src_label: str, where: str) -> str:
        try:
            return self.sketch.graph.resolve_arrow(name, src=src_label)
        except Exception as e:
            raise PfError(f"{where}: {e}") from e

    # -- committing a classified extension ---------------------------

    def _commit(self, big: Diagram, describe: str) -> bool:
        """Classify big over the current description and move to it."""
        cls = classify_extension(big, self.D, self.sketch, self._eq)
        if cls.kind == "identity":
            return True
        if cls.kind == "unrecognized":
            for ob in cls.obligations:
                self.obligations.append(f"{describe}: {ob}")
            self.failed = True
            return False
        new_nodes = sorted(big.shape.nodes - self.D.shape.nodes)
        new_arrows = sorted(set(big.shape.arrows) - set(self.D.shape.arrows))
        if cls.kind == "composite" and cls.diagram is not None:
            # a distinguished instance completed by the new arrow lets
            # us assert its constraint directly
            a = new_arrows[0]
            i, j = big.shape.arrows[a]
            self.th.record_equality(
                self.L.obj,
                self.L.proj(i) + (Gen(big.arrow_label[a]),),
                self.L.proj(j),
                "DIAG",
                f"{cls.diagram}@instance",
            )
        comps: dict[str, tuple] = {
            n: self.L.proj(n) for n in self.D.shape.nodes
        }
        if cls.kind == "fillin":
            a = new_arrows[0]
            m, n = big.shape.arrows[a]
            comps[n] = self.L.proj(m) + (Gen(big.arrow_label[a]),)
        elif cls.kind == "cocone":
            v = new_nodes[0]
            a1 = new_arrows[0]
            comps[v] = self.L.proj(big.shape.arrows[a1][0]) + (
                Gen(big.arrow_label[a1]),
            )
        elif cls.kind == "limit":
            v = new_nodes[0]
            cone = self.sketch.cones[cls.cone]
            ch = self.th.limit(cone.base)
            try:
                fv = self.th.fillin(
                    ch,
                    self.L.obj,
                    {b: self.L.proj(cls.node_match[b]) for b in cone.base.shape.nodes},
                    detail=f"{describe}/cone",
                )
            except TheoryError as e:
                self._give_up(f"{describe}: {e}")
                return False
            comps[v] = fv
        L2 = self.th.limit(big)
        try:
            s = self.th.fillin(L2, self.L.obj, comps, detail=describe)
        except TheoryError as e:
            self._give_up(f"{describe}: {e}")
            return False
        self.verif = self.verif + s
        self.D = big
        self.L = L2
        tag = {
            "composite": f"composite via {cls.diagram}" if cls.diagram else "composite",
            "fillin": f"fill-in via cone {cls.cone}",
            "cocone": "commutative cocone",
            "limit": f"limit via cone {cls.cone}",
        }[cls.kind]
        self.steps.append(f"{describe}: {tag}")
        return True

    # -- individual steps --------------------------------------------

    def extend_limit(self, st: ExtendLimit) -> None:
        where = f"extend limit {st.node}"
        if st.node in self.D.shape.nodes:
            raise PfError(f"{where}: node id already used")
        if st.label not in self.sketch.graph.nodes:
            raise PfError(f"{where}: unknown sketch node {st.label!r}")
        big = self.D.copy()
        big.shape.add_node(st.node)
        big.node_label[st.node] = st.label
        if st.ann is not None:
            big.annot[st.node] = st.ann
        for name, tgt in st.projs:
            tlabel = self._node_label(tgt, where)
            aid = self._resolve(name, st.label, where)
            s, t = self.sketch.graph.arrows[aid]
            if t != tlabel:
                raise PfError(
                    f"{where}: projection {name!r} lands in {t}, node {tgt!r} is {tlabel}"
                )
            shape_id = f"{st.node}.{arrow_display_name(aid)}"
            big.shape.add_arrow(shape_id, st.node, tgt)
            big.arrow_label[shape_id] = aid
        big.check()
        self._commit(big, where)

    def extend_arrow(self, st: ExtendArrow) -> None:
        where = f"extend {st.kind} {st.arrow}"
        if st.arrow in self.D.shape.arrows:
            raise PfError(f"{where}: arrow id already used")
        slabel = self._node_label(st.src, where)
        tlabel = self._node_label(st.tgt, where)
        aid = self._resolve(st.label, slabel, where)
        if self.sketch.graph.arrows[aid] != (slabel, tlabel):
            raise PfError(
                f"{where}: {st.label!r} connects {self.sketch.graph.arrows[aid]}, "
                f"endpoints are {(slabel, tlabel)}"
            )
        big = self.D.copy()
        big.shape.add_arrow(st.arrow, st.src, st.tgt)
        big.arrow_label[st.arrow] = aid
        big.check()
        # the declared kind records intent; classification has the say,
        # checked in its fixed order, so a declared fill-in that also
        # completes a distinguished diagram goes through as a composite
        self._commit(big, where)

    def extend_cocone(self, st: ExtendCocone) -> None:
        where = f"extend cocone {st.node}"
        if st.node in self.D.shape.nodes:
            raise PfError(f"{where}: node id already used")
        if st.label not in self.sketch.graph.nodes:
            raise PfError(f"{where}: unknown sketch node {st.label!r}")
        big = self.D.copy()
        big.shape.add_node(st.node)
        big.node_label[st.node] = st.label
        if st.ann is not None:
            big.annot[st.node] = st.ann
        for aid, alab, src in st.legs:
            if aid in big.shape.arrows:
                raise PfError(f"{where}: arrow id {aid!r} already used")
            slabel = self._node_label(src, where)
            rid = self._resolve(alab, slabel, where)
            if self.sketch.graph.arrows[rid][1] != st.label:
                raise PfError(
                    f"{where}: leg {alab!r} lands in "
                    f"{self.sketch.graph.arrows[rid][1]}, node is {st.label}"
                )
            big.shape.add_arrow(aid, src, st.node)
            big.arrow_label[aid] = rid
        big.check()
        self._commit(big, where)

    def use_diagram(self, st: UseDiagram) -> None:
        where = f"use diagram {st.name}"
        if st.name not in self.sketch.diagrams:
            raise PfError(f"{where}: no such distinguished diagram")
        dd = self.sketch.diagrams[st.name]
        partial: dict[str, str] = {}
        for k, v in st.bind.items():
            if k not in dd.shape.nodes:
                raise PfError(f"{where}: {k!r} is not a node of the diagram")
            if v not in self.D.shape.nodes:
                raise PfError(f"{where}: {v!r} is not a node of the description")
            partial[k] = v
        got = find_label_embedding(dd, self.D, partial or None, injective=False)
        if got is None:
            self._give_up(f"{where}: no instance in the current description")
            return
        nm, _am = got
        seeded = 0
        for x in sorted(dd.shape.nodes):
            for y in sorted(dd.shape.nodes):
                paths = dd.shape.simple_paths(x, y)
                for p_i in range(len(paths)):
                    for q_i in range(p_i + 1, len(paths)):
                        p, q = paths[p_i], paths[q_i]
                        self.th.record_equality(
                            self.L.obj,
                            self.L.proj(nm[x])
                            + self.th.gens(dd.arrow_label[a] for a in p),
                            self.L.proj(nm[x])
                            + self.th.gens(dd.arrow_label[a] for a in q),
                            "DIAG",
                            f"{st.name}@use",
                        )
                        seeded += 1
        self.steps.append(f"{where}: instance at {sorted(nm.values())}, {seeded} equalities")

    def attach_module(self, st: AttachModule) -> None:
        where = f"attach module {st.name}"
        if st.name not in self.modules:
            raise PfError(f"{where}: no such module")
        factory = self.modules[st.name]
        mod: ModuleTemplate = factory(self.sketch, self.D, st.bind)
        try:
            expanded = expand_module(self.D, mod, st.bind)
        except Exception as e:
            raise PfError(f"{where}: {e}") from e
        new_nodes = set(expanded.shape.nodes) - self.D.shape.nodes
        new_arrows = set(expanded.shape.arrows) - set(self.D.shape.arrows)
        self.steps.append(
            f"{where}: {len(new_nodes)} nodes, {len(new_arrows)} arrows to place"
        )
        while new_nodes or new_arrows:
            progress = False
            for v in sorted(new_nodes):
                unit_in = {
                    a
                    for a in new_arrows
                    if expanded.shape.arrows[a][1] == v
                    and expanded.shape.arrows[a][0] in self.D.shape.nodes
                }
                unit_out = {
                    a
                    for a in new_arrows
                    if expanded.shape.arrows[a][0] == v
                    and expanded.shape.arrows[a][1] in self.D.shape.nodes
                }
                unit: set[str] | None = None
                if unit_in and not unit_out:
                    unit = unit_in
                elif unit_out and not unit_in:
                    unit = unit_out
                elif unit_in:
                    unit = unit_in
                if unit is None:
                    continue
                big = subdiagram(
                    expanded,
                    self.D.shape.nodes | {v},
                    set(self.D.shape.arrows) | unit,
                )
                if self._commit(big, f"{where}/{v}"):
                    new_nodes.discard(v)
                    new_arrows -= unit
                    progress = True
                else:
                    return
            for a in sorted(new_arrows):
                s, t = expanded.shape.arrows[a]
                if s not in self.D.shape.nodes or t not in self.D.shape.nodes:
                    continue
                big = subdiagram(
                    expanded, self.D.shape.nodes, set(self.D.shape.arrows) | {a}
                )
                if self._commit(big, f"{where}/{a}"):
                    new_arrows.discard(a)
                    progress = True
                else:
                    return
            if not progress:
                self._give_up(
                    f"{where}: not dominated, cannot place "
                    f"{sorted(new_nodes)} / {sorted(new_arrows)}"
                )
                return

    def restrict(self, st: Restrict) -> None:
        if st.to_claim:
            where = "restrict to claim"
            target = self.pf.claim
            if not is_subdiagram(target, self.D):
                self._give_up(
                    f"{where}: claim is not contained in the current description"
                )
                return
        else:
            where = "restrict"
            try:
                target = subdiagram(self.D, set(st.nodes), set(st.arrows))
            except Exception as e:
                raise PfError(f"{where}: {e}") from e
        L2 = self.th.limit(target)
        try:
            t = self.th.fillin(
                L2,
                self.L.obj,
                {n: self.L.proj(n) for n in target.shape.nodes},
                detail=where,
            )
        except TheoryError as e:
            self._give_up(f"{where}: {e}")
            return
        self.verif = self.verif + t
        self.D = target
        self.L = L2
        self.steps.append(where)

    # -- driving ------------------------------------------------------

    def run(self, steps: list[Step]) -> Certificate:
        for st in steps:
            if self.failed:
                break
            if isinstance(st, ExtendLimit):
                self.extend_limit(st)
            elif isinstance(st, ExtendArrow):
                self.extend_arrow(st)
            elif isinstance(st, ExtendCocone):
                self.extend_cocone(st)
            elif isinstance(st, UseDiagram):
                self.use_diagram(st)
            elif isinstance(st, AttachModule):
                self.attach_module(st)
            elif isinstance(st, Restrict):
                self.restrict(st)
            else:
                raise PfError(f"unknown step {st!r}")
        if not self.failed and not self._claim_reached():
            if is_subdiagram(self.pf.claim, self.D):
                self.restrict(Restrict(to_claim=True))
            else:
                self._give_up("script ends before the claim is reached")
        if not self.failed:
            self._check_workspace_compat()
        status = "unknown" if self.failed else "deducible"
        return Certificate(
            pf=self.pf,
            status=status,
            verif=self.verif,
            steps=self.steps,
            obligations=self.obligations,
            trace=list(self.th.trace),
        )

    def _claim_reached(self) -> bool:
        c = self.pf.claim
        return (
            self.D.shape.nodes == c.shape.nodes
            and set(self.D.shape.arrows) == set(c.shape.arrows)
            and all(self.D.node_label[n] == c.node_label[n] for n in c.shape.nodes)
            and all(self.D.arrow_label[a] == c.arrow_label[a] for a in c.shape.arrows)
        )

    def _check_workspace_compat(self) -> None:
        for w in sorted(self.pf.wksp.shape.nodes):
            h = self.pf.hyp_map[w]
            c = self.pf.claim_map[w]
            if not self.th.arrows_equal(
                self.L0.obj,
                self.verif + self.L.proj(c),
                self.L0.proj(h),
            ):
                self._give_up(
                    f"workspace node {w!r}: transported value is not provably "
                    f"the original one"
                )
                return


def check_pf(
    pf: PF,
    script,
    *,
    depth: int = 6,
    modules=None,
) -> CheckResult:
    """Replay a script over a potential factorization.

    Returns a result whose status is ``deducible`` when every step
    checks and the claim is reached, ``unknown`` when some side
    condition stays underivable, and ``ill-formed`` for scripts or
    factorizations that do not parse or do not typecheck.
    """
    try:
        steps = parse_script(script) if isinstance(script, str) else list(script)
        checker = _Checker(pf, depth=depth, modules=modules)
        cert = checker.run(steps)
    except PfError as e:
        return CheckResult("ill-formed", None, [str(e)])
    msgs = list(cert.obligations)
    return CheckResult(cert.status, cert, msgs)


# -- composing certificates ------------------------------------------


def chain_certificates(c1: Certificate, c2: Certificate, *, depth: int = 6) -> Certificate:
    """Compose two certificates along an embedding of descriptions.

    The second hypothesis must embed into the first claim; the
    transport between the two limits is a fill-in, and nothing is
    re-proved.  Identical workspaces are aligned by the maps
    themselves; otherwise an embedding is searched for and the result
    tracks the pullback of the two workspaces along it, so only the
    part both certificates speak about survives.
    """
    if c1.pf.sketch.name != c2.pf.sketch.name:
        raise PfError("certificates live over different sketches")
    w1, w2 = c1.pf.wksp, c2.pf.wksp
    same = (
        w1.shape.nodes == w2.shape.nodes
        and set(w1.shape.arrows) == set(w2.shape.arrows)
        and all(w1.node_label[n] == w2.node_label[n] for n in w1.shape.nodes)
        and all(w1.arrow_label[a] == w2.arrow_label[a] for a in w1.shape.arrows)
    )
    partial = (
        {c2.pf.hyp_map[w]: c1.pf.claim_map[w] for w in w1.shape.nodes}
        if same
        else {}
    )
    got = find_label_embedding(c2.pf.hyp, c1.pf.claim, partial, injective=True)
    if got is None:
        raise PfError("second hypothesis does not embed into the first claim")
    nm, _am = got
    if same:
        wksp = c1.pf.wksp
        hyp_map = dict(c1.pf.hyp_map)
        claim_map = dict(c2.pf.claim_map)
    else:
        rev = {nm[c2.pf.hyp_map[w]]: w for w in w2.shape.nodes}
        keep = {
            w: rev[c1.pf.claim_map[w]]
            for w in w1.shape.nodes
            if c1.pf.claim_map[w] in rev
        }
        w2sig = {(s, t, w2.arrow_label[a]) for a, (s, t) in w2.shape.arrows.items()}
        shape = Graph(set(keep), {})
        wksp = Diagram(
            shape,
            w1.target,
            {w: w1.node_label[w] for w in keep},
            {},
            {w: w1.annot[w] for w in keep if w in w1.annot},
        )
        for a, (s, t) in w1.shape.arrows.items():
            if (
                s in keep
                and t in keep
                and (keep[s], keep[t], w1.arrow_label[a]) in w2sig
            ):
                shape.add_arrow(a, s, t)
                wksp.arrow_label[a] = w1.arrow_label[a]
        wksp.check()
        hyp_map = {w: c1.pf.hyp_map[w] for w in keep}
        claim_map = {w: c2.pf.claim_map[keep[w]] for w in keep}
    th = Theory(c1.pf.sketch, depth=depth)
    Lc1 = th.limit(c1.pf.claim)
    Lh2 = th.limit(c2.pf.hyp)
    T = th.fillin(
        Lh2,
        Lc1.obj,
        {n: Lc1.proj(nm[n]) for n in c2.pf.hyp.shape.nodes},
        detail="chain",
    )
    pf = PF(
        sketch=c1.pf.sketch,
        wksp=wksp,
        hyp=c1.pf.hyp,
        claim=c2.pf.claim,
        hyp_map=hyp_map,
        claim_map=claim_map,
    )
    pf.check()
    status = "deducible" if (c1.status, c2.status) == ("deducible",) * 2 else "unknown"
    return Certificate(
        pf=pf,
        status=status,
        verif=c1.verif + T + c2.verif,
        steps=c1.steps + [f"chain at {sorted(nm.values())}"] + c2.steps,
        obligations=c1.obligations + c2.obligations,
        trace=list(th.trace),
    )


def _prefix_diagram(d: Diagram, pre: str) -> Diagram:
    return d.relabel_shape(
        {n: pre + n for n in d.shape.nodes},
        {a: pre + a for a in d.shape.arrows},
    )


def _union_diagram(d1: Diagram, d2: Diagram) -> Diagram:
    out = d1.copy()
    for n in d2.shape.nodes:
        out.shape.add_node(n)
        out.node_label[n] = d2.node_label[n]
        if n in d2.annot:
            out.annot[n] = d2.annot[n]
    for a, (s, t) in d2.shape.arrows.items():
        out.shape.add_arrow(a, s, t)
        out.arrow_label[a] = d2.arrow_label[a]
    out.check()
    return out


def product_certificates(c1: Certificate, c2: Certificate, *, depth: int = 6) -> Certificate:
    """Prove two factorizations side by side over disjoint descriptions."""
    if c1.pf.sketch.name != c2.pf.sketch.name:
        raise PfError("certificates live over different sketches")
    a, b = "a.", "b."
    wk = _union_diagram(_prefix_diagram(c1.pf.wksp, a), _prefix_diagram(c2.pf.wksp, b))
    hyp = _union_diagram(_prefix_diagram(c1.pf.hyp, a), _prefix_diagram(c2.pf.hyp, b))
    claim = _union_diagram(
        _prefix_diagram(c1.pf.claim, a), _prefix_diagram(c2.pf.claim, b)
    )
    hyp_map = {a + w: a + c1.pf.hyp_map[w] for w in c1.pf.wksp.shape.nodes}
    hyp_map.update({b + w: b + c2.pf.hyp_map[w] for w in c2.pf.wksp.shape.nodes})
    claim_map = {a + w: a + c1.pf.claim_map[w] for w in c1.pf.wksp.shape.nodes}
    claim_map.update({b + w: b + c2.pf.claim_map[w] for w in c2.pf.wksp.shape.nodes})
    th = Theory(c1.pf.sketch, depth=depth)
    Lh = th.limit(hyp)
    Lc = th.limit(claim)
    comps: dict[str, tuple] = {}
    for pre, cert in ((a, c1), (b, c2)):
        Lh_i = th.limit(cert.pf.hyp)
        Lc_i = th.limit(cert.pf.claim)
        r = th.fillin(
            Lh_i,
            Lh.obj,
            {n: Lh.proj(pre + n) for n in cert.pf.hyp.shape.nodes},
            detail=f"product/{pre}restrict",
        )
        for n in cert.pf.claim.shape.nodes:
            comps[pre + n] = r + cert.verif + Lc_i.proj(n)
    verif = th.fillin(Lc, Lh.obj, comps, detail="product")
    status = "deducible" if (c1.status, c2.status) == ("deducible",) * 2 else "unknown"
    pf = PF(c1.pf.sketch, wk, hyp, claim, hyp_map, claim_map)
    return Certificate(
        pf=pf,
        status=status,
        verif=verif,
        steps=["product of certificates"] + c1.steps + c2.steps,
        obligations=c1.obligations + c2.obligations,
        trace=list(th.trace),
    )


# -- independent re-checking -----------------------------------------


def _replay_fill(th: Theory, f: Fill) -> None:
    for iid, comp in f.components:
        if isinstance(f.target, LimitOf):
            cod = th._atom_cod(comp[-1]) if comp else f.source
            if not isinstance(cod, Base):
                raise PfError(f"cannot recover the target of component {iid!r}")
            pa: tuple = (Proj(f.target.key, iid, cod.node),)
        else:
            cone = th._vertex_cone.get(f.target.node)
            if cone is None or iid not in cone.projections:
                raise PfError(f"fill-in targets no cone at {f.target.node!r}")
            pa = (Gen(cone.projections[iid]),)
        th.record_equality(f.source, (f,) + pa, comp, "CFIA", f"replay:{iid}")


def verify_certificate(cert: Certificate, *, depth: int = 6) -> bool:
    """Re-check a certificate's factorization from scratch.

    A fresh engine only trusts the sketch; each fill-in atom inside the
    verification arrow is replayed by re-seeding its component
    triangles, innermost first, and then every workspace projection is
    re-derived through the factorization.  Returns whether all of them
    check.
    """
    cert.pf.check()
    th = Theory(cert.pf.sketch, depth=depth)
    seen: set = set()

    def replay(atoms: tuple) -> None:
        for at in atoms:
            if isinstance(at, Fill) and at not in seen:
                seen.add(at)
                for _iid, comp in at.components:
                    replay(comp)
                _replay_fill(th, at)

    replay(cert.verif)
    Lh = th.limit(cert.pf.hyp)
    Lc = th.limit(cert.pf.claim)
    for w in cert.pf.wksp.shape.nodes:
        if not th.arrows_equal(
            Lh.obj,
            cert.verif + Lc.proj(cert.pf.claim_map[w]),
            Lh.proj(cert.pf.hyp_map[w]),
        ):
            return False
    return True
