"""Deduction trees for equational reasoning, compiled to certificates.

Seven node kinds make up a tree: premises, reflexivity, symmetry,
transitivity, concretion (dropping a variable no side uses, provided
its type is inhabited), abstraction (adjoining a fresh variable) and
substitutivity.  ``check_deduction`` validates the shape and all side
conditions with located reasons; ``compile_deduction`` turns a valid
tree into one certificate over an extension of the finite-product
sketch, composing leaf certificates upward: chaining for one-premise
rules, disjoint product followed by a chain for two-premise ones.

Every equation becomes a small gadget in the workspace: a
composable-pair node whose composite is pinned twice, once freely to
the left side and once, as the actual assertion, to the right.  A
premise ships with both pins; a rule step adds exactly the missing
one, which the theory engine must close from what the workspace
already provides: congruence along the pinned composites, uniqueness
of tuples over the distinguished cones, and the retraction between
spans and their pairings.  Two-premise steps work on doubled
workspaces, kept provably in step by a classifying node that names
the whole configuration, so facts proved in one copy transfer to the
other.
"""

from __future__ import annotations

from dataclasses import dataclass

from .builtins import builtin_sketch
from .diagrams import Diagram, build_diagram
from .equational import (
    App,
    Coord,
    EqError,
    Equation,
    FPArrow,
    Signature,
    Var,
    Variable,
    arr_of,
    enumerate_algebras,
    equation_type,
    fp_compose,
    fp_equal,
    inhabited,
    insert_arrow,
    least_constant_term,
    make_equation,
    parse_variable,
    render_expr,
    render_fparrow,
    satisfies_equation,
    subst_expr,
    term_metadata,
)
from .fixtures import square_diagonal_pf, square_diagonal_script
from .forms import (
    PF,
    Certificate,
    Form,
    chain_certificates,
    check_pf,
    product_certificates,
    syncat,
)
from .sketches import Sketch
from .theory import Theory


class DeductionError(ValueError):
    pass


RULES = ("prem", "refl", "sym", "trans", "concr", "abstr", "subst")

_ARITY = {
    "prem": 0,
    "refl": 0,
    "sym": 1,
    "trans": 2,
    "concr": 1,
    "abstr": 1,
    "subst": 2,
}
_BINDING = ("concr", "abstr", "subst")


@dataclass(frozen=True)
class Deduction:
    """One node of a deduction tree; ``eq`` is what the node concludes."""

    rule: str
    eq: Equation
    var: Variable | None = None
    subs: tuple = ()


# -- reading and writing ---------------------------------------------


def _tokens(text: str) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif c in "()":
            out.append(c)
            i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "();":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _read(toks: list[str], i: int):
    if i >= len(toks):
        raise DeductionError("unexpected end of input")
    if toks[i] == ")":
        raise DeductionError("unbalanced ')'")
    if toks[i] != "(":
        return toks[i], i + 1
    out: list = []
    i += 1
    while i < len(toks) and toks[i] != ")":
        form, i = _read(toks, i)
        out.append(form)
    if i >= len(toks):
        raise DeductionError("unbalanced '('")
    return out, i + 1


def _expr(form):
    if isinstance(form, str):
        try:
            return Var(parse_variable(form))
        except EqError as e:
            raise DeductionError(str(e)) from e
    if not form or not isinstance(form[0], str):
        raise DeductionError("an application needs a leading operation name")
    return App(form[0], tuple(_expr(a) for a in form[1:]))


def _equation(form, sig: Signature) -> Equation:
    bad = (
        not isinstance(form, list)
        or len(form) != 4
        or form[0] != "="
        or not isinstance(form[1], list)
        or form[1][:1] != ["vars"]
        or any(not isinstance(t, str) for t in form[1][1:])
    )
    if bad:
        raise DeductionError("expected (= (vars x1_1 ...) lhs rhs)")
    try:
        vs = [parse_variable(t) for t in form[1][1:]]
        return make_equation(_expr(form[2]), _expr(form[3]), vs, sig)
    except EqError as e:
        raise DeductionError(str(e)) from e


def _deduction(form, sig: Signature) -> Deduction:
    if not isinstance(form, list) or not form or not isinstance(form[0], str):
        raise DeductionError("expected (rule ...)")
    rule = form[0]
    if rule not in _ARITY:
        raise DeductionError(f"unknown rule {rule!r}")
    rest = form[1:]
    var = None
    if rule in _BINDING:
        if not rest or not isinstance(rest[0], str):
            raise DeductionError(f"{rule} needs a variable before its equation")
        try:
            var = parse_variable(rest[0])
        except EqError as e:
            raise DeductionError(str(e)) from e
        rest = rest[1:]
    want = 1 + _ARITY[rule]
    if len(rest) != want:
        raise DeductionError(
            f"{rule} takes an equation and {_ARITY[rule]} subtree(s), got {len(rest)} parts"
        )
    eq = _equation(rest[0], sig)
    subs = tuple(_deduction(f, sig) for f in rest[1:])
    return Deduction(rule, eq, var, subs)


def parse_deduction(text: str, sig: Signature) -> Deduction:
    toks = _tokens(text)
    if not toks:
        raise DeductionError("empty deduction")
    form, i = _read(toks, 0)
    if i != len(toks):
        raise DeductionError("trailing content after the deduction")
    return _deduction(form, sig)


def _eq_text(eq: Equation) -> str:
    vs = "".join(" " + v.render() for v in eq.vars)
    return f"(= (vars{vs}) {render_expr(eq.left)} {render_expr(eq.right)})"


def serialize_deduction(d: Deduction) -> str:
    def go(n: Deduction, ind: int) -> str:
        pad = "  " * ind
        head = n.rule + (f" {n.var.render()}" if n.var is not None else "")
        line = f"{pad}({head} {_eq_text(n.eq)}"
        if not n.subs:
            return line + ")"
        return line + "\n" + "\n".join(go(s, ind + 1) for s in n.subs) + ")"

    return go(d, 0) + "\n"


# -- checking --------------------------------------------------------


def _used_vars(eq: Equation, sig: Signature) -> frozenset:
    return term_metadata(eq.left, sig)[1] | term_metadata(eq.right, sig)[1]


def check_deduction(d: Deduction, sig: Signature) -> tuple[bool, list[str]]:
    """Validate a tree rule by rule; reasons carry the node's path."""
    problems: list[str] = []

    def at(path: str, msg: str) -> None:
        problems.append(f"{path}: {msg}")

    def walk(node: Deduction, path: str) -> None:
        if not isinstance(node, Deduction) or node.rule not in _ARITY:
            at(path, f"unknown rule {getattr(node, 'rule', node)!r}")
            return
        if len(node.subs) != _ARITY[node.rule]:
            at(path, f"{node.rule} takes {_ARITY[node.rule]} subtree(s)")
            return
        if (node.var is not None) != (node.rule in _BINDING):
            at(path, f"{node.rule} and its variable binding do not agree")
            return
        for k, s in enumerate(node.subs, 1):
            walk(s, f"{path}{k}/")
        eq = node.eq
        try:
            make_equation(eq.left, eq.right, eq.vars, sig)
        except EqError as e:
            at(path, str(e))
            return
        if tuple(sorted(set(eq.vars))) != eq.vars:
            at(path, "variable context is not in canonical order")
            return
        if node.rule == "refl":
            if eq.left != eq.right:
                at(path, "reflexivity needs syntactically equal sides")
        elif node.rule == "sym":
            s = node.subs[0].eq
            if s.vars != eq.vars or s.left != eq.right or s.right != eq.left:
                at(path, "conclusion is not the premise reversed")
        elif node.rule == "trans":
            s1, s2 = (s.eq for s in node.subs)
            if not (s1.vars == s2.vars == eq.vars):
                at(path, "transitivity needs one shared variable context")
            elif s1.right != s2.left:
                at(path, "the middle terms differ")
            elif s1.left != eq.left or s2.right != eq.right:
                at(path, "conclusion sides do not match the premises")
        elif node.rule == "concr":
            x = node.var
            s = node.subs[0].eq
            xt = sig.types[x.i - 1]
            if x not in s.vars:
                at(path, f"{x.render()} is not in the premise context")
            elif eq.vars != tuple(v for v in s.vars if v != x):
                at(path, "conclusion context is not the premise context less the variable")
            elif eq.left != s.left or eq.right != s.right:
                at(path, "concretion must keep both sides")
            elif x in _used_vars(eq, sig):
                at(path, f"{x.render()} still occurs in the equation")
            elif not inhabited(sig, xt):
                at(path, f"cannot drop {x.render()}: type {xt} has no closed term")
        elif node.rule == "abstr":
            x = node.var
            s = node.subs[0].eq
            if x in s.vars:
                at(path, f"{x.render()} already occurs in the premise context")
            elif eq.vars != tuple(sorted(s.vars + (x,))):
                at(path, "conclusion context is not the premise context plus the variable")
            elif eq.left != s.left or eq.right != s.right:
                at(path, "abstraction must keep both sides")
        elif node.rule == "subst":
            x = node.var
            s1, s2 = (s.eq for s in node.subs)
            if x not in s1.vars:
                at(path, f"{x.render()} is not in the first premise's context")
            elif sig.types[x.i - 1] != equation_type(s2, sig):
                at(path, f"the second premise does not have the type of {x.render()}")
            elif eq.vars != tuple(sorted((set(s1.vars) - {x}) | set(s2.vars))):
                at(path, "conclusion context is not the substituted union")
            elif eq.left != subst_expr(s1.left, x, s2.left) or eq.right != subst_expr(
                s1.right, x, s2.right
            ):
                at(path, "conclusion sides are not the substituted premise sides")

    walk(d, "/")
    return (not problems, problems)


def deduction_premises(d: Deduction) -> tuple[Equation, ...]:
    """Premise equations, left to right."""
    out: list[Equation] = []

    def walk(n: Deduction) -> None:
        if n.rule == "prem":
            out.append(n.eq)
        for s in n.subs:
            walk(s)

    walk(d)
    return tuple(out)


def holds_in_finite_algebras(d: Deduction, sig: Signature, max_size: int = 3) -> bool:
    """Conclusion true in every bounded algebra satisfying the premises."""
    prem = deduction_premises(d)
    for alg in enumerate_algebras(sig, max_size):
        if all(satisfies_equation(alg, p) for p in prem) and not satisfies_equation(
            alg, d.eq
        ):
            return False
    return True


# -- mediating arrows between variable contexts ----------------------


def _ctx_types(vs, sig: Signature) -> tuple:
    return tuple(sig.types[v.i - 1] for v in vs)


def context_projection(src_ctx, tgt_ctx, sig: Signature) -> FPArrow:
    """Forget the variables of ``src_ctx`` outside ``tgt_ctx``."""
    src = tuple(sorted(set(src_ctx)))
    tgt = tuple(sorted(set(tgt_ctx)))
    if not set(tgt) <= set(src):
        raise DeductionError("projection target is not part of the source context")
    pos = {v: k + 1 for k, v in enumerate(src)}
    return FPArrow(
        _ctx_types(src, sig),
        _ctx_types(tgt, sig),
        tuple(Coord(pos[v]) for v in tgt),
    )


def context_section(src_ctx, tgt_ctx, sig: Signature) -> FPArrow:
    """Grow ``src_ctx`` to ``tgt_ctx``, padding with least constants.

    Kept variables ride along on their own coordinates; the types of
    the padded ones must be inhabited.
    """
    src = tuple(sorted(set(src_ctx)))
    tgt = tuple(sorted(set(tgt_ctx)))
    if not set(src) <= set(tgt):
        raise DeductionError("section source is not part of the target context")
    pos = {v: k + 1 for k, v in enumerate(src)}
    body = []
    for v in tgt:
        if v in pos:
            body.append(Coord(pos[v]))
        else:
            try:
                body.append(least_constant_term(sig, sig.types[v.i - 1]))
            except EqError as e:
                raise DeductionError(str(e)) from e
    return FPArrow(_ctx_types(src, sig), _ctx_types(tgt, sig), tuple(body))


# -- workspace scaffolding -------------------------------------------


@dataclass
class _Pair:
    """Equality gadget bookkeeping: the pair node, its two side nodes,
    and the id of the deferred assertion pin."""

    node: str
    lhs: str
    rhs: str
    pin: str


class _Scaffold:
    """Accumulates workspace content for one deduction tree.

    Everything is keyed by what it denotes, so sides, corners and
    mediating arrows shared between tree nodes coincide, which is what
    lets the uniqueness passes close the rule steps later.
    """

    def __init__(self, sig: Signature):
        self.sig = sig
        self._ids: dict = {}
        self.nodes: dict[str, tuple[str, str]] = {}
        self.arrows: dict[str, tuple[str, str, str]] = {}
        self.pairs: dict = {}

    def _node(self, key, label: str, ann: str) -> str:
        got = self._ids.get(key)
        if got is None:
            got = f"n{len(self._ids) + 1}"
            self._ids[key] = got
            self.nodes[got] = (label, ann)
        return got

    def corner(self, types) -> str:
        ann = " x ".join(types) if types else "1"
        return self._node(("ob", tuple(types)), "ob", ann)

    def marrow(self, fp: FPArrow) -> str:
        src = " x ".join(fp.dom) if fp.dom else "1"
        tgt = " x ".join(fp.cod) if fp.cod else "1"
        return self._node(("ar", fp), "ar", f"{render_fparrow(fp)} : {src} -> {tgt}")

    def pair(self, lfp: FPArrow, rfp: FPArrow) -> _Pair:
        key = ("pair", lfp, rfp)
        got = self.pairs.get(key)
        if got is not None:
            return got
        nl = self.marrow(lfp)
        nr = self.marrow(rfp)
        nid = self._node(key, "ar2", f"{render_fparrow(lfp)} = {render_fparrow(rfp)}")
        self.arrows[f"{nid}.c1"] = (nid, nl, "comp")
        got = _Pair(nid, nl, nr, f"{nid}.c2")
        self.pairs[key] = got
        return got

    def transport(self, lf: FPArrow, rf: FPArrow, res: FPArrow) -> str:
        if not fp_equal(fp_compose(lf, rf), res):
            raise DeductionError("transport does not compose to its result")
        key = ("tr", lf, rf, res)
        if key in self._ids:
            return self._ids[key]
        nl = self.marrow(lf)
        nr = self.marrow(rf)
        nc = self.marrow(res)
        no = self.corner(lf.dom)
        nid = self._node(
            key, "ar2", f"{render_fparrow(lf)} after {render_fparrow(rf)}"
        )
        self.arrows[f"{nid}.l"] = (nid, nl, "lfac")
        self.arrows[f"{nid}.r"] = (nid, nr, "rfac")
        self.arrows[f"{nid}.o"] = (nid, no, "ar2_cone.ob")
        self.arrows[f"{nid}.c"] = (nid, nc, "comp")
        return nid

    def filler(self, lf: FPArrow, rf: FPArrow, res: FPArrow) -> str:
        skey = ("span", lf, rf)
        sp = self._ids.get(skey)
        if sp is None:
            nl = self.marrow(lf)
            nr = self.marrow(rf)
            no = self.corner(lf.dom)
            sp = self._node(
                skey,
                "bicone",
                f"span of {render_fparrow(lf)} and {render_fparrow(rf)}",
            )
            self.arrows[f"{sp}.l"] = (sp, nl, "lproj")
            self.arrows[f"{sp}.r"] = (sp, nr, "rproj")
            self.arrows[f"{sp}.o"] = (sp, no, "bicone_cone.ob")
        key = ("fill", lf, rf)
        if key in self._ids:
            return self._ids[key]
        nc = self.marrow(res)
        nid = self._node(
            key,
            "filldiag",
            f"pairing of {render_fparrow(lf)} and {render_fparrow(rf)}",
        )
        self.arrows[f"{nid}.s"] = (nid, sp, "srccone")
        self.arrows[f"{nid}.f"] = (nid, nc, "fillar")
        return nid

    def spine(self, ins: FPArrow) -> None:
        """Build the insertion one paired coordinate at a time."""
        n = len(ins.cod)
        if n <= 1:
            self.marrow(ins)
            return
        prev = FPArrow(ins.dom, ins.cod[:1], ins.body[:1])
        self.marrow(prev)
        for k in range(2, n + 1):
            ck = FPArrow(ins.dom, (ins.cod[k - 1],), (ins.body[k - 1],))
            step = FPArrow(ins.dom, ins.cod[:k], ins.body[:k])
            self.filler(prev, ck, step)
            prev = step


def _gather(node: Deduction, sc: _Scaffold) -> None:
    sig = sc.sig
    for s in node.subs:
        _gather(s, sc)
    eq = node.eq
    lfp = arr_of(eq.left, eq.vars, sig)
    rfp = arr_of(eq.right, eq.vars, sig)
    sc.pair(lfp, rfp)
    if node.rule in ("concr", "abstr"):
        sub = node.subs[0].eq
        make = context_section if node.rule == "concr" else context_projection
        med = make(eq.vars, sub.vars, sig)
        for e in (eq.left, eq.right):
            sc.transport(arr_of(e, sub.vars, sig), med, arr_of(e, eq.vars, sig))
    elif node.rule == "subst":
        s1, s2 = (s.eq for s in node.subs)
        x = node.var
        union = tuple(sorted(set(s1.vars) | set(s2.vars)))
        if union != s1.vars:
            p1 = context_projection(union, s1.vars, sig)
            for e in (s1.left, s1.right):
                sc.transport(arr_of(e, s1.vars, sig), p1, arr_of(e, union, sig))
        if eq.vars != s2.vars:
            p2 = context_projection(eq.vars, s2.vars, sig)
            for e in (s2.left, s2.right):
                sc.transport(arr_of(e, s2.vars, sig), p2, arr_of(e, eq.vars, sig))
        ins1 = insert_arrow(s2.left, x, s1.vars, s2.vars, sig)
        ins2 = insert_arrow(s2.right, x, s1.vars, s2.vars, sig)
        sc.spine(ins1)
        sc.spine(ins2)
        sc.transport(arr_of(s1.left, union, sig), ins1, lfp)
        sc.transport(arr_of(s1.right, union, sig), ins2, rfp)


# -- compiling a tree ------------------------------------------------


@dataclass
class CompiledDeduction:
    """A deduction together with its certificate and where to look.

    ``conclusion`` names the equality gadget in the final claim: the
    pair node and the two side nodes its composite is pinned to.
    """

    deduction: Deduction
    sketch: Sketch
    form: Form
    certificate: Certificate
    conclusion: tuple[str, str, str]

    @property
    def status(self) -> str:
        return self.certificate.status


class _Compiler:
    def __init__(self, sig, sketch, wksp, pairs, depth):
        self.sig = sig
        self.sketch = sketch
        self.wksp = wksp
        self.pairs = pairs
        self.depth = depth
        self._idmap = {n: n for n in wksp.shape.nodes}

    def _pair_of(self, eq: Equation) -> _Pair:
        lfp = arr_of(eq.left, eq.vars, self.sig)
        rfp = arr_of(eq.right, eq.vars, self.sig)
        return self.pairs[("pair", lfp, rfp)]

    def _with_pin(self, dia: Diagram, pre: str, entry: _Pair) -> Diagram:
        out = dia.copy()
        out.shape.add_arrow(pre + entry.pin, pre + entry.node, pre + entry.rhs)
        out.arrow_label[pre + entry.pin] = "comp"
        out.check()
        return out

    def _checked(self, pf: PF, script: str, why: str) -> Certificate:
        got = check_pf(pf, script, depth=self.depth)
        if got.certificate is None:
            raise DeductionError(f"{why}: " + "; ".join(got.messages))
        return got.certificate

    def build(self, node: Deduction) -> tuple[Certificate, str, _Pair]:
        entry = self._pair_of(node.eq)
        if node.rule == "prem":
            hyp = self._with_pin(self.wksp, "", entry)
            pf = PF(self.sketch, self.wksp, hyp, hyp, dict(self._idmap), dict(self._idmap))
            return self._checked(pf, "", "premise"), "", entry
        if node.rule == "refl":
            claim = self._with_pin(self.wksp, "", entry)
            pf = PF(
                self.sketch, self.wksp, self.wksp, claim,
                dict(self._idmap), dict(self._idmap),
            )
            script = f"extend composite {entry.pin}=comp : {entry.node} -> {entry.rhs}\n"
            return self._checked(pf, script, "reflexivity"), "", entry
        if node.rule in ("sym", "concr", "abstr"):
            sub, pre, _ = self.build(node.subs[0])
            return self._step(sub, pre, entry, node.rule)
        left, pre_l, _ = self.build(node.subs[0])
        right, _, _ = self.build(node.subs[1])
        both = product_certificates(left, right, depth=self.depth)
        return self._step(both, "a." + pre_l, entry, node.rule)

    def _step(self, cert, pre, entry, why) -> tuple[Certificate, str, _Pair]:
        pin = pre + entry.pin
        if pin in cert.pf.claim.shape.arrows:
            # the step concludes something already present, nothing to add
            return cert, pre, entry
        claim = self._with_pin(cert.pf.claim, pre, entry)
        pf = PF(
            self.sketch,
            cert.pf.wksp,
            cert.pf.claim,
            claim,
            dict(cert.pf.claim_map),
            dict(cert.pf.claim_map),
        )
        script = f"extend composite {pin}=comp : {pre + entry.node} -> {pre + entry.rhs}\n"
        step = self._checked(pf, script, why)
        return chain_certificates(cert, step, depth=self.depth), pre, entry


def compile_deduction(
    d: Deduction, sig: Signature, *, depth: int = 6, name: str = "ded"
) -> CompiledDeduction:
    """Compile a checked tree into one certificate.

    Premises become identity factorizations over the shared workspace,
    reflexivity adds its duplicate pin by script, one-premise rules
    chain the subtree's certificate with a one-step rule certificate,
    and two-premise rules first take the disjoint product of both
    subtrees, then chain.  The returned conclusion ids locate the
    concluded equation inside the final claim.
    """
    ok, problems = check_deduction(d, sig)
    if not ok:
        raise DeductionError("; ".join(problems))
    sc = _Scaffold(sig)
    _gather(d, sc)
    base = builtin_sketch("FinProd")
    desc = build_diagram(base.graph, dict(sc.nodes), dict(sc.arrows))
    form = Form(name, base, desc)
    sk2 = syncat(form)
    wnodes: dict = dict(sc.nodes)
    warrows: dict = dict(sc.arrows)
    wnodes["w.one"] = ("one", "anchor")
    wnodes["w.t"] = (f"{name}.type", "the named workspace instance")
    warrows["w.name"] = ("w.one", "w.t", name)
    for nid in sc.nodes:
        warrows[f"w.t.{nid}"] = ("w.t", nid, f"{name}.type_cone.{nid}")
    wksp = build_diagram(sk2.graph, wnodes, warrows)
    comp = _Compiler(sig, sk2, wksp, sc.pairs, depth)
    cert, pre, entry = comp.build(d)
    conclusion = (pre + entry.node, pre + entry.lhs, pre + entry.rhs)
    return CompiledDeduction(d, sk2, form, cert, conclusion)


# -- single rule steps as standalone factorizations ------------------


def _corner_ann(types) -> str:
    return " x ".join(types) if types else "1"


def _diagonal_certificate(step: Deduction, sig: Signature, depth: int) -> Certificate:
    cat = builtin_sketch("Cat")
    ann = render_fparrow(arr_of(step.eq.left, step.eq.vars, sig))
    wksp = build_diagram(cat.graph, {"e1": ("ar", ann)}, {})
    hyp = build_diagram(cat.graph, {"e1": ("ar", ann)}, {})
    claim = build_diagram(cat.graph, {"e1": ("ar", ann), "e2": ("ar", ann)}, {})
    pf = PF(cat, wksp, hyp, claim, {"e1": "e1"}, {"e1": "e1"})
    pf.check()
    th = Theory(cat, depth=depth)
    lh = th.limit(hyp)
    lc = th.limit(claim)
    verif = th.fillin(
        lc, lh.obj, {"e1": lh.proj("e1"), "e2": lh.proj("e1")}, detail="diagonal"
    )
    return Certificate(
        pf, "deducible", verif, ["duplicate along the diagonal"], [], list(th.trace)
    )


def _swap_certificate(step: Deduction, sig: Signature, depth: int) -> Certificate:
    cat = builtin_sketch("Cat")
    sub = step.subs[0].eq
    la = render_fparrow(arr_of(sub.left, sub.vars, sig))
    ra = render_fparrow(arr_of(sub.right, sub.vars, sig))
    wksp = build_diagram(cat.graph, {"e1": ("ar", la), "e2": ("ar", ra)}, {})
    hyp = build_diagram(cat.graph, {"e1": ("ar", la), "e2": ("ar", ra)}, {})
    claim = build_diagram(cat.graph, {"e1": ("ar", ra), "e2": ("ar", la)}, {})
    pf = PF(cat, wksp, hyp, claim, {"e1": "e1", "e2": "e2"}, {"e1": "e2", "e2": "e1"})
    pf.check()
    th = Theory(cat, depth=depth)
    lh = th.limit(hyp)
    lc = th.limit(claim)
    verif = th.fillin(
        lc, lh.obj, {"e1": lh.proj("e2"), "e2": lh.proj("e1")}, detail="swap"
    )
    return Certificate(pf, "deducible", verif, ["swap the pair"], [], list(th.trace))


def _square_assignment(step: Deduction, sig: Signature) -> dict[str, str]:
    eq = step.eq
    lfp = arr_of(eq.left, eq.vars, sig)
    rfp = arr_of(eq.right, eq.vars, sig)
    tau = equation_type(eq, sig)
    if step.rule == "trans":
        mid = arr_of(step.subs[0].eq.right, eq.vars, sig)
        corner = _corner_ann(lfp.dom)
        return {
            "nA": corner, "nC": corner, "nB": tau, "nD": tau,
            "nf": "id", "nk": "id",
            "nx": render_fparrow(mid),
            "nh": render_fparrow(lfp),
            "ng": render_fparrow(rfp),
            "ncomp": render_fparrow(lfp),
        }
    if step.rule in ("concr", "abstr"):
        sub = step.subs[0].eq
        make = context_section if step.rule == "concr" else context_projection
        f = make(eq.vars, sub.vars, sig)
        xl = arr_of(eq.left, sub.vars, sig)
        gr = arr_of(eq.right, sub.vars, sig)
        for premise_side, conclusion_side in ((xl, lfp), (gr, rfp)):
            if not fp_equal(fp_compose(premise_side, f), conclusion_side):
                raise DeductionError("context mediator does not commute")
        return {
            "nA": _corner_ann(f.dom), "nC": _corner_ann(f.cod),
            "nB": tau, "nD": tau,
            "nf": render_fparrow(f),
            "nx": render_fparrow(xl),
            "nh": render_fparrow(lfp),
            "nk": "id",
            "ng": render_fparrow(gr),
            "ncomp": render_fparrow(lfp),
        }
    s1, s2 = (s.eq for s in step.subs)
    union = tuple(sorted(set(s1.vars) | set(s2.vars)))
    ins1 = insert_arrow(s2.left, step.var, s1.vars, s2.vars, sig)
    ins2 = insert_arrow(s2.right, step.var, s1.vars, s2.vars, sig)
    bl = arr_of(s1.left, union, sig)
    br = arr_of(s1.right, union, sig)
    for big_side, ins, conclusion_side in ((bl, ins1, lfp), (br, ins2, rfp)):
        if not fp_equal(fp_compose(big_side, ins), conclusion_side):
            raise DeductionError("insertion does not land on the conclusion side")
    return {
        "nA": _corner_ann(ins1.dom), "nC": _corner_ann(ins1.cod),
        "nB": _corner_ann(ins1.cod), "nD": tau,
        "nf": render_fparrow(ins1),
        "nx": "id",
        "nh": render_fparrow(ins2),
        "nk": render_fparrow(br),
        "ng": render_fparrow(bl),
        "ncomp": render_fparrow(lfp),
    }


def rule_factorization(step: Deduction, sig: Signature, *, depth: int = 6) -> Certificate:
    """The factorization of one rule application, premises to conclusion.

    Reflexivity duplicates its side along a diagonal, symmetry swaps a
    pair of parallel arrows, and the remaining four rules instantiate
    the square-with-diagonal configuration, replayed by script; the
    node annotations say which arrows play which role.
    """
    ok, problems = check_deduction(step, sig)
    if not ok:
        raise DeductionError("; ".join(problems))
    if step.rule == "prem":
        raise DeductionError("a premise is not a rule application")
    if step.rule == "refl":
        return _diagonal_certificate(step, sig, depth)
    if step.rule == "sym":
        return _swap_certificate(step, sig, depth)
    assign = _square_assignment(step, sig)
    pf = square_diagonal_pf()
    for d in (pf.wksp, pf.hyp, pf.claim):
        for nid, ann in assign.items():
            if nid in d.shape.nodes:
                d.annot[nid] = ann
    got = check_pf(pf, square_diagonal_script(), depth=depth)
    if got.certificate is None:
        raise DeductionError(f"{step.rule}: " + "; ".join(got.messages))
    return got.certificate
