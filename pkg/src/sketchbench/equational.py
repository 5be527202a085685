"""Multisorted equational signatures, terms, and product-arrow forms.

Expressions compile to arrows between finite products of types.  The
arrow of a term factors as a generalized diagonal picking coordinates,
a regrouping stage, and the operation tree itself; here arrows are
kept in a flat normal form, a list of expressions over coordinate
variables, which makes equality decidable by plain comparison.

Substitution is implemented twice, by structural recursion and by
composing with an insertion arrow, and the two must agree.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

from .diagrams import build_diagram
from .finset import FinSetModel
from .sketches import Cone, Sketch, validate_sketch
from .graphs import Graph


class EqError(ValueError):
    pass


# -- signatures ------------------------------------------------------


class Op(NamedTuple):
    name: str
    inp: tuple
    outp: str


@dataclass(frozen=True)
class Signature:
    types: tuple
    ops: tuple  # of Op, sorted by name

    def op(self, name: str) -> Op:
        for o in self.ops:
            if o.name == name:
                return o
        raise EqError(f"unknown operation {name!r}")

    def type_index(self, t: str) -> int:
        return self.types.index(t) + 1

    def check(self) -> None:
        if len(set(self.types)) != len(self.types):
            raise EqError("duplicate type")
        names = [o.name for o in self.ops]
        if len(set(names)) != len(names):
            raise EqError("duplicate operation name")
        for o in self.ops:
            for t in o.inp + (o.outp,):
                if t not in self.types:
                    raise EqError(f"operation {o.name!r} uses unknown type {t!r}")


def make_signature(types, ops) -> Signature:
    sig = Signature(tuple(types), tuple(sorted((Op(n, tuple(i), o) for n, i, o in ops))))
    sig.check()
    return sig


def parse_signature(text: str) -> Signature:
    """``type s1 s2; op f: s1 s2 -> s1; op c: -> s2;``"""
    types: list[str] = []
    ops: list[tuple] = []
    for stmt in text.replace("\n", " ").split(";"):
        stmt = stmt.strip()
        if not stmt or stmt.startswith("#"):
            continue
        if stmt.startswith("type "):
            types.extend(stmt[5:].split())
            continue
        if stmt.startswith("op "):
            head, _, tail = stmt[3:].partition(":")
            name = head.strip()
            lhs, arrow, rhs = tail.partition("->")
            if not arrow:
                raise EqError(f"operation {name!r} lacks '->'")
            ops.append((name, tuple(lhs.split()), rhs.strip()))
            continue
        raise EqError(f"cannot parse {stmt!r}")
    return make_signature(types, ops)


def serialize_signature(sig: Signature) -> str:
    lines = ["type " + " ".join(sig.types) + ";"]
    for o in sig.ops:
        lines.append(f"op {o.name}: {' '.join(o.inp)} -> {o.outp};")
    return "\n".join(lines) + "\n"


# -- variables and expressions ---------------------------------------


class Variable(NamedTuple):
    """The j-th variable of the i-th type; ordered by (i, j)."""

    i: int
    j: int

    def render(self) -> str:
        return f"x{self.i}_{self.j}"


class Var(NamedTuple):
    v: Variable


class Coord(NamedTuple):
    """Coordinate variable of a normal form; 1-based."""

    k: int


class App(NamedTuple):
    op: str
    args: tuple


def parse_variable(tok: str) -> Variable:
    if not tok.startswith("x"):
        raise EqError(f"bad variable {tok!r}")
    i, _, j = tok[1:].partition("_")
    try:
        return Variable(int(i), int(j))
    except ValueError:
        raise EqError(f"bad variable {tok!r}") from None


def parse_sexpr(text: str):
    """One s-expression: ``(f x1_1 (g x1_2 x1_1) x2_1)`` or a variable."""
    toks = text.replace("(", " ( ").replace(")", " ) ").split()

    def walk(k: int):
        if toks[k] == "(":
            if k + 1 >= len(toks) or toks[k + 1] in ("(", ")"):
                raise EqError("operation name expected after '('")
            op = toks[k + 1]
            args = []
            k += 2
            while k < len(toks) and toks[k] != ")":
                node, k = walk(k)
                args.append(node)
            if k >= len(toks):
                raise EqError("unbalanced '('")
            return App(op, tuple(args)), k + 1
        if toks[k] == ")":
            raise EqError("unexpected ')'")
        return Var(parse_variable(toks[k])), k + 1

    if not toks:
        raise EqError("empty expression")
    node, k = walk(0)
    if k != len(toks):
        raise EqError(f"trailing tokens in {text!r}")
    return node


def render_expr(e) -> str:
    if isinstance(e, Var):
        return e.v.render()
    if isinstance(e, Coord):
        return f"p{e.k}"
    if isinstance(e, App):
        if not e.args:
            return f"({e.op})"
        return f"({e.op} {' '.join(render_expr(a) for a in e.args)})"
    raise EqError(f"bad expression {e!r}")


def expr_type(e, sig: Signature) -> str:
    if isinstance(e, Var):
        if not 1 <= e.v.i <= len(sig.types):
            raise EqError(f"variable {e.v.render()} has no type")
        return sig.types[e.v.i - 1]
    if isinstance(e, App):
        op = sig.op(e.op)
        if len(e.args) != len(op.inp):
            raise EqError(f"{e.op} expects {len(op.inp)} arguments")
        for a, want in zip(e.args, op.inp):
            got = expr_type(a, sig)
            if got != want:
                raise EqError(f"argument of {e.op}: {got} where {want} expected")
        return op.outp
    raise EqError(f"bad expression {e!r}")


def term_metadata(e, sig: Signature):
    """Variable list in appearance order, its set, types, output type."""
    out_type = expr_type(e, sig)
    var_list: list[Variable] = []

    def walk(x) -> None:
        if isinstance(x, Var):
            var_list.append(x.v)
        elif isinstance(x, App):
            for a in x.args:
                walk(a)

    walk(e)
    type_list = tuple(sig.types[v.i - 1] for v in var_list)
    return tuple(var_list), frozenset(var_list), type_list, out_type


# -- terms and equations ---------------------------------------------


@dataclass(frozen=True)
class Term:
    expr: object
    vars: tuple  # Variables sorted by (i, j)
    type: str


def make_term(e, vs, sig: Signature) -> Term:
    _, used, _, t = term_metadata(e, sig)
    vs = tuple(sorted(set(vs)))
    if not used <= set(vs):
        missing = ", ".join(v.render() for v in sorted(used - set(vs)))
        raise EqError(f"term drops used variables: {missing}")
    return Term(e, vs, t)


def input_types(t: Term, sig: Signature) -> tuple:
    return tuple(sig.types[v.i - 1] for v in t.vars)


@dataclass(frozen=True)
class Equation:
    vars: tuple
    left: object
    right: object


def make_equation(l, r, vs, sig: Signature) -> Equation:
    tl = expr_type(l, sig)
    tr = expr_type(r, sig)
    if tl != tr:
        raise EqError(f"sides have types {tl} and {tr}")
    vs = tuple(sorted(set(vs)))
    used = term_metadata(l, sig)[1] | term_metadata(r, sig)[1]
    if not used <= set(vs):
        missing = ", ".join(v.render() for v in sorted(used - set(vs)))
        raise EqError(f"equation drops used variables: {missing}")
    return Equation(vs, l, r)


def most_concrete(e, sig: Signature, e2=None):
    if e2 is None:
        _, used, _, t = term_metadata(e, sig)
        return Term(e, tuple(sorted(used)), t)
    return make_equation(
        e, e2, sorted(term_metadata(e, sig)[1] | term_metadata(e2, sig)[1]), sig
    )


def equation_type(E: Equation, sig: Signature) -> str:
    return expr_type(E.left, sig)


def equation_sides(E: Equation) -> tuple[Term, Term]:
    return Term(E.left, E.vars, None), Term(E.right, E.vars, None)


# -- inhabitation ----------------------------------------------------


def inhabited_types(sig: Signature) -> frozenset:
    known: set[str] = set()
    while True:
        grew = False
        for o in sig.ops:
            if o.outp not in known and all(t in known for t in o.inp):
                known.add(o.outp)
                grew = True
        if not grew:
            return frozenset(known)


def inhabited(sig: Signature, t: str) -> bool:
    if t not in sig.types:
        raise EqError(f"unknown type {t!r}")
    return t in inhabited_types(sig)


def least_constant_term(sig: Signature, t: str):
    """Least closed expression of the type, by size then rendering."""
    best: dict[str, tuple] = {}

    def key(e):
        r = render_expr(e)
        return (len(r), r)

    while True:
        grew = False
        for o in sig.ops:
            if not all(i in best for i in o.inp):
                continue
            cand = App(o.name, tuple(best[i] for i in o.inp))
            if o.outp not in best or key(cand) < key(best[o.outp]):
                if o.outp not in best or best[o.outp] != cand:
                    old = best.get(o.outp)
                    best[o.outp] = cand
                    if old != cand:
                        grew = True
        if not grew:
            break
    if t not in best:
        raise EqError(f"type {t!r} is not inhabited")
    return best[t]


# -- flat finite-product arrows --------------------------------------


@dataclass(frozen=True)
class FPArrow:
    dom: tuple  # types
    cod: tuple  # types
    body: tuple  # expressions over Coord(1..len(dom))

    def check(self, sig: Signature) -> None:
        if len(self.body) != len(self.cod):
            raise EqError("body length disagrees with codomain")
        for e, want in zip(self.body, self.cod):
            got = _coord_type(e, self.dom, sig)
            if got != want:
                raise EqError(f"component has type {got}, wants {want}")


def _coord_type(e, dom, sig: Signature) -> str:
    if isinstance(e, Coord):
        if not 1 <= e.k <= len(dom):
            raise EqError(f"coordinate p{e.k} out of range")
        return dom[e.k - 1]
    if isinstance(e, App):
        op = sig.op(e.op)
        for a, want in zip(e.args, op.inp):
            got = _coord_type(a, dom, sig)
            if got != want:
                raise EqError(f"argument of {e.op}: {got} where {want} expected")
        return op.outp
    raise EqError(f"stray variable {e!r} in a normal form")


def fp_identity(types) -> FPArrow:
    ts = tuple(types)
    return FPArrow(ts, ts, tuple(Coord(k + 1) for k in range(len(ts))))


def _subst_coords(e, bodies: tuple):
    if isinstance(e, Coord):
        return bodies[e.k - 1]
    if isinstance(e, App):
        return App(e.op, tuple(_subst_coords(a, bodies) for a in e.args))
    raise EqError(f"bad normal form {e!r}")


def fp_compose(g: FPArrow, f: FPArrow) -> FPArrow:
    """g after f: substitute the bodies of f for g's coordinates."""
    if f.cod != g.dom:
        raise EqError(f"cannot compose: {f.cod} then {g.dom}")
    return FPArrow(f.dom, g.cod, tuple(_subst_coords(e, f.body) for e in g.body))


def fp_equal(a: FPArrow, b: FPArrow) -> bool:
    return a == b


def render_fparrow(a: FPArrow) -> str:
    return "<" + ", ".join(render_expr(e) for e in a.body) + ">"


# -- the arrow of a term ---------------------------------------------


def dia(t: Term, sig: Signature) -> FPArrow:
    """Coordinate-picking stage: one projection per variable occurrence."""
    var_list, _, type_list, _ = term_metadata(t.expr, sig)
    pos = {v: k + 1 for k, v in enumerate(t.vars)}
    return FPArrow(
        input_types(t, sig), type_list, tuple(Coord(pos[v]) for v in var_list)
    )


def par(e, sig: Signature) -> FPArrow:
    """Regrouping stage; associativity is invisible in flat form."""
    return fp_identity(term_metadata(e, sig)[2])


def sep(e, sig: Signature) -> FPArrow:
    """The operation tree over distinct coordinates, one per occurrence."""
    _, _, type_list, out = term_metadata(e, sig)
    counter = itertools.count(1)

    def walk(x):
        if isinstance(x, Var):
            return Coord(next(counter))
        return App(x.op, tuple(walk(a) for a in x.args))

    return FPArrow(type_list, (out,), (walk(e),))


def arr(t: Term, sig: Signature) -> FPArrow:
    return fp_compose(sep(t.expr, sig), fp_compose(par(t.expr, sig), dia(t, sig)))


def arr_of(e, vs, sig: Signature) -> FPArrow:
    return arr(make_term(e, vs, sig), sig)


# -- substitution, both ways -----------------------------------------


def subst_expr(e, x: Variable, u):
    if isinstance(e, Var):
        return u if e.v == x else e
    if isinstance(e, App):
        return App(e.op, tuple(subst_expr(a, x, u) for a in e.args))
    raise EqError(f"bad expression {e!r}")


def subst_recursive(t: Term, x: Variable, u: Term, sig: Signature) -> Term:
    if sig.types[x.i - 1] != u.type:
        raise EqError(
            f"cannot substitute a {u.type} for {x.render()}"
        )
    vs = tuple(sorted((set(t.vars) - {x}) | set(u.vars)))
    return make_term(subst_expr(t.expr, x, u.expr), vs, sig)


def insert_arrow(u, x: Variable, V, W, sig: Signature) -> FPArrow:
    """From the after-substitution variables to the padded union.

    The coordinate of x carries the arrow of u over the new variable
    set; every other variable keeps its own coordinate, matched by
    name, which also covers the case of x recurring inside W.
    """
    V, W = set(V), set(W)
    union = tuple(sorted(V | W))
    if x not in V:
        return fp_identity(tuple(sig.types[v.i - 1] for v in union))
    new_vars = tuple(sorted((V - {x}) | W))
    dom = tuple(sig.types[v.i - 1] for v in new_vars)
    cod = tuple(sig.types[v.i - 1] for v in union)
    u_arrow = arr(make_term(u, new_vars, sig), sig)
    pos = {v: k + 1 for k, v in enumerate(new_vars)}
    body = tuple(
        u_arrow.body[0] if v == x else Coord(pos[v]) for v in union
    )
    return FPArrow(dom, cod, body)


def arr_subst_direct(t: Term, x: Variable, u: Term, sig: Signature) -> FPArrow:
    if sig.types[x.i - 1] != u.type:
        raise EqError(f"cannot substitute a {u.type} for {x.render()}")
    union = tuple(sorted(set(t.vars) | set(u.vars)))
    big = make_term(t.expr, union, sig)
    return fp_compose(arr(big, sig), insert_arrow(u.expr, x, t.vars, u.vars, sig))


# -- changing the variable set ---------------------------------------


def alpha(e, V1, V2, sig: Signature) -> FPArrow:
    """Mediates between two variable contexts of the same expression.

    Shared variables keep their coordinates; variables of the target
    context that e never uses are filled with the least constant of
    their type, so their types must be inhabited.
    """
    used = term_metadata(e, sig)[1]
    V1, V2 = tuple(sorted(set(V1))), tuple(sorted(set(V2)))
    if not used <= set(V1) & set(V2):
        raise EqError("expression uses variables outside a context")
    pos = {v: k + 1 for k, v in enumerate(V1)}
    body = []
    for v in V2:
        if v in used:
            body.append(Coord(pos[v]))
        else:
            t = sig.types[v.i - 1]
            const = least_constant_term(sig, t)  # raises when uninhabited
            body.append(_const_to_coords(const))
    return FPArrow(
        tuple(sig.types[v.i - 1] for v in V1),
        tuple(sig.types[v.i - 1] for v in V2),
        tuple(body),
    )


def _const_to_coords(e):
    if isinstance(e, App):
        return App(e.op, tuple(_const_to_coords(a) for a in e.args))
    raise EqError("constant term expected")


# -- the sketch of a signature ---------------------------------------


def list_node_name(types) -> str:
    return "(" + ",".join(types) + ")"


def sketch_of_signature(sig: Signature, name: str = "Sig") -> Sketch:
    g = Graph()
    for t in sig.types:
        g.add_node(t)
    lists = sorted({o.inp for o in sig.ops})
    cones = {}
    for ts in lists:
        v = list_node_name(ts)
        g.add_node(v)
    for o in sig.ops:
        g.add_arrow(o.name, list_node_name(o.inp), o.outp)
    for ts in lists:
        v = list_node_name(ts)
        shape_nodes = {f"i{k+1}": t for k, t in enumerate(ts)}
        base = build_diagram(g, shape_nodes, {})
        projections = {}
        for k in range(len(ts)):
            aid = f"p{k+1}@{v}"
            g.add_arrow(aid, v, ts[k])
            projections[f"i{k+1}"] = aid
        cones[f"{v}.cone"] = Cone(f"{v}.cone", v, base, projections)
    sk = Sketch(name, g, {}, cones)
    ok, problems = validate_sketch(sk)
    if not ok:
        raise EqError("; ".join(problems))
    return sk


def sketch_of_theory(sig: Signature, equations: dict, name: str = "Th") -> Sketch:
    """Signature sketch plus one parallel pair per equation.

    Each equation contributes two defined arrows out of its input-type
    list node, tied into a two-node diagram; a model built from an
    algebra interprets them by evaluating the sides.
    """
    sk = sketch_of_signature(sig, name)
    g = sk.graph
    diagrams = dict(sk.diagrams)
    cones = dict(sk.cones)
    for ename in sorted(equations):
        E = equations[ename]
        ts = tuple(sig.types[v.i - 1] for v in E.vars)
        v = list_node_name(ts)
        if v not in g.nodes:
            g.add_node(v)
            shape_nodes = {f"i{k+1}": t for k, t in enumerate(ts)}
            base = build_diagram(g, shape_nodes, {})
            projections = {}
            for k in range(len(ts)):
                aid = f"p{k+1}@{v}"
                g.add_arrow(aid, v, ts[k])
                projections[f"i{k+1}"] = aid
            cones[f"{v}.cone"] = Cone(f"{v}.cone", v, base, projections)
        tau = equation_type(E, sig)
        left_id = f"{ename}.l"
        right_id = f"{ename}.r"
        g.add_arrow(left_id, v, tau)
        g.add_arrow(right_id, v, tau)
        diagrams[ename] = build_diagram(
            g,
            {"s": (v, ename), "t": tau},
            {"l": ("s", "t", left_id), "r": ("s", "t", right_id)},
        )
    sk2 = Sketch(name, g, diagrams, cones)
    ok, problems = validate_sketch(sk2)
    if not ok:
        raise EqError("; ".join(problems))
    return sk2


# -- finite algebras -------------------------------------------------


@dataclass
class Algebra:
    name: str
    carriers: dict  # type -> list of values
    ops: dict  # name -> dict from argument tuple to value
    types: tuple = ()

    def ev(self, e, env: dict):
        if isinstance(e, Var):
            return env[e.v]
        if isinstance(e, App):
            return self.ops[e.op][tuple(self.ev(a, env) for a in e.args)]
        raise EqError(f"bad expression {e!r}")


def satisfies_equation(alg: Algebra, E: Equation) -> bool:
    vs = list(E.vars)
    pools = [alg.carriers[alg.types[v.i - 1]] for v in vs]
    for combo in itertools.product(*pools):
        env = dict(zip(vs, combo))
        if alg.ev(E.left, env) != alg.ev(E.right, env):
            return False
    return True


def make_algebra(sig: Signature, name: str, carriers: dict, ops: dict) -> Algebra:
    alg = Algebra(name, dict(carriers), dict(ops), tuple(sig.types))
    for o in sig.ops:
        table = alg.ops[o.name]
        for combo in itertools.product(*[carriers[t] for t in o.inp]):
            if combo not in table:
                raise EqError(f"{name}: table of {o.name} misses {combo}")
            if table[combo] not in carriers[o.outp]:
                raise EqError(f"{name}: {o.name}{combo} lands outside {o.outp}")
    return alg


def enumerate_algebras(sig: Signature, max_size: int):
    """All algebras with carriers 1..max_size, deterministically.

    Intended for small signatures only; the count is the product over
    operations of |out|^(|inputs|), summed over carrier shapes.
    """
    sizes = range(1, max_size + 1)
    for shape in itertools.product(sizes, repeat=len(sig.types)):
        carriers = {
            t: [f"{t}{k}" for k in range(n)] for t, n in zip(sig.types, shape)
        }
        tables = []
        for o in sig.ops:
            args = list(itertools.product(*[carriers[t] for t in o.inp]))
            outs = carriers[o.outp]
            tables.append((o.name, args, outs))
        pools = [
            itertools.product(outs, repeat=len(args)) for _, args, outs in tables
        ]
        for choice in itertools.product(*pools):
            ops = {
                name: dict(zip(args, values))
                for (name, args, _), values in zip(tables, choice)
            }
            yield make_algebra(sig, "enum", carriers, ops)


def algebra_to_model(sig: Signature, equations: dict, alg: Algebra,
                     sketch: Sketch | None = None) -> FinSetModel:
    """Interpret the theory sketch in finite sets via the algebra."""
    sk = sketch or sketch_of_theory(sig, equations)
    carriers: dict[str, tuple] = {}
    values: dict[str, list] = {}
    for t in sig.types:
        values[t] = list(alg.carriers[t])
        carriers[t] = tuple(str(v) for v in values[t])
    for node in sk.graph.nodes:
        if node in carriers:
            continue
        ts = node[1:-1].split(",") if node != "()" else []
        ts = [t for t in ts if t]
        rows = list(itertools.product(*[values[t] for t in ts]))
        values[node] = rows
        carriers[node] = tuple("(" + ",".join(str(x) for x in r) + ")" for r in rows)
    index = {n: {v: k for k, v in enumerate(values[n])} for n in values}
    maps = {}
    for aid in sorted(sk.graph.arrows):
        s, t = sk.graph.arrows[aid]
        row = []
        if aid in {o.name for o in sig.ops}:
            for combo in values[s]:
                row.append(index[t][alg.ops[aid][tuple(combo)]])
        elif aid.startswith("p") and "@" in aid:
            k = int(aid[1 : aid.index("@")]) - 1
            for combo in values[s]:
                row.append(index[t][combo[k]])
        else:
            ename, kind = aid.rsplit(".", 1)
            E = equations[ename]
            side = E.left if kind == "l" else E.right
            for combo in values[s]:
                env = dict(zip(E.vars, combo))
                row.append(index[t][alg.ev(side, env)])
        maps[aid] = tuple(row)
    return FinSetModel(sk.graph, carriers, maps, name=alg.name)
