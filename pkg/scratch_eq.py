import sys
sys.path.insert(0, "src")
from sketchbench.equational import *

SIG = parse_signature("""
type s1 s2 s3 s4 s5;
op f: s1 s4 s3 s1 s5 s2 -> s5;
op g: s1 s3 -> s5;
op h: s2 s3 -> s3;
op m: s2 s2 s4 -> s3;
op c1: -> s1; op c2: -> s2; op c3: -> s3; op c4: -> s4;
""")

V = [parse_variable(s) for s in "x1_1 x1_2 x1_3 x2_1 x2_2 x3_1 x3_2 x4_3".split()]
x = parse_variable("x3_2")
e = parse_sexpr("(f x1_1 x4_3 x3_2 x1_1 (g x1_2 x3_2) x2_1)")

# first worked substitution: u = h(x2_1, x3_2)
Wf = [parse_variable(s) for s in "x1_1 x2_1 x2_2 x2_3 x3_1 x3_2 x3_3".split()]
uf = parse_sexpr("(h x2_1 x3_2)")

t = make_term(e, V, SIG)
ut = make_term(uf, Wf, SIG)

a1 = arr(make_term(uf, Wf, SIG), SIG)
print("Arr[u,W]      =", render_fparrow(a1))
assert a1.body == (App("h", (Coord(2), Coord(6))),), a1

big_vs = tuple(sorted((set(V) - {x}) | set(Wf)))
a2 = arr(make_term(uf, big_vs, SIG), SIG)
print("Arr[u,big]    =", render_fparrow(a2))
assert a2.body == (App("h", (Coord(4), Coord(8))),), a2

ins = insert_arrow(uf, x, V, Wf, SIG)
print("Insert        =", render_fparrow(ins))
want = tuple(Coord(k) for k in (1, 2, 3, 4, 5, 6, 7)) + (
    App("h", (Coord(4), Coord(8))), Coord(9), Coord(10))
assert ins.body == want, ins.body

al = alpha(uf, Wf, big_vs, SIG)
print("alpha         =", render_fparrow(al))
wa = [App("c1", ()), App("c1", ()), App("c1", ()), Coord(2), App("c2", ()),
      App("c2", ()), App("c3", ()), Coord(6), App("c3", ()), App("c4", ())]
assert al.body == tuple(wa), al.body
# the mediating equation itself
assert fp_equal(arr(make_term(uf, Wf, SIG), SIG),
                fp_compose(arr(make_term(uf, big_vs, SIG), SIG), al))

# substitution equivalence, both worked examples
s_rec = arr(subst_recursive(t, x, ut, SIG), SIG)
s_dir = arr_subst_direct(t, x, ut, SIG)
print("subst(rec)    =", render_fparrow(s_rec))
assert fp_equal(s_rec, s_dir)

Ws = [parse_variable(s) for s in "x1_1 x2_1 x2_2 x2_3 x3_1 x3_3 x4_4".split()]
us = parse_sexpr("(m x2_1 x2_1 x4_4)")
ust = make_term(us, Ws, SIG)
d1 = dia(make_term(us, Ws, SIG), SIG)
print("Dia[u2,W2]    =", render_fparrow(d1))
assert d1.body == (Coord(2), Coord(2), Coord(7)), d1.body
big2 = tuple(sorted((set(V) - {x}) | set(Ws)))
d2 = dia(make_term(us, big2, SIG), SIG)
assert d2.body == (Coord(4), Coord(4), Coord(10)), d2.body
ins2 = insert_arrow(us, x, V, Ws, SIG)
print("Insert2       =", render_fparrow(ins2))
want2 = tuple(Coord(k) for k in (1, 2, 3, 4, 5, 6, 7)) + (
    App("m", (Coord(4), Coord(4), Coord(10))), Coord(8), Coord(9), Coord(10))
assert ins2.body == want2, ins2.body
assert fp_equal(arr(subst_recursive(t, x, ust, SIG), SIG),
                arr_subst_direct(t, x, ust, SIG))

# the small 4-occurrence example
SIG2 = parse_signature("""
type s1 s2 s3 s4 s5;
op f: s1 s2 s2 -> s5;
op g: s1 s1 -> s2;
""")
e2 = parse_sexpr("(f x1_1 (g x1_2 x1_1) x2_1)")
t2 = make_term(e2, [parse_variable(s) for s in "x1_1 x1_2 x2_1 x4_3".split()], SIG2)
d3 = dia(t2, SIG2)
print("Dia[compact]  =", render_fparrow(d3))
assert d3.body == (Coord(1), Coord(2), Coord(1), Coord(3)), d3.body
assert input_types(t2, SIG2) == ("s1", "s1", "s2", "s4")

# factorization identity
composed = fp_compose(sep(t2.expr, SIG2), fp_compose(par(t2.expr, SIG2), dia(t2, SIG2)))
assert fp_equal(composed, arr(t2, SIG2))

# sketch of the signature and the theory
sk = sketch_of_signature(SIG)
print("sig sketch    :", len(sk.graph.nodes), "nodes,", len(sk.graph.arrows), "arrows,",
      len(sk.cones), "cones")
E = make_equation(parse_sexpr("(h x2_1 x3_2)"), parse_sexpr("(h x2_1 x3_1)"),
                  [parse_variable(s) for s in "x2_1 x3_1 x3_2".split()], SIG)
th = sketch_of_theory(SIG, {"swap": E})
print("theory sketch :", len(th.graph.nodes), "nodes,", len(th.diagrams), "diagrams")

print("all golden checks passed")
