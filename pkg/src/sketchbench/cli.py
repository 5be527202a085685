"""Batch command line for the workbench.

Exit codes are uniform across subcommands: 0 when the check succeeds
or the answer is yes, 1 for input that does not parse or typecheck,
2 when a question stays open (an underivable equality, an unsatisfied
factorization, a model that fails its sketch).

Reports are deterministic: the same inputs and flags produce byte
identical text or json output.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .builtins import builtin_sketch
from .deduction import (
    DeductionError,
    check_deduction,
    compile_deduction,
    parse_deduction,
)
from .diagrams import graph_dot
from .equational import EqError, parse_signature, sketch_of_signature
from .finset import ModelError, is_sketch_model, parse_model, satisfies_pf
from .forms import PfError, check_pf, parse_pf, serialize_pf
from .sketch_dsl import SketchSyntaxError, parse_sketch, serialize_sketch
from .sketches import validate_sketch
from .theory import Theory, TheoryError


def _emit(fmt: str, command: str, payload: dict, text_lines: list[str]) -> None:
    if fmt == "json":
        doc = {"schema": 1, "command": command}
        doc.update(payload)
        click.echo(json.dumps(doc, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            click.echo(line)


def _fail(fmt: str, command: str, msg: str, code: int = 1) -> None:
    _emit(fmt, command, {"error": msg, "status": "ill-formed"}, [f"error: {msg}"])
    sys.exit(code)


def _load_sketch(spec: str, fixtures: str | None, fmt: str, command: str):
    if spec in ("Cat", "FinProd", "FinLim", "CCC"):
        return builtin_sketch(spec)
    for cand in (Path(spec),) + (
        (Path(fixtures) / spec, Path(fixtures) / f"{spec}.sketch") if fixtures else ()
    ):
        if cand.is_file():
            try:
                return parse_sketch(cand.read_text())
            except SketchSyntaxError as e:
                _fail(fmt, command, str(e))
    _fail(fmt, command, f"no sketch named {spec!r}")


def _resolver(fixtures: str | None):
    def resolve(name: str):
        try:
            return builtin_sketch(name)
        except KeyError:
            pass
        if fixtures:
            cand = Path(fixtures) / f"{name}.sketch"
            if cand.is_file():
                return parse_sketch(cand.read_text())
        raise PfError(f"unknown sketch {name!r}")

    return resolve


def _read(path: str, fmt: str, command: str) -> str:
    p = Path(path)
    if not p.is_file():
        _fail(fmt, command, f"no such file: {path}")
    return p.read_text()


_fmt_opt = click.option(
    "--format", "fmt", type=click.Choice(["text", "json"]), default="text",
    help="Report format.",
)
_fixtures_opt = click.option(
    "--fixtures", default=None, metavar="DIR", help="Directory for named inputs."
)
_depth_opt = click.option(
    "--depth", default=6, show_default=True, help="Saturation depth bound."
)


@click.group()
def main() -> None:
    """Sketch workbench: validate, saturate, replay, compile."""


@main.command()
@click.argument("sketch")
@_fmt_opt
@_fixtures_opt
def validate(sketch: str, fmt: str, fixtures: str | None) -> None:
    """Check a sketch's internal consistency."""
    sk = _load_sketch(sketch, fixtures, fmt, "validate")
    ok, problems = validate_sketch(sk)
    _emit(
        fmt, "validate",
        {"sketch": sk.name, "ok": ok, "problems": problems,
         "status": "ok" if ok else "ill-formed"},
        [f"{sk.name}: ok"] if ok else [f"{sk.name}: invalid"] + problems,
    )
    sys.exit(0 if ok else 1)


@main.command()
@click.argument("sketch")
@click.argument("left")
@click.argument("right")
@_fmt_opt
@_fixtures_opt
@_depth_opt
def theory(sketch, left, right, fmt, fixtures, depth) -> None:
    """Decide whether two arrow paths are provably equal.

    Paths are semicolon-separated arrow ids, applied left to right;
    an empty path is an identity.  Equality is answered up to the
    depth bound, so the negative answer is Unknown, not No.
    """
    sk = _load_sketch(sketch, fixtures, fmt, "theory")
    th = Theory(sk, depth=depth)
    try:
        la = th.gens([p for p in left.split(";") if p])
        ra = th.gens([p for p in right.split(";") if p])
        if not la and not ra:
            raise TheoryError("both paths are empty")
        dom = th._atom_dom((la or ra)[0])
        equal = th.arrows_equal(dom, la, ra)
    except TheoryError as e:
        _fail(fmt, "theory", str(e))
    status = "Equal" if equal else "Unknown"
    _emit(
        fmt, "theory",
        {"sketch": sk.name, "left": left, "right": right,
         "depth": depth, "status": status},
        [f"{left!r} vs {right!r}: {status}"],
    )
    sys.exit(0 if equal else 2)


@main.command("check-pf")
@click.argument("pf_file")
@click.argument("script_file")
@_fmt_opt
@_fixtures_opt
@_depth_opt
def cmd_check_pf(pf_file, script_file, fmt, fixtures, depth) -> None:
    """Replay a derivation script over a potential factorization."""
    text = _read(pf_file, fmt, "check-pf")
    script = _read(script_file, fmt, "check-pf")
    try:
        pf = parse_pf(text, _resolver(fixtures))
    except PfError as e:
        _fail(fmt, "check-pf", str(e))
    got = check_pf(pf, script, depth=depth)
    payload = {
        "status": got.status,
        "depth": depth,
        "messages": got.messages,
        # everything needed to re-run the check elsewhere
        "pf": serialize_pf(pf),
        "script": script,
    }
    lines = [f"status: {got.status}"]
    if got.certificate is not None:
        payload["steps"] = got.certificate.steps
        lines += [f"  {s}" for s in got.certificate.steps]
    lines += [f"  ! {m}" for m in got.messages]
    _emit(fmt, "check-pf", payload, lines)
    sys.exit({"deducible": 0, "unknown": 2}.get(got.status, 1))


@main.command("compile-msel")
@click.argument("sig_file")
@click.argument("ded_file", required=False)
@_fmt_opt
@_depth_opt
def cmd_compile_msel(sig_file, ded_file, fmt, depth) -> None:
    """Turn a signature into a sketch; optionally compile a deduction.

    With only a signature the sketch serialization is the report.
    With a deduction file the tree is checked and compiled to a
    certificate over the extended finite-product sketch.
    """
    try:
        sig = parse_signature(_read(sig_file, fmt, "compile-msel"))
    except EqError as e:
        _fail(fmt, "compile-msel", str(e))
    if ded_file is None:
        sk = sketch_of_signature(sig)
        text = serialize_sketch(sk)
        _emit(
            fmt, "compile-msel",
            {"sketch": sk.name, "serialization": text, "status": "ok"},
            [text.rstrip("\n")],
        )
        sys.exit(0)
    try:
        ded = parse_deduction(_read(ded_file, fmt, "compile-msel"), sig)
        compiled = compile_deduction(ded, sig, depth=depth)
    except DeductionError as e:
        _fail(fmt, "compile-msel", str(e))
    node, lhs, rhs = compiled.conclusion
    _emit(
        fmt, "compile-msel",
        {"status": compiled.status, "depth": depth,
         "sketch": compiled.sketch.name,
         "conclusion": {"pair": node, "left": lhs, "right": rhs},
         "steps": compiled.certificate.steps},
        [f"status: {compiled.status}",
         f"conclusion pinned at {node} ({lhs} = {rhs})"],
    )
    sys.exit(0 if compiled.status == "deducible" else 2)


@main.command("check-deduction")
@click.argument("sig_file")
@click.argument("ded_file")
@_fmt_opt
def cmd_check_deduction(sig_file, ded_file, fmt) -> None:
    """Validate a deduction tree's shape and side conditions."""
    try:
        sig = parse_signature(_read(sig_file, fmt, "check-deduction"))
        ded = parse_deduction(_read(ded_file, fmt, "check-deduction"), sig)
    except (EqError, DeductionError) as e:
        _fail(fmt, "check-deduction", str(e))
    ok, problems = check_deduction(ded, sig)
    _emit(
        fmt, "check-deduction",
        {"ok": ok, "problems": problems,
         "status": "ok" if ok else "ill-formed"},
        ["well-formed"] if ok else problems,
    )
    sys.exit(0 if ok else 1)


@main.command("eval-model")
@click.argument("sketch")
@click.argument("model_file")
@click.argument("pf_file", required=False)
@_fmt_opt
@_fixtures_opt
@click.option("--model-bound", default=4, show_default=True,
              help="Largest carrier size accepted.")
def cmd_eval_model(sketch, model_file, pf_file, fmt, fixtures, model_bound) -> None:
    """Check a finite model against its sketch, and optionally a factorization."""
    sk = _load_sketch(sketch, fixtures, fmt, "eval-model")
    try:
        model = parse_model(_read(model_file, fmt, "eval-model"), sk.graph)
    except ModelError as e:
        _fail(fmt, "eval-model", str(e))
    big = [n for n in sorted(model.carriers) if len(model.carriers[n]) > model_bound]
    if big:
        _fail(fmt, "eval-model", f"carriers over bound {model_bound}: {big}")
    ok, problems = is_sketch_model(model, sk)
    payload: dict = {"model_ok": ok, "problems": problems}
    lines = [f"model of {sk.name}: {'ok' if ok else 'no'}"] + problems
    code = 0 if ok else 2
    if ok and pf_file is not None:
        try:
            pf = parse_pf(_read(pf_file, fmt, "eval-model"), _resolver(fixtures))
        except PfError as e:
            _fail(fmt, "eval-model", str(e))
        sat, witness = satisfies_pf(model, pf)
        payload["satisfies"] = sat
        payload["witness"] = witness
        lines.append(
            f"factorization: witness {witness}" if sat else "factorization: no witness"
        )
        code = 0 if sat else 2
    payload["status"] = "ok" if code == 0 else "unsatisfied"
    _emit(fmt, "eval-model", payload, lines)
    sys.exit(code)


@main.command("export-dot")
@click.argument("sketch")
@_fixtures_opt
def cmd_export_dot(sketch, fixtures) -> None:
    """Emit the underlying graph of a sketch as Graphviz dot."""
    sk = _load_sketch(sketch, fixtures, "text", "export-dot")
    click.echo(graph_dot(sk.graph, sk.name).rstrip("\n"))
    sys.exit(0)


if __name__ == "__main__":
    main()
