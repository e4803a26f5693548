"""Command line front end: polys, operator, verify, singular."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import __version__
from .graph import Edge, FeynmanGraph, GraphError, KinematicTable, SymanzikPolys, graph_ring, symanzik
from .operator import render, singular_locus
from .pfdriver import DEFAULT_MAX_ORDER, DiffOperator, OrderBoundExceeded, minimal_operator, verify_operator
from .reduce import CertEntry, ReductionCertificate
from .ring import (ExpressionError, HomogeneousPoly, ParamRing, RingError, expression_symbols,
                   render_field)
from .twist import TwistError, TwistSpec

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BOUND = 2

SCHEMA = "twistpf-certificate/1"

log = logging.getLogger(__name__)


class ParseError(ValueError):
    def __init__(self, line: int, col: int, msg: str):
        super().__init__(f"syntax error at {line}:{col}: {msg}")
        self.line = line
        self.col = col


_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _tokens(line: str):
    """Whitespace-separated tokens with 1-based columns."""
    return [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", line)]


def parse_graph_file(text: str):
    """Parse the line-oriented graph format into (FeynmanGraph, KinematicTable)."""
    vertices = None
    vline = 0
    edges = []
    legs = []
    table = KinematicTable()
    leg_lines = {}
    seen_any = False
    lines = text.splitlines()
    for ln, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        seen_any = True
        kw, col = toks[0]
        if kw == "vertices":
            if vertices is not None:
                raise ParseError(ln, col, "vertices declared twice")
            if len(toks) < 2:
                raise ParseError(ln, col + len(kw), "expected at least one vertex name")
            vertices = []
            for name, c in toks[1:]:
                if not _IDENT.match(name):
                    raise ParseError(ln, c, f"invalid vertex name {name!r}")
                vertices.append(name)
            vline = ln
        elif kw == "edge":
            if not (len(toks) == 4 or (len(toks) >= 6 and toks[4][0] == "mass")):
                raise ParseError(ln, col, "expected: edge NAME V1 V2 mass EXPR")
            if vertices is None:
                raise ParseError(ln, col, "edge before vertices declaration")
            name = toks[1][0]
            for v, c in toks[2:4]:
                if v not in vertices:
                    raise ParseError(ln, c, f"unknown vertex {v!r}")
            if toks[2][0] == toks[3][0]:
                raise ParseError(ln, toks[3][1], f"edge {name} is a self-loop")
            mass = "0"
            if len(toks) >= 6:
                mass_col = toks[5][1]
                mass = line[mass_col - 1:].strip()
                try:
                    expression_symbols(mass)
                except ExpressionError as e:
                    raise ParseError(ln, mass_col + e.col - 1, str(e)) from None
            if any(e.name == name for e in edges):
                raise ParseError(ln, toks[1][1], f"duplicate edge name {name!r}")
            edges.append(Edge(name, toks[2][0], toks[3][0], mass))
        elif kw == "leg":
            if len(toks) != 3:
                raise ParseError(ln, col, "expected: leg LABEL VERTEX")
            if vertices is None:
                raise ParseError(ln, col, "leg before vertices declaration")
            lab, v = toks[1][0], toks[2][0]
            if not _IDENT.match(lab):
                raise ParseError(ln, toks[1][1], f"invalid momentum label {lab!r}")
            if v not in vertices:
                raise ParseError(ln, toks[2][1], f"unknown vertex {v!r}")
            if any(w == v for w, _ in legs):
                raise ParseError(ln, toks[2][1], f"vertex {v} already carries an external momentum")
            legs.append((v, lab))
            leg_lines.setdefault(lab, (ln, toks[1][1]))
        elif kw == "dot":
            m = re.match(r"^\s*dot\s+([A-Za-z_]\w*)\.([A-Za-z_]\w*)\s*=\s*(.+?)\s*$", line)
            if not m:
                raise ParseError(ln, col, "expected: dot P1.P2 = EXPR")
            try:
                expression_symbols(m.group(3))
            except ExpressionError as e:
                raise ParseError(ln, m.start(3) + e.col, str(e)) from None
            table.set(m.group(1), m.group(2), m.group(3))
        else:
            raise ParseError(ln, col, f"unknown keyword {kw!r}")
    if not seen_any:
        raise ParseError(1, 1, "empty graph file")
    if vertices is None:
        raise ParseError(1, 1, "missing vertices declaration")
    if not edges:
        raise ParseError(vline, 1, "graph has no edges")
    labels = []
    for _, lab in legs:
        if lab not in labels:
            labels.append(lab)
    for i, a in enumerate(labels):
        for b in labels[i:]:
            if KinematicTable.key(a, b) not in table.entries:
                ln, c = leg_lines[b]
                raise ParseError(ln, c, f"missing dot product {a}.{b}")
    try:
        g = FeynmanGraph(tuple(vertices), tuple(edges), tuple(legs))
    except GraphError as e:
        raise ParseError(vline, 1, str(e)) from None
    return g, table


# jobs ----------------------------------------------------------------------

@dataclass
class Job:
    graph: FeynmanGraph
    table: KinematicTable
    ring: ParamRing
    sp: SymanzikPolys
    ts: TwistSpec
    t: str
    sets: list
    source_hash: str


def _int_list(text: str | None, n: int, default: int, what: str) -> tuple:
    if text is None:
        return (default,) * n
    try:
        vals = tuple(int(v) for v in text.replace(" ", "").split(",") if v != "")
    except ValueError:
        raise RingError(f"--{what} expects comma-separated integers") from None
    if len(vals) == 1:
        vals = vals * n
    if len(vals) != n:
        raise RingError(f"--{what} needs {n} entries, got {len(vals)}")
    return vals


def find_graph_file(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    bundled = resources.files("twistpf") / "fixtures" / name
    if bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(f"graph file {name!r} not found")


def build_job(args) -> Job:
    path = find_graph_file(args.graph)
    text = path.read_text()
    g, table = parse_graph_file(text)
    sets = []
    extra = [args.t]
    for s in args.set or []:
        if "=" not in s:
            raise RingError(f"--set expects NAME=EXPR, got {s!r}")
        name, expr = (x.strip() for x in s.split("=", 1))
        sets.append((name, expr))
        for sym in [name] + expression_symbols(expr):
            if sym not in extra:
                extra.append(sym)
    ring = graph_ring(g, table, extra)
    sp = symanzik(g, table, ring)
    for name, expr in sets:
        if name in ("eps", "kap"):
            raise RingError(f"cannot substitute the regulator {name}")
        if name == args.t:
            raise RingError(f"cannot substitute the derivative variable {name}")
        try:
            sp = sp.subs({name: ring.parse(expr)})
        except ZeroDivisionError:
            raise RingError(f"division by zero while substituting {name} = {expr}") from None
    if sp.F.derivative(args.t).is_zero():
        log.warning("warning: %s does not appear in F after substitutions", args.t)
    n = len(g.edges)
    ts = TwistSpec(args.delta, _int_list(args.nu, n, 1, "nu"), _int_list(args.mu, n, 0, "mu"))
    h = hashlib.sha256(text.encode()).hexdigest()
    return Job(g, table, ring, sp, ts, args.t, sets, h)


# serialization ---------------------------------------------------------------

def poly_to_tree(h: HomogeneousPoly) -> list:
    return [[[int(k) for k in e], render_field(c)] for e, c in h.sorted_terms()]


def poly_from_tree(ring: ParamRing, degree: int, tree) -> HomogeneousPoly:
    return HomogeneousPoly.from_terms(ring, degree, {tuple(e): ring.parse(c) for e, c in tree})


def operator_tree(op: DiffOperator) -> dict:
    return {
        "t": op.t,
        "order": op.order,
        "coefficients": [render_field(c) for c in op.coeffs],
        "text": render(op),
    }


def certificate_tree(job: Job, op: DiffOperator, cert: ReductionCertificate) -> dict:
    return {
        "schema": SCHEMA,
        "job": {
            "graph_sha256": job.source_hash,
            "delta": job.ts.delta,
            "nu": list(job.ts.nu),
            "mu": list(job.ts.mu),
            "t": job.t,
            "set": [f"{n}={e}" for n, e in job.sets],
        },
        "params": list(job.ring.params),
        "nvars": job.ring.nvars,
        "loops": job.sp.loops,
        "operator": operator_tree(op),
        "certificate": [
            {"a": e.a, "C": [poly_to_tree(ci) for ci in e.C], "c": poly_to_tree(e.c)}
            for e in cert.entries
        ],
    }


def read_certificate(job: Job, tree: dict):
    if tree.get("schema") != SCHEMA:
        raise RingError("not a certificate file")
    if tuple(tree["params"]) != job.ring.params or tree["nvars"] != job.ring.nvars:
        raise RingError("certificate was produced for a different job")
    ring = job.ring
    opt = tree["operator"]
    op = DiffOperator(opt["t"], tuple(ring.parse(c) for c in opt["coefficients"]))
    L = tree["loops"]
    entries = []
    for e in tree["certificate"]:
        a = int(e["a"])
        C = [poly_from_tree(ring, (L + 1) * a - L, comp) for comp in e["C"]]
        c = poly_from_tree(ring, (L + 1) * (a - 1), e["c"])
        entries.append(CertEntry(a, C, c))
    return op, ReductionCertificate(entries)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


# commands --------------------------------------------------------------------

def cmd_polys(job: Job, args, out) -> int:
    sp = job.sp
    if args.format == "structured":
        out.write(_dump({
            "nvars": job.ring.nvars, "loops": sp.loops,
            "U": poly_to_tree(sp.U), "V": poly_to_tree(sp.V), "F": poly_to_tree(sp.F),
        }) + "\n")
    else:
        out.write(f"U = {sp.U}\nV = {sp.V}\nF = {sp.F}\n")
    return EXIT_OK


def _search(job: Job, args):
    return minimal_operator(job.sp, job.ts, job.t, args.max_order)


def cmd_operator(job: Job, args, out) -> int:
    res = _search(job, args)
    op = res.operator
    if args.emit_certificate:
        Path(args.emit_certificate).write_text(_dump(certificate_tree(job, op, res.certificate)) + "\n")
    if args.format == "structured":
        tree = operator_tree(op)
        tree["residue_ranks"] = {str(a): r for a, r in res.residue_ranks.items()}
        out.write(_dump(tree) + "\n")
    else:
        out.write(render(op) + "\n")
    return EXIT_OK


def cmd_verify(job: Job, args, out) -> int:
    if not args.certificate:
        raise RingError("verify needs --certificate FILE")
    tree = json.loads(Path(args.certificate).read_text())
    op, cert = read_certificate(job, tree)
    rep = verify_operator(op, cert, job.sp, job.ts, op.t)
    if args.format == "structured":
        out.write(_dump({"ok": rep.ok, "messages": rep.messages, "residual": rep.residual}) + "\n")
    else:
        out.write(("ok: " if rep.ok else "FAILED: ") + "; ".join(rep.messages) + "\n")
        if rep.residual:
            out.write(f"first residual term {rep.residual}\n")
    return EXIT_OK if rep.ok else EXIT_ERROR


def cmd_singular(job: Job, args, out) -> int:
    if args.certificate:
        op, _ = read_certificate(job, json.loads(Path(args.certificate).read_text()))
    else:
        op = _search(job, args).operator
    facs = singular_locus(op)
    if args.format == "structured":
        out.write(_dump({"factors": [
            {"factor": str(f.factor), "multiplicity": f.multiplicity, "tag": f.tag} for f in facs]}) + "\n")
    else:
        for f in facs:
            out.write(f"{f.factor}\t{f.multiplicity}\t{f.tag}\n")
    return EXIT_OK


COMMANDS = {"polys": cmd_polys, "operator": cmd_operator, "verify": cmd_verify, "singular": cmd_singular}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twistpf", description="Differential equations for twisted Feynman integrals.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--graph", required=True, help="graph file (or the name of a bundled fixture)")
    p.add_argument("--delta", type=int, default=2, help="integer part of D/2 (default 2)")
    p.add_argument("--nu", help="propagator powers, comma separated (default all 1)")
    p.add_argument("--mu", help="twist weights, comma separated (default all 0)")
    p.add_argument("--t", default="t", help="differentiation variable (default t)")
    p.add_argument("--set", action="append", metavar="NAME=EXPR", help="substitution, applied in order")
    p.add_argument("--max-order", type=int, default=DEFAULT_MAX_ORDER)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--emit-certificate", metavar="FILE")
    p.add_argument("--certificate", metavar="FILE", help="certificate file for verify/singular")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.threads < 1:
            raise ValueError("--threads must be positive")
        job = build_job(args)
        return COMMANDS[args.command](job, args, out)
    except OrderBoundExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BOUND
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (GraphError, RingError, TwistError, ExpressionError, FileNotFoundError, ValueError,
            ZeroDivisionError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
