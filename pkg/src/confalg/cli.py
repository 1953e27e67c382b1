"""Command-line interface: dispatch, verification commands, report emission.

    confalg <command> [args...] [--seed N] [--max-terms M]
            [--format text|json] [--timings] FILES...

Commands: check NAME | bracket NAME EXPR EXPR | kahler PVA | current LAD |
quotient LCAD | sae LCAD | semidirect LCAD MODULE | d COCHAIN |
dsq (LCAD|PVA) MODULE K | phi PVA MODULE K | extension LCAD MODULE COCYCLE |
roundtrip (LAD|POISSON).

Exit codes: 0 all verdicts pass, 1 verdict failure, 2 usage or parse error,
3 resource-guard abort.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import errors
from .cohom import (
    LCAdCochain,
    TrivialExtension,
    cocycle_check,
    extension_from_cocycle,
    phi_inv,
    phi_iso,
)
from .diffpoly import render_diffpoly
from .dsl import (
    ExprContext,
    Parser,
    ParseError,
    Workspace,
    eval_expr,
    lex,
    parse,
    resolve_module,
    to_diffpoly,
    to_lvalue_module,
)
from .errors import ConfalgError, ResourceGuardError
from .freemod import OpVec
from .jetcur import check_lad, check_poisson, jet_kahler_roundtrip, roundtrip_check
from .lamcalc import render_lvalue
from .lcad import (
    FreeLCAdModule,
    TrivialLCAdModule,
    check_lcad,
    check_module,
    kahler_lcad,
    lcad_bracket,
    quotient_lad,
    sae_pva,
    semidirect,
)
from .pva import TABLE_VAR, check_pva, check_pva_module, pva_bracket, render_ldp
from .report import CheckRecord, Report, emit

SEEDED_COMMANDS = {"check", "kahler", "current", "semidirect", "dsq", "phi", "extension"}


def build_argparser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="confalg",
        description="lambda-bracket calculus: structure checks and constructions",
    )
    ap.add_argument("command", help="command name")
    ap.add_argument("args", nargs="*", help="command arguments followed by .cfa files")
    ap.add_argument("--seed", type=int, default=None, help="seed for sampled checks")
    ap.add_argument("--max-terms", type=int, default=None, help="expansion term budget")
    ap.add_argument("--format", choices=["text", "json"], default="text")
    ap.add_argument("--timings", action="store_true", help="include elapsed time")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_argparser()
    ns = ap.parse_intermixed_args(argv)
    files = [a for a in ns.args if a.endswith(".cfa")]
    args = [a for a in ns.args if not a.endswith(".cfa")]
    if ns.max_terms is not None:
        errors.set_max_terms(ns.max_terms)
    if ns.command in SEEDED_COMMANDS and ns.seed is None:
        print("error: --seed is required for sampled checks", file=sys.stderr)
        return 2
    try:
        ws = Workspace()
        for f in files:
            with open(f, encoding="utf-8") as fh:
                src = fh.read()
            sub = parse(src)
            for name in sub.order:
                ws.add(name, sub.entries[name])
        started = time.monotonic()
        report = run(ws, ns.command, args, ns.seed)
        report.elapsed_ms = int((time.monotonic() - started) * 1000)
        report.max_terms = ns.max_terms
        sys.stdout.buffer.write(emit(report, ns.format, ns.timings))
        return 0 if report.ok else 1
    except ResourceGuardError as e:
        print(f"resource guard: {e}", file=sys.stderr)
        return 3
    except (ParseError, ConfalgError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def run(ws: Workspace, command: str, args: list[str], seed: int | None) -> Report:
    echo = " ".join([command] + args)
    report = Report(command=echo, seed=seed)
    handler = {
        "check": cmd_check,
        "bracket": cmd_bracket,
        "kahler": cmd_kahler,
        "current": cmd_current,
        "quotient": cmd_quotient,
        "sae": cmd_sae,
        "semidirect": cmd_semidirect,
        "d": cmd_d,
        "dsq": cmd_dsq,
        "phi": cmd_phi,
        "extension": cmd_extension,
        "roundtrip": cmd_roundtrip,
    }.get(command)
    if handler is None:
        raise ConfalgError(f"unknown command {command!r}")
    handler(ws, args, seed if seed is not None else 0, report)
    return report


def _one(args: list[str], n: int, usage: str) -> list[str]:
    if len(args) != n:
        raise ConfalgError(f"usage: {usage}")
    return args


def cmd_check(ws: Workspace, args, seed, report: Report):
    (name,) = _one(args, 1, "check NAME")
    e = ws.get(name)
    if e.kind == "pva":
        report.extend(check_pva(e.obj))
    elif e.kind == "lcad":
        report.extend(check_lcad(e.obj, seed=seed, samples=2))
    elif e.kind == "lad":
        report.extend(check_lad(e.obj))
    elif e.kind == "poisson":
        report.extend(check_poisson(e.obj))
    elif e.kind == "module":
        owner = ws.get(e.meta["of"])
        if e.meta.get("target") == "pva":
            report.extend(check_pva_module(owner.obj, e.obj, seed=seed))
        else:
            L = e.obj.L
            report.extend(check_module(L, e.obj, seed=seed, samples=1))
    elif e.kind == "cocycle":
        omega = e.obj
        report.extend(cocycle_check(omega.L, omega.M, omega))
    else:
        raise ConfalgError(f"nothing to check for a {e.kind}")


def cmd_bracket(ws: Workspace, args, seed, report: Report):
    name, e1, e2 = _one(args, 3, "bracket NAME EXPR EXPR")
    entry = ws.get(name)
    if entry.kind == "pva":
        P = entry.obj
        ctx = ExprContext(P.sig, set(), allow_D=True)
        f = to_diffpoly(_parse_expr(e1, ctx), ctx)
        g = to_diffpoly(_parse_expr(e2, ctx), ctx)
        v = pva_bracket(P, f, g, TABLE_VAR)
        report.records.append(
            CheckRecord(id=f"bracket({e1},{e2})", lhs=render_ldp(v), rhs="-", ok=True)
        )
    elif entry.kind == "lcad":
        L = entry.obj
        gidx = {g: a for a, g in enumerate(L.gen_names)}
        ctx = ExprContext(L.sig, set(), gidx, L.rank)
        v1 = _as_opvec(_parse_expr(e1, ctx), L)
        v2 = _as_opvec(_parse_expr(e2, ctx), L)
        v = lcad_bracket(L, v1, v2, TABLE_VAR)
        report.records.append(
            CheckRecord(
                id=f"bracket({e1},{e2})",
                lhs=render_lvalue(v, lambda w: w.render(L.gen_names)),
                rhs="-",
                ok=True,
            )
        )
    else:
        raise ConfalgError("bracket needs a pva or an lcad")


def _parse_expr(src: str, ctx: ExprContext):
    p = Parser(lex(src))
    e = p.expr()
    if p.peek().kind != "EOF":
        p.err("trailing input after expression")
    return eval_expr(e, ctx)


def _as_opvec(v, L) -> OpVec:
    lv = to_lvalue_module(v, None)
    if any(mono for mono in lv.terms):
        raise ConfalgError("bracket arguments are lambda-free module elements")
    return lv.terms.get((), OpVec.zero(L.sig, L.rank))


def _table_records(L, prefix: str) -> list[CheckRecord]:
    recs = []
    for a in range(L.rank):
        for b in range(L.rank):
            v = L.btable[(a, b)]
            if not v.is_zero():
                recs.append(
                    CheckRecord(
                        id=f"{prefix}-bracket({L.gen_names[a]},{L.gen_names[b]})",
                        lhs=render_lvalue(v, lambda w: w.render(L.gen_names)),
                        rhs="-",
                        ok=True,
                    )
                )
    for a in range(L.rank):
        for i in range(L.sig.rank):
            v = L.atable[(a, i)]
            if not v.is_zero():
                recs.append(
                    CheckRecord(
                        id=f"{prefix}-anchor({L.gen_names[a]},{L.sig.gens[i]})",
                        lhs=render_ldp(v),
                        rhs="-",
                        ok=True,
                    )
                )
    return recs


def cmd_kahler(ws: Workspace, args, seed, report: Report):
    (name,) = _one(args, 1, "kahler PVA")
    P = ws.get(name, "pva").obj
    precheck = check_pva(P)
    report.extend(precheck)
    if all(r.ok for r in precheck):
        K = kahler_lcad(P)
        report.extend(_table_records(K, "kahler"))
        report.extend(check_lcad(K, seed=seed, samples=2))


def cmd_current(ws: Workspace, args, seed, report: Report):
    (name,) = _one(args, 1, "current LAD")
    F = ws.get(name, "lad").obj
    precheck = check_lad(F)
    report.extend(precheck)
    if all(r.ok for r in precheck):
        from .jetcur import current_lcad

        C = current_lcad(F)
        report.extend(_table_records(C, "current"))
        report.extend(check_lcad(C, seed=seed, samples=2))


def cmd_quotient(ws: Workspace, args, seed, report: Report):
    (name,) = _one(args, 1, "quotient LCAD")
    L = ws.get(name, "lcad").obj
    Q = quotient_lad(L)
    for a in range(Q.rank):
        for b in range(Q.rank):
            vec = Q.c[(a, b)]
            if any(not p.is_zero() for p in vec):
                report.records.append(
                    CheckRecord(
                        id=f"quotient-bracket({Q.gen_names[a]},{Q.gen_names[b]})",
                        lhs=Q.render_vec(vec),
                        rhs="-",
                        ok=True,
                    )
                )
        for j in range(Q.ringsig.rank):
            q = Q.rho[a][j]
            if not q.is_zero():
                report.records.append(
                    CheckRecord(
                        id=f"quotient-anchor({Q.gen_names[a]},{Q.ringsig.gens[j]})",
                        lhs=render_diffpoly(q),
                        rhs="-",
                        ok=True,
                    )
                )
    report.extend(check_lad(Q))


def cmd_sae(ws: Workspace, args, seed, report: Report):
    (name,) = _one(args, 1, "sae LCAD")
    L = ws.get(name, "lcad").obj
    S = sae_pva(L)
    for i in range(S.sig.rank):
        for j in range(S.sig.rank):
            v = S.table[(i, j)]
            if not v.is_zero():
                report.records.append(
                    CheckRecord(
                        id=f"sae-bracket({S.sig.gens[i]},{S.sig.gens[j]})",
                        lhs=render_ldp(v),
                        rhs="-",
                        ok=True,
                    )
                )
    report.extend(check_pva(S))


def cmd_semidirect(ws: Workspace, args, seed, report: Report):
    lname, mname = _one(args, 2, "semidirect LCAD MODULE")
    L = ws.get(lname, "lcad").obj
    M = ws.get(mname, "module").obj
    if not isinstance(M, FreeLCAdModule):
        raise ConfalgError("semidirect needs a free lcad module")
    report.extend(check_module(L, M, seed=seed, samples=1))
    S = semidirect(L, M)
    report.extend(_table_records(S, "semidirect"))
    report.extend(check_lcad(S, seed=seed, samples=1))


def cmd_d(ws: Workspace, args, seed, report: Report):
    (name,) = _one(args, 1, "d COCHAIN")
    c = ws.get(name, "cochain").obj
    dc = c.d()
    if isinstance(dc, LCAdCochain):
        gnames = dc.L.gen_names
    else:
        gnames = list(dc.P.sig.gens)
    for t, v in sorted(dc.table.items()):
        key = ",".join(gnames[i] for i in t) if t else "()"
        report.records.append(
            CheckRecord(
                id=f"d[{key}]",
                lhs=dc.render_value(v),
                rhs="-",
                ok=True,
                degree=dc.degree,
            )
        )


def cmd_dsq(ws: Workspace, args, seed, report: Report):
    name, modref, kstr = _one(args, 3, "dsq (LCAD|PVA) MODULE K")
    k = int(kstr)
    if k > 2:
        raise ConfalgError("dsq caps stored degrees at 2 (targets at 3)")
    entry = ws.get(name)
    if entry.kind not in ("lcad", "pva"):
        raise ConfalgError("dsq needs an lcad or a pva")
    M = resolve_module(ws, modref, entry)
    from .cohom import dsq_check

    report.extend(dsq_check(entry.obj, M, k, seed=seed, count=3))


def cmd_phi(ws: Workspace, args, seed, report: Report):
    pname, modref, kstr = _one(args, 3, "phi PVA MODULE K")
    k = int(kstr)
    pentry = ws.get(pname, "pva")
    P = pentry.obj
    Mp = resolve_module(ws, modref, pentry)
    K = kahler_lcad(P)
    from .cohom import sample_cochains
    from .lcad import TransferredPVAModule

    Ml = TransferredPVAModule(P, Mp, K)
    for rep in ("quotient", "basic"):
        cochains = sample_cochains(P, Mp, k, rep, seed, count=2)
        for idx, gamma in enumerate(cochains):
            phi = phi_iso(gamma, K, Ml)
            back = phi_inv(phi, P, Mp)
            ok_rt = back.table == gamma.table
            lhs = phi_iso(gamma.d(), K, Ml)
            rhs = phi.d()
            ok_chain = lhs.table == rhs.table
            report.records.append(
                CheckRecord(
                    id=f"phi-roundtrip-{rep}-{idx}", lhs="id", rhs="id",
                    ok=ok_rt, degree=k,
                )
            )
            report.records.append(
                CheckRecord(
                    id=f"phi-chain-{rep}-{idx}",
                    lhs="Phi(d gamma)",
                    rhs="d Phi(gamma)",
                    ok=ok_chain,
                    degree=k,
                )
            )


def cmd_extension(ws: Workspace, args, seed, report: Report):
    lname, modref, wname = _one(args, 3, "extension LCAD MODULE COCYCLE")
    L = ws.get(lname, "lcad").obj
    entry = ws.get(lname)
    M = resolve_module(ws, modref, entry)
    omega = ws.get(wname, "cocycle").obj
    precheck = cocycle_check(L, M, omega)
    report.extend(precheck)
    if not all(r.ok for r in precheck):
        return
    if isinstance(M, TrivialLCAdModule):
        ext = TrivialExtension(L, omega)
        report.extend(ext.check(seed=seed, samples=1))
    elif isinstance(M, FreeLCAdModule):
        E = extension_from_cocycle(L, M, omega)
        report.extend(check_lcad(E, seed=seed, samples=1))
    else:
        raise ConfalgError("extensions take free or trivial coefficients")


def cmd_roundtrip(ws: Workspace, args, seed, report: Report):
    (name,) = _one(args, 1, "roundtrip (LAD|POISSON)")
    e = ws.get(name)
    if e.kind == "lad":
        ok = roundtrip_check(e.obj)
        report.records.append(
            CheckRecord(id=f"roundtrip({name})", lhs="quotient(current(F))",
                        rhs="F", ok=ok)
        )
    elif e.kind == "poisson":
        ok = jet_kahler_roundtrip(e.obj)
        report.records.append(
            CheckRecord(id=f"jet-kahler({name})", lhs="current(kahlerlad(P))",
                        rhs="kahler(jetpva(P))", ok=ok)
        )
    else:
        raise ConfalgError("roundtrip needs a lad or a poisson algebra")


if __name__ == "__main__":
    sys.exit(main())
