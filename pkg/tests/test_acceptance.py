"""Acceptance suite: every criterion at its stated budget, one line each.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines.
All identities are checked by exact symbolic equality of canonical forms.
"""

import json
import pathlib
import subprocess
import sys
import time
from contextlib import contextmanager
from random import Random

import pytest

from confalg.cohom import (
    CocycleData,
    LCAdCochain,
    PVACochain,
    TrivialExtension,
    cochain_sub,
    coboundary,
    cocycle_check,
    cocycle_shift,
    divide_partial_action,
    extension_equivalence,
    extension_from_cocycle,
    lnames,
    nonleibniz_commutator,
    p_star,
    partial_action,
    phi_inv,
    phi_iso,
    q_preimage,
    reduced_equal,
    skew_symmetrize,
)
from confalg.diffpoly import (
    AlgebraSig,
    DiffPoly,
    OpPoly,
    adjoint,
    d_total,
    op_compose,
    variational_deriv,
)
from confalg.freemod import OpVec
from confalg.jetcur import (
    LieAlgebroid,
    PoissonAlgebra,
    check_lad,
    current_lcad,
    jet_kahler_roundtrip,
    roundtrip_check,
)
from confalg.lamcalc import (
    Affine,
    LValue,
    adjoint_shifted,
    fresh_name,
    q_split,
    quot_normalize,
    shift_apply,
)
from confalg.lcad import (
    FreeLCAdModule,
    TransferredPVAModule,
    TrivialLCAdModule,
    check_lcad,
    check_lcad_samples,
    kahler_lcad,
    sae_pva,
)
from confalg.pva import AdjointPVAModule, PVAStructure, check_pva, pva_bracket
from confalg.sampling import sample_diffpoly, sample_lvalue_diffpoly, sample_oppoly

ROOT = pathlib.Path(__file__).resolve().parent.parent

SIG_U = AlgebraSig(("u",))
SIG_UC = AlgebraSig(("u",), ("c",))


def gfz():
    return PVAStructure(SIG_U, {(0, 0): LValue.mono(DiffPoly.one(SIG_U), ("l", 1))}, name="GFZ")


def virasoro():
    u = DiffPoly.gen(SIG_UC, 0)
    table = (
        LValue.const(u.dtot())
        + LValue.mono(u.smul(2), ("l", 1))
        + LValue.mono(DiffPoly.param(SIG_UC, "c"), ("l", 3))
    )
    return PVAStructure(SIG_UC, {(0, 0): table}, name="VirMagri")


@contextmanager
def criterion(n: int, budget_s: float, label: str):
    t0 = time.monotonic()
    ok = True
    try:
        yield
    except BaseException:
        ok = False
        raise
    finally:
        dt = time.monotonic() - t0
        verdict = "pass" if ok and dt < budget_s else "FAIL"
        print(f"ACCEPTANCE {n:2d} {verdict} ({dt:6.2f}s < {budget_s:g}s) {label}")
    assert dt < budget_s, f"criterion {n} exceeded its {budget_s}s budget ({dt:.1f}s)"


def test_criterion_01_pva_axiom_suite():
    for P in (gfz(), virasoro()):
        with criterion(1, 5.0, f"PVA axiom suite: {P.name}"):
            recs = check_pva(P)
            assert recs and all(r.ok for r in recs)
    with criterion(1, 5.0, "PVA axiom suite: mutated table fails with counterexample"):
        bad = PVAStructure(SIG_U, {(0, 0): LValue.const(DiffPoly.gen(SIG_U, 0))})
        recs = check_pva(bad)
        fails = [r for r in recs if not r.ok]
        assert fails
        assert fails[0].lhs and fails[0].rhs and fails[0].lhs != fails[0].rhs


def test_criterion_02_kahler_lcad():
    for P in (gfz(), virasoro()):
        with criterion(2, 30.0, f"Kahler LCAd of {P.name} passes, incl. condition (ii)"):
            K = kahler_lcad(P)
            recs = check_lcad(K, seed=2, samples=2)
            assert any("anchor" in r.id for r in recs)
            assert all(r.ok for r in recs)


def _basis_cochains_deg0(P, K, M, rep):
    u = DiffPoly.gen(P.sig, 0)
    return [LCAdCochain(K, M, 0, rep, {(): m}) for m in (u, u * u)]


def _basis_cochains_deg1(P, K, M, rep):
    sig = P.sig
    u = DiffPoly.gen(sig, 0)
    one = DiffPoly.one(sig)
    vals = [LValue.const(one), LValue.const(u)]
    if rep == "basic":
        vals += [LValue.mono(one, ("l1", 1)), LValue.mono(u, ("l1", 1))]
    return [LCAdCochain(K, M, 1, rep, {(0,): v}) for v in vals]


def test_criterion_03_dd_zero():
    for P in (gfz(), virasoro()):
        with criterion(3, 60.0, f"d o d = 0 on Omega({P.name}), adjoint coefficients"):
            K = kahler_lcad(P)
            M = TransferredPVAModule(P, AdjointPVAModule(P), K)
            rng = Random(3)
            for rep in ("quotient", "basic"):
                for c in _basis_cochains_deg0(P, K, M, rep):
                    assert c.d().d().is_zero(M.eq0_quot)
                for c in _basis_cochains_deg1(P, K, M, rep):
                    assert c.d().d().is_zero(M.eq0_quot)
                for _ in range(10):
                    names = lnames(1) if rep == "basic" else []
                    v = sample_lvalue_diffpoly(rng, P.sig, names or ["l1"])
                    if rep == "quotient":
                        v = v.eval_zero("l1")
                    c = LCAdCochain(K, M, 1, rep, {(0,): v})
                    assert c.d().d().is_zero(M.eq0_quot)


def _pva_sample_family(P, Mp, k, rep, rng):
    from itertools import product

    sig = P.sig
    out = []
    names = lnames(k) if rep == "basic" else lnames(k)[:-1]
    tuples = [t for t in product(range(sig.rank), repeat=k) if list(t) == sorted(t)]
    for trial in range(3):
        table = {}
        for t in tuples:
            if k == 0:
                table[t] = sample_diffpoly(rng, sig, max_terms=2)
                continue
            v = sample_lvalue_diffpoly(rng, sig, list(names))
            if k == 2:
                v = _skewize(v, rep)
            table[t] = v
        out.append(PVACochain(P, Mp, k, rep, table, validate=True))
    return out


def _skewize(v, rep):
    if rep == "basic":
        tmp = v.rename({"l1": "t"}).rename({"l2": "l1"}).rename({"t": "l2"})
        return v - tmp
    mirrored = quot_normalize(v.rename({"l1": "l2"}), ["l1", "l2"])
    return v - mirrored


def test_criterion_04_phi_chain_isomorphism():
    with criterion(4, 120.0, "Phi: chain isomorphism in all three representations, k in {0,1,2}"):
        for P in (gfz(), virasoro()):
            K = kahler_lcad(P)
            Mp = AdjointPVAModule(P)
            Ml = TransferredPVAModule(P, Mp, K)
            rng = Random(4)
            for rep in ("quotient", "basic"):
                for k in (0, 1, 2):
                    for gamma in _pva_sample_family(P, Mp, k, rep, rng):
                        phi = phi_iso(gamma, K, Ml)
                        assert phi_inv(phi, P, Mp).table == gamma.table
                        assert phi_iso(phi_inv(phi, P, Mp), K, Ml).table == phi.table
                        assert phi_iso(gamma.d(), K, Ml).table == phi.d().table
            # reduced representation: basic cochains modulo the derivation image
            for k in (0, 1, 2):
                for gamma in _pva_sample_family(P, Mp, k, "basic", rng):
                    phi = phi_iso(gamma, K, Ml)
                    assert reduced_equal(phi_iso(gamma.d(), K, Ml), phi.d())
                    assert reduced_equal(phi_inv(phi, P, Mp), gamma)
                    if k >= 1:
                        # the reduced differential is well defined: shifting the
                        # input by the derivation image does not move the class
                        pa = partial_action(gamma)
                        shifted = PVACochain(
                            P, Mp, k, "basic",
                            {t: gamma.table[t] + pa.table[t] for t in gamma.table},
                        )
                        assert reduced_equal(shifted.d(), gamma.d())
                        diff = cochain_sub(
                            phi_iso(shifted.d(), K, Ml), phi_iso(gamma.d(), K, Ml)
                        )
                        assert divide_partial_action(diff) is not None


def test_criterion_05_generators_lemma():
    for P in (gfz(), virasoro()):
        with criterion(5, 60.0, f"generators lemma samples on Omega({P.name})"):
            K = kahler_lcad(P)
            recs = check_lcad_samples(K, seed=5, samples=7)
            # 7 samples x 3 identities = 21 >= 20 seeded instances
            assert len(recs) >= 20
            assert all(r.ok for r in recs)


def test_criterion_06_reduced_plumbing():
    P = gfz()
    K = kahler_lcad(P)
    M = TransferredPVAModule(P, AdjointPVAModule(P), K)
    sig = P.sig
    with criterion(6, 30.0, "reduced-complex plumbing"):
        rng = Random(6)
        # derivation equivariance of the basic differential
        for _ in range(3):
            v = sample_lvalue_diffpoly(rng, sig, ["l1"])
            c = LCAdCochain(K, M, 1, "basic", {(0,): v})
            lhs = partial_action(c).d()
            rhs = partial_action(c.d())
            assert lhs.table == rhs.table
        # p o q = identity for k in {1,2,3}
        for k in (1, 2, 3):
            names = lnames(k)
            for _ in range(4):
                v = sample_lvalue_diffpoly(rng, sig, names[:-1])
                assert quot_normalize(q_split(v, names), names) == v
        # ker p* = image of the derivation action
        for k in (1, 2):
            v = sample_lvalue_diffpoly(rng, sig, lnames(k))
            if k == 2:
                v = _skewize_lcad(v)
            c = LCAdCochain(K, M, k, "basic", {tuple([0] * k): v})
            shifted = partial_action(c)
            assert p_star(shifted).is_zero()
            back = divide_partial_action(shifted)
            assert back is not None and back.table == c.table
            # a cochain with nonzero projection is not in the image
            if not p_star(c).is_zero():
                assert divide_partial_action(c) is None
        # the non-Leibniz commutator identity for 5 seeded multipliers
        for t in range(5):
            a = sample_diffpoly(rng, sig, max_terms=2, max_deg=2, max_order=1)
            v = sample_lvalue_diffpoly(rng, sig, ["l1"])
            c = LCAdCochain(K, M, 1, "basic", {(0,): v})
            recs = nonleibniz_commutator(c, a)
            assert all(r.ok for r in recs)


def _skewize_lcad(v):
    mirrored = v.rename({"l1": "t"}).rename({"l2": "l1"}).rename({"t": "l2"})
    return v - mirrored


def test_criterion_07_current_roundtrip():
    RX = AlgebraSig(("x",))
    one = DiffPoly.one(RX)
    x = DiffPoly.gen(RX, 0)
    cases = [
        LieAlgebroid(RX, 1, {}, {0: [one]}, name="TangentLine"),
        LieAlgebroid(RX, 2, {}, {}, name="Abelian2"),
        LieAlgebroid(RX, 1, {}, {0: [x]}, name="ScaleLine"),
    ]
    for F in cases:
        with criterion(7, 30.0, f"current LCAd round trip: {F.name}"):
            assert all(r.ok for r in check_lad(F))
            C = current_lcad(F)
            assert all(r.ok for r in check_lcad(C, seed=7, samples=1))
            assert roundtrip_check(F)


def test_criterion_08_jet_kahler_square():
    RXY = AlgebraSig(("x", "y"))
    x = DiffPoly.gen(RXY, 0)
    tables = [{}, {(0, 1): DiffPoly.one(RXY)}, {(0, 1): x}]
    for pi in tables:
        with criterion(8, 30.0, f"jet/Kahler square: pi = {pi and 'nonzero' or '0'}"):
            P = PoissonAlgebra(RXY, pi)
            assert jet_kahler_roundtrip(P)


def test_criterion_09_extensions():
    P = gfz()
    K = kahler_lcad(P)
    sig = P.sig
    one = DiffPoly.one(sig)
    with criterion(9, 60.0, "abelian extensions: cocycles, extensions, equivalences"):
        # the Virasoro-type central cocycle with trivial coefficients
        Mt = TrivialLCAdModule(K)
        w3 = CocycleData(K, Mt, {(0, 0): LValue.mono(one, ("l", 3))})
        assert all(r.ok for r in cocycle_check(K, Mt, w3))
        ext = TrivialExtension(K, w3)
        assert all(r.ok for r in ext.check(seed=9, samples=1))
        # the even power fails the skewsymmetry identity
        w2 = CocycleData(K, Mt, {(0, 0): LValue.mono(one, ("l", 2))})
        recs = cocycle_check(K, Mt, w2)
        assert any((not r.ok) and "skew" in r.id for r in recs)
        # coboundary-shifted cocycles give equivalent extensions
        Mf = FreeLCAdModule(K, 1, {(0, 0): LValue.zero()})
        w = OpVec.basis(sig, 1, 0)
        u = DiffPoly.gen(sig, 0)
        om1 = CocycleData(
            K, Mf, {(0, 0): LValue.const(w.dtot()) + LValue.mono(w.smul(2), ("l", 1))}
        )
        psi = [w.amul(u)]
        delta = coboundary(K, Mf, psi)
        om2 = cocycle_shift(om1, delta)
        assert all(r.ok for r in cocycle_check(K, Mf, om2))
        assert all(r.ok for r in extension_equivalence(K, Mf, om1, om2, psi))
        # d-closedness of the 2-cochain is equivalent to the cocycle identities
        rng = Random(9)
        for _ in range(5):
            raw = {
                (0, 0): LValue.mono(
                    OpVec.single(sig, 1, 0, OpPoly.of(sample_diffpoly(rng, sig, max_terms=1))),
                    ("l", rng.randint(0, 3)),
                )
            }
            om = skew_symmetrize(K, Mf, raw)
            ids_ok = all(r.ok for r in cocycle_check(K, Mf, om))
            d_ok = om.as_cochain().d().is_zero()
            assert ids_ok == d_ok


def test_criterion_10_sae_pva():
    with criterion(10, 30.0, "S_A(E) for Omega(GFZ) and a rank-1 current LCAd"):
        K = kahler_lcad(gfz())
        S = sae_pva(K)
        assert all(r.ok for r in check_pva(S))
        RX = AlgebraSig(("x",))
        F = LieAlgebroid(RX, 1, {}, {0: [DiffPoly.one(RX)]}, name="TangentLine")
        S2 = sae_pva(current_lcad(F))
        assert all(r.ok for r in check_pva(S2))


def test_criterion_11_kernel_oracles():
    with criterion(11, 10.0, "kernel oracles: adjoint, Euler, duality (50 samples each)"):
        rng = Random(11)
        sig = SIG_UC
        for _ in range(50):
            a = sample_oppoly(rng, sig)
            b = sample_oppoly(rng, sig)
            assert adjoint(adjoint(a)) == a
            assert adjoint(op_compose(a, b)) == op_compose(adjoint(b), adjoint(a))
        for _ in range(50):
            p = sample_diffpoly(rng, sig)
            assert variational_deriv(d_total(p), 0).is_zero()
        for _ in range(50):
            a = sample_oppoly(rng, sig)
            phi = sample_lvalue_diffpoly(rng, sig, ["l"])
            x = fresh_name()
            left = adjoint_shifted(
                a, "l", phi.subst_affine("l", Affine.of(("l", 1), (x, 1))), x
            )
            star = phi.subst_affine("l", Affine.of(("l", -1), dpart=-1))
            right = shift_apply(a, [("l", 1)], star)
            back = right.subst_affine("l", Affine.of(("l", -1), dpart=-1))
            assert left == back


def test_criterion_12_cli_determinism():
    with criterion(12, 120.0, "CLI determinism and golden files"):
        golden = pathlib.Path(__file__).resolve().parent / "golden"
        core = str(ROOT / "catalogue" / "core.cfa")
        geo = str(ROOT / "catalogue" / "geometry.cfa")
        cases = [
            ("check_gfz", ["check", "GFZ", "--seed", "0", core]),
            ("dsq_k", ["dsq", "K", "adjoint", "1", "--seed", "5", core]),
            ("phi_gfz", ["phi", "GFZ", "adjoint", "1", "--seed", "5", core]),
            ("current_affine", ["current", "Affine1", "--seed", "0", geo]),
        ]
        for name, args in cases:
            for fmt, ext in (("text", "txt"), ("json", "json")):
                outs = []
                for _ in range(2):
                    r = subprocess.run(
                        [sys.executable, "-m", "confalg.cli"] + args + ["--format", fmt],
                        capture_output=True,
                        cwd=ROOT,
                    )
                    assert r.returncode == 0, r.stderr.decode()
                    outs.append(r.stdout)
                assert outs[0] == outs[1]
                assert outs[0] == (golden / f"{name}.{ext}").read_bytes()
        # every golden file corresponds to a catalogue command and is current
        assert len(list(golden.glob("*.txt"))) == len(list(golden.glob("*.json")))
        assert len(list(golden.glob("*.txt"))) >= 19
