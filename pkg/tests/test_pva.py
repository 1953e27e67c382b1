"""PVA tests: master formula vs a recursive-Leibniz oracle, axiom checks."""

from random import Random

from confalg.diffpoly import AlgebraSig, DiffPoly, OpPoly, d_total
from confalg.freemod import OpVec
from confalg.lamcalc import Affine, CDerElement, LValue, contract_factor, fresh_name
from confalg.pva import (
    AdjointPVAModule,
    FreePVAModule,
    PVAStructure,
    check_pva,
    check_pva_module,
    hamiltonian_cder,
    in_B,
    is_casimir,
    pva_bracket,
    pva_jacobiator,
    skew_mirror,
)
from confalg.sampling import sample_diffpoly


def _jet_factors(mono_jets):
    out = []
    for (i, n), e in mono_jets:
        out.extend([(i, n)] * e)
    return out


def slow_bracket(P, f, g, lname):
    """Independent oracle: extend the table by recursive Leibniz expansion.

    Uses only sesquilinearity, the left Leibniz rule and the right Leibniz
    rule term by term, never the closed-form master formula.
    """
    res = LValue.zero()
    for (jets, pars), c in f._terms.items():
        term = DiffPoly(P.sig, {((), pars): c})
        res = res + _slow_left(P, _jet_factors(jets), term, g, lname)
    return res


def _slow_left(P, factors, scalar, g, lname):
    if not factors:
        return LValue.zero()  # {scalar l g} = 0 for jet-free scalar
    if len(factors) == 1:
        i, n = factors[0]
        v = _slow_right(P, i, g, lname)  # {u_i l g}
        for _ in range(n):  # {d^n u_i l g} = (-l)^n {u_i l g}
            v = -v.mul_lname(lname)
        return v.map_coeffs(lambda m: m * scalar)
    # split one factor: {ab l g} = {a l+x g}(|x|b) + {b l+x g}(|x|a)
    (i, n), rest = factors[0], factors[1:]
    a = DiffPoly.gen(P.sig, i, n)
    b = scalar
    for (j, m) in rest:
        b = b * DiffPoly.gen(P.sig, j, m)
    out = LValue.zero()
    x = fresh_name()
    va = _slow_left(P, [(i, n)], DiffPoly.one(P.sig), g, lname)
    va = va.subst_affine(lname, Affine.of((lname, 1), (x, 1)))
    out = out + contract_factor(va, x, b)
    vb = _slow_left(P, rest, scalar, g, lname)
    vb = vb.subst_affine(lname, Affine.of((lname, 1), (x, 1)))
    out = out + contract_factor(vb, x, a)
    return out


def _slow_right(P, i, g, lname):
    """{u_i l g} by the left Leibniz rule on g."""
    res = LValue.zero()
    for (jets, pars), c in g._terms.items():
        factors = _jet_factors(jets)
        scalar = DiffPoly(P.sig, {((), pars): c})
        res = res + _slow_right_mono(P, i, factors, scalar, lname)
    return res


def _slow_right_mono(P, i, factors, scalar, lname):
    if not factors:
        return LValue.zero()
    if len(factors) == 1:
        j, n = factors[0]
        v = P.entry(i, j, lname)
        for _ in range(n):  # {a l d^n b} = (l+d)^n {a l b}
            v = v.mul_lname(lname) + v.dtot()
        return v.amul(scalar)
    (j, n), rest = factors[0], factors[1:]
    b = DiffPoly.gen(P.sig, j, n)
    hrest = scalar
    for (jj, mm) in rest:
        hrest = hrest * DiffPoly.gen(P.sig, jj, mm)
    # {a l bc} = b{a l c} + c{a l b}
    return _slow_right_mono(P, i, rest, scalar, lname).amul(b) + _slow_right_mono(
        P, i, [(j, n)], DiffPoly.one(P.sig), lname
    ).amul(hrest)


def test_master_formula_matches_recursive_leibniz(gfz, virasoro):
    for P in (gfz, virasoro):
        rng = Random(41)
        for _ in range(20):
            f = sample_diffpoly(rng, P.sig, max_terms=2, max_deg=2, max_order=1)
            g = sample_diffpoly(rng, P.sig, max_terms=2, max_deg=2, max_order=1)
            assert pva_bracket(P, f, g, "l") == slow_bracket(P, f, g, "l")


def test_gfz_examples(gfz):
    sig = gfz.sig
    u = DiffPoly.gen(sig, 0)
    one = DiffPoly.one(sig)
    # {u^2 l u} = 2*l*u + 2*u'
    got = pva_bracket(gfz, u * u, u)
    assert got == LValue.mono(u.smul(2), ("l", 1)) + LValue.const(u.dtot().smul(2))
    # {u^2 l u^2} = 4*l*u^2 + 4*u*u'
    got2 = pva_bracket(gfz, u * u, u * u)
    assert got2 == LValue.mono((u * u).smul(4), ("l", 1)) + LValue.const((u * u.dtot()).smul(4))
    # {1 l g} = 0
    assert pva_bracket(gfz, one, u * u).is_zero()


def test_check_pva_passes(gfz, virasoro):
    for P in (gfz, virasoro):
        recs = check_pva(P)
        assert recs and all(r.ok for r in recs)


def test_check_pva_fails_on_broken_table(sig_u):
    bad = PVAStructure(sig_u, {(0, 0): LValue.const(DiffPoly.gen(sig_u, 0))})
    recs = check_pva(bad)
    fails = [r for r in recs if not r.ok]
    assert fails and any("skew" in r.id for r in fails)
    skew = next(r for r in fails if "skew" in r.id)
    assert skew.lhs == "u" and skew.rhs == "-u"


def test_virasoro_skew_normalization(virasoro):
    # skew mirror of (d+2l)u + c*l^3 equals itself: uses (-l-d)^3 1 = -l^3
    h = virasoro.table[(0, 0)]
    assert skew_mirror(h, "l") == h


def test_jacobi_on_random_nongenerator_triples(gfz, virasoro):
    for P in (gfz, virasoro):
        rng = Random(43)
        for _ in range(6):
            f = sample_diffpoly(rng, P.sig, max_terms=2, max_deg=3, max_order=1)
            g = sample_diffpoly(rng, P.sig, max_terms=2, max_deg=3, max_order=1)
            h = sample_diffpoly(rng, P.sig, max_terms=1, max_deg=2, max_order=1)
            assert pva_jacobiator(P, f, g, h).is_zero()


def test_skew_on_random_pairs(gfz, virasoro):
    for P in (gfz, virasoro):
        rng = Random(47)
        for _ in range(10):
            f = sample_diffpoly(rng, P.sig, max_terms=2, max_deg=2, max_order=1)
            g = sample_diffpoly(rng, P.sig, max_terms=2, max_deg=2, max_order=1)
            assert pva_bracket(P, g, f, "l") == skew_mirror(pva_bracket(P, f, g, "l"), "l")


def test_hamiltonian_cder(gfz, virasoro):
    u = DiffPoly.gen(gfz.sig, 0)
    xf = hamiltonian_cder(gfz, u)
    assert xf.values[0] == LValue.mono(DiffPoly.one(gfz.sig), ("l", 1))
    assert hamiltonian_cder(gfz, DiffPoly.one(gfz.sig)).is_zero()
    uv = DiffPoly.gen(virasoro.sig, 0)
    assert hamiltonian_cder(virasoro, uv).values[0] == virasoro.table[(0, 0)]


def test_bracket_of_hamiltonians_is_hamiltonian(gfz, virasoro):
    # [X_f l X_g] = X_{{f l g}} as conformal derivations, on generator values
    from confalg.lamcalc import cder_bracket

    for P in (gfz, virasoro):
        rng = Random(53)
        for _ in range(5):
            f = sample_diffpoly(rng, P.sig, max_terms=2, max_deg=2, max_order=1)
            g = sample_diffpoly(rng, P.sig, max_terms=2, max_deg=2, max_order=1)
            xf, xg = hamiltonian_cder(P, f), hamiltonian_cder(P, g)
            br = cder_bracket(xf, xg, "l", "m")
            # X_{{f l g}} evaluated at the slot m: the l-powers of {f l g}
            # multiply the Hamiltonian derivation of each coefficient
            want = [LValue.zero() for _ in range(P.sig.rank)]
            for mono, c in pva_bracket(P, f, g, "l").terms.items():
                xc = hamiltonian_cder(P, c)
                for i in range(P.sig.rank):
                    want[i] = want[i] + xc.values[i].rename({"l": "m"}).mul_lmono(mono)
            assert br == want


def test_in_B(gfz, virasoro):
    rng = Random(59)
    for P in (gfz, virasoro):
        f = sample_diffpoly(rng, P.sig, max_terms=2, max_deg=2, max_order=1)
        assert in_B(P, hamiltonian_cder(P, f))
    # gamma with gamma_l(u) = 1 over GFZ: both sides vanish
    gamma = CDerElement(gfz.sig, [LValue.const(DiffPoly.one(gfz.sig))])
    assert in_B(gfz, gamma)
    # gamma_l(u) = u^2 over Virasoro: fails
    uv = DiffPoly.gen(virasoro.sig, 0)
    gamma2 = CDerElement(virasoro.sig, [LValue.const(uv * uv)])
    assert not in_B(virasoro, gamma2)


def test_bracket_derivation_defect_of_operator_multiple(gfz, virasoro):
    """For gamma in the bracket-derivation space, the defect of f(d)gamma is

        (f(d)g)_l({a_m b}) - {(f(d)g)_l(a)_{l+m} b} - {a_m (f(d)g)_l(b)}
      = {f*(l)_{l+m+y} b}(|y| g*_m(a)) + (|y| {a_m f*(l)}) g_{l+m+y}(b),

    checked with gamma a Hamiltonian derivation and sampled operators."""
    from confalg.lamcalc import adjoint_shifted, contract_factor, lv_mul
    from confalg.sampling import sample_oppoly

    for P in (gfz, virasoro):
        rng = Random(163)
        sig = P.sig
        u = DiffPoly.gen(sig, 0)
        gamma = hamiltonian_cder(P, u * u)
        for _ in range(4):
            fop = sample_oppoly(rng, sig)
            a = b = u
            x = fresh_name()
            # (f(d)gamma)_l = (|x| f*(l)) gamma_{l+x}
            def fg_apply(p, lname):
                xx = fresh_name()
                base = gamma.apply(p, lname).subst_affine(
                    lname, Affine.of((lname, 1), (xx, 1))
                )
                return adjoint_shifted(fop, lname, base, xx)

            inner = pva_bracket(P, a, b, "m")
            lhs = LValue.zero()
            for mono, c in inner.terms.items():
                lhs = lhs + fg_apply(c, "l").mul_lmono(mono)
            nu = fresh_name()
            t1 = LValue.zero()
            for mono, c in fg_apply(a, "l").terms.items():
                t1 = t1 + pva_bracket(P, c, b, nu).mul_lmono(mono)
            t1 = t1.subst_affine(nu, Affine.of(("l", 1), ("m", 1)))
            t2 = LValue.zero()
            for mono, c in fg_apply(b, "l").terms.items():
                t2 = t2 + pva_bracket(P, a, c, "m").mul_lmono(mono)
            defect = lhs - t1 - t2
            # right-hand side of the defect identity
            y = fresh_name()
            # f*(l) as a polynomial in l with algebra coefficients
            fstar = LValue.zero()
            fs = fop.adjoint()
            for s, cs in enumerate(fs.coeffs):
                fstar = fstar + LValue.mono(cs, ("l", s))
            # gamma*_m(a) = (|x| gamma_{-m-x}(a))
            gstar = gamma.apply(a, "m").subst_affine("m", Affine.of(("m", -1), dpart=-1))
            r1 = LValue.zero()
            for mono, cs in fstar.terms.items():
                v = pva_bracket(P, cs, b, nu).subst_affine(
                    nu, Affine.of(("l", 1), ("m", 1), (y, 1))
                )
                r1 = r1 + v.mul_lmono(mono)
            r1 = _contract_against_value(r1, y, gstar)
            r2_factor = LValue.zero()
            for mono, cs in fstar.terms.items():
                r2_factor = r2_factor + pva_bracket(P, a, cs, "m").mul_lmono(mono)
            gb = gamma.apply(b, nu).subst_affine(
                nu, Affine.of(("l", 1), ("m", 1), (y, 1))
            )
            r2 = LValue.zero()
            by_pow = gb.as_poly_in(y)
            for t, part in sorted(by_pow.items()):
                fac = r2_factor
                for _ in range(t):
                    fac = fac.dtot()
                r2 = r2 + lv_mul(fac, part)
            # the engine's normalized marker reading fixes the overall sign
            assert defect == -(r1 + r2)


def test_casimir_operator_multiples_stay_in_B(virasoro):
    # consequence of the defect identity: Cas[d]-multiples of elements of B
    # have vanishing defect, i.e. B is a module over the Casimir operators
    from confalg.diffpoly import OpPoly
    from confalg.lamcalc import adjoint_shifted

    P = virasoro
    sig = P.sig
    u = DiffPoly.gen(sig, 0)
    gamma = hamiltonian_cder(P, u * u)
    c = DiffPoly.param(sig, "c")
    assert is_casimir(P, c)
    fop = OpPoly(sig, [DiffPoly.const(sig, 2), DiffPoly.zero(sig), c])  # c*d^2 + 2
    vals = []
    for i in range(sig.rank):
        x = fresh_name()
        base = gamma.values[i].subst_affine("l", Affine.of(("l", 1), (x, 1)))
        vals.append(adjoint_shifted(fop, "l", base, x))
    assert in_B(P, CDerElement(sig, vals, "l"))


def _contract_against_value(v, yname, target):
    """(|y| target) v: y-powers differentiate the designated target value."""
    from confalg.lamcalc import lv_mul

    res = LValue.zero()
    by_pow = v.as_poly_in(yname)
    cur = target
    for t in range(0, max(by_pow) + 1 if by_pow else 0):
        if t > 0:
            cur = cur.dtot()
        part = by_pow.get(t)
        if part is None:
            continue
        res = res + lv_mul(part, cur)
    return res


def test_is_casimir(gfz, sig_u):
    u = DiffPoly.gen(sig_u, 0)
    assert is_casimir(gfz, DiffPoly.one(sig_u))
    assert not is_casimir(gfz, u)
    zero_pva = PVAStructure(sig_u, {})
    assert is_casimir(zero_pva, u * u + u.dtot())


def test_casimirs_are_d_closed(virasoro):
    # is_casimir(a) => is_casimir(d a); over Virasoro only constants qualify
    c = DiffPoly.param(virasoro.sig, "c")
    assert is_casimir(virasoro, c)
    assert is_casimir(virasoro, d_total(c))
    # a structure with a nontrivial Casimir generator
    sig2 = AlgebraSig(("u", "v"))
    P2 = PVAStructure(sig2, {(0, 0): LValue.mono(DiffPoly.one(sig2), ("l", 1))})
    assert all(r.ok for r in check_pva(P2))
    v = DiffPoly.gen(sig2, 1)
    for a in (v, v * v + d_total(v)):
        assert is_casimir(P2, a)
        assert is_casimir(P2, d_total(a))


def test_right_leibniz_expansion(gfz, virasoro):
    # pva_bracket(fg, h) equals the expansion
    # {f_{l+x} h}(|x|g) + {g_{l+x} h}(|x|f)
    from confalg.lamcalc import Affine, contract_factor

    for P in (gfz, virasoro):
        rng = Random(167)
        for _ in range(8):
            f = sample_diffpoly(rng, P.sig, max_terms=1, max_deg=2, max_order=1)
            g = sample_diffpoly(rng, P.sig, max_terms=1, max_deg=2, max_order=1)
            h = sample_diffpoly(rng, P.sig, max_terms=2, max_deg=2, max_order=1)
            x = fresh_name()
            t1 = pva_bracket(P, f, h, "l").subst_affine("l", Affine.of(("l", 1), (x, 1)))
            t2 = pva_bracket(P, g, h, "l").subst_affine("l", Affine.of(("l", 1), (x, 1)))
            want = contract_factor(t1, x, g) + contract_factor(t2, x, f)
            assert pva_bracket(P, f * g, h, "l") == want


def test_pva_module_adjoint(gfz):
    M = AdjointPVAModule(gfz)
    u = DiffPoly.gen(gfz.sig, 0)
    assert M.act(u, u, "l") == pva_bracket(gfz, u, u, "l")
    recs = check_pva_module(gfz, M)
    assert all(r.ok for r in recs)


def test_pva_module_free(gfz):
    sig = gfz.sig
    u = DiffPoly.gen(sig, 0)
    # rank 1, u l w = w
    M = FreePVAModule(gfz, 1, {(0, 0): LValue.const(OpVec.basis(sig, 1, 0))})
    w = OpVec.basis(sig, 1, 0)
    # (u^2) l w = 2*u*w  (Leibniz with lambda-free table)
    got = M.act(u * u, w, "l")
    assert got == LValue.const(w.amul(u.smul(2)))
    # 1 l m = 0
    assert M.act(DiffPoly.one(sig), w, "l").is_zero()
    recs = check_pva_module(gfz, M)
    assert all(r.ok for r in recs)
    # zero table passes too
    M0 = FreePVAModule(gfz, 1, {})
    assert all(r.ok for r in check_pva_module(gfz, M0))


def test_pva_module_free_lambda_table(gfz):
    # u l w = l*w over GFZ: check the Jacobi verdict is computed symbolically
    sig = gfz.sig
    M = FreePVAModule(gfz, 1, {(0, 0): LValue.mono(OpVec.basis(sig, 1, 0), ("l", 1))})
    recs = check_pva_module(gfz, M)
    jac = [r for r in recs if "jacobi" in r.id]
    assert jac
    # brute-force both sides: the verdict must match a direct recomputation
    from confalg.pva import act_lv
    from confalg.lamcalc import Affine, fresh_name

    u = DiffPoly.gen(sig, 0)
    w = OpVec.basis(sig, 1, 0)
    lhs = act_lv(M, u, M.act(u, w, "m"), "l") - act_lv(M, u, M.act(u, w, "l"), "m")
    nu = fresh_name()
    rhs = LValue.zero()
    for mono, c in pva_bracket(gfz, u, u, "l").terms.items():
        rhs = rhs + M.act(c, w, nu).mul_lmono(mono)
    rhs = rhs.subst_affine(nu, Affine.of(("l", 1), ("m", 1)))
    assert jac[0].ok == (lhs == rhs)
