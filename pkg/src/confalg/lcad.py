"""Lie conformal algebroid structures on free A[d]-modules.

An LCAdStructure holds a bracket table B[a][b] = [e_a l e_b] with values in
the free module, and an anchor table T[a][i] = theta(e_a)_l(u_i) with values
in the algebra.  The bracket on arbitrary elements is the extension of the
generator table by the total formula

    [a(d)u l b(d)v] = (|x| a*(l)) b(l+x+y) (|y| [u_{l+x} v])
                    + (|x| a*(l)) theta(u)_{l+x}(b(y)) (|y| v)
                    - b(l+x+y) (|y| theta(v)*_{l+x}(a(x))) (|x| u),

and the anchor on arbitrary elements is the A[d]-module extension of the
generator rows.  The axiom checker follows the generators lemma: the
skewsymmetry, Jacobi and anchor-compatibility identities are verified on
generator tuples, and sampled operator multiples exercise the lemma's
extension clauses.
"""

from __future__ import annotations

from random import Random

from .diffpoly import (
    AlgebraSig,
    DiffPoly,
    OpPoly,
    partial_deriv,
    render_diffpoly,
)
from .errors import SignatureMismatch
from .freemod import OpVec, in_partial_image_vec
from .lamcalc import (
    Affine,
    CDerElement,
    LValue,
    adjoint_shifted,
    cder_apply,
    cder_bracket,
    contract_factor,
    contract_module,
    fresh_name,
    lv_mul,
    render_lvalue,
    shift_apply,
)
from .pva import PVAStructure, TABLE_VAR, pva_bracket, render_ldp
from .report import CheckRecord
from .sampling import sample_diffpoly, sample_oppoly

EElement = OpVec


def apply_op_elem(q: OpPoly, m):
    """q(d) m for any carrier implementing amul/dtot: sum q_j d^j(m)."""
    res = None
    cur = m
    for j, qj in enumerate(q.coeffs):
        if j > 0:
            cur = cur.dtot()
        if qj.is_zero():
            continue
        t = cur.amul(qj)
        res = t if res is None else res + t
    return res if res is not None else m.amul(DiffPoly.zero(q.sig))


class LCAdStructure:
    """Finite presentation of an LCAd on a free module of rank m."""

    def __init__(
        self,
        sig: AlgebraSig,
        rank: int,
        btable: dict[tuple[int, int], LValue],
        atable: dict[tuple[int, int], LValue],
        gen_names: list[str] | None = None,
        name: str = "",
    ):
        self.sig = sig
        self.rank = rank
        self.name = name
        self.gen_names = gen_names or [f"e{a + 1}" for a in range(rank)]
        self.btable: dict[tuple[int, int], LValue] = {}
        self.atable: dict[tuple[int, int], LValue] = {}
        for a in range(rank):
            for b in range(rank):
                self.btable[(a, b)] = btable.get((a, b), LValue.zero())
            for i in range(sig.rank):
                self.atable[(a, i)] = atable.get((a, i), LValue.zero())

    # ----- anchors ---------------------------------------------------------

    def anchor_row(self, a: int) -> list[LValue]:
        return [self.atable[(a, i)] for i in range(self.sig.rank)]

    def anchor_gen(self, a: int, f: DiffPoly, lname: str) -> LValue:
        """theta(e_a)_l(f) by the conformal-derivation extension of the row."""
        return cder_apply(self.anchor_row(a), TABLE_VAR, f, lname)

    def bracket_entry(self, a: int, b: int, lname: str) -> LValue:
        v = self.btable[(a, b)]
        return v if lname == TABLE_VAR else v.rename({TABLE_VAR: lname})

    def basis(self, a: int) -> OpVec:
        return OpVec.basis(self.sig, self.rank, a)

    def render_vec(self, m: OpVec) -> str:
        return m.render(self.gen_names)

    def render_lv(self, v: LValue) -> str:
        return render_lvalue(v, self.render_vec)


def anchor_apply(L: LCAdStructure, v: OpVec, f: DiffPoly, lname: str) -> LValue:
    """theta(v)_l(f) for arbitrary v, via the A[d]-module action on CDer."""
    if v.sig != L.sig or f.sig != L.sig:
        raise SignatureMismatch("arguments not over the structure's algebra")
    res = LValue.zero()
    for a, p in enumerate(v.comps):
        if p.is_zero():
            continue
        x = fresh_name()
        inner = L.anchor_gen(a, f, lname).subst_affine(lname, Affine.of((lname, 1), (x, 1)))
        res = res + adjoint_shifted(p, lname, inner, x)
    return res


def anchor_apply_lv(L: LCAdStructure, v: OpVec, w: LValue, lname: str) -> LValue:
    """theta(v)_l applied over the DiffPoly coefficients of an LValue."""
    res = LValue.zero()
    for mono, c in w.terms.items():
        res = res + anchor_apply(L, v, c, lname).mul_lmono(mono)
    return res


def anchor_star(L: LCAdStructure, v: OpVec, f: DiffPoly, lname: str) -> LValue:
    """theta(v)*_l(f): the right conformal derivation dual to the anchor."""
    return anchor_apply(L, v, f, lname).subst_affine(lname, Affine.of((lname, -1), dpart=-1))


def lcad_bracket(L: LCAdStructure, v: OpVec, w: OpVec, lname: str) -> LValue:
    """[v_l w] extending the generator table by the total formula."""
    res = LValue.zero()
    for a, p in enumerate(v.comps):
        if p.is_zero():
            continue
        for b, q in enumerate(w.comps):
            if q.is_zero():
                continue
            x = fresh_name()
            # F(x) = [e_a_{l+x} b(d)e_b]: condition (i) at the shifted variable
            base = L.bracket_entry(a, b, lname).subst_affine(
                lname, Affine.of((lname, 1), (x, 1))
            )
            F = shift_apply(q, [(lname, 1), (x, 1)], base)
            for j, qj in enumerate(q.coeffs):
                if qj.is_zero():
                    continue
                av = L.anchor_gen(a, qj, lname).subst_affine(
                    lname, Affine.of((lname, 1), (x, 1))
                )
                mel = OpVec.single(L.sig, L.rank, b, OpPoly.d(L.sig, j) if j else OpPoly.one(L.sig))
                F = F + lv_mul(av, LValue.const(mel))
            res = res + adjoint_shifted(p, lname, F, x)
            # - b(l+x+y) (|y| theta(e_b)*_{l+x}(a(x))) (|x| e_a)
            x2 = fresh_name()
            inner3 = LValue.zero()
            for m, pm in enumerate(p.coeffs):
                if pm.is_zero():
                    continue
                nu = fresh_name()
                t = L.anchor_gen(b, pm, nu).subst_affine(
                    nu, Affine.of((lname, -1), (x2, -1), dpart=-1)
                )
                inner3 = inner3 + t.mul_lname(x2, m)
            if not inner3.is_zero():
                W = shift_apply(q, [(lname, 1), (x2, 1)], inner3)
                res = res - contract_module(W, x2, L.basis(a))
    return res


def bracket_lv_right(L: LCAdStructure, v: OpVec, w: LValue, lname: str) -> LValue:
    res = LValue.zero()
    for mono, c in w.terms.items():
        res = res + lcad_bracket(L, v, c, lname).mul_lmono(mono)
    return res


def bracket_lv_left(L: LCAdStructure, v: LValue, w: OpVec, nu: str) -> LValue:
    res = LValue.zero()
    for mono, c in v.terms.items():
        res = res + lcad_bracket(L, c, w, nu).mul_lmono(mono)
    return res


def lcad_jacobiator(
    L: LCAdStructure, u: OpVec, v: OpVec, w: OpVec, lname: str = "l", mname: str = "m"
) -> LValue:
    """J_{l,m}(u,v,w) = [u_l [v_m w]] - [v_m [u_l w]] - [[u_l v]_{l+m} w]."""
    t1 = bracket_lv_right(L, u, lcad_bracket(L, v, w, mname), lname)
    t2 = bracket_lv_right(L, v, lcad_bracket(L, u, w, lname), mname)
    nu = fresh_name()
    t3 = bracket_lv_left(L, lcad_bracket(L, u, v, lname), w, nu)
    t3 = t3.subst_affine(nu, Affine.of((lname, 1), (mname, 1)))
    return t1 - t2 - t3


def skew_mirror_vec(v: LValue, lname: str) -> LValue:
    return -v.subst_affine(lname, Affine.of((lname, -1), dpart=-1))


def anchor_commutator(
    L: LCAdStructure, u: OpVec, v: OpVec, f: DiffPoly, lname: str, mname: str
) -> LValue:
    """theta(u)_l(theta(v)_{m-l}(f)) - theta(v)_{m-l}(theta(u)_l(f))."""
    nu = fresh_name()
    t1 = anchor_apply_lv(L, u, anchor_apply(L, v, f, nu), lname)
    t1 = t1.subst_affine(nu, Affine.of((mname, 1), (lname, -1)))
    t2 = anchor_apply_lv(L, v, anchor_apply(L, u, f, lname), nu)
    t2 = t2.subst_affine(nu, Affine.of((mname, 1), (lname, -1)))
    return t1 - t2


def anchor_of_bracket(
    L: LCAdStructure, u: OpVec, v: OpVec, f: DiffPoly, lname: str, mname: str
) -> LValue:
    """theta([u_l v])_m(f)."""
    res = LValue.zero()
    nu = fresh_name()
    for mono, c in lcad_bracket(L, u, v, lname).terms.items():
        res = res + anchor_apply(L, c, f, nu).mul_lmono(mono)
    return res.rename({nu: mname})


def check_lcad(L: LCAdStructure, seed: int = 0, samples: int = 2) -> list[CheckRecord]:
    """Generator-table axioms plus sampled operator-multiple instances."""
    records: list[CheckRecord] = []
    names = L.gen_names
    for a in range(L.rank):
        for b in range(L.rank):
            lhs = L.bracket_entry(b, a, TABLE_VAR)
            rhs = skew_mirror_vec(L.bracket_entry(a, b, TABLE_VAR), TABLE_VAR)
            records.append(
                CheckRecord(
                    id=f"lcad-skew({names[b]},{names[a]})",
                    lhs=L.render_lv(lhs),
                    rhs=L.render_lv(rhs),
                    ok=lhs == rhs,
                )
            )
    for a in range(L.rank):
        for b in range(L.rank):
            for i in range(L.sig.rank):
                f = DiffPoly.gen(L.sig, i)
                lhs = anchor_of_bracket(L, L.basis(a), L.basis(b), f, "l", "m")
                rhs = anchor_commutator(L, L.basis(a), L.basis(b), f, "l", "m")
                records.append(
                    CheckRecord(
                        id=f"lcad-anchor({names[a]},{names[b]};{L.sig.gens[i]})",
                        lhs=render_ldp(lhs),
                        rhs=render_ldp(rhs),
                        ok=lhs == rhs,
                    )
                )
    for a in range(L.rank):
        for b in range(L.rank):
            for c in range(L.rank):
                jac = lcad_jacobiator(L, L.basis(a), L.basis(b), L.basis(c))
                records.append(
                    CheckRecord(
                        id=f"lcad-jacobi({names[a]},{names[b]},{names[c]})",
                        lhs=L.render_lv(jac),
                        rhs="0",
                        ok=jac.is_zero(),
                    )
                )
    if samples:
        records.extend(check_lcad_samples(L, seed, samples))
    return records


def check_lcad_samples(L: LCAdStructure, seed: int, samples: int) -> list[CheckRecord]:
    """The generators lemma, executable form: operator multiples of generators."""
    rng = Random(seed)
    records: list[CheckRecord] = []
    for t in range(samples):
        u = OpVec.single(L.sig, L.rank, rng.randrange(L.rank), sample_oppoly(rng, L.sig))
        v = OpVec.single(L.sig, L.rank, rng.randrange(L.rank), sample_oppoly(rng, L.sig))
        w = OpVec.single(L.sig, L.rank, rng.randrange(L.rank), sample_oppoly(rng, L.sig))
        lhs = lcad_bracket(L, v, u, "l")
        rhs = skew_mirror_vec(lcad_bracket(L, u, v, "l"), "l")
        records.append(
            CheckRecord(
                id=f"lcad-skew(sample{t})",
                lhs=L.render_lv(lhs),
                rhs=L.render_lv(rhs),
                ok=lhs == rhs,
            )
        )
        f = sample_diffpoly(rng, L.sig, max_terms=1, max_deg=1, max_order=1)
        lhs2 = anchor_of_bracket(L, u, v, f, "l", "m")
        rhs2 = anchor_commutator(L, u, v, f, "l", "m")
        records.append(
            CheckRecord(
                id=f"lcad-anchor(sample{t})",
                lhs=render_ldp(lhs2),
                rhs=render_ldp(rhs2),
                ok=lhs2 == rhs2,
            )
        )
        jac = lcad_jacobiator(L, u, v, w)
        records.append(
            CheckRecord(
                id=f"lcad-jacobi(sample{t})",
                lhs=L.render_lv(jac),
                rhs="0",
                ok=jac.is_zero(),
            )
        )
    return records


# ---------------------------------------------------------------------------
# Kahler differentials


def kahler_d(sig: AlgebraSig, f: DiffPoly) -> OpVec:
    """d(f) = sum (df/du_i^(n)) d^n du_i in the free basis of Kahler forms."""
    comps = []
    for i in range(sig.rank):
        orders = sorted({n for (j, n) in f.jet_support() if j == i})
        cs = [DiffPoly.zero(sig)] * (max(orders) + 1 if orders else 0)
        for n in orders:
            cs[n] = partial_deriv(f, i, n)
        comps.append(OpPoly(sig, cs))
    return OpVec(sig, comps)


def kahler_lcad(P: PVAStructure, name: str = "") -> LCAdStructure:
    """The Kahler-differential LCAd of a PVA: B = d of the table, anchor = the table."""
    sig = P.sig
    btable: dict[tuple[int, int], LValue] = {}
    atable: dict[tuple[int, int], LValue] = {}
    for i in range(sig.rank):
        for j in range(sig.rank):
            h = P.table[(i, j)]
            btable[(i, j)] = LValue(
                {mono: kahler_d(sig, c) for mono, c in h.terms.items()}
            )
            atable[(i, j)] = h
    return LCAdStructure(
        sig,
        sig.rank,
        btable,
        atable,
        gen_names=[f"d{g}" for g in sig.gens],
        name=name or (f"Omega({P.name})" if P.name else "Omega"),
    )


def kahler_bracket_direct(
    P: PVAStructure, a: DiffPoly, f: DiffPoly, b: DiffPoly, g: DiffPoly, lname: str
) -> LValue:
    """[a d(f) _l b d(g)] by the explicit Kahler formula, used as an oracle.

    (|x|a) b d({f_{l+x} g}) + (|x|a) {f_{l+x} b} d(g) + b {a_{l+x} g} d(|x| f).
    """
    sig = P.sig
    x = fresh_name()
    t1_inner = pva_bracket(P, f, g, lname).subst_affine(lname, Affine.of((lname, 1), (x, 1)))
    t1 = LValue(
        {mono: kahler_d(sig, c).amul(b) for mono, c in t1_inner.terms.items()}
    )
    t1 = contract_factor(t1, x, a)
    t2_inner = pva_bracket(P, f, b, lname).subst_affine(lname, Affine.of((lname, 1), (x, 1)))
    t2 = contract_factor(lv_mul(t2_inner, LValue.const(kahler_d(sig, g))), x, a)
    t3_inner = pva_bracket(P, a, g, lname).subst_affine(lname, Affine.of((lname, 1), (x, 1)))
    t3 = contract_module(t3_inner.amul(b), x, kahler_d(sig, f))
    return t1 + t2 + t3


def lift_derivation(sig: AlgebraSig, values: list, v: OpVec):
    """Unique A[d]-module homomorphism Omega(A) -> M with d(u_i) -> values[i]."""
    res = None
    for i, p in enumerate(v.comps):
        if p.is_zero():
            continue
        t = apply_op_elem(p, values[i])
        res = t if res is None else res + t
    if res is None:
        z = values[0]
        return z - z
    return res


def lift_conformal_derivation(sig: AlgebraSig, values: list[LValue], v: OpVec, lname: str) -> LValue:
    """Unique conformal homomorphism Omega(A) -> M[l] with d(u_i) -> values[i]."""
    res = LValue.zero()
    for i, p in enumerate(v.comps):
        if p.is_zero():
            continue
        res = res + shift_apply(p, [(lname, 1)], values[i])
    return res


# ---------------------------------------------------------------------------
# gauge pairs


class GaugePair:
    """A pair (phi, sigma) in the gauge space of a module M.

    kind "free": M is free of rank k; phi is presented by its generator
    values.  kind "algebra": M is the algebra itself; phi is presented by
    phi_l(1) (which must vanish for a consistent pair, cf. gauge_check).
    """

    def __init__(self, sig: AlgebraSig, sigma: CDerElement, kind: str = "free",
                 phi_values: list[LValue] | None = None, phi_one: LValue | None = None,
                 rank: int | None = None):
        self.sig = sig
        self.sigma = sigma
        self.kind = kind
        if kind == "free":
            self.rank = rank if rank is not None else len(phi_values or [])
            self.phi_values = phi_values or [LValue.zero() for _ in range(self.rank)]
        elif kind == "algebra":
            self.phi_one = phi_one if phi_one is not None else LValue.zero()
        else:
            raise ValueError(f"unknown gauge-pair kind {kind!r}")

    @staticmethod
    def zero_free(sig: AlgebraSig, rank: int) -> "GaugePair":
        return GaugePair(sig, CDerElement.zero(sig), "free",
                         [LValue.zero() for _ in range(rank)], rank=rank)

    def __add__(self, other: "GaugePair") -> "GaugePair":
        sigma = CDerElement(
            self.sig,
            [a + b for a, b in zip(self.sigma.values, other.sigma.values)],
            self.sigma.lname,
        )
        if self.kind == "free":
            return GaugePair(self.sig, sigma, "free",
                             [a + b for a, b in zip(self.phi_values, other.phi_values)],
                             rank=self.rank)
        return GaugePair(self.sig, sigma, "algebra", phi_one=self.phi_one + other.phi_one)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GaugePair) or self.kind != other.kind:
            return False
        if self.sigma.values != other.sigma.values:
            return False
        if self.kind == "free":
            return self.phi_values == other.phi_values
        return self.phi_one == other.phi_one


def gauge_apply(g: GaugePair, m, lname: str) -> LValue:
    """phi_l(m): the extension of the generator values through the pair law."""
    if g.kind == "algebra":
        res = g.sigma.apply(m, lname)
        phi1 = g.phi_one if lname == TABLE_VAR else g.phi_one.rename({TABLE_VAR: lname})
        return res + phi1.amul(m)
    res = LValue.zero()
    for l, q in enumerate(m.comps):
        if q.is_zero():
            continue
        for j, qj in enumerate(q.coeffs):
            if qj.is_zero():
                continue
            mel = OpVec.single(g.sig, g.rank, l, OpPoly.d(g.sig, j) if j else OpPoly.one(g.sig))
            res = res + lv_mul(g.sigma.apply(qj, lname), LValue.const(mel))
        pv = g.phi_values[l]
        pv = pv if lname == TABLE_VAR else pv.rename({TABLE_VAR: lname})
        res = res + shift_apply(q, [(lname, 1)], pv)
    return res


def gauge_apply_lv(g: GaugePair, v: LValue, lname: str) -> LValue:
    res = LValue.zero()
    for mono, c in v.terms.items():
        res = res + gauge_apply(g, c, lname).mul_lmono(mono)
    return res


def gauge_check(g: GaugePair, seed: int = 0, samples: int = 3) -> bool:
    """Verify the pair law phi_l(a(d)m) = sigma_l(a(x))(|x|m) + a(l+x)(|x|phi_l(m))
    on module generators and sampled operators, including iterated operators."""
    rng = Random(seed)
    sig = g.sig
    ops = [OpPoly.d(sig), OpPoly.one(sig)]
    if sig.rank:
        ops.append(OpPoly.of(DiffPoly.gen(sig, 0)))
    ops += [sample_oppoly(rng, sig) for _ in range(samples)]
    if g.kind == "algebra":
        carriers = [DiffPoly.one(sig)] + [DiffPoly.gen(sig, i) for i in range(sig.rank)]
    else:
        carriers = [OpVec.basis(sig, g.rank, l) for l in range(g.rank)]
        carriers += [
            OpVec.single(sig, g.rank, rng.randrange(g.rank), sample_oppoly(rng, sig))
            for _ in range(2)
        ]
    for a in ops:
        for m in carriers:
            am = a.apply(m) if g.kind == "algebra" else m.opapply(a)
            lhs = gauge_apply(g, am, "l")
            rhs = shift_apply(a, [("l", 1)], gauge_apply(g, m, "l"))
            for j, aj in enumerate(a.coeffs):
                if aj.is_zero():
                    continue
                dm = m
                for _ in range(j):
                    dm = dm.dtot()
                rhs = rhs + lv_mul(g.sigma.apply(aj, "l"), LValue.const(dm))
            if lhs != rhs:
                return False
    return True


def gauge_bracket_eval(g1: GaugePair, g2: GaugePair, l: int, lname: str, mname: str) -> LValue:
    """[phi1_l phi2]_m(w_l): the commutator acting on one module generator."""
    nu = fresh_name()
    if g1.kind == "algebra":
        base2 = gauge_apply(g2, DiffPoly.one(g1.sig), nu)
        t1 = gauge_apply_lv(g1, base2, lname).subst_affine(nu, Affine.of((mname, 1), (lname, -1)))
        base1 = gauge_apply(g1, DiffPoly.one(g1.sig), lname)
        t2 = gauge_apply_lv(g2, base1, nu).subst_affine(nu, Affine.of((mname, 1), (lname, -1)))
        return t1 - t2
    w = OpVec.basis(g1.sig, g1.rank, l)
    t1 = gauge_apply_lv(g1, gauge_apply(g2, w, nu), lname)
    t1 = t1.subst_affine(nu, Affine.of((mname, 1), (lname, -1)))
    t2 = gauge_apply_lv(g2, gauge_apply(g1, w, lname), nu)
    t2 = t2.subst_affine(nu, Affine.of((mname, 1), (lname, -1)))
    return t1 - t2


def gauge_bracket(g1: GaugePair, g2: GaugePair, lname: str = "l", mname: str = "m"):
    """The lambda-family of gauge pairs [g1_l g2]: coefficients of each l power."""
    sig = g1.sig
    sig_br = cder_bracket(g1.sigma, g2.sigma, lname, mname)
    if g1.kind == "algebra":
        phi_evals = [gauge_bracket_eval(g1, g2, 0, lname, mname)]
        rank = 1
    else:
        rank = g1.rank
        phi_evals = [gauge_bracket_eval(g1, g2, l, lname, mname) for l in range(rank)]
    powers: set[int] = set()
    for v in sig_br + phi_evals:
        powers.update(v.as_poly_in(lname).keys())
    out = []
    for e in sorted(powers):
        svals = [v.as_poly_in(lname).get(e, LValue.zero()).rename({mname: TABLE_VAR}) for v in sig_br]
        sigma = CDerElement(sig, svals, TABLE_VAR)
        pvals = [v.as_poly_in(lname).get(e, LValue.zero()).rename({mname: TABLE_VAR}) for v in phi_evals]
        if g1.kind == "algebra":
            # sigma kills 1, so the evaluation at 1 is the phi_l(1) component
            pair = GaugePair(sig, sigma, "algebra", phi_one=pvals[0])
        else:
            pair = GaugePair(sig, sigma, "free", pvals, rank=rank)
        out.append((e, pair))
    return out


# ---------------------------------------------------------------------------
# LCAd modules


class TrivialLCAdModule:
    """The algebra A with the anchor action."""

    kind = "trivial"
    exact_quot0 = True

    def __init__(self, L: LCAdStructure):
        self.L = L
        self.sig = L.sig

    def zero(self):
        return DiffPoly.zero(self.sig)

    def basis(self):
        return [DiffPoly.one(self.sig)] + [
            DiffPoly.gen(self.sig, i) for i in range(self.sig.rank)
        ]

    def act(self, v: OpVec, m: DiffPoly, lname: str) -> LValue:
        return anchor_apply(self.L, v, m, lname)

    def eq0_quot(self, m) -> bool:
        from .diffpoly import in_partial_image

        return in_partial_image(m)

    def sample(self, rng: Random):
        return sample_diffpoly(rng, self.sig)

    def render_elem(self, m) -> str:
        return render_diffpoly(m)


class FreeLCAdModule:
    """Free A[d]-module of finite rank with a generator action table."""

    kind = "free"
    exact_quot0 = True

    def __init__(self, L: LCAdStructure, rank: int, table: dict[tuple[int, int], LValue],
                 gen_names: list[str] | None = None):
        self.L = L
        self.sig = L.sig
        self.rank = rank
        self.gen_names = gen_names or [f"w{l + 1}" for l in range(rank)]
        self.table: dict[tuple[int, int], LValue] = {}
        for a in range(L.rank):
            for l in range(rank):
                self.table[(a, l)] = table.get((a, l), LValue.zero())

    def zero(self):
        return OpVec.zero(self.sig, self.rank)

    def basis(self):
        return [OpVec.basis(self.sig, self.rank, l) for l in range(self.rank)]

    def act_gen(self, a: int, m: OpVec, lname: str) -> LValue:
        """e_a acting on an arbitrary module element, by the action axioms."""
        res = LValue.zero()
        for l, q in enumerate(m.comps):
            if q.is_zero():
                continue
            base = self.table[(a, l)]
            base = base if lname == TABLE_VAR else base.rename({TABLE_VAR: lname})
            for j, qj in enumerate(q.coeffs):
                if qj.is_zero():
                    continue
                av = self.L.anchor_gen(a, qj, lname)
                if not av.is_zero():
                    mel = OpVec.single(self.sig, self.rank, l,
                                       OpPoly.d(self.sig, j) if j else OpPoly.one(self.sig))
                    res = res + lv_mul(av, LValue.const(mel))
                cur = base
                for _ in range(j):
                    cur = cur.mul_lname(lname) + cur.dtot()
                res = res + cur.amul(qj)
        return res

    def act(self, v: OpVec, m: OpVec, lname: str) -> LValue:
        res = LValue.zero()
        for a, p in enumerate(v.comps):
            if p.is_zero():
                continue
            x = fresh_name()
            inner = self.act_gen(a, m, lname).subst_affine(lname, Affine.of((lname, 1), (x, 1)))
            res = res + adjoint_shifted(p, lname, inner, x)
        return res

    def eq0_quot(self, m) -> bool:
        return in_partial_image_vec(m)

    def sample(self, rng: Random):
        return OpVec.single(self.sig, self.rank, rng.randrange(self.rank),
                            sample_oppoly(rng, self.sig))

    def render_elem(self, m) -> str:
        return m.render(self.gen_names)


class TransferredPVAModule:
    """LCAd module over the Kahler LCAd induced by a PVA module.

    The generator action is (du_i)_l m = u_i_l m; the extension to general
    Kahler forms follows the module axioms through the marker engine.
    """

    kind = "transferred"

    def __init__(self, P: PVAStructure, pvamod, L: LCAdStructure):
        self.P = P
        self.pvamod = pvamod
        self.L = L
        self.sig = P.sig
        self.exact_quot0 = pvamod.exact_quot0
        self.rank = getattr(pvamod, "rank", None)

    def zero(self):
        return self.pvamod.zero()

    def basis(self):
        return self.pvamod.basis()

    def act(self, v: OpVec, m, lname: str) -> LValue:
        res = LValue.zero()
        for i, p in enumerate(v.comps):
            if p.is_zero():
                continue
            x = fresh_name()
            inner = self.pvamod.act(DiffPoly.gen(self.sig, i), m, lname)
            inner = inner.subst_affine(lname, Affine.of((lname, 1), (x, 1)))
            res = res + adjoint_shifted(p, lname, inner, x)
        return res

    def eq0_quot(self, m) -> bool:
        return self.pvamod.eq0_quot(m)

    def sample(self, rng: Random):
        return self.pvamod.sample(rng)

    def render_elem(self, m) -> str:
        return self.pvamod.render_elem(m)


class DualElement:
    """Element of the dual module: its values on the generators of M."""

    __slots__ = ("sig", "values")

    def __init__(self, sig: AlgebraSig, values: list[LValue]):
        self.sig = sig
        self.values = list(values)

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.values)

    def __add__(self, other):
        return DualElement(self.sig, [a + b for a, b in zip(self.values, other.values)])

    def __neg__(self):
        return DualElement(self.sig, [-v for v in self.values])

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        return isinstance(other, DualElement) and self.values == other.values

    def smul(self, c):
        return DualElement(self.sig, [v.smul(c) for v in self.values])

    def amul(self, a: DiffPoly):
        out = []
        for v in self.values:
            x = fresh_name()
            shifted = v.subst_affine(TABLE_VAR, Affine.of((TABLE_VAR, 1), (x, 1)))
            out.append(contract_factor(shifted, x, a))
        return DualElement(self.sig, out)

    def dtot(self):
        return DualElement(self.sig, [-v.mul_lname(TABLE_VAR) for v in self.values])

    def eval_on(self, m: OpVec, lname: str) -> LValue:
        """phi_l(m) for a module element m, through the defining property."""
        res = LValue.zero()
        for l, q in enumerate(m.comps):
            if q.is_zero():
                continue
            pv = self.values[l]
            pv = pv if lname == TABLE_VAR else pv.rename({TABLE_VAR: lname})
            res = res + shift_apply(q, [(lname, 1)], pv)
        return res


class DualLCAdModule:
    """The dual of a free LCAd module, with the contragredient action."""

    kind = "dual"
    exact_quot0 = False

    def __init__(self, M: FreeLCAdModule):
        self.M = M
        self.L = M.L
        self.sig = M.sig
        self.rank = M.rank

    def zero(self):
        return DualElement(self.sig, [LValue.zero() for _ in range(self.rank)])

    def basis(self):
        out = []
        for l in range(self.rank):
            vals = [LValue.zero() for _ in range(self.rank)]
            vals[l] = LValue.const(DiffPoly.one(self.sig))
            out.append(DualElement(self.sig, vals))
        return out

    def act(self, v: OpVec, phi: DualElement, lname: str) -> LValue:
        """(rho'(v)_l(phi))_mu(w) = theta(v)_l(phi_{mu-l}(w)) - phi_{mu-l}(rho(v)_l(w))."""
        mu = fresh_name()
        nu = fresh_name()
        evals = []
        for l in range(self.rank):
            w = OpVec.basis(self.sig, self.rank, l)
            t1 = anchor_apply_lv(self.L, v, phi.eval_on(w, nu), lname)
            t1 = t1.subst_affine(nu, Affine.of((mu, 1), (lname, -1)))
            inner = self.M.act(v, w, lname)
            t2 = LValue.zero()
            for mono, c in inner.terms.items():
                t2 = t2 + phi.eval_on(c, nu).mul_lmono(mono)
            t2 = t2.subst_affine(nu, Affine.of((mu, 1), (lname, -1)))
            evals.append(t1 - t2)
        powers: set[int] = set()
        for v2 in evals:
            powers.update(v2.as_poly_in(lname).keys())
        res = LValue.zero()
        for e in sorted(powers):
            vals = [v2.as_poly_in(lname).get(e, LValue.zero()).rename({mu: TABLE_VAR}) for v2 in evals]
            res = res + LValue.mono(DualElement(self.sig, vals), (lname, e))
        return res

    def eq0_quot(self, m) -> bool:
        return m.is_zero()

    def sample(self, rng: Random):
        vals = [LValue.zero() for _ in range(self.rank)]
        l = rng.randrange(self.rank)
        vals[l] = LValue.mono(sample_diffpoly(rng, self.sig, max_terms=1),
                              (TABLE_VAR, rng.randint(0, 1)))
        return DualElement(self.sig, vals)

    def render_elem(self, m) -> str:
        parts = [f"<{render_lvalue(v, render_diffpoly)}>" for v in m.values]
        return "(" + ", ".join(parts) + ")"


def check_module(L: LCAdStructure, M, seed: int = 0, samples: int = 2) -> list[CheckRecord]:
    """Module axioms (i)-(iii) on generators plus sampled operator multiples."""
    rng = Random(seed)
    records: list[CheckRecord] = []
    names = L.gen_names
    rlv = lambda v: render_lvalue(v, M.render_elem)
    basis = M.basis()
    # axiom (i): action against the A[d]-structure of M
    for t in range(samples + 1):
        q = OpPoly.d(L.sig) if t == 0 else sample_oppoly(rng, L.sig)
        for a in range(L.rank):
            ea = L.basis(a)
            for bi, m in enumerate(basis):
                lhs = M.act(ea, apply_op_elem(q, m), "l")
                rhs = shift_apply(q, [("l", 1)], M.act(ea, m, "l"))
                for j, qj in enumerate(q.coeffs):
                    if qj.is_zero():
                        continue
                    dm = m
                    for _ in range(j):
                        dm = dm.dtot()
                    rhs = rhs + lv_mul(L.anchor_gen(a, qj, "l"), LValue.const(dm))
                records.append(
                    CheckRecord(
                        id=f"mod-axiom-i({names[a]},op{t},m{bi})",
                        lhs=rlv(lhs),
                        rhs=rlv(rhs),
                        ok=lhs == rhs,
                    )
                )
    # axiom (ii): action of operator multiples of generators
    for t in range(samples):
        p = sample_oppoly(rng, L.sig)
        q = sample_oppoly(rng, L.sig)
        a = rng.randrange(L.rank)
        m = basis[rng.randrange(len(basis))]
        lhs = M.act(OpVec.single(L.sig, L.rank, a, p.compose(q)), m, "l")
        x = fresh_name()
        inner = M.act(OpVec.single(L.sig, L.rank, a, q), m, "l")
        inner = inner.subst_affine("l", Affine.of(("l", 1), (x, 1)))
        rhs = adjoint_shifted(p, "l", inner, x)
        records.append(
            CheckRecord(
                id=f"mod-axiom-ii(sample{t})",
                lhs=rlv(lhs),
                rhs=rlv(rhs),
                ok=lhs == rhs,
            )
        )
    # axiom (iii): the action Jacobi identity
    for a in range(L.rank):
        for b in range(L.rank):
            ea, eb = L.basis(a), L.basis(b)
            for bi, m in enumerate(basis):
                t1 = LValue.zero()
                for mono, c in M.act(eb, m, "m").terms.items():
                    t1 = t1 + M.act(ea, c, "l").mul_lmono(mono)
                t2 = LValue.zero()
                for mono, c in M.act(ea, m, "l").terms.items():
                    t2 = t2 + M.act(eb, c, "m").mul_lmono(mono)
                lhs = t1 - t2
                nu = fresh_name()
                rhs = LValue.zero()
                for mono, c in lcad_bracket(L, ea, eb, "l").terms.items():
                    rhs = rhs + M.act(c, m, nu).mul_lmono(mono)
                rhs = rhs.subst_affine(nu, Affine.of(("l", 1), ("m", 1)))
                records.append(
                    CheckRecord(
                        id=f"mod-axiom-iii({names[a]},{names[b]},m{bi})",
                        lhs=rlv(lhs),
                        rhs=rlv(rhs),
                        ok=lhs == rhs,
                    )
                )
    return records


def module_to_gauge(L: LCAdStructure, M) -> list[GaugePair]:
    """The gauge pairs rho(e_a) = (phi(e_a), theta(e_a)) of a module action."""
    out = []
    algebra_carrier = not hasattr(M, "rank") or M.rank is None
    for a in range(L.rank):
        sigma = CDerElement(L.sig, L.anchor_row(a), TABLE_VAR)
        if algebra_carrier:
            out.append(GaugePair(L.sig, sigma, "algebra",
                                 phi_one=M.act(L.basis(a), DiffPoly.one(L.sig), TABLE_VAR)))
        else:
            vals = [M.act(L.basis(a), w, TABLE_VAR) for w in M.basis()]
            out.append(GaugePair(L.sig, sigma, "free", vals, rank=M.rank))
    return out


def gauge_of_opvec(L: LCAdStructure, M, pairs: list[GaugePair], v: OpVec) -> GaugePair:
    """rho(v) for v = sum p_a(d) e_a: the A[d]-action on gauge pairs."""
    acc: GaugePair | None = None
    for a, p in enumerate(v.comps):
        if p.is_zero():
            continue
        g = pairs[a]
        x = fresh_name()
        svals = [
            adjoint_shifted(p, TABLE_VAR,
                            val.subst_affine(TABLE_VAR, Affine.of((TABLE_VAR, 1), (x, 1))), x)
            for val in g.sigma.values
        ]
        sigma = CDerElement(L.sig, svals, TABLE_VAR)
        if g.kind == "free":
            pvals = [
                adjoint_shifted(p, TABLE_VAR,
                                val.subst_affine(TABLE_VAR, Affine.of((TABLE_VAR, 1), (x, 1))), x)
                for val in g.phi_values
            ]
            gp = GaugePair(L.sig, sigma, "free", pvals, rank=g.rank)
        else:
            pv = adjoint_shifted(
                p, TABLE_VAR,
                g.phi_one.subst_affine(TABLE_VAR, Affine.of((TABLE_VAR, 1), (x, 1))), x)
            gp = GaugePair(L.sig, sigma, "algebra", phi_one=pv)
        acc = gp if acc is None else acc + gp
    if acc is None:
        if not hasattr(M, "rank") or M.rank is None:
            return GaugePair(L.sig, CDerElement.zero(L.sig), "algebra", phi_one=LValue.zero())
        return GaugePair.zero_free(L.sig, M.rank)
    return acc


def check_module_gauge_intertwine(L: LCAdStructure, M, seed: int = 0) -> list[CheckRecord]:
    """rho intertwines the bracket of E with the gauge bracket, on generator pairs."""
    pairs = module_to_gauge(L, M)
    records: list[CheckRecord] = []
    for a in range(L.rank):
        for b in range(L.rank):
            # gauge-side evaluations of [rho(e_a) l rho(e_b)]
            if pairs[a].kind == "algebra":
                slots = [0]
            else:
                slots = list(range(pairs[a].rank))
            lhs_phi = [gauge_bracket_eval(pairs[a], pairs[b], l, "l", "m") for l in slots]
            lhs_sig = cder_bracket(pairs[a].sigma, pairs[b].sigma, "l", "m")
            # E-side: rho([e_a l e_b]) evaluated at the slot m
            rhs_phi = [LValue.zero() for _ in slots]
            rhs_sig = [LValue.zero() for _ in range(L.sig.rank)]
            for mono, c in lcad_bracket(L, L.basis(a), L.basis(b), "l").terms.items():
                g = gauge_of_opvec(L, M, pairs, c)
                for si, l in enumerate(slots):
                    if g.kind == "algebra":
                        val = g.sigma.apply(DiffPoly.one(L.sig), "m") + g.phi_one.rename({TABLE_VAR: "m"})
                    else:
                        val = g.phi_values[l].rename({TABLE_VAR: "m"})
                    rhs_phi[si] = rhs_phi[si] + val.mul_lmono(mono)
                for i in range(L.sig.rank):
                    rhs_sig[i] = rhs_sig[i] + g.sigma.values[i].rename({TABLE_VAR: "m"}).mul_lmono(mono)
            ok = lhs_phi == rhs_phi and lhs_sig == rhs_sig
            records.append(
                CheckRecord(
                    id=f"mod-gauge-intertwine({L.gen_names[a]},{L.gen_names[b]})",
                    lhs="; ".join(render_lvalue(v, M.render_elem) for v in lhs_phi),
                    rhs="; ".join(render_lvalue(v, M.render_elem) for v in rhs_phi),
                    ok=ok,
                )
            )
    return records


# ---------------------------------------------------------------------------
# semidirect product


def semidirect(L: LCAdStructure, M: FreeLCAdModule, name: str = "") -> LCAdStructure:
    """The semidirect product LCAd on E + M."""
    m, k = L.rank, M.rank
    sig = L.sig
    rank = m + k

    def embed_e(v: OpVec) -> OpVec:
        return OpVec(sig, list(v.comps) + [OpPoly.zero(sig)] * k)

    def embed_m(v: OpVec) -> OpVec:
        return OpVec(sig, [OpPoly.zero(sig)] * m + list(v.comps))

    def embed_lv(v: LValue, emb) -> LValue:
        return LValue({mono: emb(c) for mono, c in v.terms.items()})

    btable: dict[tuple[int, int], LValue] = {}
    atable: dict[tuple[int, int], LValue] = {}
    for a in range(m):
        for b in range(m):
            btable[(a, b)] = embed_lv(L.btable[(a, b)], embed_e)
        for l in range(k):
            act = M.table[(a, l)]
            btable[(a, m + l)] = embed_lv(act, embed_m)
            mirror = embed_lv(act, embed_m).subst_affine(
                TABLE_VAR, Affine.of((TABLE_VAR, -1), dpart=-1)
            )
            btable[(m + l, a)] = -mirror
        for i in range(sig.rank):
            atable[(a, i)] = L.atable[(a, i)]
    return LCAdStructure(
        sig,
        rank,
        btable,
        atable,
        gen_names=L.gen_names + M.gen_names,
        name=name or f"{L.name}|x{getattr(M, 'name', 'M')}",
    )


# ---------------------------------------------------------------------------
# transformation LCAd


def transformation_lcad(
    sig: AlgebraSig,
    rank: int,
    lca_table: dict[tuple[int, int], LValue],
    phi: list[CDerElement],
    gen_names: list[str] | None = None,
    name: str = "",
) -> LCAdStructure:
    """The transformation LCAd A(x)L of an LCA action by conformal derivations.

    lca_table holds [l_a lambda l_b] with constant-coefficient operator
    values; phi[a] is the conformal derivation image of l_a.  The bracket
    table is validated as an LCA and phi as an LCA homomorphism into the
    commutator bracket of conformal derivations.
    """
    for v in lca_table.values():
        for _, c in v.terms.items():
            for p in c.comps:
                for cf in p.coeffs:
                    if not cf.is_constant():
                        raise ValueError("LCA structure constants must be scalars")
    probe = LCAdStructure(sig, rank, lca_table, {}, gen_names=gen_names)
    recs = [r for r in check_lcad(probe, samples=1) if not r.ok]
    if recs:
        raise ValueError(f"input table is not an LCA: {recs[0].id}")
    # phi must map the table bracket to the commutator of conformal derivations
    for a in range(rank):
        for b in range(rank):
            want = cder_bracket(phi[a], phi[b], "l", "m")
            got = [LValue.zero() for _ in range(sig.rank)]
            for mono, c in probe.bracket_entry(a, b, "l").terms.items():
                for cc, p in enumerate(c.comps):
                    if p.is_zero():
                        continue
                    for i in range(sig.rank):
                        x = fresh_name()
                        base = phi[cc].values[i].rename({phi[cc].lname: "m"})
                        base = base.subst_affine("m", Affine.of(("m", 1), (x, 1)))
                        got[i] = got[i] + adjoint_shifted(p, "m", base, x).mul_lmono(mono)
            if want != got:
                raise ValueError(f"phi is not an LCA homomorphism at pair ({a},{b})")
    atable = {
        (a, i): phi[a].values[i].rename({phi[a].lname: TABLE_VAR})
        for a in range(rank)
        for i in range(sig.rank)
    }
    return LCAdStructure(sig, rank, lca_table, atable, gen_names=gen_names, name=name)


# ---------------------------------------------------------------------------
# the PVA S_A(E) of an LCAd


def embed_diffpoly(p: DiffPoly, big: AlgebraSig, gen_map: dict[int, int]) -> DiffPoly:
    terms = {}
    for (jets, pars), c in p._terms.items():
        nj = tuple(sorted((((gen_map[i], n), e) for (i, n), e in jets)))
        terms[(nj, pars)] = c
    return DiffPoly(big, terms)


def sae_pva(L: LCAdStructure, name: str = "") -> PVAStructure:
    """The symmetric-algebra PVA of an LCAd: generators (u_i, e_a)."""
    sig = L.sig
    r, m = sig.rank, L.rank
    big = AlgebraSig(tuple(sig.gens) + tuple(L.gen_names), sig.params)
    gmap = {i: i for i in range(r)}

    def emb_lv(v: LValue) -> LValue:
        return LValue({mono: embed_diffpoly(c, big, gmap) for mono, c in v.terms.items()})

    def emb_vec_lv(v: LValue) -> LValue:
        out = LValue.zero()
        for mono, c in v.terms.items():
            acc = DiffPoly.zero(big)
            for a, p in enumerate(c.comps):
                for j, cj in enumerate(p.coeffs):
                    if cj.is_zero():
                        continue
                    acc = acc + embed_diffpoly(cj, big, gmap) * DiffPoly.gen(big, r + a, j)
            out = out + LValue({mono: acc})
        return out

    table: dict[tuple[int, int], LValue] = {}
    for i in range(r):
        for j in range(r):
            table[(i, j)] = LValue.zero()
    for a in range(m):
        for i in range(r):
            theta = L.atable[(a, i)]
            table[(r + a, i)] = emb_lv(theta)
            star = theta.subst_affine(TABLE_VAR, Affine.of((TABLE_VAR, -1), dpart=-1))
            table[(i, r + a)] = -emb_lv(star)
        for b in range(m):
            table[(r + a, r + b)] = emb_vec_lv(L.btable[(a, b)])
    return PVAStructure(big, table, name=name or f"S({L.name})")


# ---------------------------------------------------------------------------
# quotient Lie algebroid


def restrict_order0(p: DiffPoly) -> DiffPoly:
    """Reduce modulo A dA: kill every monomial containing a jet of order >= 1."""
    terms = {}
    for (jets, pars), c in p._terms.items():
        if any(n >= 1 for (_, n), _ in jets):
            continue
        terms[(jets, pars)] = c
    return DiffPoly(p.sig, terms)


def quotient_lad(L: LCAdStructure):
    """The quotient Lie algebroid of an LCAd: brackets and anchors at l = 0."""
    from .jetcur import LieAlgebroid

    sig = L.sig
    c_table: dict[tuple[int, int], list[DiffPoly]] = {}
    rho: dict[int, list[DiffPoly]] = {}
    for a in range(L.rank):
        for b in range(L.rank):
            v0 = L.btable[(a, b)].eval_zero(TABLE_VAR)
            vec = v0.terms.get((), OpVec.zero(sig, L.rank))
            c_table[(a, b)] = [restrict_order0(p.coeff(0)) for p in vec.comps]
        row = []
        for i in range(sig.rank):
            t0 = L.atable[(a, i)].eval_zero(TABLE_VAR)
            row.append(restrict_order0(t0.terms.get((), DiffPoly.zero(sig))))
        rho[a] = row
    return LieAlgebroid(sig, L.rank, c_table, rho, gen_names=L.gen_names,
                        name=f"Quot({L.name})" if L.name else "")
