"""Lie algebroids over polynomial rings, jet algebras, and the current LCAd.

A polynomial ring R = F[x_1..x_k] is carried by the same signature as its
jet algebra; ring elements are the jet-order-zero polynomials, and the
canonical embedding into the jet algebra is the identity on that subspace.
"""

from __future__ import annotations

from .diffpoly import AlgebraSig, DiffPoly, OpPoly, partial_deriv, render_diffpoly
from .lamcalc import CDerElement, LValue
from .lcad import LCAdStructure, quotient_lad
from .pva import PVAStructure
from .report import CheckRecord


def _require_ring(p: DiffPoly) -> None:
    if any(n >= 1 for (_, n) in p.jet_support()):
        raise ValueError("ring elements must not contain jet variables of positive order")


class LieAlgebroid:
    """Finite presentation: structure functions c[a][b] and anchor rows rho[a]."""

    def __init__(
        self,
        ringsig: AlgebraSig,
        rank: int,
        c_table: dict[tuple[int, int], list[DiffPoly]],
        rho: dict[int, list[DiffPoly]],
        gen_names: list[str] | None = None,
        name: str = "",
    ):
        self.ringsig = ringsig
        self.rank = rank
        self.name = name
        self.gen_names = gen_names or [f"f{a + 1}" for a in range(rank)]
        self.c: dict[tuple[int, int], list[DiffPoly]] = {}
        self.rho: dict[int, list[DiffPoly]] = {}
        zero_vec = [DiffPoly.zero(ringsig)] * rank
        zero_row = [DiffPoly.zero(ringsig)] * ringsig.rank
        for a in range(rank):
            for b in range(rank):
                vec = c_table.get((a, b), zero_vec)
                for p in vec:
                    _require_ring(p)
                self.c[(a, b)] = list(vec)
            row = rho.get(a, zero_row)
            for p in row:
                _require_ring(p)
            self.rho[a] = list(row)

    def theta(self, a: int, p: DiffPoly) -> DiffPoly:
        """theta(f_a)(p) = sum_j rho[a][j] dp/dx_j."""
        res = DiffPoly.zero(self.ringsig)
        for j in range(self.ringsig.rank):
            res = res + self.rho[a][j] * partial_deriv(p, j, 0)
        return res

    def render_vec(self, vec: list[DiffPoly]) -> str:
        parts = [
            f"({render_diffpoly(p)})*{self.gen_names[e]}"
            for e, p in enumerate(vec)
            if not p.is_zero()
        ]
        return " + ".join(parts) if parts else "0"


def check_lad(F: LieAlgebroid) -> list[CheckRecord]:
    """Antisymmetry, anchor homomorphism, and Jacobi on generators."""
    records: list[CheckRecord] = []
    names = F.gen_names
    for a in range(F.rank):
        for b in range(F.rank):
            lhs = F.c[(a, b)]
            rhs = [-p for p in F.c[(b, a)]]
            records.append(
                CheckRecord(
                    id=f"lad-antisym({names[a]},{names[b]})",
                    lhs=F.render_vec(lhs),
                    rhs=F.render_vec(rhs),
                    ok=lhs == rhs,
                )
            )
    for a in range(F.rank):
        for b in range(F.rank):
            for j in range(F.ringsig.rank):
                lhs = DiffPoly.zero(F.ringsig)
                for e in range(F.rank):
                    lhs = lhs + F.c[(a, b)][e] * F.rho[e][j]
                rhs = F.theta(a, F.rho[b][j]) - F.theta(b, F.rho[a][j])
                records.append(
                    CheckRecord(
                        id=f"lad-anchor({names[a]},{names[b]};{F.ringsig.gens[j]})",
                        lhs=render_diffpoly(lhs),
                        rhs=render_diffpoly(rhs),
                        ok=lhs == rhs,
                    )
                )
    for a in range(F.rank):
        for b in range(F.rank):
            for c in range(F.rank):
                jac = _lad_jacobiator(F, a, b, c)
                records.append(
                    CheckRecord(
                        id=f"lad-jacobi({names[a]},{names[b]},{names[c]})",
                        lhs=F.render_vec(jac),
                        rhs="0",
                        ok=all(p.is_zero() for p in jac),
                    )
                )
    return records


def _lad_bracket_gen_vec(F: LieAlgebroid, a: int, vec: list[DiffPoly]) -> list[DiffPoly]:
    """[f_a, sum_e vec_e f_e] = sum_e (vec_e [f_a,f_e] + theta(f_a)(vec_e) f_e)."""
    out = [DiffPoly.zero(F.ringsig) for _ in range(F.rank)]
    for e, p in enumerate(vec):
        if p.is_zero():
            continue
        for g in range(F.rank):
            out[g] = out[g] + p * F.c[(a, e)][g]
        out[e] = out[e] + F.theta(a, p)
    return out


def _lad_jacobiator(F: LieAlgebroid, a: int, b: int, c: int) -> list[DiffPoly]:
    t1 = _lad_bracket_gen_vec(F, a, _lad_bracket_gen_vec(F, b, _basis_vec(F, c)))
    t2 = _lad_bracket_gen_vec(F, b, _lad_bracket_gen_vec(F, a, _basis_vec(F, c)))
    # [[f_a, f_b], f_c] = sum_e (c_ab^e [f_e, f_c] - theta(f_c)(c_ab^e) f_e)
    t3 = [DiffPoly.zero(F.ringsig) for _ in range(F.rank)]
    for e, p in enumerate(F.c[(a, b)]):
        if p.is_zero():
            continue
        for g in range(F.rank):
            t3[g] = t3[g] + p * F.c[(e, c)][g]
        t3[e] = t3[e] - F.theta(c, p)
    return [x - y - z for x, y, z in zip(t1, t2, t3)]


def _basis_vec(F: LieAlgebroid, a: int) -> list[DiffPoly]:
    vec = [DiffPoly.zero(F.ringsig) for _ in range(F.rank)]
    vec[a] = DiffPoly.one(F.ringsig)
    return vec


# ---------------------------------------------------------------------------
# jets


def jet_algebra(ringsig: AlgebraSig) -> AlgebraSig:
    """The jet algebra of a polynomial ring shares the ring's signature;
    the jet variables are the positive-order jets of the same generators."""
    return ringsig


def jet_lift_derivation(ringsig: AlgebraSig, values: list[DiffPoly]) -> CDerElement:
    """The unique conformal lift of a ring derivation x_j -> values[j]."""
    for p in values:
        _require_ring(p)
    return CDerElement(ringsig, [LValue.const(p) for p in values], "l")


def current_lcad(F: LieAlgebroid, name: str = "") -> LCAdStructure:
    """The current LCAd of a Lie algebroid over the jet algebra of its ring."""
    from .freemod import OpVec

    sig = jet_algebra(F.ringsig)
    btable: dict[tuple[int, int], LValue] = {}
    atable: dict[tuple[int, int], LValue] = {}
    for a in range(F.rank):
        for b in range(F.rank):
            vec = F.c[(a, b)]
            if any(not p.is_zero() for p in vec):
                btable[(a, b)] = LValue.const(OpVec(sig, [OpPoly.of(p) for p in vec]))
            else:
                btable[(a, b)] = LValue.zero()
        for j in range(sig.rank):
            p = F.rho[a][j]
            atable[(a, j)] = LValue.const(p) if not p.is_zero() else LValue.zero()
    return LCAdStructure(
        sig,
        F.rank,
        btable,
        atable,
        gen_names=F.gen_names,
        name=name or (f"Cur({F.name})" if F.name else "Cur"),
    )


def roundtrip_check(F: LieAlgebroid) -> bool:
    """quotient_lad(current_lcad(F)) recovers F's tables exactly."""
    Q = quotient_lad(current_lcad(F))
    if Q.rank != F.rank or Q.ringsig != F.ringsig:
        return False
    for a in range(F.rank):
        for b in range(F.rank):
            if Q.c[(a, b)] != F.c[(a, b)]:
                return False
        if Q.rho[a] != F.rho[a]:
            return False
    return True


# ---------------------------------------------------------------------------
# Poisson algebras and the Kahler Lie algebroid


class PoissonAlgebra:
    """Polynomial Poisson algebra presented by the bivector table pi[i][j]."""

    def __init__(self, ringsig: AlgebraSig, pi: dict[tuple[int, int], DiffPoly], name: str = ""):
        self.ringsig = ringsig
        self.name = name
        self.pi: dict[tuple[int, int], DiffPoly] = {}
        for i in range(ringsig.rank):
            for j in range(ringsig.rank):
                if (i, j) in pi:
                    p = pi[(i, j)]
                elif (j, i) in pi:
                    p = -pi[(j, i)]
                else:
                    p = DiffPoly.zero(ringsig)
                _require_ring(p)
                self.pi[(i, j)] = p

    def bracket(self, p: DiffPoly, q: DiffPoly) -> DiffPoly:
        res = DiffPoly.zero(self.ringsig)
        for i in range(self.ringsig.rank):
            dp = partial_deriv(p, i, 0)
            if dp.is_zero():
                continue
            for j in range(self.ringsig.rank):
                dq = partial_deriv(q, j, 0)
                if dq.is_zero():
                    continue
                res = res + dp * dq * self.pi[(i, j)]
        return res


def check_poisson(P: PoissonAlgebra) -> list[CheckRecord]:
    records: list[CheckRecord] = []
    gens = P.ringsig.gens
    for i in range(P.ringsig.rank):
        for j in range(P.ringsig.rank):
            lhs, rhs = P.pi[(i, j)], -P.pi[(j, i)]
            records.append(
                CheckRecord(
                    id=f"poisson-antisym({gens[i]},{gens[j]})",
                    lhs=render_diffpoly(lhs),
                    rhs=render_diffpoly(rhs),
                    ok=lhs == rhs,
                )
            )
    for i in range(P.ringsig.rank):
        for j in range(P.ringsig.rank):
            for k in range(P.ringsig.rank):
                xi, xj, xk = (DiffPoly.gen(P.ringsig, t) for t in (i, j, k))
                jac = (
                    P.bracket(xi, P.bracket(xj, xk))
                    - P.bracket(xj, P.bracket(xi, xk))
                    - P.bracket(P.bracket(xi, xj), xk)
                )
                records.append(
                    CheckRecord(
                        id=f"poisson-jacobi({gens[i]},{gens[j]},{gens[k]})",
                        lhs=render_diffpoly(jac),
                        rhs="0",
                        ok=jac.is_zero(),
                    )
                )
    return records


def kahler_lad(P: PoissonAlgebra, name: str = "") -> LieAlgebroid:
    """The Kahler Lie algebroid of a Poisson algebra on the basis dx_i."""
    sig = P.ringsig
    k = sig.rank
    c_table: dict[tuple[int, int], list[DiffPoly]] = {}
    rho: dict[int, list[DiffPoly]] = {}
    for i in range(k):
        for j in range(k):
            c_table[(i, j)] = [partial_deriv(P.pi[(i, j)], e, 0) for e in range(k)]
        rho[i] = [P.pi[(i, j)] for j in range(k)]
    return LieAlgebroid(
        sig, k, c_table, rho,
        gen_names=[f"d{g}" for g in sig.gens],
        name=name or (f"OmegaLAd({P.name})" if P.name else "OmegaLAd"),
    )


def jet_pva(P: PoissonAlgebra, name: str = "") -> PVAStructure:
    """The jet PVA of a Poisson algebra: the lambda-free table {x_i l x_j} = pi_ij."""
    sig = jet_algebra(P.ringsig)
    table = {
        (i, j): (LValue.const(P.pi[(i, j)]) if not P.pi[(i, j)].is_zero() else LValue.zero())
        for i in range(sig.rank)
        for j in range(sig.rank)
    }
    return PVAStructure(sig, table, name=name or (f"Jet({P.name})" if P.name else "Jet"))


def jet_kahler_roundtrip(P: PoissonAlgebra) -> bool:
    """current_lcad(kahler_lad(P)) coincides with kahler_lcad(jet_pva(P))
    under the generator correspondence dx_i <-> 1 (x) dx_i."""
    from .lcad import kahler_lcad

    A = current_lcad(kahler_lad(P))
    B = kahler_lcad(jet_pva(P))
    if A.rank != B.rank or A.sig != B.sig:
        return False
    for a in range(A.rank):
        for b in range(A.rank):
            if A.btable[(a, b)] != B.btable[(a, b)]:
                return False
        for i in range(A.sig.rank):
            if A.atable[(a, i)] != B.atable[(a, i)]:
                return False
    return True
