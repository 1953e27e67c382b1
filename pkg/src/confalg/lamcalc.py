"""Multi-lambda polynomial values and the marker evaluation engine.

An LValue is a polynomial in named formal lambda variables whose
coefficients live in a coefficient module M (DiffPoly, or a free-module
vector, or any object implementing the small module protocol: __add__,
__neg__, is_zero, smul, amul, dtot).  The engine provides exactly two
normalised primitives for the substitution-marker notation:

* subst_affine: a lambda variable is replaced by an affine form, with any
  resulting power of the derivation applied to the value's coefficients;

* adjoint_shifted: the bound variable of a follower value is contracted
  against a differential operator, with the derivation landing on the
  designated operator coefficient.

Everything else (shifted operator evaluation, quotient normal forms, the
splitting of the quotient map) is built from these.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .diffpoly import AlgebraSig, DiffPoly, OpPoly, d_total, partial_deriv
from .errors import guard_terms

# lambda monomial: tuple of (name, exponent), sorted by name
LMono = tuple[tuple[str, int], ...]
_ONE: LMono = ()

_fresh_counter = itertools.count()


def fresh_name() -> str:
    """Fresh internal bound-variable name; never user-visible."""
    return f"$x{next(_fresh_counter)}"


def _mul_lmono(m1: LMono, m2: LMono) -> LMono:
    d = dict(m1)
    for v, e in m2:
        d[v] = d.get(v, 0) + e
    return tuple(sorted((v, e) for v, e in d.items() if e))


def _lmono_key(m: LMono):
    return (sum(e for _, e in m), m)


@dataclass(frozen=True)
class Affine:
    """Affine image c0 + sum c_j * lambda_j + eps * d of a lambda variable."""

    const: Fraction = Fraction(0)
    lams: tuple[tuple[str, Fraction], ...] = ()
    dpart: Fraction = Fraction(0)

    @staticmethod
    def of(*lams: tuple[str, int | Fraction], const=0, dpart=0) -> "Affine":
        return Affine(Fraction(const), tuple((n, Fraction(c)) for n, c in lams), Fraction(dpart))


class LValue:
    """Polynomial in lambda variables with coefficients in a module."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict):
        clean = {m: c for m, c in terms.items() if not c.is_zero()}
        guard_terms(len(clean))
        self.terms = clean

    # ----- constructors ---------------------------------------------------

    @staticmethod
    def zero() -> "LValue":
        return LValue({})

    @staticmethod
    def const(m) -> "LValue":
        return LValue({_ONE: m})

    @staticmethod
    def mono(coeff, *lams: tuple[str, int]) -> "LValue":
        mono = tuple(sorted((n, e) for n, e in lams if e))
        return LValue({mono: coeff})

    # ----- structure --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, LValue) and self.terms == other.terms

    def __hash__(self):
        raise TypeError("LValue is unhashable")

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: _lmono_key(t[0]), reverse=True)

    def names(self) -> set[str]:
        s: set[str] = set()
        for m in self.terms:
            s.update(n for n, _ in m)
        return s

    def coeff(self, mono: LMono):
        return self.terms.get(tuple(sorted(mono)))

    def as_poly_in(self, name: str) -> dict[int, "LValue"]:
        """Collect terms by the power of one lambda variable."""
        out: dict[int, dict] = {}
        for m, c in self.terms.items():
            d = dict(m)
            e = d.pop(name, 0)
            rest = tuple(sorted(d.items()))
            out.setdefault(e, {})
            bucket = out[e]
            bucket[rest] = bucket[rest] + c if rest in bucket else c
        return {e: LValue(t) for e, t in out.items()}

    # ----- linear operations ------------------------------------------------

    def __add__(self, other: "LValue") -> "LValue":
        t = dict(self.terms)
        for m, c in other.terms.items():
            t[m] = t[m] + c if m in t else c
        return LValue(t)

    def __neg__(self) -> "LValue":
        return LValue({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "LValue") -> "LValue":
        return self + (-other)

    def smul(self, s) -> "LValue":
        s = Fraction(s)
        if s == 0:
            return LValue.zero()
        return LValue({m: c.smul(s) for m, c in self.terms.items()})

    def amul(self, a: DiffPoly) -> "LValue":
        """Multiply every coefficient by an algebra element."""
        return LValue({m: c.amul(a) for m, c in self.terms.items()})

    def map_coeffs(self, f) -> "LValue":
        t: dict = {}
        for m, c in self.terms.items():
            v = f(c)
            if not v.is_zero():
                t[m] = t[m] + v if m in t else v
        return LValue(t)

    def dtot(self) -> "LValue":
        """Apply the module derivation to every coefficient."""
        return self.map_coeffs(lambda c: c.dtot())

    def mul_lmono(self, mono: LMono) -> "LValue":
        return LValue({_mul_lmono(m, mono): c for m, c in self.terms.items()})

    def mul_lname(self, name: str, e: int = 1) -> "LValue":
        return self.mul_lmono(((name, e),))

    # ----- substitution -----------------------------------------------------

    def rename(self, mapping: dict[str, str]) -> "LValue":
        """Injective renaming of lambda variables."""
        t: dict = {}
        for m, c in self.terms.items():
            d: dict[str, int] = {}
            for n, e in m:
                nn = mapping.get(n, n)
                d[nn] = d.get(nn, 0) + e
            key = tuple(sorted(d.items()))
            t[key] = t[key] + c if key in t else c
        return LValue(t)

    def subst_affine(self, name: str, image: Affine) -> "LValue":
        """Substitute one lambda variable by an affine form.

        Every derivation power produced by the substitution is applied to
        the module coefficient of the term it multiplies.
        """
        by_power = self.as_poly_in(name)
        out = LValue.zero()
        for e, part in sorted(by_power.items()):
            cur = part
            for _ in range(e):
                nxt = LValue.zero()
                if image.const:
                    nxt = nxt + cur.smul(image.const)
                for n, c in image.lams:
                    if c:
                        nxt = nxt + cur.mul_lname(n).smul(c)
                if image.dpart:
                    nxt = nxt + cur.dtot().smul(image.dpart)
                cur = nxt
            out = out + cur
        return out

    def eval_zero(self, name: str) -> "LValue":
        return self.subst_affine(name, Affine())


# ---------------------------------------------------------------------------
# scalar lambda polynomials (rational coefficients), used for expansions


SPoly = dict[LMono, Fraction]


def sp_const(c) -> SPoly:
    c = Fraction(c)
    return {_ONE: c} if c else {}


def sp_name(name: str) -> SPoly:
    return {((name, 1),): Fraction(1)}


def sp_add(a: SPoly, b: SPoly) -> SPoly:
    t = dict(a)
    for m, c in b.items():
        t[m] = t.get(m, Fraction(0)) + c
    return {m: c for m, c in t.items() if c}


def sp_mul(a: SPoly, b: SPoly) -> SPoly:
    t: dict[LMono, Fraction] = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = _mul_lmono(m1, m2)
            t[m] = t.get(m, Fraction(0)) + c1 * c2
    return {m: c for m, c in t.items() if c}


def sp_pow(a: SPoly, n: int) -> SPoly:
    r = sp_const(1)
    for _ in range(n):
        r = sp_mul(r, a)
    return r


def lv_mul_spoly(v: LValue, sp: SPoly) -> LValue:
    t: dict = {}
    for m1, c in v.terms.items():
        for m2, s in sp.items():
            m = _mul_lmono(m1, m2)
            w = c.smul(s)
            t[m] = t[m] + w if m in t else w
    return LValue(t)


def lv_mul(a: "LValue", b: "LValue") -> "LValue":
    """Product of a DiffPoly-valued LValue with a module-valued LValue."""
    t: dict = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            m = _mul_lmono(m1, m2)
            w = c2.amul(c1)
            t[m] = t[m] + w if m in t else w
    return LValue(t)


# ---------------------------------------------------------------------------
# the two marker primitives and their derived forms


def shift_apply(op: OpPoly, shift: list[tuple[str, int | Fraction]], v: LValue) -> LValue:
    """Evaluate sum_i a_i (shift + d)^i on an LValue.

    The shift is an affine combination of lambda variables; the derivation
    acts on the module coefficients of v; each a_i multiplies afterwards.
    This realises a(lambda + x)(|_{x=d} v).
    """
    res = LValue.zero()
    cur = v
    for i, a in enumerate(op.coeffs):
        if i > 0:
            nxt = cur.dtot()
            for n, c in shift:
                nxt = nxt + cur.mul_lname(n).smul(c)
            cur = nxt
        if not a.is_zero():
            res = res + cur.amul(a)
    return res


def eval_shifted(op: OpPoly, lname: str, b) -> LValue:
    """a(lambda + d) applied to a module element: sum a_i (lambda+d)^i (b)."""
    return shift_apply(op, [(lname, 1)], LValue.const(b))


def contract_factor(v: LValue, xname: str, a: DiffPoly) -> LValue:
    """Contract the bound variable against a designated algebra factor.

    Each power x^t is replaced by the t-th derivative of a, multiplied into
    the module coefficient of its term.
    """
    by_power = v.as_poly_in(xname)
    res = LValue.zero()
    da = a
    for t in range(0, max(by_power) + 1 if by_power else 0):
        if t > 0:
            da = d_total(da)
        part = by_power.get(t)
        if part is None or da.is_zero():
            continue
        res = res + part.amul(da)
    return res


def contract_module(v: LValue, xname: str, m) -> LValue:
    """Contract the bound variable of a DiffPoly-valued LValue against a module element.

    Each power x^t is replaced by the t-th module derivative of m, scaled by
    the DiffPoly coefficient of its term.
    """
    by_power = v.as_poly_in(xname)
    res = LValue.zero()
    dm = m
    for t in range(0, max(by_power) + 1 if by_power else 0):
        if t > 0:
            dm = dm.dtot()
        part = by_power.get(t)
        if part is None:
            continue
        for mono, c in part.terms.items():
            w = dm.amul(c)
            if not w.is_zero():
                res = res + LValue({mono: w})
    return res


def adjoint_shifted(op: OpPoly, lname: str, follower: LValue, xname: str) -> LValue:
    """(|_{x=d} a*(lambda)) F(x): the marker-evaluated adjoint action.

    Expands a(-lambda-x) * F(x) as a polynomial in the bound variable x and
    replaces x^t by the t-th derivative of the designated coefficient a_i.
    """
    res = LValue.zero()
    minus = sp_add(sp_mul(sp_const(-1), sp_name(lname)), sp_mul(sp_const(-1), sp_name(xname)))
    p = sp_const(1)
    for i, a in enumerate(op.coeffs):
        if i > 0:
            p = sp_mul(p, minus)
        if a.is_zero():
            continue
        res = res + contract_factor(lv_mul_spoly(follower, p), xname, a)
    return res


# ---------------------------------------------------------------------------
# quotient normal forms


def quot_normalize(v: LValue, lnames: list[str]) -> LValue:
    """Eliminate the last lambda variable: l_k := -l_1 - ... - l_{k-1} - d."""
    if not lnames:
        raise ValueError("need at least one lambda variable")
    last = lnames[-1]
    image = Affine(
        Fraction(0),
        tuple((n, Fraction(-1)) for n in lnames[:-1]),
        Fraction(-1),
    )
    return v.subst_affine(last, image)


def q_split(v: LValue, lnames: list[str]) -> LValue:
    """Basic representative of a quotient class: the splitting of p.

    q(m)(l_1..l_k) = (|_{x=d} m(l_1 - (L+x)/k, ..., l_k - (L+x)/k)) with
    L = l_1 + ... + l_k.  Satisfies quot_normalize(q_split(v)) == v.
    """
    k = len(lnames)
    if k < 1:
        raise ValueError("need at least one lambda variable")
    x = fresh_name()
    temps = [fresh_name() for _ in lnames[:-1]]
    out = v.rename(dict(zip(lnames[:-1], temps)))
    inv = Fraction(-1, k)
    for t, n in zip(temps, lnames[:-1]):
        lams = [(m, inv) for m in lnames if m != n] + [(n, 1 + inv), (x, inv)]
        out = out.subst_affine(t, Affine(Fraction(0), tuple(lams), Fraction(0)))
    return out.subst_affine(x, Affine(Fraction(0), (), Fraction(1)))


# ---------------------------------------------------------------------------
# conformal derivations of a differential polynomial algebra


def cder_apply(values: list[LValue], table_name: str, p: DiffPoly, lname: str) -> LValue:
    """Extend generator values of a conformal derivation to the whole algebra.

    values[i] is sigma_lambda(u_i) as an LValue over DiffPoly in the formal
    variable table_name.  Returns sigma_lambda(p) in the variable lname:
    sum_{i,n} (dp/du_i^(n)) (lambda+d)^n sigma_lambda(u_i).
    """
    res = LValue.zero()
    for (i, n) in sorted(p.jet_support()):
        c = partial_deriv(p, i, n)
        if c.is_zero():
            continue
        base = values[i] if table_name == lname else values[i].rename({table_name: lname})
        cur = base
        for _ in range(n):
            cur = cur.mul_lname(lname) + cur.dtot()
        res = res + cur.amul(c)
    return res


class CDerElement:
    """A conformal derivation of A presented by its values on generators."""

    __slots__ = ("sig", "values", "lname")

    def __init__(self, sig: AlgebraSig, values: list[LValue], lname: str = "l"):
        if len(values) != sig.rank:
            raise ValueError("need one value per generator")
        self.sig = sig
        self.values = list(values)
        self.lname = lname

    @staticmethod
    def zero(sig: AlgebraSig, lname: str = "l") -> "CDerElement":
        return CDerElement(sig, [LValue.zero() for _ in sig.gens], lname)

    def apply(self, p: DiffPoly, lname: str) -> LValue:
        return cder_apply(self.values, self.lname, p, lname)

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.values)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CDerElement)
            and self.sig == other.sig
            and all(
                a == (b if self.lname == other.lname else b.rename({other.lname: self.lname}))
                for a, b in zip(self.values, other.values)
            )
        )


def cder_bracket(phi: CDerElement, psi: CDerElement, lname: str, mname: str) -> list[LValue]:
    """[phi_lambda psi]_mu(u_i): the commutator bracket of conformal derivations.

    Returns the list of values on generators, as LValues in (lname, mname).
    """
    out: list[LValue] = []
    nu = fresh_name()
    for i in range(phi.sig.rank):
        # phi_lambda(psi_{mu-lambda}(u_i))
        inner = psi.apply(DiffPoly.gen(phi.sig, i), nu)
        t1 = LValue.zero()
        for mono, c in inner.terms.items():
            t1 = t1 + phi.apply(c, lname).mul_lmono(mono)
        t1 = t1.subst_affine(nu, Affine.of((mname, 1), (lname, -1)))
        # psi_{mu-lambda}(phi_lambda(u_i))
        inner2 = phi.apply(DiffPoly.gen(phi.sig, i), lname)
        t2 = LValue.zero()
        for mono, c in inner2.terms.items():
            t2 = t2 + psi.apply(c, nu).mul_lmono(mono)
        t2 = t2.subst_affine(nu, Affine.of((mname, 1), (lname, -1)))
        out.append(t1 - t2)
    return out


# ---------------------------------------------------------------------------
# rendering


def render_lvalue(v: LValue, render_coeff) -> str:
    if v.is_zero():
        return "0"
    parts: list[str] = []
    for m, c in v.sorted_terms():
        body = render_coeff(c)
        neg = body.startswith("-") and "+" not in body and " - " not in body
        if neg:
            body = body[1:]
        if " " in body:
            body = f"({body})"
            neg = False
        lpart = "*".join(n if e == 1 else f"{n}^{e}" for n, e in m)
        if lpart:
            body = lpart if body == "1" else f"{body}*{lpart}"
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append(f" {'-' if neg else '+'} {body}")
    return "".join(parts)
