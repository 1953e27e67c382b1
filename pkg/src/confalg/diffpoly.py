"""Exact arithmetic for differential polynomial algebras and A[d].

An algebra A = Q[params][u_i^(n)] is presented by an AlgebraSig.  Elements
are DiffPoly values: canonical sums of monomials in the jet variables
u_i^(n) and the parameter symbols, with rational coefficients.  Scalars in
the sense of the public contract are the jet-free elements.  OpPoly values
are finite differential operators sum a_i d^i with DiffPoly coefficients,
written in canonical left form.

All values are immutable after construction and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Iterator

from .errors import SignatureMismatch, UnknownName, guard_terms

# A monomial is a pair (jets, pars):
#   jets: tuple of (((gen index, derivative order), exponent)), sorted
#   pars: tuple of ((parameter name, exponent)), sorted
Jets = tuple[tuple[tuple[int, int], int], ...]
Pars = tuple[tuple[str, int], ...]
Mono = tuple[Jets, Pars]

_ONE_MONO: Mono = ((), ())


@dataclass(frozen=True)
class AlgebraSig:
    """Ordered generator and parameter names of a differential polynomial algebra."""

    gens: tuple[str, ...]
    params: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        names = list(self.gens) + list(self.params)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate names in signature: {names}")

    @property
    def rank(self) -> int:
        return len(self.gens)

    def gen_index(self, name: str) -> int:
        try:
            return self.gens.index(name)
        except ValueError:
            raise UnknownName(f"unknown generator {name!r}") from None


def _check_sig(a: "DiffPoly", b: "DiffPoly") -> None:
    if a.sig != b.sig:
        raise SignatureMismatch(f"signatures differ: {a.sig} vs {b.sig}")


def _mul_mono(m1: Mono, m2: Mono) -> Mono:
    j: dict[tuple[int, int], int] = dict(m1[0])
    for v, e in m2[0]:
        j[v] = j.get(v, 0) + e
    p: dict[str, int] = dict(m1[1])
    for v, e in m2[1]:
        p[v] = p.get(v, 0) + e
    return (tuple(sorted(j.items())), tuple(sorted(p.items())))


def _mono_degree(m: Mono) -> int:
    return sum(e for _, e in m[0]) + sum(e for _, e in m[1])


def _mono_sort_key(m: Mono):
    # graded, then lexicographic on jets and parameters; fixed once globally
    return (_mono_degree(m), m[0], m[1])


class DiffPoly:
    """Canonical multivariate polynomial in jet variables and parameters."""

    __slots__ = ("sig", "_terms")

    def __init__(self, sig: AlgebraSig, terms: dict[Mono, Fraction]):
        self.sig = sig
        clean = {m: c for m, c in terms.items() if c != 0}
        guard_terms(len(clean))
        self._terms = clean

    # ----- constructors -------------------------------------------------

    @staticmethod
    def zero(sig: AlgebraSig) -> "DiffPoly":
        return DiffPoly(sig, {})

    @staticmethod
    def const(sig: AlgebraSig, c) -> "DiffPoly":
        c = Fraction(c)
        return DiffPoly(sig, {_ONE_MONO: c} if c else {})

    @staticmethod
    def one(sig: AlgebraSig) -> "DiffPoly":
        return DiffPoly.const(sig, 1)

    @staticmethod
    def gen(sig: AlgebraSig, i: int, n: int = 0) -> "DiffPoly":
        if not 0 <= i < sig.rank:
            raise UnknownName(f"generator index {i} out of range")
        if n < 0:
            raise ValueError("derivative order must be >= 0")
        return DiffPoly(sig, {((((i, n), 1),), ()): Fraction(1)})

    @staticmethod
    def param(sig: AlgebraSig, name: str) -> "DiffPoly":
        if name not in sig.params:
            raise UnknownName(f"unknown parameter {name!r}")
        return DiffPoly(sig, {((), ((name, 1),)): Fraction(1)})

    # ----- structure ----------------------------------------------------

    def terms(self) -> Iterator[tuple[Mono, Fraction]]:
        return iter(sorted(self._terms.items(), key=lambda t: _mono_sort_key(t[0]), reverse=True))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        """True if jet-free (a scalar: rational plus parameter polynomial)."""
        return all(not m[0] for m in self._terms)

    def constant_part(self) -> "DiffPoly":
        return DiffPoly(self.sig, {m: c for m, c in self._terms.items() if not m[0]})

    def jet_support(self) -> set[tuple[int, int]]:
        s: set[tuple[int, int]] = set()
        for m in self._terms:
            s.update(v for v, _ in m[0])
        return s

    def total_degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DiffPoly)
            and self.sig == other.sig
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self.sig, tuple(sorted(self._terms.items()))))

    # ----- ring operations ----------------------------------------------

    def __add__(self, other: "DiffPoly") -> "DiffPoly":
        _check_sig(self, other)
        t = dict(self._terms)
        for m, c in other._terms.items():
            t[m] = t.get(m, Fraction(0)) + c
        return DiffPoly(self.sig, t)

    def __neg__(self) -> "DiffPoly":
        return DiffPoly(self.sig, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other: "DiffPoly") -> "DiffPoly":
        return self + (-other)

    def __mul__(self, other: "DiffPoly") -> "DiffPoly":
        _check_sig(self, other)
        t: dict[Mono, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mul_mono(m1, m2)
                t[m] = t.get(m, Fraction(0)) + c1 * c2
        return DiffPoly(self.sig, t)

    def smul(self, c) -> "DiffPoly":
        c = Fraction(c)
        return DiffPoly(self.sig, {m: c * v for m, v in self._terms.items()})

    def __pow__(self, n: int) -> "DiffPoly":
        if n < 0:
            raise ValueError("negative power")
        r = DiffPoly.one(self.sig)
        b = self
        while n:
            if n & 1:
                r = r * b
            b = b * b
            n >>= 1
        return r

    # module protocol used by the lambda engine: A acts by multiplication,
    # the derivation acts as the total derivative
    def amul(self, a: "DiffPoly") -> "DiffPoly":
        return self * a

    def dtot(self) -> "DiffPoly":
        return d_total(self)

    # ----- rendering ------------------------------------------------------

    def render(self) -> str:
        return render_diffpoly(self)

    def __repr__(self) -> str:
        return f"DiffPoly({self.render()})"


# ---------------------------------------------------------------------------
# derivations


def d_total(p: DiffPoly) -> DiffPoly:
    """Total derivative: u_i^(n) -> u_i^(n+1), Leibniz on products, kills scalars."""
    t: dict[Mono, Fraction] = {}
    for (jets, pars), c in p._terms.items():
        jd = dict(jets)
        for (i, n), e in jets:
            nj = dict(jd)
            nj[(i, n)] = e - 1
            if nj[(i, n)] == 0:
                del nj[(i, n)]
            nj[(i, n + 1)] = nj.get((i, n + 1), 0) + 1
            m = (tuple(sorted(nj.items())), pars)
            t[m] = t.get(m, Fraction(0)) + c * e
    return DiffPoly(p.sig, t)


def partial_deriv(p: DiffPoly, i: int, n: int) -> DiffPoly:
    """Formal partial derivative with respect to the jet variable u_i^(n)."""
    if not 0 <= i < p.sig.rank:
        raise UnknownName(f"generator index {i} out of range")
    t: dict[Mono, Fraction] = {}
    for (jets, pars), c in p._terms.items():
        jd = dict(jets)
        e = jd.get((i, n))
        if not e:
            continue
        jd[(i, n)] = e - 1
        if jd[(i, n)] == 0:
            del jd[(i, n)]
        m = (tuple(sorted(jd.items())), pars)
        t[m] = t.get(m, Fraction(0)) + c * e
    return DiffPoly(p.sig, t)


def variational_deriv(p: DiffPoly, i: int) -> DiffPoly:
    """Euler operator: sum_n (-d)^n of the partial derivative at u_i^(n)."""
    orders = sorted({n for (j, n) in p.jet_support() if j == i})
    res = DiffPoly.zero(p.sig)
    for n in orders:
        q = partial_deriv(p, i, n)
        for _ in range(n):
            q = -d_total(q)
        res = res + q
    return res


def in_partial_image(p: DiffPoly) -> bool:
    """Decide p in dA.

    Criterion: the jet-free part of p vanishes and all variational
    derivatives vanish.  This is the kernel-of-the-Euler-operator
    characterisation of total derivatives in a free differential polynomial
    algebra over a Q-algebra of constants; it is standard for the
    variational complex and external to the structures built here.
    """
    if not p.constant_part().is_zero():
        return False
    return all(variational_deriv(p, i).is_zero() for i in range(p.sig.rank))


# ---------------------------------------------------------------------------
# differential operators


class OpPoly:
    """Differential operator sum a_i d^i in canonical left form."""

    __slots__ = ("sig", "coeffs")

    def __init__(self, sig: AlgebraSig, coeffs: Iterable[DiffPoly]):
        cs = list(coeffs)
        while cs and cs[-1].is_zero():
            cs.pop()
        self.sig = sig
        self.coeffs = tuple(cs)

    # ----- constructors -------------------------------------------------

    @staticmethod
    def zero(sig: AlgebraSig) -> "OpPoly":
        return OpPoly(sig, [])

    @staticmethod
    def of(a: DiffPoly) -> "OpPoly":
        return OpPoly(a.sig, [a])

    @staticmethod
    def d(sig: AlgebraSig, n: int = 1) -> "OpPoly":
        cs = [DiffPoly.zero(sig)] * n + [DiffPoly.one(sig)]
        return OpPoly(sig, cs)

    @staticmethod
    def one(sig: AlgebraSig) -> "OpPoly":
        return OpPoly(sig, [DiffPoly.one(sig)])

    # ----- structure ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, i: int) -> DiffPoly:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return DiffPoly.zero(self.sig)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, OpPoly)
            and self.sig == other.sig
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.sig, self.coeffs))

    # ----- arithmetic ------------------------------------------------------

    def __add__(self, other: "OpPoly") -> "OpPoly":
        if self.sig != other.sig:
            raise SignatureMismatch("operator signatures differ")
        n = max(len(self.coeffs), len(other.coeffs))
        return OpPoly(self.sig, [self.coeff(i) + other.coeff(i) for i in range(n)])

    def __neg__(self) -> "OpPoly":
        return OpPoly(self.sig, [-c for c in self.coeffs])

    def __sub__(self, other: "OpPoly") -> "OpPoly":
        return self + (-other)

    def smul(self, c) -> "OpPoly":
        return OpPoly(self.sig, [a.smul(c) for a in self.coeffs])

    def lmul(self, a: DiffPoly) -> "OpPoly":
        """Left multiplication by an algebra element (order-zero composition)."""
        return OpPoly(self.sig, [a * c for c in self.coeffs])

    def apply(self, p: DiffPoly) -> DiffPoly:
        """Evaluate the operator on an algebra element: sum a_i d^i(p)."""
        res = DiffPoly.zero(self.sig)
        q = p
        for i, a in enumerate(self.coeffs):
            if i > 0:
                q = d_total(q)
            res = res + a * q
        return res

    def compose(self, other: "OpPoly") -> "OpPoly":
        """Operator product; d o b = b d + d(b) as operators."""
        if self.sig != other.sig:
            raise SignatureMismatch("operator signatures differ")
        n = len(self.coeffs) + len(other.coeffs)
        out = [DiffPoly.zero(self.sig) for _ in range(max(n - 1, 0))]
        for j, b in enumerate(other.coeffs):
            if b.is_zero():
                continue
            derivs = [b]
            for i, a in enumerate(self.coeffs):
                if a.is_zero():
                    continue
                while len(derivs) <= i:
                    derivs.append(d_total(derivs[-1]))
                for t in range(i + 1):
                    out[i - t + j] = out[i - t + j] + (a * derivs[t]).smul(comb(i, t))
        return OpPoly(self.sig, out)

    def adjoint(self) -> "OpPoly":
        """Formal adjoint sum (-d)^i o a_i, in canonical left form."""
        out = [DiffPoly.zero(self.sig) for _ in range(max(len(self.coeffs), 1))]
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            derivs = [a]
            for t in range(1, i + 1):
                derivs.append(d_total(derivs[-1]))
            for t in range(i + 1):
                out[i - t] = out[i - t] + derivs[t].smul((-1) ** i * comb(i, t))
        return OpPoly(self.sig, out)

    def render(self) -> str:
        return render_oppoly(self)

    def __repr__(self) -> str:
        return f"OpPoly({self.render()})"


def op_compose(a: OpPoly, b: OpPoly) -> OpPoly:
    return a.compose(b)


def adjoint(a: OpPoly) -> OpPoly:
    return a.adjoint()


# ---------------------------------------------------------------------------
# canonical text rendering


def _render_jet(sig: AlgebraSig, i: int, n: int) -> str:
    name = sig.gens[i]
    if n == 0:
        return name
    if n <= 3:
        return name + "'" * n
    return f"{name}^({n})"


def _render_coeff(c: Fraction) -> str:
    return str(c)


def render_mono(sig: AlgebraSig, m: Mono, c: Fraction) -> tuple[str, str]:
    """Return (sign, body) for one monomial."""
    sign = "-" if c < 0 else "+"
    c = abs(c)
    factors: list[str] = []
    if c != 1 or (not m[0] and not m[1]):
        factors.append(_render_coeff(c))
    for name, e in m[1]:
        factors.append(name if e == 1 else f"{name}^{e}")
    for (i, n), e in m[0]:
        v = _render_jet(sig, i, n)
        factors.append(v if e == 1 else f"{v}^{e}")
    return sign, "*".join(factors)


def render_diffpoly(p: DiffPoly) -> str:
    if p.is_zero():
        return "0"
    parts: list[str] = []
    for m, c in p.terms():
        sign, body = render_mono(p.sig, m, c)
        if not parts:
            parts.append(body if sign == "+" else "-" + body)
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts)


def render_oppoly(a: OpPoly) -> str:
    if a.is_zero():
        return "0"
    parts: list[str] = []
    for i in range(a.order(), -1, -1):
        c = a.coeff(i)
        if c.is_zero():
            continue
        dpart = "" if i == 0 else ("D" if i == 1 else f"D^{i}")
        body = render_diffpoly(c)
        neg = body.startswith("-")
        if neg:
            body = body[1:]
        if dpart:
            if body == "1":
                body = dpart
            elif " " in body:
                body = f"({body})*{dpart}"
            else:
                body = f"{body}*{dpart}"
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append(f" {'-' if neg else '+'} {body}")
    return "".join(parts)
