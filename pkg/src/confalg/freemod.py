"""Vectors over the operator ring: elements of free left A[d]-modules."""

from __future__ import annotations

from .diffpoly import AlgebraSig, DiffPoly, OpPoly, render_oppoly
from .errors import SignatureMismatch


class OpVec:
    """Element sum p_a(d) e_a of a free module with a fixed basis."""

    __slots__ = ("sig", "comps")

    def __init__(self, sig: AlgebraSig, comps):
        self.sig = sig
        self.comps = tuple(comps)

    # ----- constructors ---------------------------------------------------

    @staticmethod
    def zero(sig: AlgebraSig, rank: int) -> "OpVec":
        return OpVec(sig, [OpPoly.zero(sig)] * rank)

    @staticmethod
    def basis(sig: AlgebraSig, rank: int, a: int) -> "OpVec":
        comps = [OpPoly.zero(sig)] * rank
        comps[a] = OpPoly.one(sig)
        return OpVec(sig, comps)

    @staticmethod
    def single(sig: AlgebraSig, rank: int, a: int, op: OpPoly) -> "OpVec":
        comps = [OpPoly.zero(sig)] * rank
        comps[a] = op
        return OpVec(sig, comps)

    # ----- structure --------------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.comps)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.comps)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, OpVec)
            and self.sig == other.sig
            and self.comps == other.comps
        )

    def __hash__(self):
        return hash((self.sig, self.comps))

    # ----- module operations ------------------------------------------------

    def __add__(self, other: "OpVec") -> "OpVec":
        if self.rank != other.rank or self.sig != other.sig:
            raise SignatureMismatch("free-module elements not over the same basis")
        return OpVec(self.sig, [a + b for a, b in zip(self.comps, other.comps)])

    def __neg__(self) -> "OpVec":
        return OpVec(self.sig, [-c for c in self.comps])

    def __sub__(self, other: "OpVec") -> "OpVec":
        return self + (-other)

    def smul(self, c) -> "OpVec":
        return OpVec(self.sig, [p.smul(c) for p in self.comps])

    def amul(self, a: DiffPoly) -> "OpVec":
        """Left action of the algebra: compose with the order-zero operator a."""
        return OpVec(self.sig, [p.lmul(a) for p in self.comps])

    def dtot(self) -> "OpVec":
        """Left action of the derivation: compose with d."""
        d = OpPoly.d(self.sig)
        return OpVec(self.sig, [d.compose(p) for p in self.comps])

    def opapply(self, q: OpPoly) -> "OpVec":
        """Left action of a general operator q(d)."""
        return OpVec(self.sig, [q.compose(p) for p in self.comps])

    def render(self, names: list[str] | None = None) -> str:
        parts = []
        for a, p in enumerate(self.comps):
            if p.is_zero():
                continue
            name = names[a] if names else f"e{a + 1}"
            parts.append(f"({render_oppoly(p)})*{name}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"OpVec({self.render()})"


def in_partial_image_vec(v: OpVec) -> bool:
    """Decide membership in d(M) for a free module element.

    v = sum q_a(d) w_a lies in dM iff every component lies in the left ideal
    d A[d]; that is decided exactly by a triangular solve (no integration is
    required: the candidate cofactor is determined top-down and the residual
    order-zero term must vanish).
    """
    for q in v.comps:
        if q.is_zero():
            continue
        n = q.order()
        if n == 0:
            return False
        p = [DiffPoly.zero(v.sig)] * n
        p[n - 1] = q.coeff(n)
        for j in range(n - 1, 0, -1):
            p[j - 1] = q.coeff(j) - p[j].dtot()
        if q.coeff(0) != p[0].dtot():
            return False
    return True
