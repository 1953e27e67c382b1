"""Seeded random samples used by the identity checkers.

Sample space follows the verification policy: operators of d-degree <= 2
with coefficient degree <= 2, polynomial arguments of low jet order.  All
sampling is driven by an explicit random.Random so runs are reproducible.
"""

from __future__ import annotations

from random import Random

from .diffpoly import AlgebraSig, DiffPoly, OpPoly
from .freemod import OpVec
from .lamcalc import LValue


def sample_diffpoly(
    rng: Random,
    sig: AlgebraSig,
    max_terms: int = 2,
    max_deg: int = 2,
    max_order: int = 2,
    allow_params: bool = True,
) -> DiffPoly:
    p = DiffPoly.zero(sig)
    for _ in range(rng.randint(1, max_terms)):
        term = DiffPoly.const(sig, rng.choice([1, -1, 2]))
        for _ in range(rng.randint(0, max_deg)):
            if sig.rank:
                i = rng.randrange(sig.rank)
                n = rng.randint(0, max_order)
                term = term * DiffPoly.gen(sig, i, n)
        if allow_params and sig.params and rng.random() < 0.3:
            term = term * DiffPoly.param(sig, rng.choice(sig.params))
        p = p + term
    return p


def sample_oppoly(
    rng: Random,
    sig: AlgebraSig,
    max_dord: int = 2,
    max_cdeg: int = 2,
) -> OpPoly:
    coeffs = []
    for _ in range(rng.randint(1, max_dord + 1)):
        if rng.random() < 0.25:
            coeffs.append(DiffPoly.zero(sig))
        else:
            coeffs.append(sample_diffpoly(rng, sig, max_terms=1, max_deg=max_cdeg, max_order=1))
    if all(c.is_zero() for c in coeffs):
        coeffs[0] = DiffPoly.one(sig)
    return OpPoly(sig, coeffs)


def sample_opvec(rng: Random, sig: AlgebraSig, rank: int) -> OpVec:
    a = rng.randrange(rank)
    return OpVec.single(sig, rank, a, sample_oppoly(rng, sig))


def sample_lvalue_diffpoly(
    rng: Random,
    sig: AlgebraSig,
    lnames: list[str],
    max_ldeg: int = 2,
) -> LValue:
    v = LValue.zero()
    for _ in range(rng.randint(1, 3)):
        mono = tuple(
            (n, e)
            for n in lnames
            if (e := rng.randint(0, max_ldeg // max(1, len(lnames))))
        )
        c = sample_diffpoly(rng, sig, max_terms=1, max_deg=2, max_order=1)
        v = v + LValue({tuple(sorted(mono)): c})
    return v
