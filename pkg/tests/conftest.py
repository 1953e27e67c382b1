import pytest

from confalg.diffpoly import AlgebraSig, DiffPoly, OpPoly
from confalg.lamcalc import LValue
from confalg.pva import PVAStructure


@pytest.fixture
def sig_u():
    return AlgebraSig(("u",))


@pytest.fixture
def sig_uc():
    return AlgebraSig(("u",), ("c",))


@pytest.fixture
def gfz(sig_u):
    # {u l u} = l
    return PVAStructure(sig_u, {(0, 0): LValue.mono(DiffPoly.one(sig_u), ("l", 1))}, name="GFZ")


@pytest.fixture
def virasoro(sig_uc):
    # {u l u} = (d + 2l)u + c*l^3
    sig = sig_uc
    u = DiffPoly.gen(sig, 0)
    table = (
        LValue.const(u.dtot())
        + LValue.mono(u.smul(2), ("l", 1))
        + LValue.mono(DiffPoly.param(sig, "c"), ("l", 3))
    )
    return PVAStructure(sig, {(0, 0): table}, name="VirMagri")
