"""confalg: exact lambda-bracket calculus over differential polynomial algebras.

The package implements Poisson vertex algebras and Lie conformal algebroids
presented by finite generator tables, the standard constructions relating
them (Kahler differentials, current/jet, gauge pairs, semidirect products,
abelian extensions), and their cohomology complexes, all over an exact
rational/parametric coefficient kernel.  Every defining identity is checked
by symbolic equality of canonical forms.
"""

from .errors import ConfalgError, ResourceGuardError, SignatureMismatch

__all__ = ["ConfalgError", "ResourceGuardError", "SignatureMismatch"]
__version__ = "0.1.0"
