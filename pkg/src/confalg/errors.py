"""Error types and the global expansion size guard."""


class ConfalgError(Exception):
    """Base class for all confalg errors."""


class SignatureMismatch(ConfalgError):
    """Operands built over different algebra signatures."""


class ResourceGuardError(ConfalgError):
    """A polynomial expansion exceeded the configured term budget."""


class UnknownName(ConfalgError):
    """Reference to an undeclared generator, parameter or lambda variable."""


# Maximum number of monomials allowed in a single polynomial value.  Runaway
# lambda expansions abort with ResourceGuardError instead of eating the host.
MAX_TERMS = 10**6


def set_max_terms(n: int) -> None:
    global MAX_TERMS
    if n <= 0:
        raise ValueError("term budget must be positive")
    MAX_TERMS = n


def guard_terms(n: int) -> None:
    if n > MAX_TERMS:
        raise ResourceGuardError(
            f"expansion produced {n} terms, exceeding the budget of {MAX_TERMS}"
        )
