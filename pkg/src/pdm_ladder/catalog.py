"""Named mass profiles with their default domains.

The constants are illustrative choices (m0 = sigma = delta = alpha = 1,
m0 = 1.1 for the cosine profile); the figure domains are likewise choices.

``decay_tol`` is the relative boundary magnitude the states must reach.
For the exponential profile F is bounded above, so the states fall off
only like m^1/4 ~ exp(-x/4); long before 1e-12 is reached m drops below
the positivity floor and 1/m makes the finite-difference Hamiltonian
unusable.  That entry therefore accepts a loose tolerance.

``grid`` is the default number of points.  The cosine profile has the
widest domain and the largest derivatives of m, so it needs a finer grid
for the commutator checks to clear their thresholds; the exponential
profile sits between truncation error and the 1/m rounding growth.
"""
from __future__ import annotations

from dataclasses import dataclass

from .profile import make_profile

__all__ = ["CatalogEntry", "CATALOG", "get_profile", "catalog_entry"]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    expr: str
    domain: tuple
    decay_tol: float = 1e-12
    grid: int = 4001
    note: str = ""


CATALOG = {
    "quadratic": CatalogEntry("quadratic", "1 + x^2", (-4.0, 4.0)),
    "cosine": CatalogEntry("cosine", "1.1 + cos(x)", (-12.0, 12.0), grid=8001),
    "exponential": CatalogEntry(
        "exponential", "(1*1)/(1 - exp(-1)) * exp(-1*x)", (-6.0, 10.0), decay_tol=0.1, grid=6001,
        note="F is bounded as x -> +inf; states decay only through m^1/4"),
}


def catalog_entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog profile {name!r}; choose from {sorted(CATALOG)}") from None


def get_profile(name: str, domain=None, floor=1e-8):
    entry = catalog_entry(name)
    return make_profile(entry.expr, domain or entry.domain, floor, name=name)
