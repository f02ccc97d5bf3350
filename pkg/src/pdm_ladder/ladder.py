"""Complex first-order ladder operators for the BenDaniel-Duke Hamiltonian.

Given a positive mass m(x) the ladder functions are

    alpha   = a / sqrt(m)
    beta_R  = (a/2) (m^-1/2)' + (a dE / hbar^2) F,   F = int sqrt(m) dx
    beta_I  = lam

and the complex potential V = V_R + i V_I follows in closed form.  The
Hamiltonian, its adjoint and the four ladder operators act on
:class:`~pdm_ladder.numerics.GridFunction` samples through finite
differences, so every algebraic identity can be checked on the grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial as P

from .errors import GridError, InsufficientDomainError, OrderingError
from .numerics import (
    Grid, GridFunction, cumulative_antiderivative_sqrt_m, derivative_matrix,
    norm, sesquilinear_pair,
)

__all__ = [
    "ModelParams", "OrderingParams", "LadderSystem", "StateSet",
    "build_system", "alpha_of", "beta_r_of", "potential_of", "veff_von_roos",
    "ground_state", "apply_ladder", "apply_hamiltonian", "build_states",
    "energy", "factorization_defect", "raising_polynomials", "boundary_ratio", "fit_domain",
]

LADDERS = ("A-", "A+", "B-", "B+")
PRECISION_WARN_LEVEL = 8


@dataclass(frozen=True)
class ModelParams:
    """Scalars of the model.

    ``a`` defaults to ``hbar``.  Any other value breaks the factorization
    ``H = A+ A- + E0`` and is only accepted with ``expert=True``.
    ``anchor`` is the point where F vanishes (``None``: 0 if inside the
    domain, otherwise the domain midpoint).
    """

    hbar: float = 1.0
    delta_e: float = 1.0
    lam: float = 0.2
    a: float | None = None
    anchor: float | None = None
    expert: bool = False

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError("hbar must be > 0")
        if not self.delta_e > 0:
            raise ValueError("delta_e must be > 0 (lowering operator needs positive spacing)")
        if self.a is None:
            object.__setattr__(self, "a", float(self.hbar))
        if self.a == 0:
            raise ValueError("ladder scale a must be nonzero")
        if not math.isclose(self.a, self.hbar, rel_tol=1e-15) and not self.expert:
            raise ValueError(
                f"a = {self.a} differs from hbar = {self.hbar}; the factorization "
                "H = A+A- + E0 requires a = hbar (pass expert=True to override)")

    @property
    def a_is_hbar(self):
        return math.isclose(self.a, self.hbar, rel_tol=1e-15)

    def resolve_anchor(self, domain):
        if self.anchor is not None:
            return float(self.anchor)
        lo, hi = domain
        return 0.0 if lo <= 0.0 <= hi else 0.5 * (lo + hi)


@dataclass(frozen=True)
class OrderingParams:
    """von Roos ordering exponents; they must sum to -1."""

    alpha_vr: float = 0.0
    beta_vr: float = -1.0
    gamma_vr: float = 0.0

    def __post_init__(self):
        total = self.alpha_vr + self.beta_vr + self.gamma_vr
        if not math.isclose(total, -1.0, rel_tol=0, abs_tol=1e-12):
            raise OrderingError(f"ordering parameters sum to {total}, expected -1")


def energy(n: int, params: ModelParams) -> float:
    """Level n: (n + 1/2) dE + lam^2 / 2.

    The shift lam^2/2 is the constant left over in H - A+A- for the
    operators used here (beta_I = lam, a = hbar); it equals the familiar
    lam^2 hbar^2 / 2 in units hbar = 1.
    """
    if n < 0:
        raise ValueError("level index must be >= 0")
    return (n + 0.5) * params.delta_e + 0.5 * params.lam ** 2


def alpha_of(profile, params, x):
    """alpha(x) = a / sqrt(m) and its closed-form derivative."""
    m = profile.check_positive(x)
    m1 = profile.m1.evaluate(x)
    a = params.a
    return a / np.sqrt(m), -a * m1 / (2.0 * m ** 1.5)


def beta_r_of(profile, params, x, F):
    m = profile.check_positive(x)
    m1 = profile.m1.evaluate(x)
    a = params.a
    return -a * m1 / (4.0 * m ** 1.5) + a * params.delta_e / params.hbar ** 2 * np.asarray(F)


def potential_of(profile, params, x, F):
    """Real and imaginary parts of the complex potential."""
    m = profile.check_positive(x)
    m1 = profile.m1.evaluate(x)
    m2 = profile.m2.evaluate(x)
    hb, de = params.hbar, params.delta_e
    F = np.asarray(F, dtype=float)
    v_r = 0.5 * (de / hb) ** 2 * F ** 2 - hb ** 2 / 8.0 * (7.0 * m1 ** 2 / (4.0 * m ** 3) - m2 / m ** 2)
    v_i = de / params.a * params.lam * F
    return v_r, v_i


def veff_von_roos(profile, V, ordering: OrderingParams, params: ModelParams, x):
    """Effective potential of the von Roos family written in BenDaniel-Duke form."""
    if not isinstance(ordering, OrderingParams):
        ordering = OrderingParams(*ordering)
    m = profile.check_positive(x)
    m1 = profile.m1.evaluate(x)
    m2 = profile.m2.evaluate(x)
    al, be = ordering.alpha_vr, ordering.beta_vr
    k2 = al ** 2 + al * be + al + be + 1.0
    return np.asarray(V) + params.hbar ** 2 * (
        (1.0 + be) * m2 / (4.0 * m ** 2) - m1 ** 2 * k2 / (2.0 * m ** 3))


@dataclass(frozen=True, eq=False)
class LadderSystem:
    """All grid caches for one profile, parameter set and grid."""

    profile: object
    params: ModelParams
    grid: Grid
    stencil: int
    anchor: float
    m: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    alpha: np.ndarray
    dalpha: np.ndarray
    F: np.ndarray
    beta_r: np.ndarray
    v_r: np.ndarray
    v_i: np.ndarray
    decay_tol: float = 1e-12

    @property
    def x(self):
        return self.grid.x

    @property
    def beta_i(self):
        return self.params.lam

    @property
    def e0(self):
        return energy(0, self.params)

    @property
    def d1(self):
        return derivative_matrix(self.grid, 1, self.stencil)

    @property
    def d2(self):
        return derivative_matrix(self.grid, 2, self.stencil)

    def rebuild(self, **changes):
        """Same profile on a different grid size, stencil or params."""
        kw = dict(params=self.params, n=self.grid.n, stencil=self.stencil,
                  domain=(self.grid.x_min, self.grid.x_max), decay_tol=self.decay_tol)
        kw.update(changes)
        return build_system(self.profile, **kw)


def build_system(profile, params=None, n=4001, stencil=4, domain=None, decay_tol=1e-12):
    """Assemble a :class:`LadderSystem` on a uniform grid of ``n`` points."""
    params = params or ModelParams()
    if stencil not in (2, 4):
        raise ValueError("stencil order must be 2 or 4")
    if domain is not None and tuple(domain) != tuple(profile.domain):
        profile = profile.with_domain(domain)
    grid = Grid(*profile.domain, int(n))
    x = grid.x
    anchor = params.resolve_anchor(profile.domain)
    m = profile.check_positive(x, where="grid node")
    m1 = profile.m1.evaluate(x)
    m2 = profile.m2.evaluate(x)
    alpha, dalpha = alpha_of(profile, params, x)
    F = cumulative_antiderivative_sqrt_m(profile, grid, anchor)
    beta_r = beta_r_of(profile, params, x, F)
    v_r, v_i = potential_of(profile, params, x, F)
    arrays = dict(m=m, m1=m1, m2=m2, alpha=alpha, dalpha=dalpha, F=F,
                  beta_r=beta_r, v_r=v_r, v_i=v_i)
    for v in arrays.values():
        v.setflags(write=False)
    return LadderSystem(profile, params, grid, stencil, anchor, decay_tol=decay_tol, **arrays)


def _check_grid(f, system):
    if f.grid != system.grid:
        raise GridError("grid function is not on the system grid")


def apply_ladder(which: str, f: GridFunction, system: LadderSystem) -> GridFunction:
    """Apply A-, A+, B- or B+ to ``f``.

    B- and B+ are the adjoints of A+ and A-; for these real-coefficient
    operators that amounts to flipping the sign of the imaginary constant.
    """
    if which not in LADDERS:
        raise ValueError(f"unknown ladder operator {which!r}; expected one of {LADDERS}")
    _check_grid(f, system)
    lam = system.params.lam if which[0] == "A" else -system.params.lam
    beta = system.beta_r + 1j * lam
    v = f.values
    dv = system.d1 @ v
    if which[1] == "-":
        out = system.alpha * dv + beta * v
    else:
        out = -system.alpha * dv + (beta - system.dalpha) * v
    return GridFunction(f.grid, out / math.sqrt(2.0))


def apply_hamiltonian(f: GridFunction, system: LadderSystem, adjoint: bool = False) -> GridFunction:
    """H f, or H-dagger f (same kinetic part, V_I sign flipped)."""
    _check_grid(f, system)
    hb2 = system.params.hbar ** 2
    v = f.values
    kinetic = -hb2 / (2.0 * system.m) * (system.d2 @ v) + hb2 * system.m1 / (2.0 * system.m ** 2) * (system.d1 @ v)
    pot = system.v_r - 1j * system.v_i if adjoint else system.v_r + 1j * system.v_i
    return GridFunction(f.grid, kinetic + pot * v)


def boundary_ratio(values) -> float:
    """max(|f(x_min)|, |f(x_max)|) relative to max |f|."""
    a = np.abs(np.asarray(values))
    peak = a.max()
    if peak == 0:
        return 0.0
    return float(max(a[0], a[-1]) / peak)


def _unnormalized_ground(system):
    p = system.params
    F = system.F
    # phase exp(-i lam F / a): the form annihilated by A- for any a
    return system.m ** 0.25 * np.exp(-p.delta_e * F ** 2 / (2.0 * p.hbar ** 2)) * np.exp(-1j * p.lam * F / p.a)


def _suggest(system, ratio_left, ratio_right, tol):
    lo, hi = system.grid.x_min, system.grid.x_max
    width = hi - lo
    grow_lo = width * 0.25 if ratio_left >= tol else 0.0
    grow_hi = width * 0.25 if ratio_right >= tol else 0.0
    return (lo - grow_lo, hi + grow_hi)


def _decay_check(values, system, level):
    tol = system.decay_tol
    a = np.abs(values)
    peak = a.max()
    left, right = a[0] / peak, a[-1] / peak
    if left >= tol or right >= tol:
        suggested = _suggest(system, left, right, tol)
        raise InsufficientDomainError(
            f"state {level} does not decay on [{system.grid.x_min:g}, {system.grid.x_max:g}]: "
            f"boundary magnitude {max(left, right):.3g} (relative) >= {tol:g}; "
            f"try the domain [{suggested[0]:g}, {suggested[1]:g}]",
            level=level, boundary=float(max(left, right)), suggested=suggested)


def ground_state(system: LadderSystem) -> GridFunction:
    """Normalised ground state, annihilated by A-."""
    u = _unnormalized_ground(system)
    _decay_check(u, system, 0)
    g = GridFunction(system.grid, u)
    s = sesquilinear_pair(g, g).real
    if not s > 0 or not np.isfinite(s):
        raise InsufficientDomainError("ground state is not normalisable on the grid", level=0)
    return GridFunction(system.grid, u / math.sqrt(s))


@dataclass(frozen=True, eq=False)
class StateSet:
    """States psi_0..psi_nmax with normalisation constants and energies.

    ``norm_constants[n]`` is c_n in psi_n = c_n (A+)^n psi~_0 where psi~_0
    is the unnormalised ground function m^1/4 exp(-dE F^2/2hbar^2) e^{-i lam F/a}.
    """

    system: LadderSystem
    states: tuple
    norm_constants: tuple
    energies: tuple
    precision_warning: bool = False

    @property
    def n_max(self):
        return len(self.states) - 1

    def __len__(self):
        return len(self.states)

    def __getitem__(self, n):
        return self.states[n]

    def phi(self, n):
        """Eigenfunction of H-dagger: the pointwise conjugate of psi_n."""
        return self.states[n].conj()


def raising_polynomials(n_max: int, params: ModelParams) -> list:
    """Polynomials g_n(F) with (A+)^n psi~_0 = psi~_0 * g_n(F), exactly.

    On functions of the form psi~_0 * g(F), alpha d/dx = a d/dF and A+ reduces to
    g -> (-a g' + (2 a dE F / hbar^2 + 2 i lam) g) / sqrt(2).
    """
    a, hb, de, lam = params.a, params.hbar, params.delta_e, params.lam
    mult = P([2j * lam, 2.0 * a * de / hb ** 2])
    polys = [P([1.0 + 0j])]
    for _ in range(n_max):
        g = polys[-1]
        polys.append((mult * g - a * g.deriv()) / math.sqrt(2.0))
    return polys


def build_states(system: LadderSystem, n_max: int, method: str = "exact") -> StateSet:
    """psi_n = c_n (A+)^n psi~_0, each sesquilinear-normalised with c_n > 0.

    ``method="exact"`` applies A+ analytically through
    :func:`raising_polynomials`; ``method="grid"`` applies the
    finite-difference A+ repeatedly.  The grid route amplifies rounding noise
    by roughly alpha/h per level and is kept for comparison only.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if method not in ("exact", "grid"):
        raise ValueError("method must be 'exact' or 'grid'")
    flag = n_max > PRECISION_WARN_LEVEL
    if flag:
        warnings.warn(
            f"n_max = {n_max}: levels above {PRECISION_WARN_LEVEL} lose precision "
            "(large polynomial prefactors, finite-difference checks degrade)",
            RuntimeWarning, stacklevel=2)
    base = _unnormalized_ground(system)
    if method == "exact":
        raw = (base * g(system.F) for g in raising_polynomials(n_max, system.params))
    else:
        raw = _grid_raised(base, system, n_max)
    states, consts = [], []
    for n, values in enumerate(raw):
        _decay_check(values, system, n)
        f = GridFunction(system.grid, values)
        c = 1.0 / math.sqrt(sesquilinear_pair(f, f).real)
        states.append(f * c)
        consts.append(complex(c))
    energies = tuple(energy(n, system.params) for n in range(n_max + 1))
    return StateSet(system, tuple(states), tuple(consts), energies, flag)


def _grid_raised(base, system, n_max):
    f = GridFunction(system.grid, base)
    yield f.values
    for _ in range(n_max):
        f = apply_ladder("A+", f, system)
        yield f.values


def factorization_defect(f: GridFunction, system: LadderSystem, adjoint: bool = False) -> float:
    """||(A+A- + E0 - H) f|| / ||f|| (or the B / H-dagger version)."""
    lo, hi = ("B-", "B+") if adjoint else ("A-", "A+")
    lhs = apply_ladder(hi, apply_ladder(lo, f, system), system) + system.e0 * f
    diff = lhs - apply_hamiltonian(f, system, adjoint=adjoint)
    return norm(diff) / norm(f)


def fit_domain(profile, params=None, n_max=0, decay_tol=1e-12, growth=0.25, max_steps=40, probes=4001):
    """Widen ``profile.domain`` until the closed-form envelope of every level
    up to ``n_max`` has decayed below ``decay_tol`` at both ends.

    The envelope |psi_n| ~ m^1/4 |H_n(z)| exp(-dE F^2 / 2 hbar^2) is
    evaluated on a probe grid, so this is cheap and independent of the
    finite-difference construction.  Returns a profile (possibly the same).
    """
    from .oracle import hermite_envelope

    params = params or ModelParams()
    for _ in range(max_steps):
        grid = Grid(*profile.domain, probes)
        anchor = params.resolve_anchor(profile.domain)
        F = cumulative_antiderivative_sqrt_m(profile, grid, anchor)
        m = profile(grid.x)
        bad_lo = bad_hi = False
        for n in range(n_max + 1):
            env = m ** 0.25 * hermite_envelope(n, F, params)
            peak = env.max()
            bad_lo |= env[0] / peak >= decay_tol
            bad_hi |= env[-1] / peak >= decay_tol
        if not (bad_lo or bad_hi):
            return profile
        lo, hi = profile.domain
        width = hi - lo
        profile = profile.with_domain((lo - growth * width * bad_lo, hi + growth * width * bad_hi))
    raise InsufficientDomainError(
        f"no domain found with boundary decay below {decay_tol:g} after {max_steps} enlargements",
        suggested=profile.domain)


def with_params(system: LadderSystem, **changes) -> LadderSystem:
    return system.rebuild(params=replace(system.params, **changes))
