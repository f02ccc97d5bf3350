"""Numerical adjudication of the ladder-operator identities.

Everything here compares quantities built from the closed-form ladder
functions against finite-difference applications of H, H-dagger and the
ladder operators, or against the constant-mass Hermite reference.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InsufficientDomainError, PDMError
from .ladder import (
    LadderSystem, ModelParams, StateSet, apply_hamiltonian, apply_ladder,
    build_states, build_system, energy, factorization_defect,
)
from .numerics import Grid, GridFunction, bilinear_pair, norm, sesquilinear_pair
from .oracle import reference_state_values

__all__ = [
    "THRESHOLDS", "DEFAULT_SEED", "ValidationReport", "ConvergenceResult",
    "gram_matrices", "normalized_offdiagonal", "eigen_residuals",
    "annihilation_defects", "rayleigh_quotients", "smooth_test_functions",
    "commutator_defects", "adjointness_defect", "convergence_order",
    "node_count", "component_is_degenerate", "hermite_oracle", "full_report",
]

DEFAULT_SEED = 20240917
SWEEP_LAMBDAS = (0.0, 1.0, 2.0, 4.0)
CONVERGENCE_GRIDS = (501, 1001, 2001, 4001)

THRESHOLDS = {
    "eigen_residual": 1e-6,
    "annihilation": 1e-8,
    "rayleigh_real": 1e-6,
    "rayleigh_imag": 1e-8,
    "biorthogonality": 1e-6,
    "commutator_H": 1e-6,
    "commutator_ladder": 1e-8,
    "factorization": 1e-6,
    "adjointness": 1e-8,
    "hermitian": 1e-10,
    "slope_tolerance": {2: 0.3, 4: 0.5},
    "node_amplitude_floor": 1e-6,
}


# --- pairings -----------------------------------------------------------------

def gram_matrices(states: StateSet):
    """Bilinear and sesquilinear Gram matrices of psi_0..psi_nmax.

    ``G_bil[m, n] = int psi_m psi_n`` is the pairing of phi_m = conj(psi_m)
    with psi_n and is the one that must be diagonal.  ``G_ses`` is the
    ordinary inner product; it is Hermitian positive definite but not
    diagonal once lam != 0.
    """
    psi = list(states.states) if isinstance(states, StateSet) else list(states)
    if len(psi) < 2:
        raise ValueError("need at least 2 states for a Gram matrix")
    k = len(psi)
    g_bil = np.empty((k, k), dtype=complex)
    g_ses = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            g_bil[i, j] = bilinear_pair(psi[i], psi[j])
            g_ses[i, j] = sesquilinear_pair(psi[i], psi[j])
    return g_bil, g_ses


def normalized_offdiagonal(g) -> float:
    """max |G[m, n]| / sqrt(|G[m, m]| |G[n, n]|) over m != n."""
    g = np.asarray(g)
    d = np.sqrt(np.abs(np.diag(g)))
    scaled = np.abs(g) / np.outer(d, d)
    np.fill_diagonal(scaled, 0.0)
    return float(scaled.max())


# --- eigen relations -------------------------------------------------------------

def eigen_residuals(states: StateSet, system: LadderSystem | None = None):
    """Per level: (||H psi_n - E_n psi_n|| / ||psi_n||, same for H-dagger and phi_n)."""
    system = system or states.system
    out = []
    for n, psi in enumerate(states.states):
        e = states.energies[n]
        phi = psi.conj()
        r = norm(apply_hamiltonian(psi, system) - e * psi) / norm(psi)
        rb = norm(apply_hamiltonian(phi, system, adjoint=True) - e * phi) / norm(phi)
        out.append((r, rb))
    return out


def annihilation_defects(states: StateSet, system: LadderSystem | None = None):
    """||A- psi_0|| / ||psi_0|| and ||B- phi_0|| / ||phi_0||."""
    system = system or states.system
    psi0 = states.states[0]
    phi0 = psi0.conj()
    return (norm(apply_ladder("A-", psi0, system)) / norm(psi0),
            norm(apply_ladder("B-", phi0, system)) / norm(phi0))


def rayleigh_quotients(states: StateSet, system: LadderSystem | None = None):
    """Bilinear Rayleigh quotients <psi_n, H psi_n> / <psi_n, psi_n> (no conjugation)."""
    system = system or states.system
    return [bilinear_pair(psi, apply_hamiltonian(psi, system)) / bilinear_pair(psi, psi)
            for psi in states.states]


# --- operator identities on test functions ------------------------------------------

def smooth_test_functions(system: LadderSystem, count=20, seed=DEFAULT_SEED, bumps=3):
    """Seeded sums of complex Gaussians placed where the states live.

    Centres are drawn uniformly in the scaled coordinate u = sqrt(dE) F / hbar
    on [-2, 2] and mapped back to x; widths are 0.4-1.0 in u, i.e. scaled
    by the local 1/sqrt(m).  Every function is negligible at the boundary.
    """
    rng = np.random.default_rng(seed)
    p = system.params
    x = system.x
    scale = math.sqrt(p.delta_e) / p.hbar
    u = scale * system.F
    lo_u, hi_u = max(-2.0, 0.8 * u[0]), min(2.0, 0.8 * u[-1])
    fs = []
    for _ in range(count):
        v = np.zeros_like(x, dtype=complex)
        for _ in range(bumps):
            xc = float(np.interp(rng.uniform(lo_u, hi_u), u, x))
            mc = float(system.profile(np.array([xc]))[0])
            room = min(xc - x[0], x[-1] - xc) / 8.0
            width = min(rng.uniform(0.4, 1.0) / (scale * math.sqrt(mc)), room)
            amp = complex(rng.normal(), rng.normal())
            v += amp * np.exp(-0.5 * ((x - xc) / width) ** 2)
        fs.append(GridFunction(system.grid, v))
    return fs


def commutator_defects(system: LadderSystem, functions):
    """Largest relative defects of the three commutation relations over ``functions``.

    Keys: ``"[H,A-]+dE A-"``, ``"[H,A+]-dE A+"``, ``"[A-,A+]-a^2 dE/hbar^2"``.
    """
    p = system.params
    de = p.delta_e
    const = p.a ** 2 * de / p.hbar ** 2
    worst = {"[H,A-]+dE A-": 0.0, "[H,A+]-dE A+": 0.0, "[A-,A+]-a^2 dE/hbar^2": 0.0}

    def H(f):
        return apply_hamiltonian(f, system)

    def L(which, f):
        return apply_ladder(which, f, system)

    for f in functions:
        nf = norm(f)
        am, ap = L("A-", f), L("A+", f)
        d_minus = H(am) - L("A-", H(f)) + de * am
        d_plus = H(ap) - L("A+", H(f)) - de * ap
        d_ladder = L("A-", ap) - L("A+", am) - const * f
        for key, d in zip(worst, (d_minus, d_plus, d_ladder)):
            worst[key] = max(worst[key], norm(d) / nf)
    return worst


def adjointness_defect(system: LadderSystem, f: GridFunction, g: GridFunction) -> float:
    """max over the two pairs of |<B-+ g, f> - <g, A+- f>| (sesquilinear)."""
    d1 = abs(sesquilinear_pair(apply_ladder("B-", g, system), f)
             - sesquilinear_pair(g, apply_ladder("A+", f, system)))
    d2 = abs(sesquilinear_pair(apply_ladder("B+", g, system), f)
             - sesquilinear_pair(g, apply_ladder("A-", f, system)))
    return max(d1, d2)


# --- convergence ----------------------------------------------------------------

@dataclass
class ConvergenceResult:
    sizes: list
    h: list
    errors: list
    slope: float | None
    exact: bool = False
    monotone: bool = True
    floors: list | None = None
    used: list | None = None

    def to_dict(self):
        return {"sizes": self.sizes, "h": self.h, "errors": self.errors,
                "roundoff_floor": self.floors, "used_in_fit": self.used,
                "slope": self.slope, "exact": self.exact, "monotone": self.monotone}


# sum of |weights| of the interior stencils, per (derivative order, accuracy)
_STENCIL_MASS = {(1, 2): 1.0, (1, 4): 1.5, (2, 2): 4.0, (2, 4): 64.0 / 12.0}


def residual_roundoff_floor(system, psi, e) -> float:
    """Rounding-error level of ||H psi - e psi|| / ||psi|| on this grid.

    Each term of H is bounded by eps * |coefficient| * |psi| times the
    stencil mass over h^k; below this level the residual carries no
    truncation information.
    """
    eps = np.finfo(float).eps
    hb2 = system.params.hbar ** 2
    h = system.grid.h
    a = np.abs(psi.values)
    k = system.stencil
    parts = (
        hb2 / (2 * system.m) * a * _STENCIL_MASS[(2, k)] / h ** 2,
        hb2 * np.abs(system.m1) / (2 * system.m ** 2) * a * _STENCIL_MASS[(1, k)] / h,
        (np.hypot(system.v_r, system.v_i) + abs(e)) * a,
    )
    return float(eps * sum(norm(GridFunction(system.grid, p)) for p in parts) / norm(psi))


def _ground_residual(system):
    psi = build_states(system, 0).states[0]
    r = norm(apply_hamiltonian(psi, system) - system.e0 * psi) / norm(psi)
    return r, residual_roundoff_floor(system, psi, system.e0)


def _factorization_quantity(system):
    f = smooth_test_functions(system, count=1)[0]
    return factorization_defect(f, system)


def convergence_order(factory, grid_sizes, quantity="residual", floor_margin=2.0) -> ConvergenceResult:
    """Least-squares slope of log(error) against log(h).

    ``factory(n)`` builds a :class:`LadderSystem` on ``n`` points.
    ``quantity`` is ``"residual"`` (ground-state eigen-residual),
    ``"defect"`` (factorization defect on a fixed test function),
    ``"energy"`` (closed-form levels, always exact) or a callable on
    systems returning an error or an ``(error, roundoff_floor)`` pair.

    Points whose error does not exceed ``floor_margin`` times their
    roundoff floor are left out of the fit (the floor is an estimate, and
    a point sitting on it already bends the log-log line).  If fewer than three points remain, or the remaining errors do
    not decrease with h, the raw data are returned without a slope.
    """
    sizes = [int(n) for n in grid_sizes]
    if len(sizes) < 3:
        raise ValueError("need at least 3 grid sizes")
    if quantity == "energy":
        hs = [factory(n).grid.h for n in sizes]
        return ConvergenceResult(sizes, hs, [0.0] * len(sizes), None, exact=True)
    fn = {"residual": _ground_residual, "defect": _factorization_quantity}.get(quantity, quantity)
    if not callable(fn):
        raise ValueError(f"unknown quantity {quantity!r}")
    hs, errs, floors = [], [], []
    for n in sizes:
        s = factory(n)
        out = fn(s)
        err, floor = out if isinstance(out, tuple) else (out, 0.0)
        hs.append(s.grid.h)
        errs.append(float(err))
        floors.append(float(floor))
    used = [e > floor_margin * f for e, f in zip(errs, floors)]
    h_fit = np.array([h for h, u in zip(hs, used) if u])
    e_fit = np.array([e for e, u in zip(errs, used) if u])
    order = np.argsort(h_fit)
    monotone = bool(np.all(np.diff(e_fit[order]) > 0)) and bool(np.all(e_fit > 0))
    slope = None
    if monotone and h_fit.size >= 3:
        slope = float(np.polyfit(np.log(h_fit), np.log(e_fit), 1)[0])
    return ConvergenceResult(sizes, hs, errs, slope, monotone=monotone, floors=floors, used=used)


# --- nodes ----------------------------------------------------------------------

def _component(f, component):
    v = f.values if isinstance(f, GridFunction) else np.asarray(f)
    if component in ("real", "re"):
        return np.real(v)
    if component in ("imaginary", "imag", "im"):
        return np.imag(v)
    raise ValueError("component must be 'real' or 'imaginary'")


def component_is_degenerate(f, component, rtol=1e-14) -> bool:
    """True when the chosen component vanishes (relative to max |f|)."""
    c = _component(f, component)
    v = f.values if isinstance(f, GridFunction) else np.asarray(f)
    peak = np.abs(v).max()
    return bool(peak == 0 or np.abs(c).max() <= rtol * peak)


def node_count(f, component="real", amplitude_floor=1e-6) -> int:
    """Sign changes of one component, ignoring samples below the floor.

    Samples with magnitude below ``amplitude_floor * max|component|`` are
    dropped; sign changes are counted between consecutive retained samples.
    """
    if not amplitude_floor > 0:
        raise ValueError("amplitude_floor must be > 0")
    c = _component(f, component)
    peak = np.abs(c).max()
    if peak == 0:
        return 0
    kept = c[np.abs(c) > amplitude_floor * peak]
    return int(np.count_nonzero(np.signbit(kept[1:]) != np.signbit(kept[:-1])))


# --- constant-mass reference -----------------------------------------------------

def hermite_oracle(n_max: int, params: ModelParams, grid: Grid) -> StateSet:
    """Constant-mass (m = 1) reference states from the Hermite recurrence.

    psi_n = N_n H_n(z) exp(-dE (x-x0)^2 / 2 hbar^2) exp(-i lam (x-x0)/hbar)
    with z = sqrt(dE)/hbar (x - x0) + i lam / sqrt(dE), normalised
    analytically.  The returned StateSet carries no LadderSystem.
    """
    anchor = params.resolve_anchor((grid.x_min, grid.x_max))
    F = grid.x - anchor
    vals = reference_state_values(n_max, F, np.ones_like(F), params)
    states = tuple(GridFunction(grid, v) for v in vals)
    energies = tuple(energy(n, params) for n in range(n_max + 1))
    return StateSet(None, states, (None,) * len(states), energies)


# --- report -------------------------------------------------------------------------

REPORT_KEYS = ("scenario", "residuals", "gram_bilinear", "gram_sesquilinear",
               "commutators", "factorization", "convergence", "nodes", "verdict")


@dataclass
class ValidationReport:
    """Self-describing evidence: every section records its thresholds and status."""

    scenario: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        statuses = [s.get("status") for s in self.sections.values()]
        return "fail" if any(st in ("fail", "error") for st in statuses) else "pass"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def failed_sections(self):
        return [k for k, s in self.sections.items() if s.get("status") in ("fail", "error")]

    def to_dict(self):
        out = {"scenario": self.scenario}
        for key in REPORT_KEYS[1:-1]:
            out[key] = self.sections.get(key, {"status": "skip", "reason": "not run"})
        out["verdict"] = {"status": self.verdict, "failed": self.failed_sections}
        return out


def _cplx(z):
    return [float(np.real(z)), float(np.imag(z))]


def _matrix(g):
    return [[_cplx(v) for v in row] for row in np.asarray(g)]


def _status(ok):
    return "pass" if ok else "fail"


def _residual_section(system, states):
    thr = THRESHOLDS
    res = eigen_residuals(states, system)
    ann, ann_b = annihilation_defects(states, system)
    rq = rayleigh_quotients(states, system)
    rq_ok = all(abs(q.real - e) < thr["rayleigh_real"] and abs(q.imag) < thr["rayleigh_imag"]
                for q, e in zip(rq, states.energies))
    res_ok = all(r < thr["eigen_residual"] and rb < thr["eigen_residual"] for r, rb in res)
    ann_ok = ann < thr["annihilation"] and ann_b < thr["annihilation"]
    sec = {
        "status": _status(res_ok and ann_ok and rq_ok),
        "thresholds": {k: thr[k] for k in ("eigen_residual", "annihilation", "rayleigh_real", "rayleigh_imag")},
        "energies": list(states.energies),
        "H": [r for r, _ in res],
        "H_dagger": [rb for _, rb in res],
        "annihilation": {"A-psi0": ann, "B-phi0": ann_b},
        "rayleigh": [_cplx(q) for q in rq],
    }
    if not res_ok:
        sec["hint"] = (f"eigen-residuals exceed {thr['eigen_residual']:g} at h = {system.grid.h:.3g}; "
                       "refine grid (more points) or use stencil 4")
    return sec


def _gram_sections(states):
    if len(states) < 2:
        skip = {"status": "skip", "reason": "insufficient states (need n_max >= 1)"}
        return skip, dict(skip)
    g_bil, g_ses = gram_matrices(states)
    off = normalized_offdiagonal(g_bil)
    off_ses = normalized_offdiagonal(g_ses)
    herm = float(np.abs(g_ses - g_ses.conj().T).max())
    eig_min = float(np.linalg.eigvalsh(0.5 * (g_ses + g_ses.conj().T)).min())
    lam = states.system.params.lam if states.system is not None else None
    bil = {
        "status": _status(off < THRESHOLDS["biorthogonality"]),
        "threshold": THRESHOLDS["biorthogonality"],
        "max_normalized_offdiagonal": off,
        "matrix": _matrix(g_bil),
    }
    ses = {
        "status": _status(herm < THRESHOLDS["hermitian"] and eig_min > 0),
        "threshold": THRESHOLDS["hermitian"],
        "hermiticity_defect": herm,
        "min_eigenvalue": eig_min,
        "max_normalized_offdiagonal": off_ses,
        "matrix": _matrix(g_ses),
        "note": "the conjugated-overlap identity int psi_m* psi_n = delta_mn holds at lambda = 0 only; "
                "it is reported here, not used for the verdict",
        "diagonal_expected": lam == 0,
    }
    return bil, ses


def _commutator_section(system, fs):
    d = commutator_defects(system, fs)
    thr = {"[H,A-]+dE A-": THRESHOLDS["commutator_H"],
           "[H,A+]-dE A+": THRESHOLDS["commutator_H"],
           "[A-,A+]-a^2 dE/hbar^2": THRESHOLDS["commutator_ladder"]}
    ok = all(d[k] < thr[k] for k in d)
    return {"status": _status(ok), "thresholds": thr, "defects": d, "test_functions": len(fs)}


def _factorization_section(system, fs):
    dh = max(factorization_defect(f, system) for f in fs)
    dhd = max(factorization_defect(f, system, adjoint=True) for f in fs)
    adj = max(adjointness_defect(system, fs[i], fs[(i + 1) % len(fs)]) / (norm(fs[i]) * norm(fs[(i + 1) % len(fs)]))
              for i in range(len(fs)))
    thr = THRESHOLDS["factorization"]
    ok = dh < thr and dhd < thr and adj < THRESHOLDS["adjointness"]
    sec = {"status": _status(ok),
           "thresholds": {"factorization": thr, "adjointness": THRESHOLDS["adjointness"]},
           "H=A+A-+E0": dh, "Hdag=B+B-+E0": dhd, "adjointness": adj}
    if not system.params.a_is_hbar:
        sec["note"] = (f"a = {system.params.a:g} != hbar = {system.params.hbar:g}: the kinetic "
                       "coefficient of A+A- is a^2/2m, so the identity cannot hold")
    return sec


def _convergence_section(system, grids):
    tol = THRESHOLDS["slope_tolerance"][system.stencil]
    res = convergence_order(lambda n: system.rebuild(n=n), grids, "residual")
    if res.slope is None:
        sec = {"status": "fail", "reason": "no slope: fewer than 3 points above the roundoff "
                                           "floor or errors not monotone in h"}
    else:
        sec = {"status": _status(abs(res.slope - system.stencil) <= tol)}
    sec.update({"quantity": "ground-state eigen-residual", "expected_order": system.stencil,
                "tolerance": tol, **res.to_dict()})
    return sec


def _nodes_section(system, lambdas=SWEEP_LAMBDAS):
    floor = THRESHOLDS["node_amplitude_floor"]
    rows = []
    for lam in lambdas:
        s = system.rebuild(params=replace(system.params, lam=lam))
        psi0 = build_states(s, 0).states[0]
        rows.append({
            "lambda": lam,
            "real": node_count(psi0, "real", floor),
            "imaginary": node_count(psi0, "imaginary", floor),
            "imaginary_degenerate": component_is_degenerate(psi0, "imaginary"),
        })
    counts = [r["real"] for r in rows]
    nondecreasing = all(b >= a for a, b in zip(counts, counts[1:]))
    strict = counts[-1] > counts[0]
    return {"status": _status(nondecreasing and strict), "amplitude_floor": floor,
            "counts": rows, "nondecreasing": nondecreasing, "strictly_increasing_first_last": strict}


def _guard(fn, *args):
    try:
        return fn(*args)
    except (PDMError, ValueError, ArithmeticError) as exc:
        return {"status": "error", "error": f"{type(exc).__name__}: {exc}"}


def full_report(system: LadderSystem, n_max=4, grids=CONVERGENCE_GRIDS, seed=DEFAULT_SEED,
                scenario=None, workers=None) -> ValidationReport:
    """Run every check and collect the results.

    Sections run concurrently and independently: a failure in one is
    recorded there and never aborts the others.  With an expert override
    a != hbar only the factorization section runs.
    """
    report = ValidationReport(scenario=dict(scenario or {}))
    fs = smooth_test_functions(system, seed=seed)
    skip = {"status": "skip", "reason": "a != hbar: only the factorization diagnostic is meaningful"}

    if not system.params.a_is_hbar:
        report.sections["factorization"] = _guard(_factorization_section, system, fs)
        for key in REPORT_KEYS[1:-1]:
            report.sections.setdefault(key, dict(skip))
        return report

    try:
        states = build_states(system, n_max)
    except (InsufficientDomainError, ValueError) as exc:
        states = None
        state_error = {"status": "error", "error": f"{type(exc).__name__}: {exc}"}

    jobs = {
        "commutators": (_commutator_section, system, fs),
        "factorization": (_factorization_section, system, fs),
        "convergence": (_convergence_section, system, grids),
        "nodes": (_nodes_section, system),
    }
    if states is not None:
        jobs["residuals"] = (_residual_section, system, states)
        jobs["gram"] = (_gram_sections, states)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {k: pool.submit(_guard, *job) for k, job in jobs.items()}
        results = {k: f.result() for k, f in futures.items()}

    if states is None:
        results["residuals"] = state_error
        results["gram"] = (dict(state_error), dict(state_error))
    gram = results.pop("gram")
    if isinstance(gram, dict):  # the section raised
        gram = (gram, dict(gram))
    results["gram_bilinear"], results["gram_sesquilinear"] = gram
    for key in REPORT_KEYS[1:-1]:
        report.sections[key] = results[key]
    return report
