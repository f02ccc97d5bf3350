import math

import numpy as np
import pytest

from pdm_ladder.ladder import ModelParams, build_states, build_system, ground_state
from pdm_ladder.numerics import Grid, sample
from pdm_ladder.profile import make_profile
from pdm_ladder.validation import (
    REPORT_KEYS, adjointness_defect, component_is_degenerate, convergence_order, eigen_residuals,
    full_report, gram_matrices, hermite_oracle, node_count, normalized_offdiagonal,
    smooth_test_functions,
)


def flat(lam, domain=(-10.0, 10.0), n=2001):
    return build_system(make_profile("1", domain), ModelParams(lam=lam), n=n)


def test_gram_hermitian_limit():
    g_bil, g_ses = gram_matrices(build_states(flat(0.0), 3))
    assert normalized_offdiagonal(g_bil) < 1e-8
    assert normalized_offdiagonal(g_ses) < 1e-8


def test_gram_complex_shift():
    g_bil, g_ses = gram_matrices(build_states(flat(1.0), 1))
    assert normalized_offdiagonal(g_bil) < 1e-8
    # <psi_0, psi_1> = i lam / sqrt(1/2 + lam^2) for the shifted oscillator
    assert abs(g_ses[0, 1]) == pytest.approx(1 / math.sqrt(1.5), abs=1e-8)


def test_gram_quadratic(quadratic_system):
    g_bil, g_ses = gram_matrices(build_states(quadratic_system, 4))
    assert normalized_offdiagonal(g_bil) < 1e-6
    assert np.max(np.abs(g_ses - g_ses.conj().T)) < 1e-12
    assert np.linalg.eigvalsh(g_ses).min() > 0


def test_residuals_oscillator():
    s = flat(0.0, (-8.0, 8.0), 2001)
    (r, rb), = eigen_residuals(build_states(s, 0), s)
    assert r < 1e-9 and rb == pytest.approx(r, rel=1e-12)


def test_residuals_quadratic(quadratic_system):
    for r, rb in eigen_residuals(build_states(quadratic_system, 4)):
        assert r < 1e-6
        assert rb == pytest.approx(r, rel=1e-10)


def test_adjointness(quadratic_system):
    fs = smooth_test_functions(quadratic_system, count=4)
    for f, g in zip(fs, fs[1:]):
        assert adjointness_defect(quadratic_system, f, g) / (f.norm() * g.norm()) < 1e-8


def test_test_functions_are_seeded(quadratic_system):
    a = smooth_test_functions(quadratic_system, count=3)
    b = smooth_test_functions(quadratic_system, count=3)
    c = smooth_test_functions(quadratic_system, count=3, seed=1)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
    assert not np.array_equal(a[0].values, c[0].values)
    for f in a:
        assert max(abs(f.values[0]), abs(f.values[-1])) < 1e-12 * np.abs(f.values).max()


@pytest.mark.parametrize("stencil, expected, tol", [(2, 2, 0.3), (4, 4, 0.5)])
def test_convergence_order(stencil, expected, tol):
    prof = make_profile("1 + x^2", (-4.0, 4.0))
    res = convergence_order(lambda n: build_system(prof, ModelParams(), n=n, stencil=stencil),
                            [501, 1001, 2001, 4001])
    assert abs(res.slope - expected) <= tol
    assert sum(res.used) >= 3


def test_convergence_energy_is_exact():
    prof = make_profile("1 + x^2", (-4.0, 4.0))
    res = convergence_order(lambda n: build_system(prof, n=n), [201, 401, 801], "energy")
    assert res.exact and res.errors == [0.0, 0.0, 0.0]


def test_convergence_rejects_non_monotone_data():
    prof = make_profile("1 + x^2", (-4.0, 4.0))
    errors = iter([1e-3, 1e-2, 1e-4])
    res = convergence_order(lambda n: build_system(prof, n=n), [201, 401, 801],
                            lambda s: next(errors))
    assert res.slope is None and not res.monotone


def test_node_count_gaussian():
    g = Grid(-8.0, 8.0, 2001)
    assert node_count(sample(lambda x: math.pi ** -0.25 * np.exp(-x ** 2 / 2), g)) == 0


def test_node_count_shifted_oscillator():
    lam, floor = 4.0, 1e-6
    psi0 = ground_state(flat(lam, (-8.0, 8.0), 8001))
    # Re psi0 ~ cos(lam x) exp(-x^2/2): one lobe per k pi / lam, kept when its
    # peak exp(-(k pi / lam)^2 / 2) clears the floor; nodes = lobes - 1
    k_max = max(k for k in range(40) if math.exp(-0.5 * (k * math.pi / lam) ** 2) > floor)
    assert k_max == 6
    assert node_count(psi0, "real", floor) == 2 * k_max


def test_imaginary_part_degenerate_at_lambda_zero(quadratic_system):
    s = quadratic_system.rebuild(params=ModelParams(lam=0.0))
    psi0 = ground_state(s)
    assert node_count(psi0, "imaginary") == 0
    assert component_is_degenerate(psi0, "imaginary")
    assert not component_is_degenerate(ground_state(quadratic_system), "imaginary")


def test_hermite_oracle_low_levels():
    g = Grid(-10.0, 10.0, 2001)
    ref = hermite_oracle(2, ModelParams(lam=0.0), g)
    np.testing.assert_allclose(ref[0].values, math.pi ** -0.25 * np.exp(-g.x ** 2 / 2), atol=1e-14)
    shape = (2 * g.x ** 2 - 1) * np.exp(-g.x ** 2 / 2)
    ratio = ref[2].real[np.abs(shape) > 1e-3] / shape[np.abs(shape) > 1e-3]
    assert np.ptp(ratio) < 1e-12 * abs(ratio[0])


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_oracle_equivalence(lam):
    s = flat(lam)
    built = build_states(s, 5)
    ref = hermite_oracle(5, s.params, s.grid)
    for n in range(6):
        assert np.max(np.abs(built[n].values - ref[n].values)) < 1e-8


# --- report ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def quad_report(quadratic_system):
    return full_report(quadratic_system, n_max=4)


def test_report_all_pass(quad_report):
    d = quad_report.to_dict()
    assert tuple(d) == REPORT_KEYS
    assert d["verdict"] == {"status": "pass", "failed": []}


def test_report_is_reproducible(quadratic_system, quad_report):
    assert full_report(quadratic_system, n_max=4).to_dict() == quad_report.to_dict()


def test_report_single_state_skips_gram(quadratic_system):
    d = full_report(quadratic_system, n_max=0).to_dict()
    assert d["gram_bilinear"]["status"] == "skip"
    assert "insufficient states" in d["gram_bilinear"]["reason"]
    assert d["residuals"]["status"] == "pass"
    assert d["verdict"]["status"] == "pass"


def test_report_a_override(quadratic_system):
    s = quadratic_system.rebuild(params=ModelParams(lam=0.2, a=2.0, expert=True))
    d = full_report(s, n_max=4).to_dict()
    assert d["factorization"]["status"] == "fail"
    assert d["verdict"]["failed"] == ["factorization"]
    assert all(d[k]["status"] == "skip" for k in REPORT_KEYS[1:-1] if k != "factorization")


def test_report_coarse_grid(quadratic_system):
    d = full_report(quadratic_system.rebuild(n=201), n_max=4).to_dict()
    assert d["residuals"]["status"] == "fail"
    assert "refine grid" in d["residuals"]["hint"]
