import math

import numpy as np
import pytest
from scipy.linalg import solve_banded

from nltv import (
    DataTerm,
    EnergyParams,
    Kernel,
    KernelKind,
    SolverConfig,
    denoise,
    energy,
    gamma_experiment,
    taut_string_1d,
)
from nltv.minimize import (
    SCHEME_CLOSED_1D,
    SCHEME_CLOSED_2D,
    SCHEME_ORACLE,
    regularizer_pairs,
)

TIGHT = SolverConfig(tol=1e-15, max_iter=60_000, plateau=10)


def params_1d(n, alpha, p=1.0, kind=KernelKind.BOX1D, scheme=SCHEME_CLOSED_1D,
              scale=None):
    return EnergyParams(p=p, alpha=alpha, kernel=Kernel(kind, scale or n),
                        grid_n=n, scheme=scheme)


def tv_exact(d, lam):
    return taut_string_1d(d, lam)


# ---------------------------------------------------------------------------
# energy


def test_energy_hand_example():
    data = DataTerm.of([0.0, 1.0])
    params = params_1d(2, alpha=0.1)
    value = energy([0.25, 0.75], data, params)
    assert abs(value - 0.08125) < 1e-15


def test_energy_trivial_cases():
    data = DataTerm.of([0.2, 0.9, 0.4])
    params = params_1d(3, alpha=0.3)
    at_data = energy(data.data, data, params)
    assert abs(at_data - 0.3 * (0.7 + 0.5)) < 1e-15
    const = DataTerm.of([0.5, 0.5])
    assert energy([0.5, 0.5], const, params_1d(2, alpha=1.0)) == 0.0
    with pytest.raises(ValueError):
        energy([0.0, 1.0, 2.0], data, params_1d(2, alpha=0.1))


def test_param_validation():
    with pytest.raises(ValueError):
        params_1d(4, alpha=0.0)
    with pytest.raises(ValueError):
        EnergyParams(p=0.9, alpha=1.0, kernel=Kernel(KernelKind.BOX1D, 4),
                     grid_n=4, scheme=SCHEME_CLOSED_1D)
    with pytest.raises(ValueError):
        # mismatched kernel scale is not a closed form
        EnergyParams(p=1.0, alpha=1.0, kernel=Kernel(KernelKind.BOX1D, 2),
                     grid_n=4, scheme=SCHEME_CLOSED_1D)
    with pytest.raises(ValueError):
        # divergent configuration
        EnergyParams(p=2.0, alpha=1.0, kernel=Kernel(KernelKind.BOX1D, 2),
                     grid_n=8, scheme=SCHEME_ORACLE)
    with pytest.raises(ValueError):
        DataTerm(data=np.zeros(4), cell_measure=0.5)
    with pytest.raises(ValueError):
        DataTerm.of(np.zeros((2, 3)))


def test_closed_2d_pairs_match_eval_image():
    from nltv import Image2D, eval_image

    rng = np.random.default_rng(20)
    for n in (2, 5):
        params = EnergyParams(p=1.0, alpha=1.0, kernel=Kernel(KernelKind.DISC2D, n),
                              grid_n=n, scheme=SCHEME_CLOSED_2D)
        ii, jj, w = regularizer_pairs(params)
        a = rng.uniform(0, 1, (n, n))
        flat = a.ravel()
        pair_sum = float(np.sum(w * np.abs(flat[ii] - flat[jj])))
        assert abs(pair_sum - eval_image(Image2D(a), KernelKind.DISC2D)) < 1e-13


def test_oracle_pairs_match_wide_closed_form():
    # matched double-width kernel: the oracle weights must reproduce the
    # ln(2) / (1 - ln 2)/2 stencil
    n = 9
    po = params_1d(n, alpha=1.0, kind=KernelKind.BOX1D_WIDE, scheme=SCHEME_ORACLE)
    ii, jj, w = regularizer_pairs(po)
    by_dist = {}
    for a, b, wv in zip(ii, jj, w):
        by_dist.setdefault(b - a, set()).add(round(wv, 12))
    assert set(by_dist) == {1, 2}
    assert by_dist[1] == {round(math.log(2.0), 12)}
    assert by_dist[2] == {round(0.5 * (1 - math.log(2.0)), 12)}


# ---------------------------------------------------------------------------
# taut string


def test_taut_string_basics():
    d = np.array([0.3, -1.2, 0.7])
    assert np.array_equal(taut_string_1d(d, 0.0), d)
    assert np.allclose(taut_string_1d(np.full(5, 1.3), 2.0), np.full(5, 1.3))
    got = taut_string_1d([0.0, 0.0, 1.0, 1.0], 0.1)
    assert np.allclose(got, [0.05, 0.05, 0.95, 0.95], atol=1e-14)
    with pytest.raises(ValueError):
        taut_string_1d(d, -0.1)


def test_taut_string_example_against_grid_search():
    # two-level candidates [a, a, b, b] cover the optimal structure here
    d = np.array([0.0, 0.0, 1.0, 1.0])
    lam = 0.1
    grid = np.linspace(-0.5, 1.5, 801)
    best, best_val = None, np.inf
    for a in grid:
        for b in grid:
            u = np.array([a, a, b, b])
            val = 0.5 * np.sum((u - d) ** 2) + lam * np.sum(np.abs(np.diff(u)))
            if val < best_val:
                best, best_val = u, val
    assert np.max(np.abs(taut_string_1d(d, lam) - best)) < 5e-3


def test_taut_string_optimality_kkt():
    """The KKT conditions are necessary and sufficient here: the cumulative
    residual must stay inside [-lam, lam], vanish at the end, and sit on the
    correct bound wherever the output jumps."""
    rng = np.random.default_rng(21)
    for trial in range(300):
        n = int(rng.integers(1, 100))
        d = rng.standard_normal(n) * rng.uniform(0.3, 3.0)
        if trial % 3 == 0:
            d = np.round(d * 2) / 2
        lam = float(rng.uniform(0.01, 2.0))
        u = taut_string_1d(d, lam)
        q = np.cumsum(d - u)
        assert abs(q[-1]) < 1e-9
        assert np.all(np.abs(q[:-1]) <= lam + 1e-9)
        jumps = np.diff(u)
        for i, jump in enumerate(jumps):
            if jump > 1e-9:
                assert abs(q[i] + lam) < 1e-9
            elif jump < -1e-9:
                assert abs(q[i] - lam) < 1e-9


# ---------------------------------------------------------------------------
# denoise


def test_alpha_to_zero_returns_data():
    rng = np.random.default_rng(22)
    d = rng.standard_normal(24)
    res = denoise(DataTerm.of(d), params_1d(24, alpha=1e-12), TIGHT)
    assert np.max(np.abs(res.minimizer - d)) <= 1e-6
    assert res.converged


def test_denoise_matches_taut_string():
    rng = np.random.default_rng(23)
    for trial in range(4):
        d = rng.standard_normal(32).cumsum() / 5
        for alpha in (1e-3, 2e-2):
            res = denoise(DataTerm.of(d), params_1d(32, alpha=alpha), TIGHT)
            exact = tv_exact(d, alpha * 32)
            assert np.max(np.abs(res.minimizer - exact)) <= 1e-6
            assert np.all(np.diff(res.energy_trace) <= 1e-12)
            assert res.converged


def test_denoise_p2_matches_tridiagonal_solve():
    rng = np.random.default_rng(24)
    n = 32
    d = rng.standard_normal(n)
    alpha = 0.01
    res = denoise(DataTerm.of(d), params_1d(n, alpha=alpha, p=2.0),
                  SolverConfig(tol=1e-16, max_iter=5000, plateau=10))
    lam = alpha * n  # normalized weight of sum(diff^2)
    ab = np.zeros((3, n))
    ab[0, 1:] = -2 * lam
    ab[2, :-1] = -2 * lam
    ab[1, :] = 1 + 4 * lam
    ab[1, 0] = ab[1, -1] = 1 + 2 * lam
    exact = solve_banded((1, 1), ab, d)
    assert np.max(np.abs(res.minimizer - exact)) <= 1e-8


def test_mean_preservation_and_grey_shift():
    rng = np.random.default_rng(25)
    d = np.concatenate([np.zeros(16), np.ones(16)]) + 0.1 * rng.standard_normal(32)
    params = params_1d(32, alpha=0.01)
    res = denoise(DataTerm.of(d), params, TIGHT)
    assert abs(res.minimizer.mean() - d.mean()) <= 1e-8
    shifted = denoise(DataTerm.of(d + 4.2), params, TIGHT)
    assert np.max(np.abs(shifted.minimizer - res.minimizer - 4.2)) <= 1e-7


def test_uniqueness_probe_independent_solvers_and_inits():
    rng = np.random.default_rng(26)
    d = rng.standard_normal(24).cumsum() / 4
    params = params_1d(24, alpha=0.02)
    from_data = denoise(DataTerm.of(d), params, TIGHT)
    from_zero = denoise(DataTerm.of(d), params,
                        SolverConfig(method="smooth", tol=1e-15,
                                     max_iter=60_000, init=np.zeros(24)))
    assert np.max(np.abs(from_data.minimizer - from_zero.minimizer)) <= 1e-5


def test_smooth_solver_cross_validates_pd():
    rng = np.random.default_rng(27)
    d = rng.standard_normal(24).cumsum() / 6
    params = params_1d(24, alpha=5e-3)
    a = denoise(DataTerm.of(d), params, TIGHT)
    b = denoise(DataTerm.of(d), params,
                SolverConfig(method="smooth", tol=1e-15, max_iter=60_000))
    assert np.max(np.abs(a.minimizer - b.minimizer)) <= 1e-5
    assert np.all(np.diff(b.energy_trace) <= 1e-12)


def test_non_convergence_is_reported_not_raised():
    rng = np.random.default_rng(28)
    d = rng.standard_normal(16)
    res = denoise(DataTerm.of(d), params_1d(16, alpha=0.05),
                  SolverConfig(tol=1e-16, max_iter=3, plateau=5))
    assert not res.converged
    assert res.iterations == 3
    assert np.all(np.diff(res.energy_trace) <= 1e-12)


def test_denoise_2d_runs_and_preserves_mean():
    rng = np.random.default_rng(29)
    a = rng.uniform(0, 1, (8, 8))
    params = EnergyParams(p=1.0, alpha=0.01, kernel=Kernel(KernelKind.DISC2D, 8),
                          grid_n=8, scheme=SCHEME_CLOSED_2D)
    res = denoise(DataTerm.of(a), params, TIGHT)
    assert res.converged
    assert res.minimizer.shape == (8, 8)
    assert abs(res.minimizer.mean() - a.mean()) <= 1e-8
    assert res.regularizer_value >= 0.0


def test_denoise_validates_shapes_and_solver():
    d = DataTerm.of(np.zeros(8))
    with pytest.raises(ValueError):
        denoise(d, params_1d(6, alpha=0.1))
    with pytest.raises(ValueError):
        denoise(d, params_1d(8, alpha=0.1, p=1.5))  # pd needs p in {1, 2}
    with pytest.raises(ValueError):
        denoise(d, params_1d(8, alpha=0.1), SolverConfig(method="newton"))


# ---------------------------------------------------------------------------
# gamma experiment


def test_gamma_constant_data_all_zero():
    data = DataTerm.of(np.full(32, 0.7))
    rows = gamma_experiment(data, 1.0, 0.01, [2, 4, 8])
    assert [r.scale for r in rows] == [2, 4, 8]
    # zero up to the rounding of the cumulative sums in the limit oracle
    assert all(r.distance <= 1e-13 for r in rows)


def test_gamma_step_distances_shrink():
    rng = np.random.default_rng(30)
    x = np.arange(64) / 64
    data = DataTerm.of((x >= 0.5).astype(float) + 0.1 * rng.standard_normal(64))
    rows = gamma_experiment(data, 1.0, 0.004, [2, 4, 8, 16],
                            SolverConfig(tol=1e-14, max_iter=30_000))
    dist = [r.distance for r in rows]
    assert all(b <= a + 1e-9 for a, b in zip(dist, dist[1:]))
    assert dist[-1] <= dist[0] / 2


def test_gamma_validation():
    data = DataTerm.of(np.zeros(16))
    with pytest.raises(ValueError):
        gamma_experiment(data, 2.0, 0.01, [2, 4])
    with pytest.raises(ValueError):
        gamma_experiment(data, 1.0, 0.01, [4, 2])
    with pytest.raises(ValueError):
        gamma_experiment(data, 1.0, 0.01, [2, 32])
