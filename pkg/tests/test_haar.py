import math

import numpy as np
import pytest

from nltv import (
    HaarIndex,
    Kernel,
    KernelKind,
    OracleConfig,
    eval_haar,
    haar_branches,
    haar_function,
    oracle_eval,
)

LN2 = math.log(2.0)
GAUSS = OracleConfig(method="gauss", points_per_cell_axis=10)


def test_index_validation():
    HaarIndex(k=0, j=0)
    HaarIndex(k=0, j=1)
    HaarIndex(k=3, j=8)
    with pytest.raises(ValueError):
        HaarIndex(k=0, j=2)
    with pytest.raises(ValueError):
        HaarIndex(k=1, j=0)
    with pytest.raises(ValueError):
        HaarIndex(k=2, j=5)
    with pytest.raises(ValueError):
        HaarIndex(k=-1, j=1)


def test_constant_function_evaluates_to_zero():
    for n in (1, 2, 7, 64):
        assert eval_haar(HaarIndex(k=0, j=0), n) == 0.0


def test_level_zero_golden_values():
    assert eval_haar(HaarIndex(k=0, j=1), 1) == 2 * LN2
    for n in (2, 3, 10, 100):
        assert eval_haar(HaarIndex(k=0, j=1), n) == 2.0


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_marginal_large_scale_golden(k):
    s = math.sqrt(2.0 ** k)
    for n in (2 ** (k + 1), 2 ** (k + 1) + 3, 4 * 2 ** k):
        assert eval_haar(HaarIndex(k=k, j=1), n) == 3.0 * s


@pytest.mark.parametrize("k,j", [(2, 2), (3, 2), (3, 4), (4, 3), (5, 11)])
def test_inner_large_scale_golden(k, j):
    s = math.sqrt(2.0 ** k)
    for n in (2 ** (k + 1), 2 ** (k + 1) + 5):
        assert eval_haar(HaarIndex(k=k, j=j), n) == 4.0 * s


def test_mirror_symmetry_exact():
    for k in range(1, 6):
        for j in range(1, 2 ** (k - 1) + 1):
            mirrored = 2 ** k - j + 1
            for n in (1, 2, 3, 2 ** k, 2 ** (k + 1) + 1):
                assert eval_haar(HaarIndex(k=k, j=j), n) == \
                    eval_haar(HaarIndex(k=k, j=mirrored), n)


def test_branch_boundary_continuity():
    """Wherever two branch formulas both apply, they agree to 1e-10 relative
    (k up to 5, all valid positions)."""
    checked = 0
    for k in range(1, 6):
        for j in range(1, 2 ** (k - 1) + 1):
            tk = 2.0 ** k
            breakpoints = {tk / (tk - j), tk / j, 2.0 * tk}
            if j > 1:
                breakpoints.add(tk / (j - 1))
            branches = haar_branches(HaarIndex(k=k, j=j))
            for point in breakpoints:
                covering = [b for b in branches if b.covers(point)]
                values = [b.value(point) for b in covering]
                for va in values:
                    for vb in values:
                        assert abs(va - vb) <= 1e-10 * max(abs(va), abs(vb), 1e-30)
                if len(values) > 1:
                    checked += 1
    assert checked > 30


def test_haar_function_representation():
    idx = HaarIndex(k=2, j=3)
    pc = haar_function(idx)
    assert pc.n == 8
    s = math.sqrt(4.0)
    assert pc.coeffs[4] == s and pc.coeffs[5] == -s
    assert np.count_nonzero(pc.coeffs) == 2
    assert haar_function(HaarIndex(k=0, j=0)).coeffs.tolist() == [1.0, 1.0]


@pytest.mark.parametrize("k,j,n", [
    (0, 1, 1), (0, 1, 4), (1, 1, 2), (2, 1, 1), (2, 1, 3), (2, 1, 6),
    (2, 2, 2), (2, 2, 5), (3, 2, 4), (3, 3, 3), (3, 6, 7), (4, 4, 2),
    (4, 13, 9), (5, 2, 40),
])
def test_oracle_agreement(k, j, n):
    idx = HaarIndex(k=k, j=j)
    closed = eval_haar(idx, n)
    got = oracle_eval(haar_function(idx), Kernel(KernelKind.BOX1D, n), GAUSS).value
    assert abs(got - closed) <= 1e-8 * max(abs(closed), 1e-12)


def test_eval_haar_rejects_bad_scale():
    with pytest.raises(ValueError):
        eval_haar(HaarIndex(k=1, j=1), 0)
    with pytest.raises(ValueError):
        eval_haar(HaarIndex(k=1, j=1), 2.5)
