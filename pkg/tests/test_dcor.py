import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import exact_dcov_sq_1d, naive_dcor, naive_dcov, naive_distances
from scipy.stats import ortho_group

from csdis.dcor import dcor, dcor_blocked, dcov, double_center, pairwise_distances
from csdis.errors import DegenerateInput, InputError, ShapeError


def test_distances_345():
    D = pairwise_distances([[0.0, 0.0], [3.0, 4.0]])
    assert D[0, 1] == pytest.approx(5.0, abs=1e-12)
    assert D[0, 0] == 0.0 and D[1, 1] == 0.0


def test_distances_identical_rows():
    np.testing.assert_array_equal(pairwise_distances(np.ones((4, 3))), np.zeros((4, 4)))


def test_distances_match_double_loop():
    X = np.random.default_rng(1).normal(size=(4, 2))
    np.testing.assert_allclose(pairwise_distances(X), naive_distances(X.tolist()), atol=1e-12)


def test_distances_reject_nonfinite():
    with pytest.raises(InputError):
        pairwise_distances([[0.0], [np.inf]])


def test_double_center_examples():
    np.testing.assert_array_equal(double_center(np.full((3, 3), 2.5)), np.zeros((3, 3)))
    np.testing.assert_allclose(double_center([[0, 1], [1, 0]]), [[-0.5, 0.5], [0.5, -0.5]])
    np.testing.assert_array_equal(double_center(np.zeros((2, 2))), np.zeros((2, 2)))
    with pytest.raises(ShapeError):
        double_center(np.zeros((2, 3)))


def test_double_center_row_and_column_sums():
    X = np.random.default_rng(2).normal(size=(20, 4))
    A = double_center(pairwise_distances(X))
    np.testing.assert_allclose(A, A.T, atol=1e-12)
    assert np.abs(A.sum(axis=0)).max() < 20 * 1e-9
    assert np.abs(A.sum(axis=1)).max() < 20 * 1e-9


def test_dcov_constant_is_zero():
    Y = np.random.default_rng(3).normal(size=(5, 2))
    assert dcov(np.ones((5, 3)), Y) == 0.0


def test_dcov_exact_oracle():
    expected = math.sqrt(float(exact_dcov_sq_1d([0, 1, 2])))
    assert expected == pytest.approx(math.sqrt(40) / 9, rel=1e-15)
    assert dcov([[0.0], [1.0], [2.0]], [[0.0], [1.0], [2.0]]) == pytest.approx(expected, rel=1e-12)


def test_dcov_symmetric():
    rng = np.random.default_rng(4)
    X, Y = rng.normal(size=(8, 3)), rng.normal(size=(8, 5))
    assert dcov(X, Y) == pytest.approx(dcov(Y, X), rel=1e-14)


def test_dcov_row_mismatch():
    with pytest.raises(ShapeError):
        dcov(np.zeros((3, 1)), np.zeros((4, 1)))


def test_dcor_self_is_one():
    X = np.random.default_rng(5).normal(size=(10, 3))
    assert dcor(X, X).dcor == pytest.approx(1.0, abs=1e-12)


def test_dcor_matches_oracle_n6():
    rng = np.random.default_rng(6)
    X, Y = rng.normal(size=(6, 2)), rng.normal(size=(6, 4))
    r = dcor(X, Y)
    assert r.dcor == pytest.approx(naive_dcor(X.tolist(), Y.tolist()), rel=1e-10)
    assert r.dcov_xy == pytest.approx(naive_dcov(X.tolist(), Y.tolist()), rel=1e-10)
    assert r.dcor == pytest.approx(r.dcov_xy / math.sqrt(r.dcov_xx * r.dcov_yy), rel=1e-15)


def test_dcor_degenerate():
    X = np.random.default_rng(7).normal(size=(6, 2))
    with pytest.raises(DegenerateInput):
        dcor(X, np.zeros((6, 3)))
    with pytest.raises(DegenerateInput):
        dcor_blocked(np.ones((6, 1)), X)


def test_blocked_block_sizes_agree():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(64, 5))
    Y = rng.normal(size=(64, 2)) + X[:, :2] ** 2
    a = dcor_blocked(X, Y, block=1).dcor
    b = dcor_blocked(X, Y, block=64).dcor
    c = dcor_blocked(X, Y, block=1000).dcor
    assert a == pytest.approx(b, rel=1e-10)
    assert c == b


def test_blocked_matches_unblocked_images():
    rng = np.random.default_rng(9)
    images = rng.uniform(-1, 1, size=(256, 3, 16, 16))
    styles = images[:, :, 0, 0] + 0.1 * rng.normal(size=(256, 3))
    assert dcor_blocked(images, styles, block=37).dcor == pytest.approx(
        dcor(images, styles).dcor, rel=1e-10
    )


@pytest.mark.slow
def test_blocked_matches_unblocked_full_size():
    from csdis import synth

    ss = synth.generate(2048, 3)
    ref = dcor(ss.images, ss.styles).dcor
    assert dcor_blocked(ss.images, ss.styles, block=300).dcor == pytest.approx(ref, rel=1e-10)


def test_block_must_be_positive():
    with pytest.raises(ShapeError):
        dcor_blocked(np.zeros((3, 1)), np.zeros((3, 1)), block=0)


matrices = st.integers(0, 2**31 - 1).flatmap(
    lambda seed: st.tuples(st.just(seed), st.integers(3, 64), st.integers(1, 8), st.integers(1, 8))
)


@settings(max_examples=40, deadline=None)
@given(matrices)
def test_range_and_symmetry(args):
    seed, n, d1, d2 = args
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d1))
    Y = rng.normal(size=(n, d2)) + np.tanh(X[:, :1])
    r = dcor(X, Y).dcor
    assert 0.0 <= r <= 1.0
    assert abs(r - dcor(Y, X).dcor) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**31 - 1),
    d=st.integers(1, 8),
    scale=st.floats(0.01, 100.0),
)
def test_invariances(seed, d, scale):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, d))
    Y = rng.normal(size=(20, 3)) + X[:, :1]
    base = dcor(X, Y).dcor
    shift = rng.normal(size=d) * 10
    assert dcor(scale * X + shift, Y).dcor == pytest.approx(base, abs=1e-8)
    Q = ortho_group.rvs(d, random_state=seed % 2**32) if d > 1 else np.array([[-1.0]])
    assert dcor(X @ Q, Y).dcor == pytest.approx(base, abs=1e-8)


def test_independent_large_sample_is_small():
    rng = np.random.default_rng(10)
    X, Y = rng.uniform(size=(5000, 3)), rng.uniform(size=(5000, 3))
    assert dcor_blocked(X, Y, block=500).dcor < 0.1


def test_result_components():
    rng = np.random.default_rng(11)
    X, Y = rng.normal(size=(10, 2)), rng.normal(size=(10, 2))
    r = dcor_blocked(X, Y, block=3)
    assert r.n == 10
    assert min(r.dcov_xy, r.dcov_xx, r.dcov_yy) >= 0
    assert r.dcov_xx == pytest.approx(naive_dcov(X.tolist(), X.tolist()), rel=1e-10)
