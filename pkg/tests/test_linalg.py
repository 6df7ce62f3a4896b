import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from eivreg.linalg import (
    ComplementSplit,
    complement_split,
    matrix_norms,
    nuclear_norm,
    numerical_rank,
    project_l1_ball,
    project_nuclear_ball,
    rank_split,
    spectral_tail_split,
    svt,
    thin_svd,
    trace_inner,
)


def scalar_shrink_oracle(sigma, t):
    """Independent per-singular-value oracle: minimize 0.5*(s-sigma)^2 + t*s over s >= 0."""
    res = minimize_scalar(
        lambda s: 0.5 * (s - sigma) ** 2 + t * s,
        bounds=(0.0, sigma + 1.0),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return res.x


def l1_projection_oracle(v, radius, tol=1e-13):
    """Dual bisection oracle for the l1-ball projection, no sorting involved.

    The shift theta solves sum(max(v - theta, 0)) = radius; a coarse grid
    brackets it and bisection refines.
    """
    v = np.asarray(v, float)
    if v.sum() <= radius:
        return v.copy()
    lo, hi = 0.0, float(v.max())
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.maximum(v - mid, 0).sum() > radius:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    theta = (lo + hi) / 2
    return np.maximum(v - theta, 0)


class TestThinSvd:
    def test_diagonal(self):
        f = thin_svd(np.diag([3.0, 1.0]))
        assert np.allclose(f.sigma, [3.0, 1.0])

    def test_zero_matrix(self):
        f = thin_svd(np.zeros((3, 2)))
        assert np.allclose(f.sigma, [0.0, 0.0])

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((5, 4))
        f = thin_svd(m)
        assert np.allclose(f.u.T @ f.u, np.eye(4), atol=1e-8)
        assert np.allclose(f.v.T @ f.v, np.eye(4), atol=1e-8)
        assert np.linalg.norm(f.reconstruct() - m) <= 1e-8 * np.linalg.norm(m)
        assert (np.diff(f.sigma) <= 1e-12).all() and (f.sigma >= 0).all()

    def test_deterministic_and_sign_fixed(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((4, 4))
        f1, f2 = thin_svd(m), thin_svd(m.copy())
        assert np.array_equal(f1.u, f2.u) and np.array_equal(f1.v, f2.v)
        for j in range(4):
            col = f1.u[:, j]
            nz = np.nonzero(np.abs(col) > 1e-12)[0]
            assert col[nz[0]] > 0

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            thin_svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestNorms:
    def test_diag_3_4(self):
        n = matrix_norms(np.diag([3.0, 4.0]))
        assert n.nuclear == pytest.approx(7.0)
        assert n.frobenius == pytest.approx(5.0)
        assert n.operator == pytest.approx(4.0)

    def test_identity(self):
        n = matrix_norms(np.eye(3))
        assert n.nuclear == pytest.approx(3.0)
        assert n.frobenius == pytest.approx(np.sqrt(3.0))
        assert n.operator == pytest.approx(1.0)

    def test_zero(self):
        assert matrix_norms(np.zeros((2, 3))) == (0.0, 0.0, 0.0)

    def test_chain_on_random(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            m = rng.standard_normal((rng.integers(1, 8), rng.integers(1, 8)))
            n = matrix_norms(m)
            assert n.operator <= n.frobenius + 1e-12 <= n.nuclear + 1e-12


class TestTraceInner:
    def test_identity_pair(self):
        assert trace_inner(np.eye(2), np.eye(2)) == pytest.approx(2.0)

    def test_hand_value(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert trace_inner(a, b) == pytest.approx(5.0)

    def test_zero_and_symmetry(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))
        assert trace_inner(a, np.zeros_like(a)) == 0.0
        assert trace_inner(a, b) == pytest.approx(trace_inner(b, a))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            trace_inner(np.eye(2), np.eye(3))


class TestSvt:
    def test_diagonal(self):
        assert np.allclose(svt(np.diag([3.0, 1.0]), 1.0), np.diag([2.0, 0.0]))

    def test_zero_threshold_is_identity(self):
        rng = np.random.default_rng(4)
        m = rng.standard_normal((4, 3))
        assert np.abs(svt(m, 0.0) - m).max() <= 1e-10

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            svt(np.eye(2), -0.1)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((4, 3))
        t = 0.3
        out_sigma = np.linalg.svd(svt(m, t), compute_uv=False)
        expect = np.array([scalar_shrink_oracle(s, t) for s in np.linalg.svd(m, compute_uv=False)])
        assert np.abs(out_sigma - expect).max() <= 1e-8

    def test_nuclear_norm_shrinks(self):
        rng = np.random.default_rng(6)
        m = rng.standard_normal((5, 5))
        assert nuclear_norm(svt(m, 0.7)) <= nuclear_norm(m) + 1e-12

    def test_prox_objective_beats_random_perturbations(self):
        # local optimality sampling of the prox subproblem, batched SVDs
        rng = np.random.default_rng(7)
        for _ in range(200):
            d1, d2 = rng.integers(2, 6), rng.integers(2, 6)
            m = rng.standard_normal((d1, d2)) * rng.uniform(0.5, 2.0)
            t = rng.uniform(0.05, 1.0)
            theta = svt(m, t)

            def prox_obj_batch(thetas):
                diff = thetas - m
                sig = np.linalg.svd(thetas, compute_uv=False)
                return 0.5 * (diff ** 2).sum(axis=(-2, -1)) + t * sig.sum(axis=-1)

            base = prox_obj_batch(theta[None])[0]
            pert = theta[None] + rng.standard_normal((10_000, d1, d2)) * rng.uniform(
                1e-4, 0.5, size=(10_000, 1, 1)
            )
            assert (prox_obj_batch(pert) >= base - 1e-10).all()


class TestL1Projection:
    def test_inside_ball_unchanged(self):
        assert np.allclose(project_l1_ball(np.array([0.5, 0.3]), 1.0), [0.5, 0.3])

    def test_hand_value(self):
        assert np.allclose(project_l1_ball(np.array([3.0, 1.0]), 2.0), [2.0, 0.0])

    def test_symmetric_split(self):
        assert np.allclose(project_l1_ball(np.array([2.0, 2.0]), 2.0), [1.0, 1.0])

    def test_matches_bisection_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            v = rng.uniform(0, 3, size=rng.integers(1, 12))
            radius = rng.uniform(0.1, 4.0)
            assert np.abs(project_l1_ball(v, radius) - l1_projection_oracle(v, radius)).max() <= 1e-8

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            project_l1_ball(np.array([1.0]), 0.0)
        with pytest.raises(ValueError):
            project_l1_ball(np.array([-1.0]), 1.0)


class TestNuclearProjection:
    def test_inside_ball_unchanged(self):
        m = np.diag([0.3, 0.2])
        assert np.array_equal(project_nuclear_ball(m, 1.0), m)

    def test_diagonal_case(self):
        assert np.allclose(project_nuclear_ball(np.diag([3.0, 1.0]), 2.0), np.diag([2.0, 0.0]))

    def test_zero(self):
        assert np.allclose(project_nuclear_ball(np.zeros((3, 3)), 2.0), 0.0)

    def test_radius_respected_and_idempotent(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            m = rng.standard_normal((5, 4)) * 2
            p = project_nuclear_ball(m, 1.5)
            assert nuclear_norm(p) <= 1.5 + 1e-8
            assert np.abs(project_nuclear_ball(p, 1.5) - p).max() <= 1e-10

    def test_matches_l1_oracle_on_spectrum(self):
        rng = np.random.default_rng(10)
        m = rng.standard_normal((6, 5))
        radius = 2.0
        sig = np.linalg.svd(project_nuclear_ball(m, radius), compute_uv=False)
        expect = np.sort(l1_projection_oracle(np.linalg.svd(m, compute_uv=False), radius))[::-1]
        assert np.abs(sig - expect).max() <= 1e-8


class TestRankSplit:
    def test_diagonal(self):
        s = rank_split(np.diag([4.0, 3.0, 2.0, 1.0]), 1)
        assert np.allclose(s.head, np.diag([4.0, 3.0, 0.0, 0.0]))
        assert np.allclose(s.tail, np.diag([0.0, 0.0, 2.0, 1.0]))

    def test_low_rank_input_has_zero_tail(self):
        rng = np.random.default_rng(11)
        m = np.outer(rng.standard_normal(5), rng.standard_normal(4))
        s = rank_split(m, 1)
        assert np.abs(s.tail).max() <= 1e-10

    def test_invariants_on_random(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            m = rng.standard_normal((5, 5))
            s = rank_split(m, 2)
            assert np.allclose(s.head + s.tail, m, atol=1e-10)
            assert abs(trace_inner(s.head, s.tail)) <= 1e-8
            assert np.linalg.svd(s.head, compute_uv=False)[2 * 2 :].max(initial=0.0) <= 1e-10
            top = np.linalg.svd(m, compute_uv=False)[: 2 * 2].sum()
            assert nuclear_norm(s.head) == pytest.approx(top)

    def test_bad_r(self):
        with pytest.raises(ValueError):
            rank_split(np.eye(3), 0)


class TestComplementSplit:
    def test_zero_delta(self):
        s = complement_split(np.eye(3), np.zeros((3, 3)), 1)
        assert np.abs(s.outer).max() == 0.0 and np.abs(s.remainder).max() == 0.0

    def test_full_rank_anchor_index(self):
        s = complement_split(np.eye(3), np.eye(3), 3)
        assert np.abs(s.outer).max() <= 1e-12
        assert np.allclose(s.remainder, np.eye(3))

    def test_rank_one_anchor_remainder_rank(self):
        rng = np.random.default_rng(13)
        anchor = np.outer(rng.standard_normal(5), rng.standard_normal(5))
        delta = rng.standard_normal((5, 5))
        s = complement_split(anchor, delta, 1)
        assert np.linalg.svd(s.remainder, compute_uv=False)[2:].max() <= 1e-10

    def test_remainder_rank_bound_on_random(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            d1, d2 = rng.integers(3, 9), rng.integers(3, 9)
            r = int(rng.integers(1, min(d1, d2) + 1))
            anchor = rng.standard_normal((d1, r)) @ rng.standard_normal((r, d2))
            delta = rng.standard_normal((d1, d2))
            s = complement_split(anchor, delta, r)
            assert isinstance(s, ComplementSplit)
            assert np.allclose(s.outer + s.remainder, delta, atol=1e-10)
            sig = np.linalg.svd(s.remainder, compute_uv=False)
            assert sig[min(2 * r, len(sig)) :].max(initial=0.0) <= 1e-10 * max(1.0, sig[0])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            complement_split(np.eye(3), np.eye(4), 1)


class TestSpectralTailSplit:
    def test_hand_value_with_ball_bound(self):
        head, tail = spectral_tail_split(np.array([2.0, 1.0, 0.5]), 1.0)
        assert list(head) == [0, 1] and tail == pytest.approx(0.5)
        # tail bound for a q=1 ball of radius 3.5 containing this spectrum
        q, radius = 1.0, 3.5
        assert len(head) <= radius / 1.0 ** q
        assert tail <= 1.0 ** (1 - q) * radius

    def test_threshold_above_all(self):
        head, tail = spectral_tail_split(np.array([2.0, 1.0, 0.5]), 3.0)
        assert head.size == 0 and tail == pytest.approx(3.5)

    def test_all_zero(self):
        head, tail = spectral_tail_split(np.zeros(4), 1.0)
        assert head.size == 0 and tail == 0.0

    def test_ball_bounds_hold_on_random_spectra(self):
        rng = np.random.default_rng(15)
        for _ in range(100):
            sigma = np.sort(rng.uniform(0, 2, size=8))[::-1]
            q = rng.uniform(0.1, 1.0)
            radius = float((sigma ** q).sum())  # spectrum sits exactly on the ball
            eta = rng.uniform(0.05, 2.0)
            head, tail = spectral_tail_split(sigma, eta)
            assert len(head) <= eta ** (-q) * radius + 1e-9
            assert tail <= eta ** (1 - q) * radius + 1e-9


def test_numerical_rank():
    assert numerical_rank(np.diag([1.0, 1e-14, 0.0])) == 1
