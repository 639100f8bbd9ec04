import numpy as np
import pytest

from bearing_observer import (
    DegenerateDirection,
    IllConditioned,
    NonFiniteField,
    direction,
    euler_step,
    invert,
    projector,
    rk4_step,
)


def random_unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


class TestProjector:
    def test_axis_direction(self):
        assert np.allclose(projector(np.array([0.0, 0.0, 1.0])),
                           np.diag([1.0, 1.0, 0.0]))

    def test_annihilates_its_direction(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            y = random_unit(rng, 3)
            assert np.linalg.norm(projector(y) @ y) < 1e-14

    def test_diagonal_plane_direction(self):
        y = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
        expected = np.array([[0.5, -0.5, 0.0], [-0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
        assert np.allclose(projector(y), expected)

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_symmetric_idempotent(self, n):
        rng = np.random.default_rng(n)
        for _ in range(1000):
            p = projector(random_unit(rng, n))
            assert np.abs(p - p.T).max() < 1e-12
            assert np.abs(p @ p - p).max() < 1e-12

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_eigenvalues_zero_and_ones(self, n):
        rng = np.random.default_rng(10 + n)
        for _ in range(200):
            ev = np.sort(np.linalg.eigvalsh(projector(random_unit(rng, n))))
            assert abs(ev[0]) < 1e-10
            assert np.abs(ev[1:] - 1.0).max() < 1e-10


class TestDirection:
    def test_axis(self):
        assert np.allclose(direction(np.array([0.0, 0.0, 3.0])), [0.0, 0.0, 1.0])

    def test_three_four_five(self):
        assert np.allclose(direction(np.array([3.0, 4.0, 0.0])), [0.6, 0.8, 0.0])

    def test_zero_raises(self):
        with pytest.raises(DegenerateDirection):
            direction(np.zeros(3))

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            x = rng.standard_normal(4)
            if np.linalg.norm(x) < 1e-3:
                continue
            c = float(rng.uniform(0.1, 100.0))
            assert np.allclose(direction(c * x), direction(x), atol=1e-14)

    def test_epsilon_guard(self):
        with pytest.raises(DegenerateDirection):
            direction(np.array([1e-10, 0.0, 0.0]))
        assert np.allclose(direction(np.array([1e-10, 0.0, 0.0]), eps=1e-12),
                           [1.0, 0.0, 0.0])


class TestInvert:
    def test_identity(self):
        assert np.allclose(invert(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(invert(np.diag([1.0, 2.0, 4.0])),
                           np.diag([1.0, 0.5, 0.25]))

    def test_singular_raises(self):
        singular = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(IllConditioned):
            invert(singular)

    def test_cond_limit(self):
        m = np.diag([1.0, 1e-8])
        invert(m)  # cond ~ 1e8 under the default 1e12 limit
        with pytest.raises(IllConditioned):
            invert(m, cond_limit=1e6)

    def test_residual_on_random_matrices(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(2, 6))
            m = rng.standard_normal((n, n)) + 3.0 * np.eye(n)
            m_inv = invert(m)
            cond = np.linalg.cond(m)
            residual = np.linalg.norm(m @ m_inv - np.eye(n))
            assert residual <= 1e-9 * cond


class TestRk4Step:
    def test_zero_field(self):
        state = np.array([1.0, -2.0, 0.5])
        out = rk4_step(lambda t, x: np.zeros_like(x), 0.0, state, 0.3)
        assert np.array_equal(out, state)

    def test_exponential_one_step(self):
        out = rk4_step(lambda t, x: x, 0.0, np.array([1.0]), 0.1)
        assert abs(out[0] - np.exp(0.1)) < 1e-7

    def test_reference_field_against_closed_form(self):
        # One step of the reference circle's velocity field from (1, 0, 3);
        # the exact flow is (cos(t/2), sin(t/2), 3).
        def field(t, x):
            return np.array([-0.5 * np.sin(0.5 * t), 0.5 * np.cos(0.5 * t), 0.0])

        out = rk4_step(field, 0.0, np.array([1.0, 0.0, 3.0]), 0.01)
        exact = np.array([np.cos(0.005), np.sin(0.005), 3.0])
        assert np.abs(out - exact).max() < 5e-15

    def test_observed_order_at_least_3_9(self):
        lam = 1.0

        def integrate(h):
            x = np.array([1.0])
            steps = int(round(1.0 / h))
            for i in range(steps):
                x = rk4_step(lambda t, s: lam * s, i * h, x, h)
            return abs(x[0] - np.exp(lam))

        errors = [integrate(h) for h in (0.1, 0.05, 0.025, 0.0125)]
        orders = [np.log2(errors[i] / errors[i + 1]) for i in range(3)]
        assert min(orders) >= 3.9

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            rk4_step(lambda t, x: x, 0.0, np.array([1.0]), 0.0)
        with pytest.raises(ValueError):
            rk4_step(lambda t, x: x, 0.0, np.array([1.0]), -0.1)

    def test_nonfinite_field_raises(self):
        with pytest.raises(NonFiniteField):
            rk4_step(lambda t, x: np.array([np.nan]), 0.0, np.array([1.0]), 0.1)
        with pytest.raises(NonFiniteField):
            rk4_step(lambda t, x: np.array([np.inf]), 0.0, np.array([1.0]), 0.1)


class TestEulerStep:
    def test_zero_field(self):
        state = np.array([2.0, 3.0])
        assert np.array_equal(euler_step(lambda t, x: np.zeros_like(x), 0.0, state, 0.5),
                              state)

    def test_constant_field(self):
        out = euler_step(lambda t, x: np.array([1.0]), 0.0, np.array([0.0]), 0.5)
        assert out[0] == pytest.approx(0.5)

    def test_linear_field(self):
        out = euler_step(lambda t, x: x, 0.0, np.array([1.0]), 0.1)
        assert out[0] == pytest.approx(1.1)

    def test_cross_checks_rk4(self):
        # Both integrators approach the same flow as h shrinks.
        def field(t, x):
            return -x

        x_rk = np.array([1.0])
        x_eu = np.array([1.0])
        h = 0.001
        for i in range(1000):
            x_rk = rk4_step(field, i * h, x_rk, h)
            x_eu = euler_step(field, i * h, x_eu, h)
        assert abs(x_rk[0] - x_eu[0]) < 1e-3
        assert abs(x_rk[0] - np.exp(-1.0)) < 1e-12
