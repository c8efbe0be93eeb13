import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geomech import numkit
from geomech.errors import (
    MaxIterations,
    NonFiniteState,
    NotSeparable,
    NotSPD,
    SingularJacobian,
    StepUnderflow,
)
from geomech.numkit import OdeProblem, SeparableSplit, integrate_rk, integrate_verlet
from geomech.trajectory import PhaseState, Trajectory


def oscillator(t, y):
    return np.array([y[1], -y[0]])


def test_rk_oscillator_matches_cos():
    ts = np.linspace(0, 2 * np.pi, 50)
    times, Y = integrate_rk(OdeProblem(oscillator, [1.0, 0.0], (0.0, 2 * np.pi)), 1e-10, t_eval=ts)
    np.testing.assert_array_equal(times, ts)
    assert np.max(np.abs(Y[:, 0] - np.cos(ts))) < 1e-8


def test_rk_exponential():
    _, Y = integrate_rk(OdeProblem(lambda t, y: y, [1.0], (0.0, 1.0)), 1e-12)
    assert abs(Y[-1, 0] - np.e) < 1e-9


def test_rk_rejects_reversed_span():
    with pytest.raises(ValueError):
        integrate_rk(OdeProblem(oscillator, [1.0, 0.0], (0.0, -1.0)), 1e-10)


def test_rk_post_step_projection():
    def project(t, y):
        return y / np.linalg.norm(y)

    _, Y = integrate_rk(OdeProblem(oscillator, [1.0, 0.0], (0.0, 20.0)), 1e-6, post_step=project)
    assert np.max(np.abs(np.linalg.norm(Y, axis=1) - 1)) < 1e-14


def test_rk_blowup_raises():
    with pytest.raises((StepUnderflow, NonFiniteState)):
        integrate_rk(OdeProblem(lambda t, y: y * y, [1.0], (0.0, 2.0)), 1e-10)


def test_verlet_requires_split():
    class NoSplit:
        split = None

    with pytest.raises(NotSeparable):
        integrate_verlet(NoSplit(), PhaseState([1.0], [0.0]), 1e-2, 10)


def test_verlet_symplectic_energy_bounded():
    split = SeparableSplit(np.eye(1), lambda q: 0.5 * q @ q, lambda q: q)
    tr = integrate_verlet(split, PhaseState([1.0], [0.0]), 0.05, 20000, record_every=10)
    E = tr.monitors["energy"]
    # second-order method: O(dt^2) bounded oscillation, no secular drift
    assert np.max(np.abs(E - 0.5)) < 1e-3
    assert tr.monitors["energy_maxdev"][-1] >= np.max(np.abs(E - 0.5))


def test_verlet_is_time_reversible():
    split = SeparableSplit(np.eye(2), lambda q: 0.25 * (q @ q) ** 2, lambda q: (q @ q) * q)
    fwd = integrate_verlet(split, PhaseState([1.0, 0.2], [0.1, 0.3]), 0.01, 500)
    end = fwd.final
    back = integrate_verlet(split, PhaseState(end.q, -end.p), 0.01, 500)
    np.testing.assert_allclose(back.final.q, [1.0, 0.2], atol=1e-12)
    np.testing.assert_allclose(-back.final.p, [0.1, 0.3], atol=1e-12)


def test_fd_gradient_and_jacobian():
    f = lambda x: np.sin(x[0]) * x[1] ** 2  # noqa: E731
    x = np.array([0.3, -1.2])
    g = numkit.fd_gradient(f, x)
    np.testing.assert_allclose(g, [np.cos(0.3) * 1.44, 2 * np.sin(0.3) * -1.2], rtol=1e-8)
    J = numkit.fd_jacobian(lambda x: np.array([x[0] * x[1], x[0] ** 2]), x)
    np.testing.assert_allclose(J, [[-1.2, 0.3], [0.6, 0.0]], atol=1e-8)


def test_newton_square_and_underdetermined():
    r = numkit.newton_solve(lambda x: np.array([x[0] ** 2 - 2.0]), [1.0])
    assert abs(r.x[0] - np.sqrt(2)) < 1e-12
    # one equation, two unknowns: min-norm correction lands on the circle
    r = numkit.newton_solve(lambda x: np.array([x @ x - 1.0]), [0.3, 0.4])
    assert abs(r.x @ r.x - 1) < 1e-12
    np.testing.assert_allclose(r.x / np.linalg.norm(r.x), [0.6, 0.8], atol=1e-12)


def test_newton_errors():
    with pytest.raises(SingularJacobian):
        numkit.newton_solve(lambda x: np.array([1.0 + 0 * x[0]]), [0.0])
    with pytest.raises(MaxIterations) as exc:
        numkit.newton_solve(lambda x: np.array([x[0] ** 2 + 1.0]), [0.5], max_iter=5)
    assert exc.value.x is not None


def test_minimize_path_straight_line():
    # Euclidean length squared sum: minimizer is the uniform straight line
    def action(z):
        d = np.diff(z, axis=0)
        return float(np.sum(d * d))

    def grad(z):
        g = np.zeros_like(z)
        d = np.diff(z, axis=0)
        g[:-1] -= 2 * d
        g[1:] += 2 * d
        return g

    rng = np.random.default_rng(0)
    z0 = np.linspace([0.0, 0.0], [1.0, 2.0], 11) + 0.1 * rng.standard_normal((11, 2))
    z0[0], z0[-1] = [0.0, 0.0], [1.0, 2.0]
    res = numkit.minimize_path(action, z0, grad_tol=1e-10, gradient=grad)
    np.testing.assert_allclose(res.nodes, np.linspace([0.0, 0.0], [1.0, 2.0], 11), atol=1e-9)
    np.testing.assert_array_equal(res.nodes[0], z0[0])
    np.testing.assert_array_equal(res.nodes[-1], z0[-1])


def test_spd_helpers():
    M = np.array([[4.0, 1.0], [1.0, 3.0]])
    S = numkit.spd_sqrt(M)
    np.testing.assert_allclose(S @ S, M, atol=1e-13)
    np.testing.assert_allclose(M @ numkit.solve_spd(M, [1.0, 2.0]), [1.0, 2.0], atol=1e-13)
    with pytest.raises(NotSPD):
        numkit.spd_sqrt(np.diag([1.0, -1.0]))
    with pytest.raises(NotSPD):
        numkit.solve_spd(np.diag([1.0, -1.0]), [1.0, 1.0])


def test_cumulative_simpson_polynomial():
    x = np.linspace(0, 2, 21)
    np.testing.assert_allclose(numkit.cumulative_simpson(x**2, x)[-1], 8 / 3, rtol=1e-12)


def test_trajectory_rejects_unsorted_times():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0, 0.5]), np.zeros((3, 2)))


@settings(max_examples=25, deadline=None)
@given(
    q=st.floats(-2, 2, allow_nan=False),
    p=st.floats(-2, 2, allow_nan=False),
    t=st.floats(0.1, 5.0),
)
def test_rk_oscillator_property(q, p, t):
    _, Y = integrate_rk(OdeProblem(oscillator, [q, p], (0.0, t)), 1e-11)
    exact = [q * np.cos(t) + p * np.sin(t), p * np.cos(t) - q * np.sin(t)]
    np.testing.assert_allclose(Y[-1], exact, atol=1e-8)
