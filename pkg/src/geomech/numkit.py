"""Numerical backbone: ODE integrators, finite differences, Newton, path descent.

Everything here is a pure function of its inputs. Dimensions are small
(n <= 16), so dense numpy linear algebra is used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as _spi

from .errors import (
    LineSearchFailure,
    MaxIterations,
    NonFiniteState,
    NonFiniteValue,
    NotSeparable,
    NotSPD,
    SingularJacobian,
    StepUnderflow,
)
from .trajectory import PhaseState, Trajectory, as_state

DEFAULT_TOL = 1e-10
NEWTON_TOL = 1e-12
FD_SCALE = 1e-6


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)
# ---------------------------------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


@dataclass(frozen=True)
class OdeProblem:
    rhs: Callable[[float, np.ndarray], np.ndarray]
    initial_state: np.ndarray
    t_span: tuple

    @property
    def dimension(self) -> int:
        return np.asarray(self.initial_state).size


def _eval_rhs(rhs, t, y):
    f = np.asarray(rhs(t, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise NonFiniteState(f"rhs returned non-finite values at t={t!r}")
    return f


def integrate_rk(
    problem: OdeProblem,
    tol: float = DEFAULT_TOL,
    dt_init: Optional[float] = None,
    t_eval: Optional[Sequence[float]] = None,
    post_step: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
    max_steps: int = 2_000_000,
):
    """Adaptive Dormand-Prince 5(4) integration.

    Returns ``(times, states)``. Without ``t_eval`` every accepted step is
    returned; with it, steps are clipped to land exactly on the requested
    times. Both endpoints of ``t_span`` are always included. ``post_step``
    may replace the state after each accepted step (used for projections).
    The local error estimate is held below ``tol * max(1, |y_i|)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t0, t1 = (float(v) for v in problem.t_span)
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    y = np.array(problem.initial_state, dtype=float).reshape(-1)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("initial state is not finite")
    rhs = problem.rhs
    span = t1 - t0
    h_min = 1e-14 * span

    if t_eval is None:
        marks = np.array([t1])
        record_all = True
    else:
        te = np.asarray(t_eval, dtype=float)
        if np.any(te < t0) or np.any(te > t1):
            raise ValueError("t_eval must lie inside t_span")
        marks = np.unique(np.concatenate([te, [t1]]))
        marks = marks[marks > t0]
        record_all = False

    times = [t0]
    states = [y.copy()]
    f = _eval_rhs(rhs, t0, y)
    if dt_init is None:
        scale = np.maximum(1.0, np.abs(y))
        d0 = np.max(np.abs(y) / scale)
        d1 = np.max(np.abs(f) / scale)
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        h = min(h, 0.1 * span, tol ** 0.2)
    else:
        h = float(dt_init)
    h = max(h, 10 * h_min)

    t = t0
    mark_i = 0
    steps = 0
    while mark_i < len(marks):
        target = marks[mark_i]
        clipped = h >= target - t
        h_try = target - t if clipped else h
        k = np.empty((7, y.size))
        k[0] = f
        for s in range(1, 7):
            ys = y + h_try * (np.asarray(_A[s]) @ k[:s])
            k[s] = _eval_rhs(rhs, t + _C[s] * h_try, ys)
        y_new = y + h_try * (_B5 @ k)
        err_vec = h_try * (_E @ k)
        err = np.max(np.abs(err_vec) / (tol * np.maximum(1.0, np.maximum(np.abs(y), np.abs(y_new)))))
        if not np.isfinite(err):
            raise NonFiniteState(f"non-finite error estimate at t={t!r}")
        factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        if err <= 1.0:
            t = target if clipped else t + h_try
            y = y_new
            if post_step is not None:
                y = np.asarray(post_step(t, y), dtype=float)
                f = _eval_rhs(rhs, t, y)
            else:
                f = k[6]
            if clipped:
                mark_i += 1
                times.append(t)
                states.append(y.copy())
                h = max(h, h_try * factor)
            else:
                if record_all:
                    times.append(t)
                    states.append(y.copy())
                h = h_try * factor
        else:
            h = h_try * factor
        if h < h_min:
            raise StepUnderflow(f"step size {h:.3e} below {h_min:.3e} at t={t!r}")
        steps += 1
        if steps > max_steps:
            raise StepUnderflow(f"exceeded {max_steps} steps at t={t!r}")
    return np.array(times), np.array(states)


# ---------------------------------------------------------------------------
# Stormer-Verlet
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeparableSplit:
    """H(q, p) = 1/2 <p, M^-1 p> + V(q)."""

    inv_mass: np.ndarray
    potential: Callable[[np.ndarray], float]
    potential_grad: Callable[[np.ndarray], np.ndarray]

    def energy(self, q, p) -> float:
        return 0.5 * p @ (self.inv_mass @ p) + self.potential(q)


def integrate_verlet(system, state0, dt: float, n_steps: int, record_every: int = 1) -> Trajectory:
    """Leapfrog (kick-drift-kick) integration of a separable Hamiltonian.

    ``system`` is a :class:`SeparableSplit` or any object carrying one in a
    ``split`` attribute with no magnetic form attached. The ``energy``
    monitor is evaluated at every recorded sample; ``energy_maxdev`` holds
    the running max of |E - E0| over every step, recorded or not.
    """
    split = system if isinstance(system, SeparableSplit) else getattr(system, "split", None)
    if split is None or getattr(system, "magnetic", None) is not None or hasattr(system, "constraints"):
        raise NotSeparable("Verlet needs a separable Hamiltonian without magnetic or constraint terms")
    if dt <= 0:
        raise ValueError("dt must be positive")
    s0 = as_state(state0)
    minv = np.atleast_2d(np.asarray(split.inv_mass, dtype=float))
    grad_v = split.potential_grad
    pot = split.potential
    q = s0.q.copy()
    p = s0.p.copy()
    n_rec = n_steps // record_every + 1
    times = np.empty(n_rec)
    states = np.empty((n_rec, 2 * q.size))
    energy = np.empty(n_rec)
    maxdev = np.zeros(n_rec)
    times[0] = 0.0
    states[0] = np.concatenate([q, p])
    e0 = energy[0] = 0.5 * p @ (minv @ p) + pot(q)
    worst = 0.0
    half = 0.5 * dt
    g = np.asarray(grad_v(q), dtype=float)
    j = 1
    for i in range(1, n_steps + 1):
        p = p - half * g
        q = q + dt * (minv @ p)
        g = np.asarray(grad_v(q), dtype=float)
        p = p - half * g
        e = 0.5 * p @ (minv @ p) + pot(q)
        worst = max(worst, abs(e - e0))
        if i % record_every == 0:
            times[j] = i * dt
            states[j, : q.size] = q
            states[j, q.size :] = p
            energy[j] = e
            maxdev[j] = worst
            j += 1
    if not np.all(np.isfinite(states[:j])):
        raise NonFiniteState("Verlet produced non-finite states")
    return Trajectory(times[:j], states[:j], {"energy": energy[:j], "energy_maxdev": maxdev[:j]})


# ---------------------------------------------------------------------------
# Finite differences and Newton
# ---------------------------------------------------------------------------


def fd_gradient(f: Callable[[np.ndarray], float], x, scale: float = FD_SCALE) -> np.ndarray:
    """Central-difference gradient with step ``scale * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    g = np.empty_like(x)
    for i in range(x.size):
        h = scale * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp, fm = f(xp), f(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NonFiniteValue(f"non-finite evaluation near x[{i}]")
        g[i] = (fp - fm) / (xp[i] - xm[i])
    return g


def fd_jacobian(F: Callable[[np.ndarray], np.ndarray], x, scale: float = FD_SCALE) -> np.ndarray:
    """Central-difference Jacobian, rows = equations."""
    x = np.asarray(x, dtype=float).reshape(-1)
    cols = []
    for i in range(x.size):
        h = scale * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = np.atleast_1d(np.asarray(F(xp), dtype=float))
        fm = np.atleast_1d(np.asarray(F(xm), dtype=float))
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NonFiniteValue(f"non-finite evaluation near x[{i}]")
        cols.append((fp - fm) / (xp[i] - xm[i]))
    return np.column_stack(cols)


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int


def newton_solve(
    F: Callable[[np.ndarray], np.ndarray],
    x0,
    tol: float = NEWTON_TOL,
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    max_iter: int = 50,
    rcond: float = 1e-12,
) -> NewtonResult:
    """Newton iteration with a truncated pseudo-inverse step.

    Handles square and underdetermined (m <= n) systems; for the latter the
    step is the minimum-norm correction. Rank-deficient Jacobians are
    tolerated; only a numerically zero Jacobian raises SingularJacobian.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    for it in range(max_iter + 1):
        r = np.atleast_1d(np.asarray(F(x), dtype=float))
        if not np.all(np.isfinite(r)):
            raise NonFiniteValue("residual is not finite")
        res = float(np.max(np.abs(r))) if r.size else 0.0
        if res <= tol:
            return NewtonResult(x, res, it)
        if it == max_iter:
            break
        J = np.atleast_2d(jac(x) if jac is not None else fd_jacobian(F, x))
        u, s, vt = np.linalg.svd(J, full_matrices=False)
        if s.size == 0 or not np.isfinite(s[0]) or s[0] <= 1e-14:
            raise SingularJacobian(f"Jacobian is numerically zero at iteration {it}")
        keep = s > rcond * s[0]
        step = vt[keep].T @ ((u[:, keep].T @ r) / s[keep])
        x = x - step
    raise MaxIterations(f"Newton did not reach tol={tol:g} in {max_iter} iterations (|F|={res:.3e})", x)


# ---------------------------------------------------------------------------
# Path-space descent
# ---------------------------------------------------------------------------


@dataclass
class MinimizeResult:
    nodes: np.ndarray
    value: float
    grad_norm: float
    iterations: int


def minimize_path(
    action: Callable[[np.ndarray], float],
    path0,
    grad_tol: float = 1e-8,
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    max_iter: int = 20000,
    sd_iters: int = 10,
) -> MinimizeResult:
    """Minimize a discrete path functional with fixed endpoint nodes.

    Armijo steepest descent for the first ``sd_iters`` iterations, then
    Polak-Ribiere+ conjugate gradients. Near the optimum, where function
    differences drown in roundoff, the approximate-Wolfe test on the
    directional derivative is accepted instead of Armijo.
    """
    nodes0 = np.asarray(getattr(path0, "nodes", path0), dtype=float)
    if nodes0.ndim == 1:
        nodes0 = nodes0[:, None]
    shape = nodes0.shape
    head = nodes0[0].copy()
    tail = nodes0[-1].copy()

    def assemble(z):
        out = np.empty(shape)
        out[0] = head
        out[-1] = tail
        out[1:-1] = z.reshape(shape[0] - 2, shape[1])
        return out

    def f(z):
        return float(action(assemble(z)))

    def g(z):
        if gradient is not None:
            full = np.asarray(gradient(assemble(z)), dtype=float).reshape(shape)
            return full[1:-1].reshape(-1)
        return fd_gradient(f, z)

    z = nodes0[1:-1].reshape(-1).copy()
    fz = f(z)
    gz = g(z)
    gnorm = float(np.max(np.abs(gz))) if gz.size else 0.0
    if gnorm <= grad_tol:
        return MinimizeResult(nodes0.copy(), fz, gnorm, 0)

    c1 = 1e-4
    d = -gz
    step = 1.0 / max(1.0, float(np.linalg.norm(gz)))
    eps = np.finfo(float).eps
    for it in range(1, max_iter + 1):
        slope = float(gz @ d)
        if slope >= 0:
            d = -gz
            slope = float(gz @ d)
        a = min(2.0 * step, 1e6)
        while True:
            zn = z + a * d
            fn = f(zn)
            if np.isfinite(fn):
                if fn <= fz + c1 * a * slope:
                    gn = g(zn)
                    break
                if fn <= fz + 100 * eps * abs(fz):
                    gn = g(zn)
                    dd = float(gn @ d)
                    if 0.9 * slope <= dd <= -0.8 * slope:
                        break
            a *= 0.5
            if a < 1e-16:
                raise LineSearchFailure(f"no decrease found (|g|={gnorm:.3e}, iteration {it})")
        step = a
        if it <= sd_iters:
            beta = 0.0
        else:
            beta = max(0.0, float(gn @ (gn - gz)) / float(gz @ gz))
        z, fz, d = zn, fn, -gn + beta * d
        gz = gn
        gnorm = float(np.max(np.abs(gz)))
        if gnorm <= grad_tol:
            return MinimizeResult(assemble(z), fz, gnorm, it)
    raise MaxIterations(f"path descent stalled at |g|={gnorm:.3e}", assemble(z))


# ---------------------------------------------------------------------------
# Small dense linear algebra and quadrature
# ---------------------------------------------------------------------------


def spd_sqrt(M) -> np.ndarray:
    """Symmetric square root of an SPD matrix via its eigendecomposition."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1] or not np.allclose(M, M.T, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise NotSPD("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if np.any(w <= 0):
        raise NotSPD(f"smallest eigenvalue {w.min():.3e} is not positive")
    S = (V * np.sqrt(w)) @ V.T
    return 0.5 * (S + S.T)


def solve_spd(M, b) -> np.ndarray:
    """Solve M x = b for SPD M by Cholesky."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NotSPD(str(exc)) from exc
    y = np.linalg.solve(L, b)
    return np.linalg.solve(L.T, y)


def cumulative_simpson(y, x) -> np.ndarray:
    """Running integral of samples ``y`` over ``x`` (Simpson, starts at 0)."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        return _spi.cumulative_trapezoid(y, x, initial=0.0)
    return _spi.cumulative_simpson(y, x=x, initial=0.0)


__all__ = [
    "OdeProblem",
    "SeparableSplit",
    "PhaseState",
    "integrate_rk",
    "integrate_verlet",
    "fd_gradient",
    "fd_jacobian",
    "newton_solve",
    "NewtonResult",
    "minimize_path",
    "MinimizeResult",
    "spd_sqrt",
    "solve_spd",
    "cumulative_simpson",
]
