"""Natural and Hamiltonian systems, the Legendre transform, and the three flows.

Conventions: phase points are ``x = (q, p)``, the symplectic form is
``omega = sum dp_i ^ dq_i`` and the Hamiltonian field of ``G`` is
``X_G = (dG/dp, -dG/dq)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import numkit
from .errors import (
    AntisymmetryViolation,
    ConstraintViolation,
    GradientMismatch,
    SingularGram,
)
from .numkit import DEFAULT_TOL, OdeProblem, SeparableSplit, fd_gradient, integrate_rk
from .trajectory import PhaseState, Trajectory, as_state

ArrayFn = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianSpec:
    """An autonomous Hamiltonian H(q, p) with optional analytic derivatives.

    ``magnetic`` is the antisymmetric matrix F_ij(q) of a gyroscopic 2-form
    in twisted coordinates. ``hess`` returns the (2n, 2n) Hessian in the
    ``(q, p)`` ordering. ``vectorized`` promises that ``func`` and the
    gradients broadcast over leading axes of q and p.
    """

    dim: int
    func: Callable[[np.ndarray, np.ndarray], float]
    grad_q: Optional[Callable] = None
    grad_p: Optional[Callable] = None
    magnetic: Optional[ArrayFn] = None
    hess: Optional[Callable] = None
    split: Optional[SeparableSplit] = None
    vectorized: bool = False
    name: str = ""

    def __call__(self, q, p) -> float:
        return self.func(np.asarray(q, dtype=float), np.asarray(p, dtype=float))

    def value(self, state) -> float:
        s = as_state(state)
        return self(s.q, s.p)

    def gradient(self, q, p):
        """Return ``(dH/dq, dH/dp)``; missing pieces fall back to finite differences."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        if self.grad_q is not None and self.grad_p is not None:
            return np.asarray(self.grad_q(q, p), dtype=float), np.asarray(self.grad_p(q, p), dtype=float)
        g = self.fd_gradient(q, p)
        n = self.dim
        gq = np.asarray(self.grad_q(q, p), dtype=float) if self.grad_q is not None else g[:n]
        gp = np.asarray(self.grad_p(q, p), dtype=float) if self.grad_p is not None else g[n:]
        return gq, gp

    def grad_x(self, x) -> np.ndarray:
        n = self.dim
        gq, gp = self.gradient(x[:n], x[n:])
        return np.concatenate([gq, gp])

    def fd_gradient(self, q, p, scale: float = numkit.FD_SCALE) -> np.ndarray:
        n = self.dim
        return fd_gradient(lambda x: self.func(x[:n], x[n:]), np.concatenate([q, p]), scale)

    def hessian(self, x) -> np.ndarray:
        if self.hess is not None:
            n = self.dim
            return np.asarray(self.hess(x[:n], x[n:]), dtype=float)
        return numkit.fd_jacobian(self.grad_x, x, 1e-5)

    def vector_field(self, x) -> np.ndarray:
        """Canonical X_H at ``x`` (no magnetic term)."""
        n = self.dim
        gq, gp = self.gradient(x[:n], x[n:])
        return np.concatenate([gp, -gq])

    def check_gradients(self, states, rtol: float = 1e-6) -> float:
        """Compare analytic gradients to central differences; raise on mismatch.

        Returns the worst relative discrepancy found.
        """
        worst = 0.0
        for s in states:
            s = as_state(s)
            an = np.concatenate(self.gradient(s.q, s.p))
            fd = self.fd_gradient(s.q, s.p)
            err = np.linalg.norm(an - fd) / max(1.0, np.linalg.norm(fd))
            worst = max(worst, err)
            if err > rtol:
                raise GradientMismatch(f"{self.name or 'H'}: gradient mismatch {err:.3e} at q={s.q}, p={s.p}")
        return worst


def hamiltonian_vector_field(G, x) -> np.ndarray:
    """X_G = (dG/dp, -dG/dq) for a HamiltonianSpec or constraint."""
    n = len(x) // 2
    gq, gp = G.gradient(x[:n], x[n:])
    return np.concatenate([gp, -gq])


# ---------------------------------------------------------------------------
# Natural systems L = 1/2 <K qdot, qdot> + <B, qdot> - V
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NaturalSystemSpec:
    """Metric K(q), potential V(q), gyroscopic 1-form B(q).

    ``metric=None`` means the Euclidean metric. ``metric_grad(q)`` returns an
    array whose ``[k]`` slice is dK/dq_k. ``gyro_jac(q)[i, j] = dB_i/dq_j``.
    ``sigma(q)`` supplies F_ij directly (also for non-exact fields); when
    absent it is derived from ``gyro``.
    """

    dim: int
    potential: Callable[[np.ndarray], float]
    potential_grad: Optional[ArrayFn] = None
    metric: Optional[ArrayFn] = None
    metric_grad: Optional[ArrayFn] = None
    gyro: Optional[ArrayFn] = None
    gyro_jac: Optional[ArrayFn] = None
    sigma: Optional[ArrayFn] = None
    name: str = ""

    def V(self, q) -> float:
        return float(self.potential(np.asarray(q, dtype=float)))

    def grad_V(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.potential_grad is not None:
            return np.asarray(self.potential_grad(q), dtype=float)
        return fd_gradient(self.V, q)

    def K(self, q) -> np.ndarray:
        if self.metric is None:
            return np.eye(self.dim)
        return np.atleast_2d(np.asarray(self.metric(np.asarray(q, dtype=float)), dtype=float))

    def dK(self, q) -> np.ndarray:
        n = self.dim
        if self.metric is None:
            return np.zeros((n, n, n))
        q = np.asarray(q, dtype=float)
        if self.metric_grad is not None:
            return np.asarray(self.metric_grad(q), dtype=float)
        J = numkit.fd_jacobian(lambda z: self.K(z).reshape(-1), q)
        return np.moveaxis(J.reshape(n, n, n), 2, 0)

    def B(self, q) -> np.ndarray:
        if self.gyro is None:
            return np.zeros(self.dim)
        return np.asarray(self.gyro(np.asarray(q, dtype=float)), dtype=float)

    def JB(self, q) -> np.ndarray:
        if self.gyro is None:
            return np.zeros((self.dim, self.dim))
        q = np.asarray(q, dtype=float)
        if self.gyro_jac is not None:
            return np.asarray(self.gyro_jac(q), dtype=float)
        return numkit.fd_jacobian(self.B, q)

    def F(self, q) -> np.ndarray:
        """Gyroscopic 2-form components F_ij = dB_j/dq_i - dB_i/dq_j."""
        if self.sigma is not None:
            return np.asarray(self.sigma(np.asarray(q, dtype=float)), dtype=float)
        J = self.JB(q)
        return J.T - J

    @property
    def has_field(self) -> bool:
        return self.gyro is not None or self.sigma is not None

    def check_sigma(self, points, tol: float = 1e-6) -> float:
        """Verify that a supplied sigma is antisymmetric and equals d(theta)."""
        worst = 0.0
        for q in points:
            F = self.F(q)
            worst = max(worst, float(np.max(np.abs(F + F.T))))
            if self.gyro is not None and self.sigma is not None:
                J = numkit.fd_jacobian(self.B, np.asarray(q, dtype=float))
                worst = max(worst, float(np.max(np.abs(F - (J.T - J)))))
        if worst > tol:
            raise AntisymmetryViolation(f"sigma check failed: {worst:.3e}")
        return worst


def lagrangian_value(sys: NaturalSystemSpec, q, qdot) -> float:
    q, qdot = _pair(sys, q, qdot)
    return 0.5 * qdot @ sys.K(q) @ qdot + sys.B(q) @ qdot - sys.V(q)


def legendre_momentum(sys: NaturalSystemSpec, q, qdot) -> np.ndarray:
    q, qdot = _pair(sys, q, qdot)
    return sys.K(q) @ qdot + sys.B(q)


def legendre_velocity(sys: NaturalSystemSpec, q, p) -> np.ndarray:
    q, p = _pair(sys, q, p)
    return numkit.solve_spd(sys.K(q), p - sys.B(q))


def energy_value(sys: NaturalSystemSpec, q, qdot) -> float:
    q, qdot = _pair(sys, q, qdot)
    return 0.5 * qdot @ sys.K(q) @ qdot + sys.V(q)


def _pair(sys, a, b):
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size != sys.dim or b.size != sys.dim:
        raise ValueError(f"expected vectors of dimension {sys.dim}")
    return a, b


def to_hamiltonian(sys: NaturalSystemSpec) -> HamiltonianSpec:
    """H(q, p) = 1/2 <K^-1 (p - B), p - B> + V(q) with analytic gradients."""

    def kin_momentum(q, p):
        return numkit.solve_spd(sys.K(q), p - sys.B(q))

    def func(q, p):
        v = kin_momentum(q, p)
        return 0.5 * (p - sys.B(q)) @ v + sys.V(q)

    def grad_p(q, p):
        return kin_momentum(q, p)

    def grad_q(q, p):
        v = kin_momentum(q, p)
        g = sys.grad_V(q) - sys.JB(q).T @ v
        if sys.metric is not None:
            g = g - 0.5 * np.einsum("i,kij,j->k", v, sys.dK(q), v)
        return g

    split = None
    if sys.metric is None and sys.gyro is None:
        split = SeparableSplit(np.eye(sys.dim), sys.V, sys.grad_V)
    return HamiltonianSpec(sys.dim, func, grad_q, grad_p, split=split, name=sys.name or "natural")


def magnetic_hamiltonian(sys: NaturalSystemSpec) -> HamiltonianSpec:
    """Twisted-coordinate Hamiltonian 1/2 <K^-1 p, p> + V with F_ij attached."""

    def func(q, p):
        return 0.5 * p @ numkit.solve_spd(sys.K(q), p) + sys.V(q)

    def grad_p(q, p):
        return numkit.solve_spd(sys.K(q), p)

    def grad_q(q, p):
        g = sys.grad_V(q)
        if sys.metric is not None:
            v = numkit.solve_spd(sys.K(q), p)
            g = g - 0.5 * np.einsum("i,kij,j->k", v, sys.dK(q), v)
        return g

    return HamiltonianSpec(sys.dim, func, grad_q, grad_p, magnetic=sys.F, name=(sys.name or "natural") + "-twisted")


def shift_transform(state, theta: Optional[ArrayFn]) -> PhaseState:
    """(q, p) -> (q, p - theta(q)); shifting by -theta inverts it."""
    s = as_state(state)
    if theta is None:
        return PhaseState(s.q.copy(), s.p.copy())
    return PhaseState(s.q.copy(), s.p - np.asarray(theta(s.q), dtype=float))


def shift_trajectory(traj: Trajectory, theta: ArrayFn) -> Trajectory:
    n = traj.dim
    out = traj.states.copy()
    for i in range(len(out)):
        out[i, n:] -= theta(out[i, :n])
    return Trajectory(traj.times.copy(), out, dict(traj.monitors))


# ---------------------------------------------------------------------------
# Flows
# ---------------------------------------------------------------------------


def _energy_series(H: HamiltonianSpec, states) -> np.ndarray:
    n = H.dim
    if H.vectorized:
        return np.asarray(H.func(states[:, :n], states[:, n:]), dtype=float)
    return np.array([H.func(x[:n], x[n:]) for x in states])


def canonical_flow(H: HamiltonianSpec, state0, t_span, tol: float = DEFAULT_TOL, t_eval=None) -> Trajectory:
    """Integrate dq/dt = dH/dp, dp/dt = -dH/dq."""
    if H.magnetic is not None:
        raise ValueError("canonical_flow called with a magnetic form attached; use magnetic_flow")
    x0 = as_state(state0).x
    n = H.dim

    def rhs(t, x):
        gq, gp = H.gradient(x[:n], x[n:])
        return np.concatenate([gp, -gq])

    times, states = integrate_rk(OdeProblem(rhs, x0, tuple(t_span)), tol, t_eval=t_eval)
    return Trajectory(times, states, {"energy": _energy_series(H, states)})


def magnetic_flow(H: HamiltonianSpec, state0, t_span, tol: float = DEFAULT_TOL, t_eval=None) -> Trajectory:
    """Integrate the twisted equations dp/dt = -dH/dq + F(q) dH/dp."""
    if H.magnetic is None:
        raise ValueError("magnetic_flow needs a HamiltonianSpec with a magnetic form")
    x0 = as_state(state0).x
    n = H.dim

    def rhs(t, x):
        q, p = x[:n], x[n:]
        F = np.asarray(H.magnetic(q), dtype=float)
        if np.max(np.abs(F + F.T), initial=0.0) > 1e-10:
            raise AntisymmetryViolation(f"F is not antisymmetric at q={q}")
        gq, gp = H.gradient(q, p)
        return np.concatenate([gp, -gq + F @ gp])

    times, states = integrate_rk(OdeProblem(rhs, x0, tuple(t_span)), tol, t_eval=t_eval)
    return Trajectory(times, states, {"energy": _energy_series(H, states)})


@dataclass(frozen=True)
class Constraint:
    """A phase-space function F(q, p) with analytic gradient ``(dF/dq, dF/dp)``."""

    func: Callable[[np.ndarray, np.ndarray], float]
    grad: Callable[[np.ndarray, np.ndarray], tuple]
    name: str = ""

    def __call__(self, q, p) -> float:
        return float(self.func(q, p))

    def gradient(self, q, p):
        gq, gp = self.grad(q, p)
        return np.asarray(gq, dtype=float), np.asarray(gp, dtype=float)

    def grad_x(self, x) -> np.ndarray:
        n = len(x) // 2
        return np.concatenate(self.gradient(x[:n], x[n:]))


@dataclass(frozen=True)
class ConstrainedSystemSpec:
    """Ambient Hamiltonian on R^2n restricted to {F1 = c1, F2 = c2}."""

    hamiltonian: HamiltonianSpec
    constraints: tuple
    levels: tuple = (1.0, 0.0)
    name: str = ""

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    def constraint_values(self, x) -> np.ndarray:
        n = self.dim
        return np.array([c(x[:n], x[n:]) for c in self.constraints])

    def residual(self, x) -> np.ndarray:
        return self.constraint_values(x) - np.asarray(self.levels, dtype=float)


def constrained_vector_field(sys: ConstrainedSystemSpec, x, H: Optional[HamiltonianSpec] = None):
    """Return ``(xdot, lambdas)`` for X_H - l1 X_F1 - l2 X_F2 tangent to P.

    ``H`` overrides the system Hamiltonian (used to restrict other functions
    to the same constraint manifold).
    """
    H = H or sys.hamiltonian
    x = np.asarray(x, dtype=float)
    XH = hamiltonian_vector_field(H, x)
    grads = [c.grad_x(x) for c in sys.constraints]
    XF = [hamiltonian_vector_field(c, x) for c in sys.constraints]
    M = np.array([[ga @ xb for xb in XF] for ga in grads])
    det = np.linalg.det(M)
    if not abs(det) > 1e-10:
        raise SingularGram(f"constraint system is singular (det={det:.3e})")
    rhs = np.array([ga @ XH for ga in grads])
    lam = np.linalg.solve(M, rhs)
    xdot = XH - sum(l * xf for l, xf in zip(lam, XF))
    return xdot, lam


def project_onto_constraints(sys: ConstrainedSystemSpec, x, tol: float = 1e-14) -> np.ndarray:
    """Minimum-norm Newton projection onto {F1 = c1, F2 = c2}."""
    jac = lambda z: np.array([c.grad_x(z) for c in sys.constraints])  # noqa: E731
    return numkit.newton_solve(sys.residual, x, tol=tol, jac=jac, max_iter=20).x


def constrained_flow(
    sys: ConstrainedSystemSpec,
    state0,
    t_span,
    tol: float = DEFAULT_TOL,
    t_eval=None,
    H: Optional[HamiltonianSpec] = None,
) -> Trajectory:
    """Integrate the multiplier-projected field, re-projecting after each step."""
    x0 = as_state(state0).x
    viol = np.max(np.abs(sys.residual(x0)))
    if viol > 1e-10:
        raise ConstraintViolation(f"initial state violates constraints by {viol:.3e}")
    H = H or sys.hamiltonian

    def rhs(t, x):
        return constrained_vector_field(sys, x, H)[0]

    def post(t, x):
        if np.max(np.abs(sys.residual(x))) <= 1e-14:
            return x
        return project_onto_constraints(sys, x)

    times, states = integrate_rk(OdeProblem(rhs, x0, tuple(t_span)), tol, t_eval=t_eval, post_step=post)
    vals = np.array([sys.constraint_values(x) for x in states])
    mon = {f"F{i + 1}": vals[:, i] for i in range(vals.shape[1])}
    mon["energy"] = _energy_series(H, states)
    return Trajectory(times, states, mon)


__all__ = [
    "PhaseState",
    "Trajectory",
    "HamiltonianSpec",
    "NaturalSystemSpec",
    "Constraint",
    "ConstrainedSystemSpec",
    "lagrangian_value",
    "legendre_momentum",
    "legendre_velocity",
    "energy_value",
    "to_hamiltonian",
    "magnetic_hamiltonian",
    "shift_transform",
    "shift_trajectory",
    "canonical_flow",
    "magnetic_flow",
    "constrained_flow",
    "constrained_vector_field",
    "project_onto_constraints",
    "hamiltonian_vector_field",
]
