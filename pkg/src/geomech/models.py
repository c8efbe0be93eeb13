"""Ready-made systems: coupled-free oscillators, Kepler with its regularization,
and the Neumann problem with its ellipsoid-geodesic correspondence."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numkit
from .contact import sin_angle
from .errors import BadCoefficients, DomainError, OffLevelSet, OriginState
from .mechanics import (
    Constraint,
    ConstrainedSystemSpec,
    HamiltonianSpec,
    NaturalSystemSpec,
    constrained_flow,
    constrained_vector_field,
)
from .numkit import DEFAULT_TOL, SeparableSplit
from .trajectory import PhaseState, Trajectory, as_state


def _dot(a, b):
    return np.sum(a * b, axis=-1)


# ---------------------------------------------------------------------------
# Harmonic oscillators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HarmonicSpec:
    """H = sum 1/2 (a_i q_i^2 + b_i p_i^2), grouped into equal-frequency blocks.

    ``blocks`` lists block sizes; coordinates inside a block must share the
    same (a, b). Without it every coordinate is its own block.
    """

    a: tuple
    b: tuple
    blocks: Optional[tuple] = None

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        if len(a) != len(b) or not a:
            raise BadCoefficients("a and b must be non-empty and of equal length")
        if any(ai * bi <= 0 for ai, bi in zip(a, b)):
            raise BadCoefficients("every product a_i * b_i must be positive")
        blocks = tuple(int(r) for r in self.blocks) if self.blocks is not None else (1,) * len(a)
        if sum(blocks) != len(a) or any(r < 1 for r in blocks):
            raise BadCoefficients("block sizes must be positive and sum to n")
        for lo, hi in self._ranges(blocks):
            if len(set(a[lo:hi])) > 1 or len(set(b[lo:hi])) > 1:
                raise BadCoefficients(f"coefficients differ inside block [{lo}, {hi})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "blocks", blocks)

    @staticmethod
    def _ranges(blocks):
        lo = 0
        for r in blocks:
            yield lo, lo + r
            lo += r

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def block_ranges(self) -> list:
        return list(self._ranges(self.blocks))

    @property
    def omega(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.a) * np.asarray(self.b))


def harmonic_system(spec: HarmonicSpec) -> HamiltonianSpec:
    a = np.asarray(spec.a)
    b = np.asarray(spec.b)
    n = spec.n

    def func(q, p):
        return 0.5 * np.sum(a * q * q + b * p * p, axis=-1)

    hess = np.diag(np.concatenate([a, b]))
    split = SeparableSplit(np.diag(b), lambda q: 0.5 * np.sum(a * q * q), lambda q: a * q)
    return HamiltonianSpec(
        n,
        func,
        lambda q, p: a * q,
        lambda q, p: b * p,
        hess=lambda q, p: hess,
        split=split,
        vectorized=True,
        name="harmonic",
    )


def harmonic_closed_form(spec: HarmonicSpec, state0, t) -> np.ndarray:
    """Exact (q, p) rows at times ``t`` from an initial state."""
    s0 = as_state(state0)
    a = np.asarray(spec.a)
    b = np.asarray(spec.b)
    w = spec.omega
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    c, s = np.cos(w * t), np.sin(w * t)
    q = s0.q * c + (b * s0.p / w) * s
    p = s0.p * c - (a * s0.q / w) * s
    return np.hstack([q, p])


def harmonic_amplitude_phase(spec: HarmonicSpec, state0):
    """Partial energies c_i and phases phi_i with q_i = sqrt(2c_i/a_i) cos(w_i t + phi_i)."""
    s0 = as_state(state0)
    a = np.asarray(spec.a)
    b = np.asarray(spec.b)
    c = 0.5 * (a * s0.q**2 + b * s0.p**2)
    phi = np.arctan2(-s0.p * np.sqrt(b), s0.q * np.sqrt(a)) % (2 * np.pi)
    return c, phi


def harmonic_integrals(spec: HarmonicSpec, q, p) -> dict:
    """Every in-block quadratic integral, plus the block energies H_k.

    Keys: ``F{k}_{i}{j}``, ``G{k}_{i}{j}`` (1-based, i < j) and ``H{k}``.
    Works on single states or stacks of states.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    a = np.asarray(spec.a)
    b = np.asarray(spec.b)
    out = {}
    for k, (lo, hi) in enumerate(spec.block_ranges, start=1):
        A, B = a[lo], b[lo]
        for i in range(lo, hi):
            for j in range(i + 1, hi):
                out[f"F{k}_{i + 1}{j + 1}"] = A * q[..., i] * q[..., j] + B * p[..., i] * p[..., j]
                out[f"G{k}_{i + 1}{j + 1}"] = q[..., j] * p[..., i] - p[..., j] * q[..., i]
        out[f"H{k}"] = 0.5 * np.sum(a[lo:hi] * q[..., lo:hi] ** 2 + b[lo:hi] * p[..., lo:hi] ** 2, axis=-1)
    return out


def cross_block_integrals(spec: HarmonicSpec, q, p) -> dict:
    """The same quadratic combinations for pairs split across blocks (not conserved)."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    a = np.asarray(spec.a)
    b = np.asarray(spec.b)
    block_of = np.concatenate([[k] * r for k, r in enumerate(spec.blocks)])
    out = {}
    for i in range(spec.n):
        for j in range(i + 1, spec.n):
            if block_of[i] != block_of[j]:
                out[f"F*_{i + 1}{j + 1}"] = a[i] * q[..., i] * q[..., j] + b[i] * p[..., i] * p[..., j]
                out[f"G*_{i + 1}{j + 1}"] = q[..., j] * p[..., i] - p[..., j] * q[..., i]
    return out


def harmonic_noether_integrals(spec: HarmonicSpec, traj: Trajectory, cross: bool = False) -> dict:
    """Max drift |I(t) - I(0)| of each integral along ``traj``."""
    fn = cross_block_integrals if cross else harmonic_integrals
    vals = fn(spec, traj.q, traj.p)
    return {k: float(np.max(np.abs(v - v[0]))) for k, v in vals.items()}


# ---------------------------------------------------------------------------
# Natural systems used by the correspondence checks
# ---------------------------------------------------------------------------


def quartic_system(n: int = 2, field: float = 0.0) -> NaturalSystemSpec:
    """V = |q|^2/2 + |q|^4/4, optionally with a uniform planar field (n = 2)."""

    def V(q):
        r2 = q @ q
        return 0.5 * r2 + 0.25 * r2 * r2

    def gV(q):
        return q + (q @ q) * q

    if field:
        return uniform_field_system(field, V, gV, name="quartic-field")
    return NaturalSystemSpec(n, V, gV, name="quartic")


def uniform_field_system(field: float, potential=None, potential_grad=None, name: str = "uniform-field") -> NaturalSystemSpec:
    """Planar particle in a constant field B, symmetric gauge theta = B/2 (-q2, q1)."""
    B = float(field)
    J = 0.5 * B * np.array([[0.0, -1.0], [1.0, 0.0]])
    if potential is None:
        potential = lambda q: 0.0  # noqa: E731
        potential_grad = lambda q: np.zeros(2)  # noqa: E731
    return NaturalSystemSpec(2, potential, potential_grad, gyro=lambda q: J @ q, gyro_jac=lambda q: J, name=name)


def larmor_deviation(sys: NaturalSystemSpec, traj: Trajectory) -> tuple:
    """Free motion in a uniform planar field is a circle of radius |v0|/|B|.

    With qddot = F qdot the centre is q0 - F^-1 v0; returns the analytic
    radius and the max deviation of |q(t) - c| from it. ``traj`` must be a
    twisted-coordinate trajectory (p is the mechanical momentum).
    """
    F = sys.F(traj.q[0])
    v0 = traj.p[0]
    c = traj.q[0] - np.linalg.solve(F, v0)
    radius = np.linalg.norm(v0) / abs(F[0, 1])
    dev = np.abs(np.linalg.norm(traj.q - c, axis=1) - radius)
    return float(radius), float(np.max(dev))


# ---------------------------------------------------------------------------
# Kepler and its regularization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KeplerSpec:
    n: int = 2
    gamma: float = 1.0
    h: float = -0.5

    def __post_init__(self):
        if not self.gamma > 0:
            raise BadCoefficients("gamma must be positive")


def kepler_system(spec: KeplerSpec) -> HamiltonianSpec:
    """H = |p|^2 / 2 - gamma / |q| on {q != 0}."""
    g = spec.gamma
    n = spec.n

    def radius(q):
        r = np.linalg.norm(q, axis=-1)
        if np.any(r == 0):
            raise OriginState("Kepler Hamiltonian evaluated at q = 0")
        return r

    def func(q, p):
        return 0.5 * _dot(p, p) - g / radius(q)

    def grad_q(q, p):
        r = radius(q)
        return g * q / (r**3)[..., None] if np.ndim(r) else g * q / r**3

    def hess(q, p):
        r = radius(q)
        Hqq = g * (np.eye(n) / r**3 - 3.0 * np.outer(q, q) / r**5)
        out = np.zeros((2 * n, 2 * n))
        out[:n, :n] = Hqq
        out[n:, n:] = np.eye(n)
        return out

    split = SeparableSplit(np.eye(n), lambda q: -g / radius(q), lambda q: grad_q(q, None))
    return HamiltonianSpec(n, func, grad_q, lambda q, p: np.array(p, dtype=float), hess=hess, split=split, vectorized=True, name="kepler")


def kepler_regularized(spec: KeplerSpec) -> HamiltonianSpec:
    """F = (|p|^2 - 2h)^2 |q|^2 / (8 gamma^2), smooth on all of R^2n."""
    g2 = spec.gamma**2
    h = spec.h
    n = spec.n

    def func(q, p):
        s = _dot(p, p) - 2 * h
        return s * s * _dot(q, q) / (8 * g2)

    def grad_q(q, p):
        s = _dot(p, p) - 2 * h
        return (s * s / (4 * g2))[..., None] * q if np.ndim(s) else s * s * q / (4 * g2)

    def grad_p(q, p):
        s = _dot(p, p) - 2 * h
        c = s * _dot(q, q) / (2 * g2)
        return c[..., None] * p if np.ndim(c) else c * p

    def hess(q, p):
        s = p @ p - 2 * h
        r2 = q @ q
        out = np.empty((2 * n, 2 * n))
        out[:n, :n] = s * s * np.eye(n) / (4 * g2)
        out[:n, n:] = s * np.outer(q, p) / g2
        out[n:, :n] = out[:n, n:].T
        out[n:, n:] = r2 * (2 * np.outer(p, p) + s * np.eye(n)) / (2 * g2)
        return out

    return HamiltonianSpec(n, func, grad_q, grad_p, hess=hess, vectorized=True, name="kepler-F")


def kepler_state(spec: KeplerSpec, r0: float) -> PhaseState:
    """Pericentre/apocentre state q = (r0, 0, ...), p perpendicular, on H = h."""
    v2 = 2 * (spec.h + spec.gamma / r0)
    if v2 < 0:
        raise DomainError(f"no state of energy {spec.h} at radius {r0}")
    q = np.zeros(spec.n)
    p = np.zeros(spec.n)
    q[0] = r0
    p[1] = np.sqrt(v2)
    return PhaseState(q, p)


def kepler_period(spec: KeplerSpec) -> float:
    if spec.h >= 0:
        raise DomainError("bounded orbits need h < 0")
    a = -spec.gamma / (2 * spec.h)
    return 2 * np.pi * np.sqrt(a**3 / spec.gamma)


def moser_metric_eval(spec: KeplerSpec, p, v) -> float:
    """ds_h^2(v, v) = |v|^2 / (2h - |p|^2)^2 at momentum p."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    den = 2 * spec.h - p @ p
    if den == 0:
        raise DomainError("|p|^2 = 2h: the momentum-sphere metric is singular")
    return float(v @ v) / den**2


def moser_speeds(spec: KeplerSpec, traj: Trajectory) -> np.ndarray:
    """ds_h-speed of the momentum curve along an X_F trajectory."""
    F = kepler_regularized(spec)
    out = np.empty(len(traj))
    for i, (q, p) in enumerate(zip(traj.q, traj.p)):
        pdot = -F.grad_q(q, p)
        out[i] = np.sqrt(moser_metric_eval(spec, p, pdot))
    return out


def polyline_distance(points, curve) -> np.ndarray:
    """Distance from each point to the polyline through ``curve`` rows."""
    P = np.asarray(points, dtype=float)
    A = np.asarray(curve[:-1], dtype=float)
    S = np.asarray(curve[1:], dtype=float) - A
    L2 = np.maximum(np.sum(S * S, axis=1), 1e-300)
    out = np.empty(len(P))
    for i, x in enumerate(P):
        t = np.clip(np.sum((x - A) * S, axis=1) / L2, 0.0, 1.0)
        out[i] = np.sqrt(np.min(np.sum((A + t[:, None] * S - x) ** 2, axis=1)))
    return out


def trace_distance(curve_a, curve_b) -> float:
    """Symmetric Hausdorff distance between two sampled polylines."""
    return float(max(polyline_distance(curve_a, curve_b).max(), polyline_distance(curve_b, curve_a).max()))


# ---------------------------------------------------------------------------
# Neumann problem and ellipsoid geodesics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NeumannSpec:
    a: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        if not a or any(v <= 0 for v in a):
            raise BadCoefficients("A must be diagonal positive definite")
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def A(self) -> np.ndarray:
        return np.diag(self.a)

    @property
    def A_inv(self) -> np.ndarray:
        return np.diag(1.0 / np.asarray(self.a))

    @property
    def sqrt_A(self) -> np.ndarray:
        return numkit.spd_sqrt(self.A)


def sphere_constraints() -> tuple:
    """<q, q> = 1 and <q, p> = 0 realizing T*S^{n-1} inside R^2n."""
    f1 = Constraint(lambda q, p: q @ q, lambda q, p: (2 * q, np.zeros_like(p)), "F1")
    f2 = Constraint(lambda q, p: q @ p, lambda q, p: (p.copy(), q.copy()), "F2")
    return f1, f2


def neumann_constrained(spec: NeumannSpec) -> ConstrainedSystemSpec:
    """H_N = 1/2 <p, p> + 1/2 <A q, q> on the sphere."""
    a = np.asarray(spec.a)
    H = HamiltonianSpec(
        spec.n,
        lambda q, p: 0.5 * (p @ p) + 0.5 * (a * q) @ q,
        lambda q, p: a * q,
        lambda q, p: np.array(p, dtype=float),
        name="neumann",
    )
    return ConstrainedSystemSpec(H, sphere_constraints(), (1.0, 0.0), "neumann")


def _uws(ai, q, p):
    return (ai * q) @ q, (ai * p) @ p, (ai * q) @ p


def neumann_knorrer(spec: NeumannSpec) -> ConstrainedSystemSpec:
    """H = 1/2 (<A^-1 q,q><A^-1 p,p> - <A^-1 q,p>^2 - <A^-1 q,q>) on the sphere."""
    ai = 1.0 / np.asarray(spec.a)

    def func(q, p):
        u, w, s = _uws(ai, q, p)
        return 0.5 * (u * w - s * s - u)

    def grad_q(q, p):
        u, w, s = _uws(ai, q, p)
        return w * ai * q - s * ai * p - ai * q

    def grad_p(q, p):
        u, w, s = _uws(ai, q, p)
        return u * ai * p - s * ai * q

    H = HamiltonianSpec(spec.n, func, grad_q, grad_p, name="neumann-knorrer")
    return ConstrainedSystemSpec(H, sphere_constraints(), (1.0, 0.0), "neumann-knorrer")


def neumann_jacobi_H(spec: NeumannSpec) -> ConstrainedSystemSpec:
    """H_J = (<A^-1 q,q><A^-1 p,p> - <A^-1 q,p>^2) / (4 <A^-1 q,q>) on the sphere.

    Equal to 1/4 on the zero level of :func:`neumann_knorrer`.
    """
    ai = 1.0 / np.asarray(spec.a)

    def func(q, p):
        u, w, s = _uws(ai, q, p)
        return (u * w - s * s) / (4 * u)

    def grad_q(q, p):
        u, w, s = _uws(ai, q, p)
        N = u * w - s * s
        dN = 2 * w * ai * q - 2 * s * ai * p
        return dN / (4 * u) - N * 2 * ai * q / (4 * u * u)

    def grad_p(q, p):
        u, w, s = _uws(ai, q, p)
        return (2 * u * ai * p - 2 * s * ai * q) / (4 * u)

    H = HamiltonianSpec(spec.n, func, grad_q, grad_p, name="neumann-jacobi")
    return ConstrainedSystemSpec(H, sphere_constraints(), (1.0, 0.0), "neumann-jacobi")


def sphere_state(q, p) -> PhaseState:
    """Normalize q onto the sphere and make p tangent."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    p = np.asarray(p, dtype=float)
    return PhaseState(q, p - (p @ q) * q)


def knorrer_zero_level_state(spec: NeumannSpec, q, p) -> PhaseState:
    """Rescale the tangent momentum so the state lies on P and on {H = 0}."""
    s0 = sphere_state(q, p)
    ai = 1.0 / np.asarray(spec.a)
    u, w, s = _uws(ai, s0.q, s0.p)
    N = u * w - s * s
    if N <= 0:
        raise DomainError("momentum must be nonzero")
    return PhaseState(s0.q, s0.p * np.sqrt(u / N))


def ellipsoid_geodesic_system(spec: NeumannSpec) -> ConstrainedSystemSpec:
    """Free particle 1/2 |P|^2 on {<A^-1 x, x> = 1} (with <A^-1 x, P> = 0)."""
    ai = 1.0 / np.asarray(spec.a)
    H = HamiltonianSpec(
        spec.n,
        lambda x, P: 0.5 * (P @ P),
        lambda x, P: np.zeros_like(x),
        lambda x, P: np.array(P, dtype=float),
        name="ellipsoid-free",
    )
    g1 = Constraint(lambda x, P: (ai * x) @ x, lambda x, P: (2 * ai * x, np.zeros_like(P)), "G1")
    g2 = Constraint(lambda x, P: (ai * x) @ P, lambda x, P: (ai * P, ai * x), "G2")
    return ConstrainedSystemSpec(H, (g1, g2), (1.0, 0.0), "ellipsoid")


def great_circle_deviation(traj: Trajectory) -> float:
    """Max distance of q(t) from cos(|p0| t) q0 + sin(|p0| t) p0/|p0|."""
    q0, p0 = traj.q[0], traj.p[0]
    w = np.linalg.norm(p0)
    t = traj.times[:, None] - traj.times[0]
    exact = np.cos(w * t) * q0 + np.sin(w * t) * p0 / w
    return float(np.max(np.linalg.norm(traj.q - exact, axis=1)))


def neumann_reeb_check(spec: NeumannSpec, state0, t_span, tol: float = DEFAULT_TOL, n_eval: int = 201) -> dict:
    """Integrate the constrained H_J flow from a zero-level state and compare
    its direction with the constrained X_H of :func:`neumann_knorrer`."""
    sysH = neumann_knorrer(spec)
    sysJ = neumann_jacobi_H(spec)
    t_eval = np.linspace(t_span[0], t_span[1], n_eval)
    traj = constrained_flow(sysJ, state0, t_span, tol, t_eval=t_eval)
    angle = 0.0
    level = 0.0
    hj = 0.0
    for x in traj.states:
        vj = constrained_vector_field(sysJ, x)[0]
        vh = constrained_vector_field(sysH, x)[0]
        angle = max(angle, sin_angle(vj, vh))
        level = max(level, abs(float(sysH.hamiltonian(x[:spec.n], x[spec.n:]))))
        hj = max(hj, abs(float(sysJ.hamiltonian(x[:spec.n], x[spec.n:])) - 0.25))
    return {"sin_angle": angle, "level_drift": level, "hj_offset": hj, "trajectory": traj}


@dataclass
class EllipsoidReport:
    level_error: float
    constraint_drift: float
    ellipsoid_error: float
    speed_variation: float
    geodesic_residual: float
    oracle_deviation: float
    gauss_map_error: float
    tau: np.ndarray
    x: np.ndarray

    def to_dict(self):
        return {
            "level_error": self.level_error,
            "constraint_drift": self.constraint_drift,
            "ellipsoid_error": self.ellipsoid_error,
            "speed_variation": self.speed_variation,
            "geodesic_residual": self.geodesic_residual,
            "oracle_deviation": self.oracle_deviation,
            "gauss_map_error": self.gauss_map_error,
        }


def ellipsoid_correspondence(
    spec: NeumannSpec,
    traj: Trajectory,
    tol: float = DEFAULT_TOL,
    fd_step: float = 1e-5,
    level_tol: float = 1e-8,
) -> EllipsoidReport:
    """Check that x = sqrt(A) q, in the time tau = int 2<A^-1 q, q> dt, is an
    ellipsoid geodesic.

    ``traj`` must be a constrained flow of :func:`neumann_knorrer` on its zero
    level. The geodesic residual is the tangential part of d^2x/dtau^2,
    obtained by a central difference of the velocity field along the flow.
    The oracle integrates the free particle on the ellipsoid from the same
    initial point and velocity and compares positions at equal tau.
    """
    sys = neumann_knorrer(spec)
    H = sys.hamiltonian
    n = spec.n
    ai = 1.0 / np.asarray(spec.a)
    sA = np.sqrt(np.asarray(spec.a))
    levels = np.array([H(x[:n], x[n:]) for x in traj.states])
    level_err = float(np.max(np.abs(levels)))
    if level_err > level_tol:
        raise OffLevelSet(f"trajectory leaves the zero level (|H| = {level_err:.3e})")
    drift = float(np.max(np.abs(np.array([sys.residual(x) for x in traj.states]))))

    u = np.array([(ai * q) @ q for q in traj.q])
    tau = numkit.cumulative_simpson(2.0 * u, traj.times)
    x = traj.q * sA
    ell_err = float(np.max(np.abs(np.sum(ai * x * x, axis=1) - 1.0)))

    def xprime(y):
        ydot = constrained_vector_field(sys, y)[0]
        qq = y[:n]
        return sA * ydot[:n] / (2.0 * (ai * qq) @ qq), ydot

    speeds = np.empty(len(traj))
    resid = 0.0
    for i, y in enumerate(traj.states):
        v, ydot = xprime(y)
        speeds[i] = v @ v
        fp, _ = xprime(y + fd_step * ydot)
        fm, _ = xprime(y - fd_step * ydot)
        acc = (fp - fm) / (2 * fd_step) / (2.0 * u[i])
        nu = ai * x[i]
        nu /= np.linalg.norm(nu)
        resid = max(resid, float(np.linalg.norm(acc - (acc @ nu) * nu)))
    speed_var = float((speeds.max() - speeds.min()) / speeds.mean())

    v0, _ = xprime(traj.states[0])
    geo = constrained_flow(ellipsoid_geodesic_system(spec), PhaseState(x[0], v0), (0.0, tau[-1]), tol, t_eval=tau)
    oracle_dev = float(np.max(np.linalg.norm(geo.q - x, axis=1)))

    # inverse Gauss map: y = A^-1 q / sqrt(<A^-1 q, q>) lies on <y, A y> = 1 with normal q
    gauss = 0.0
    for q, uu in zip(traj.q, u):
        y = ai * q / np.sqrt(uu)
        Ay = np.asarray(spec.a) * y
        gauss = max(gauss, float(np.linalg.norm(Ay / np.linalg.norm(Ay) - q)), abs(float(y @ Ay) - 1.0))
    return EllipsoidReport(level_err, drift, ell_err, speed_var, resid, oracle_dev, gauss, tau, x)


__all__ = [
    "HarmonicSpec",
    "KeplerSpec",
    "NeumannSpec",
    "EllipsoidReport",
    "harmonic_system",
    "harmonic_closed_form",
    "harmonic_amplitude_phase",
    "harmonic_integrals",
    "cross_block_integrals",
    "harmonic_noether_integrals",
    "quartic_system",
    "uniform_field_system",
    "larmor_deviation",
    "kepler_system",
    "kepler_regularized",
    "kepler_state",
    "kepler_period",
    "moser_metric_eval",
    "moser_speeds",
    "polyline_distance",
    "trace_distance",
    "sphere_constraints",
    "neumann_constrained",
    "neumann_knorrer",
    "neumann_jacobi_H",
    "sphere_state",
    "knorrer_zero_level_state",
    "ellipsoid_geodesic_system",
    "neumann_reeb_check",
    "ellipsoid_correspondence",
    "great_circle_deviation",
]
