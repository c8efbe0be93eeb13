"""Jacobi metric geodesics, time reparametrization and discrete actions.

The Jacobi metric of a natural system at energy h is G(q) = 2(h - V(q)) K(q)
on the Hill region {V < h}. Geodesics are integrated as the canonical flow
of H_geo = 1/2 <G^-1 p, p> on the level H_geo = 1/2, so the flow parameter
is Jacobi arc length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import numkit
from .errors import EnergyMismatch, HillBoundary, MaxIterations
from .mechanics import (
    HamiltonianSpec,
    NaturalSystemSpec,
    canonical_flow,
    energy_value,
    to_hamiltonian,
)
from .numkit import DEFAULT_TOL
from .trajectory import PhaseState, Trajectory

EPS_HILL = 1e-8


@dataclass(frozen=True)
class JacobiMetric:
    base: NaturalSystemSpec
    h: float
    eps_hill: float = EPS_HILL

    @property
    def dim(self) -> int:
        return self.base.dim

    def in_hill_region(self, q) -> bool:
        return self.base.V(q) < self.h

    def conformal_factor(self, q) -> float:
        """2(h - V(q)); raises HillBoundary within eps_hill of V = h."""
        gap = self.h - self.base.V(q)
        if not gap > self.eps_hill:
            raise HillBoundary(f"V(q) = {self.h - gap:.6g} is not below h - eps = {self.h - self.eps_hill:.6g}")
        return 2.0 * gap

    def G(self, q) -> np.ndarray:
        return self.conformal_factor(q) * self.base.K(q)

    def speed2(self, q, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.G(q) @ v)

    def geodesic_hamiltonian(self) -> HamiltonianSpec:
        sys = self.base
        has_metric = sys.metric is not None

        def velocity(q, p):
            return numkit.solve_spd(sys.K(q), p) / self.conformal_factor(q)

        def func(q, p):
            return 0.5 * p @ velocity(q, p)

        def grad_q(q, p):
            v = velocity(q, p)
            c = self.conformal_factor(q)
            g = sys.grad_V(q) * (v @ sys.K(q) @ v)
            if has_metric:
                g = g - 0.5 * c * np.einsum("i,kij,j->k", v, sys.dK(q), v)
            return g

        return HamiltonianSpec(sys.dim, func, grad_q, velocity, name="jacobi-geodesic")


def jacobi_metric(sys: NaturalSystemSpec, h: float, eps_hill: float = EPS_HILL) -> JacobiMetric:
    return JacobiMetric(sys, float(h), eps_hill)


def jacobi_geodesic_flow(
    jm: JacobiMetric, q0, qdot0, tau_span, tol: float = DEFAULT_TOL, tau_eval=None
) -> Trajectory:
    """Unit-speed Jacobi geodesic from ``q0`` in direction ``qdot0``.

    The returned trajectory is parametrized by Jacobi arc length and carries
    geodesic momenta p = G(q) dq/dtau. Monitor ``Hgeo`` should stay at 1/2.
    """
    q0 = np.asarray(q0, dtype=float)
    v = np.asarray(qdot0, dtype=float)
    v = v / np.sqrt(jm.speed2(q0, v))
    p0 = jm.G(q0) @ v
    Hg = jm.geodesic_hamiltonian()
    traj = canonical_flow(Hg, PhaseState(q0, p0), tau_span, tol, t_eval=tau_eval)
    traj.monitors["Hgeo"] = traj.monitors.pop("energy")
    return traj


def reparametrize_to_mechanical(jm: JacobiMetric, geo: Trajectory) -> Trajectory:
    """Map a Jacobi geodesic (in tau) to mechanical time with dt = dtau / 2(h - V).

    Mechanical momenta p = K dq/dt + B are rebuilt from the geodesic
    velocities. Monitors: ``energy`` (should equal h) and ``tau``.
    """
    sys = jm.base
    n = jm.dim
    qs = geo.q
    factors = np.array([jm.conformal_factor(q) for q in qs])
    t = numkit.cumulative_simpson(1.0 / factors, geo.times)
    states = np.empty_like(geo.states)
    energy = np.empty(len(qs))
    for i, (q, pg, c) in enumerate(zip(qs, geo.p, factors)):
        v_tau = numkit.solve_spd(sys.K(q), pg) / c
        v_t = c * v_tau
        states[i, :n] = q
        states[i, n:] = sys.K(q) @ v_t + sys.B(q)
        energy[i] = energy_value(sys, q, v_t)
    return Trajectory(t, states, {"energy": energy, "tau": geo.times.copy()})


@dataclass
class CorrespondenceReport:
    q_deviation: float
    energy_error: float
    unit_speed_error: float
    hill_margin: float
    t_final: float
    mechanical: Trajectory
    reparametrized: Trajectory


def maupertuis_correspondence(
    sys: NaturalSystemSpec,
    h: float,
    q0,
    direction,
    t_final: float,
    tol: float = DEFAULT_TOL,
    dtau: float = 2e-3,
) -> CorrespondenceReport:
    """Compare a reparametrized Jacobi geodesic with the Newtonian trajectory.

    Both curves start at ``q0`` along ``direction``; the geodesic is extended
    until its mechanical time reaches ``t_final``. Requires no gyroscopic term.
    """
    jm = jacobi_metric(sys, h)
    q0 = np.asarray(q0, dtype=float)
    tau_end = t_final * jm.conformal_factor(q0)
    for _ in range(30):
        m = max(int(np.ceil(tau_end / dtau)), 8)
        grid = np.linspace(0.0, tau_end, m + 1)
        geo = jacobi_geodesic_flow(jm, q0, direction, (0.0, tau_end), tol, tau_eval=grid)
        rep = reparametrize_to_mechanical(jm, geo)
        if rep.times[-1] >= t_final:
            break
        tau_end *= 1.1 * t_final / rep.times[-1]
    else:
        raise MaxIterations("could not extend the geodesic to t_final")
    keep = rep.times <= t_final
    rep = Trajectory(rep.times[keep], rep.states[keep], {k: v[keep] for k, v in rep.monitors.items()})
    H = to_hamiltonian(sys)
    mech = canonical_flow(H, rep.state(0), (0.0, rep.times[-1]), tol, t_eval=rep.times)
    dq = np.max(np.linalg.norm(mech.q - rep.q, axis=1))
    speed = np.array([jm.speed2(q, v) for q, v in zip(geo.q, (_geo_velocities(jm, geo)))])
    return CorrespondenceReport(
        q_deviation=float(dq),
        energy_error=float(np.max(np.abs(rep.monitors["energy"] - h))),
        unit_speed_error=float(np.max(np.abs(speed - 1.0))),
        hill_margin=float(np.min(h - np.array([sys.V(q) for q in geo.q]))),
        t_final=float(rep.times[-1]),
        mechanical=mech,
        reparametrized=rep,
    )


def _geo_velocities(jm: JacobiMetric, geo: Trajectory) -> np.ndarray:
    Hg = jm.geodesic_hamiltonian()
    return np.array([Hg.grad_p(q, p) for q, p in zip(geo.q, geo.p)])


# ---------------------------------------------------------------------------
# Discrete reduced action
# ---------------------------------------------------------------------------


@dataclass
class DiscretePath:
    """Configuration nodes q_0..q_N; the two endpoints are held fixed."""

    nodes: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if self.nodes.ndim == 1:
            self.nodes = self.nodes[:, None]
        if len(self.nodes) < 2:
            raise ValueError("a path needs at least two nodes")

    @property
    def N(self) -> int:
        return len(self.nodes) - 1


@dataclass
class ActionValue:
    value: float
    gradient: np.ndarray
    grad_norm: float
    grad_lambda: float = 0.0


def reduced_action(jm: JacobiMetric, path) -> ActionValue:
    """Sum of midpoint-rule Jacobi lengths plus the gyroscopic 1-form.

    ``gradient`` has the shape of the node array with zero rows at the fixed
    endpoints; ``grad_norm`` is the max-norm over interior nodes.
    """
    nodes = np.asarray(getattr(path, "nodes", path), dtype=float)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    sys = jm.base
    has_gyro = sys.gyro is not None
    has_metric = sys.metric is not None
    grad = np.zeros_like(nodes)
    total = 0.0
    for k in range(len(nodes) - 1):
        a, b = nodes[k], nodes[k + 1]
        m = 0.5 * (a + b)
        d = b - a
        c = jm.conformal_factor(m)
        K = sys.K(m)
        Kd = K @ d
        quad = d @ Kd
        ell = np.sqrt(c * quad)
        total += ell
        if ell > 0:
            dphi_dd = 2.0 * c * Kd
            dphi_dm = -2.0 * sys.grad_V(m) * quad
            if has_metric:
                dphi_dm = dphi_dm + c * np.einsum("i,kij,j->k", d, sys.dK(m), d)
            g_d = dphi_dd / (2.0 * ell)
            g_m = dphi_dm / (2.0 * ell)
            grad[k] += 0.5 * g_m - g_d
            grad[k + 1] += 0.5 * g_m + g_d
        if has_gyro:
            Bm = sys.B(m)
            total += Bm @ d
            g_m = sys.JB(m).T @ d
            grad[k] += 0.5 * g_m - Bm
            grad[k + 1] += 0.5 * g_m + Bm
    grad[0] = 0.0
    grad[-1] = 0.0
    gnorm = float(np.max(np.abs(grad[1:-1]))) if len(nodes) > 2 else 0.0
    return ActionValue(float(total), grad, gnorm)


def resample_trajectory(H: HamiltonianSpec, traj: Trajectory, n_segments: int) -> np.ndarray:
    """Configuration nodes at ``n_segments + 1`` uniform times (cubic Hermite in t)."""
    n = traj.dim
    vel = np.array([H.gradient(x[:n], x[n:])[1] for x in traj.states])
    spline = CubicHermiteSpline(traj.times, traj.q, vel, axis=0)
    ts = np.linspace(traj.times[0], traj.times[-1], n_segments + 1)
    nodes = spline(ts)
    nodes[0] = traj.q[0]
    nodes[-1] = traj.q[-1]
    return nodes


@dataclass
class StationarityReport:
    """``grad_norms`` are raw max-norms of the interior gradient (O(ds^3));
    ``residuals`` divide them by the mean Jacobi chord length ds, giving the
    discrete Euler-Lagrange residual, which is O(ds^2)."""

    N: list
    grad_norms: list
    residuals: list
    order: float
    raw_order: float
    perturbed_residual: Optional[float] = None
    energy_error: float = 0.0

    def to_dict(self):
        def num(x):
            return None if x is None or not np.isfinite(x) else float(x)

        return {
            "N": list(self.N),
            "grad_norms": [float(g) for g in self.grad_norms],
            "residuals": [float(g) for g in self.residuals],
            "order": num(self.order),
            "raw_order": num(self.raw_order),
            "perturbed_residual": num(self.perturbed_residual),
            "energy_error": self.energy_error,
        }


def mean_chord(jm: JacobiMetric, nodes) -> float:
    """Mean midpoint-rule Jacobi length of the segments of a node array."""
    nodes = np.asarray(nodes, dtype=float)
    lens = [np.sqrt(jm.speed2(0.5 * (a + b), b - a)) for a, b in zip(nodes[:-1], nodes[1:])]
    return float(np.mean(lens))


def fit_order(N: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares slope of -log(value) against log(N)."""
    N = np.asarray(N, dtype=float)
    v = np.asarray(values, dtype=float)
    if np.any(v <= 1e-300):
        return float("nan")
    slope = np.polyfit(np.log(N), np.log(v), 1)[0]
    return float(-slope)


def stationarity_check(
    jm: JacobiMetric,
    traj: Trajectory,
    Ns: Sequence[int] = (50, 100, 200, 400),
    perturb: Optional[float] = 1e-2,
    seed: int = 0,
    energy_tol: float = 1e-7,
) -> StationarityReport:
    """Discrete stationarity of the reduced action along a true trajectory.

    ``traj`` must be a solution of the natural system in canonical
    coordinates at energy ``jm.h``. For the contrast case, interior nodes of
    the N=200 (or largest) path are shifted by ``perturb`` in random
    directions and the gradient is re-measured.
    """
    H = to_hamiltonian(jm.base)
    n = traj.dim
    E = np.array([H(x[:n], x[n:]) for x in traj.states])
    err = float(np.max(np.abs(E - jm.h)))
    if err > energy_tol:
        raise EnergyMismatch(f"trajectory energy deviates from h by {err:.3e}")
    norms, resid = [], []
    for N in Ns:
        nodes = resample_trajectory(H, traj, N)
        g = reduced_action(jm, nodes).grad_norm
        norms.append(g)
        resid.append(g / mean_chord(jm, nodes))
    pert = None
    if perturb:
        N_ref = 200 if 200 in Ns else max(Ns)
        nodes = resample_trajectory(H, traj, N_ref)
        rng = np.random.default_rng(seed)
        nodes[1:-1] += perturb * rng.uniform(-1.0, 1.0, size=nodes[1:-1].shape)
        pert = reduced_action(jm, nodes).grad_norm / mean_chord(jm, nodes)
    return StationarityReport(list(Ns), norms, resid, fit_order(Ns, resid), fit_order(Ns, norms), pert, err)


# ---------------------------------------------------------------------------
# Periodic orbits from the fixed-energy loop functional
# ---------------------------------------------------------------------------


@dataclass
class LoopPath:
    """Phase points at N uniform samples of t in [0, 1), cyclic; ``lam`` is the period."""

    nodes: np.ndarray
    lam: float

    def __post_init__(self):
        self.nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        self.lam = float(self.lam)

    @property
    def N(self) -> int:
        return len(self.nodes)


def spectral_derivative_matrix(N: int) -> np.ndarray:
    """Fourier differentiation matrix on N uniform points of the unit circle.

    Antisymmetric; exact for trigonometric polynomials below the Nyquist mode.
    """
    j = np.arange(N)
    diff = j[:, None] - j[None, :]
    D = np.zeros((N, N))
    off = diff != 0
    sign = np.where(diff % 2 == 0, 1.0, -1.0)
    arg = np.pi * diff[off] / N
    if N % 2 == 0:
        D[off] = np.pi * sign[off] / np.tan(arg)
    else:
        D[off] = np.pi * sign[off] / np.sin(arg)
    return D


def rabinowitz_action(H: HamiltonianSpec, alpha, loop: LoopPath, h: float, D: Optional[np.ndarray] = None) -> ActionValue:
    """Discrete A(gamma, lam) = int alpha(gamma') dt - lam int (H(gamma) - h) dt.

    Loop velocities use the Fourier derivative; both integrals use the
    trapezoid rule on the cyclic grid. ``gradient`` has the node shape and
    ``grad_lambda`` is the derivative in the period.
    """
    X = loop.nodes
    N, m = X.shape
    n = m // 2
    if D is None:
        D = spectral_derivative_matrix(N)
    dX = D @ X
    C = np.array([alpha.coefficients(x) for x in X])
    Hv = np.array([H(x[:n], x[n:]) for x in X])
    value = (np.sum(C * dX) - loop.lam * np.sum(Hv - h)) / N
    grad = np.empty_like(X)
    for k in range(N):
        grad[k] = alpha.jacobian(X[k]).T @ dX[k] - loop.lam * H.grad_x(X[k])
    grad += D.T @ C
    grad /= N
    glam = -float(np.sum(Hv - h)) / N
    gnorm = max(float(np.max(np.abs(grad))), abs(glam))
    return ActionValue(float(value), grad, gnorm, glam)


@dataclass
class PeriodicOrbitResult:
    loop: LoopPath
    lam: float
    iterations: int
    grad_norm: float
    dynamics_residual: float
    energy_error: float


def loop_dynamics_residual(H: HamiltonianSpec, loop: LoopPath, fine: int = 4096) -> float:
    """max |x'(t) - X_H(x(t))| for x(t) = gamma(t / lam) on a fine grid.

    The loop is refined by trigonometric interpolation; time derivatives use
    fourth-order central differences on the refined cyclic grid.
    """
    X = loop.nodes
    N = len(X)
    spec = np.fft.rfft(X, axis=0)
    if N % 2 == 0:
        # the coarse Nyquist mode is not doubled by irfft on the coarse grid
        spec[-1] *= 0.5
    pad = np.zeros((fine // 2 + 1 - spec.shape[0], X.shape[1]), dtype=complex)
    Xf = np.fft.irfft(np.concatenate([spec, pad]), n=fine, axis=0) * (fine / N)
    dt = loop.lam / fine
    dXf = (-np.roll(Xf, -2, 0) + 8 * np.roll(Xf, -1, 0) - 8 * np.roll(Xf, 1, 0) + np.roll(Xf, 2, 0)) / (12 * dt)
    res = max(float(np.max(np.abs(dXf[i] - H.vector_field(Xf[i])))) for i in range(fine))
    return res


def find_periodic_orbit(
    H: HamiltonianSpec,
    alpha,
    h: float,
    seed: LoopPath,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> PeriodicOrbitResult:
    """Newton search for a critical point of the loop functional.

    Unknowns are all loop nodes plus the period. The Jacobian (finite
    differences of the analytic gradient) is rank deficient along the
    phase-shift symmetry; steps use the truncated pseudo-inverse.
    """
    N, m = seed.nodes.shape
    D = spectral_derivative_matrix(N)

    def unpack(z):
        return LoopPath(z[:-1].reshape(N, m), z[-1])

    def G(z):
        av = rabinowitz_action(H, alpha, unpack(z), h, D)
        return np.concatenate([av.gradient.reshape(-1), [av.grad_lambda]])

    z0 = np.concatenate([seed.nodes.reshape(-1), [seed.lam]])
    res = numkit.newton_solve(G, z0, tol=tol, max_iter=max_iter, rcond=1e-9)
    loop = unpack(res.x)
    n = m // 2
    Hv = np.array([H(x[:n], x[n:]) for x in loop.nodes])
    return PeriodicOrbitResult(
        loop=loop,
        lam=loop.lam,
        iterations=res.iterations,
        grad_norm=res.residual,
        dynamics_residual=loop_dynamics_residual(H, loop),
        energy_error=float(np.max(np.abs(Hv - h))),
    )


__all__ = [
    "JacobiMetric",
    "jacobi_metric",
    "jacobi_geodesic_flow",
    "reparametrize_to_mechanical",
    "maupertuis_correspondence",
    "CorrespondenceReport",
    "DiscretePath",
    "ActionValue",
    "reduced_action",
    "resample_trajectory",
    "stationarity_check",
    "StationarityReport",
    "fit_order",
    "mean_chord",
    "LoopPath",
    "spectral_derivative_matrix",
    "rabinowitz_action",
    "find_periodic_orbit",
    "PeriodicOrbitResult",
    "loop_dynamics_residual",
]
