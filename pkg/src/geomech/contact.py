"""Primitives of the canonical form, Liouville fields and contact-type tests.

A primitive alpha = <a, dq> + <b, dp> of omega = sum dp_i ^ dq_i has the
Liouville field E = (-b, a) (solving i_E omega = alpha), and for any H the
identity alpha(X_H) = omega(E, X_H) = dH(E) holds pointwise. A level set
M = {H = h} is of contact type for alpha when E(H) has no zeros on M; the
Reeb field is then X_H / E(H) restricted to M.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numkit
from .errors import EmptyLevelSet, MaxIterations, NonFiniteValue, NotContactType, PrimitiveMismatch, SingularJacobian
from .mechanics import HamiltonianSpec, canonical_flow
from .numkit import DEFAULT_TOL
from .trajectory import PhaseState, as_state

DELTA_CONTACT = 1e-6


def symplectic_matrix(n: int) -> np.ndarray:
    """Omega with omega(u, v) = u^T Omega v in (q, p) ordering."""
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


@dataclass(frozen=True)
class OneFormSpec:
    """alpha = <a(q,p), dq> + <b(q,p), dp>.

    ``jac(x)`` is the Jacobian of the stacked coefficients (a, b) with
    respect to x = (q, p); it falls back to finite differences.
    """

    dim: int
    a: Callable
    b: Callable
    tag: str = "custom"
    jac: Optional[Callable] = None

    def coefficients(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.dim
        return np.concatenate([self.a(x[:n], x[n:]), self.b(x[:n], x[n:])])

    def __call__(self, x, v) -> float:
        return float(self.coefficients(x) @ np.asarray(v, dtype=float))

    def jacobian(self, x) -> np.ndarray:
        if self.jac is not None:
            return np.asarray(self.jac(np.asarray(x, dtype=float)), dtype=float)
        return numkit.fd_jacobian(self.coefficients, x)

    def exterior_derivative(self, x) -> np.ndarray:
        """Matrix W with d(alpha)(u, v) = u^T W v, by central differences."""
        J = numkit.fd_jacobian(self.coefficients, x)
        return J.T - J


def _const_jac(M):
    return lambda x: M


def canonical_form(n: int) -> OneFormSpec:
    """p dq."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    return OneFormSpec(n, lambda q, p: p.copy(), lambda q, p: np.zeros(n), "p_dq", _const_jac(J))


def position_form(n: int) -> OneFormSpec:
    """-q dp, whose Liouville field is the radial field in q."""
    J = np.zeros((2 * n, 2 * n))
    J[n:, :n] = -np.eye(n)
    return OneFormSpec(n, lambda q, p: np.zeros(n), lambda q, p: -q, "-q_dp", _const_jac(J))


def symmetric_form(n: int) -> OneFormSpec:
    """1/2 (p dq - q dp) = p dq - 1/2 d<p, q>."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = 0.5 * np.eye(n)
    J[n:, :n] = -0.5 * np.eye(n)
    return OneFormSpec(n, lambda q, p: 0.5 * p, lambda q, p: -0.5 * q, "sym", _const_jac(J))


def exact_corrected_form(n: int, grad_S: Callable, hess_S: Optional[Callable] = None) -> OneFormSpec:
    """p dq + dS for a function S(q, p) given by its gradient (and Hessian)."""
    base = np.zeros((2 * n, 2 * n))
    base[:n, n:] = np.eye(n)

    def a(q, p):
        return p + np.asarray(grad_S(q, p))[:n]

    def b(q, p):
        return np.asarray(grad_S(q, p))[n:]

    jac = None
    if hess_S is not None:
        jac = lambda x: base + np.asarray(hess_S(x[:n], x[n:]))  # noqa: E731
    return OneFormSpec(n, a, b, "p_dq+dS", jac)


FORM_FACTORIES = {"p_dq": canonical_form, "-q_dp": position_form, "sym": symmetric_form}


def verify_primitive(alpha: OneFormSpec, n_points: int = 50, seed: int = 0, box: float = 2.0, tol: float = 1e-6) -> float:
    """Check d(alpha) = omega at random points by finite differences."""
    rng = np.random.default_rng(seed)
    Om = symplectic_matrix(alpha.dim)
    worst = 0.0
    for _ in range(n_points):
        x = rng.uniform(-box, box, 2 * alpha.dim)
        worst = max(worst, float(np.max(np.abs(alpha.exterior_derivative(x) - Om))))
    if worst > tol:
        raise PrimitiveMismatch(f"d(alpha) differs from omega by {worst:.3e}")
    return worst


@dataclass(frozen=True)
class LiouvilleField:
    """E = (E_q, E_p) with i_E omega = alpha."""

    alpha: OneFormSpec

    @property
    def dim(self) -> int:
        return self.alpha.dim

    def __call__(self, x) -> np.ndarray:
        c = self.alpha.coefficients(x)
        n = self.dim
        return np.concatenate([-c[n:], c[:n]])

    def E_q(self, q, p):
        return -np.asarray(self.alpha.b(q, p), dtype=float)

    def E_p(self, q, p):
        return np.asarray(self.alpha.a(q, p), dtype=float)

    def jacobian(self, x) -> np.ndarray:
        J = self.alpha.jacobian(x)
        n = self.dim
        return np.vstack([-J[n:], J[:n]])


def liouville_field(alpha: OneFormSpec, verify: bool = True, seed: int = 0) -> LiouvilleField:
    if verify:
        verify_primitive(alpha, seed=seed)
    E = LiouvilleField(alpha)
    if verify:
        rng = np.random.default_rng(seed + 1)
        Om = symplectic_matrix(alpha.dim)
        for _ in range(5):
            x = rng.uniform(-2, 2, 2 * alpha.dim)
            if np.max(np.abs(Om.T @ E(x) - alpha.coefficients(x))) > 1e-12:
                raise PrimitiveMismatch("i_E omega != alpha")
    return E


def directional_EH(E: LiouvilleField, H: HamiltonianSpec) -> Callable:
    """Scalar field x -> E(H)(x) = <E(x), grad H(x)>."""

    def EH(x):
        x = np.asarray(x, dtype=float)
        return float(E(x) @ H.grad_x(x))

    return EH


def directional_EH_grad(E: LiouvilleField, H: HamiltonianSpec, x) -> np.ndarray:
    """Gradient of E(H): J_E^T grad H + Hess(H) E."""
    x = np.asarray(x, dtype=float)
    return E.jacobian(x).T @ H.grad_x(x) + H.hessian(x) @ E(x)


def pomoc_discrepancy(alpha: OneFormSpec, H: HamiltonianSpec, x) -> float:
    """max spread among alpha(X_H), omega(E, X_H) and dH(E) at x."""
    x = np.asarray(x, dtype=float)
    XH = H.vector_field(x)
    E = LiouvilleField(alpha)(x)
    a1 = alpha(x, XH)
    a2 = float(E @ symplectic_matrix(alpha.dim) @ XH)
    a3 = float(H.grad_x(x) @ E)
    return max(abs(a1 - a2), abs(a1 - a3), abs(a2 - a3))


# ---------------------------------------------------------------------------
# Level-set sampling
# ---------------------------------------------------------------------------


def _box_array(box, dim2):
    box = np.asarray(box, dtype=float)
    if box.ndim == 0:
        return np.column_stack([-np.full(dim2, float(box)), np.full(dim2, float(box))])
    if box.shape != (dim2, 2):
        raise ValueError(f"box must be a scalar or a ({dim2}, 2) array")
    return box


def sample_level_set(
    H: HamiltonianSpec,
    h: float,
    n_samples: int,
    seed: int = 0,
    box=2.0,
    region: Optional[Callable[[np.ndarray], bool]] = None,
    max_attempts: int = 1_000_000,
    residual_tol: float = 1e-12,
) -> list:
    """Rejection-sample the box and Newton-correct candidates onto H = h.

    Points with |grad H| < 1e-8, that fail to converge, or that land outside
    the box/region are discarded. Deterministic for a fixed seed.
    """
    n = H.dim
    bx = _box_array(box, 2 * n)
    rng = np.random.default_rng(seed)
    found = []
    attempts = 0
    batch = 4096 if H.vectorized else 1
    while attempts < max_attempts and len(found) < n_samples:
        m = min(batch, max_attempts - attempts)
        attempts += m
        X = rng.uniform(bx[:, 0], bx[:, 1], size=(m, 2 * n))
        if H.vectorized:
            ok, X = _correct_batch(H, h, X, residual_tol)
        else:
            ok = np.zeros(m, dtype=bool)
            for i in range(m):
                ok[i], X[i] = _correct_one(H, h, X[i], residual_tol)
        for i in np.flatnonzero(ok):
            x = X[i]
            if np.any(x < bx[:, 0]) or np.any(x > bx[:, 1]):
                continue
            if region is not None and not region(x):
                continue
            found.append(PhaseState.from_x(x))
            if len(found) == n_samples:
                break
    if len(found) < n_samples:
        raise EmptyLevelSet(f"found {len(found)} of {n_samples} points on H = {h} in {attempts} attempts")
    return found


def _correct_one(H, h, x, tol, max_iter=40):
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            try:
                r = H.func(x[: H.dim], x[H.dim :]) - h
                g = H.grad_x(x)
            except Exception:
                return False, x
            g2 = g @ g
            if not np.isfinite(r) or not np.isfinite(g2) or g2 < 1e-16:
                return False, x
            if abs(r) <= tol:
                # one polishing step; keep it only if it does not hurt
                y = x - r * g / g2
                try:
                    ry = H.func(y[: H.dim], y[H.dim :]) - h
                except Exception:
                    return True, x
                return True, (y if np.isfinite(ry) and abs(ry) <= abs(r) else x)
            x = x - r * g / g2
    return False, x


def _correct_batch(H, h, X, tol, max_iter=40):
    n = H.dim
    ok = np.zeros(len(X), dtype=bool)
    live = np.ones(len(X), dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter + 1):
            q, p = X[:, :n], X[:, n:]
            r = np.asarray(H.func(q, p), dtype=float) - h
            g = np.concatenate([H.grad_q(q, p), H.grad_p(q, p)], axis=1)
            g2 = np.sum(g * g, axis=1)
            bad = ~np.isfinite(r) | ~np.isfinite(g2) | (g2 < 1e-16)
            live &= ~bad
            done = live & (np.abs(r) <= tol)
            ok |= done
            live &= ~done
            if done.any():
                Y = X[done] - (r[done] / g2[done])[:, None] * g[done]
                ry = np.asarray(H.func(Y[:, :n], Y[:, n:]), dtype=float) - h
                better = np.isfinite(ry) & (np.abs(ry) <= np.abs(r[done]))
                idx = np.flatnonzero(done)[better]
                X[idx] = Y[better]
            if not live.any():
                break
            X[live] -= (r[live] / g2[live])[:, None] * g[live]
    return ok, X


# ---------------------------------------------------------------------------
# Contact-type verdicts and Reeb dynamics
# ---------------------------------------------------------------------------


@dataclass
class ContactReduction:
    H: HamiltonianSpec
    h: float
    alpha: OneFormSpec
    E: LiouvilleField
    verdict: str
    EH_samples: np.ndarray
    witnesses: list = field(default_factory=list)
    delta: float = DELTA_CONTACT

    @property
    def is_contact(self) -> bool:
        return self.verdict == "ContactType"

    @property
    def min_abs_EH(self) -> float:
        return float(np.min(np.abs(self.EH_samples))) if len(self.EH_samples) else float("nan")

    def EH(self, x) -> float:
        return float(self.E(x) @ self.H.grad_x(np.asarray(x, dtype=float)))

    def H0(self, x) -> float:
        x = np.asarray(x, dtype=float)
        n = self.H.dim
        return (self.H(x[:n], x[n:]) - self.h) / self.EH(x)

    def HJ(self, x) -> float:
        x = np.asarray(x, dtype=float)
        n = self.H.dim
        eh = self.EH(x)
        return eh / (4 * self.h - 4 * self.H(x[:n], x[n:]) + 2 * eh)


def _refine_witness(H, E, h, x0, delta):
    """Look for a zero of E(H) on M near x0 (min-norm Newton on {H = h, E(H) = 0})."""
    n = H.dim

    def F(x):
        return np.array([H(x[:n], x[n:]) - h, float(E(x) @ H.grad_x(x))])

    try:
        res = numkit.newton_solve(F, x0, tol=min(delta, 1e-9) * 1e-3, max_iter=60)
    except (MaxIterations, SingularJacobian, NonFiniteValue, FloatingPointError, ZeroDivisionError, ValueError):
        return None
    x = res.x
    if abs(F(x)[0]) <= 1e-10 and abs(F(x)[1]) <= delta:
        return PhaseState.from_x(x)
    return None


def contact_type_check(
    H: HamiltonianSpec,
    h: float,
    alpha: OneFormSpec,
    samples,
    delta: float = DELTA_CONTACT,
    refine: int = 5,
) -> ContactReduction:
    """Sample-based contact-type verdict for M = {H = h} with respect to alpha.

    E(H) = alpha(X_H) is evaluated on every sample; the verdict is
    ContactType iff all |E(H)| > delta with a single sign. The ``refine``
    samples with the smallest |E(H)| seed a local search for zeros of E(H)
    on M, so isolated zero sets missed by sampling are still reported.
    """
    E = liouville_field(alpha)
    X = np.array([as_state(s).x for s in samples])
    EH = np.array([float(E(x) @ H.grad_x(x)) for x in X])
    witnesses = [PhaseState.from_x(x) for x, v in zip(X, EH) if abs(v) <= delta]
    mixed = bool(np.any(EH > delta) and np.any(EH < -delta))
    if mixed:
        for i in (int(np.argmin(EH)), int(np.argmax(EH))):
            witnesses.append(PhaseState.from_x(X[i]))
    if refine:
        with np.errstate(all="ignore"):
            for i in np.argsort(np.abs(EH))[:refine]:
                w = _refine_witness(H, E, h, X[i], delta)
                if w is not None:
                    witnesses.append(w)
    verdict = "Fails" if (witnesses or mixed) else "ContactType"
    return ContactReduction(H, float(h), alpha, E, verdict, EH, witnesses, delta)


def reeb_hamiltonians(red: ContactReduction):
    """Return HamiltonianSpecs for H0 = (H - h)/E(H) and H_J = E(H)/(4h - 4H + 2E(H))."""
    if not red.is_contact:
        raise NotContactType("level set is not of contact type for this primitive")
    H, h, E = red.H, red.h, red.E
    n = H.dim

    def parts(x):
        Hv = H(x[:n], x[n:])
        gH = H.grad_x(x)
        eh = float(E(x) @ gH)
        geh = directional_EH_grad(E, H, x)
        return Hv, gH, eh, geh

    def h0(q, p):
        return red.H0(np.concatenate([q, p]))

    def h0_grad(q, p):
        Hv, gH, eh, geh = parts(np.concatenate([q, p]))
        return gH / eh - (Hv - h) * geh / eh**2

    def hj(q, p):
        return red.HJ(np.concatenate([q, p]))

    def hj_grad(q, p):
        Hv, gH, eh, geh = parts(np.concatenate([q, p]))
        den = 4 * h - 4 * Hv + 2 * eh
        return (4 * (h - Hv) * geh + 4 * eh * gH) / den**2

    H0 = HamiltonianSpec(n, h0, lambda q, p: h0_grad(q, p)[:n], lambda q, p: h0_grad(q, p)[n:], name="H0")
    HJ = HamiltonianSpec(n, hj, lambda q, p: hj_grad(q, p)[:n], lambda q, p: hj_grad(q, p)[n:], name="HJ")
    return H0, HJ


def sin_angle(u, v) -> float:
    """Sine of the angle between two nonzero vectors, computed stably."""
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    uh = u / nu
    vh = v / nv
    return float(np.linalg.norm(uh - (uh @ vh) * vh))


@dataclass
class ReebReport:
    alpha_deviation: float
    angle: float
    level_drift: float
    dalpha_residual: float
    speed_ratio: np.ndarray
    rho_freedom: float
    n_samples: int

    def to_dict(self):
        return {
            "alpha_deviation": float(self.alpha_deviation),
            "angle": float(self.angle),
            "level_drift": float(self.level_drift),
            "dalpha_residual": float(self.dalpha_residual),
            "speed_ratio_min": float(np.min(self.speed_ratio)),
            "speed_ratio_max": float(np.max(self.speed_ratio)),
            "rho_freedom": float(self.rho_freedom),
        }


def reeb_flow_verify(
    red: ContactReduction,
    state0,
    t_span,
    tol: float = DEFAULT_TOL,
    n_tangent: int = 3,
    seed: int = 0,
    dalpha_every: int = 25,
) -> ReebReport:
    """Integrate X_{H_J} from a point of M and measure the Reeb properties.

    Reports max |alpha(xdot) - 1|, the max sine of the angle between xdot
    and X_H, the drift of H off h, the FD value of d(alpha)(xdot, v) for
    random tangent vectors v, the ratio |xdot| / |X_H| at each sample, and
    the agreement of the X_{H0} and X_{H_J} fields along the flow.
    """
    if not red.is_contact:
        raise NotContactType("level set is not of contact type for this primitive")
    s0 = as_state(state0)
    n = red.H.dim
    if abs(red.H(s0.q, s0.p) - red.h) > 1e-10:
        raise ValueError("state0 is not on the level set")
    H0, HJ = reeb_hamiltonians(red)
    traj = canonical_flow(HJ, s0, t_span, tol)
    rng = np.random.default_rng(seed)
    a_dev = angle = drift = dres = rho = 0.0
    ratios = []
    for i, x in enumerate(traj.states):
        xdot = HJ.vector_field(x)
        XH = red.H.vector_field(x)
        a_dev = max(a_dev, abs(red.alpha(x, xdot) - 1.0))
        angle = max(angle, sin_angle(xdot, XH))
        drift = max(drift, abs(red.H(x[:n], x[n:]) - red.h))
        ratios.append(np.linalg.norm(xdot) / np.linalg.norm(XH))
        rho = max(rho, float(np.max(np.abs(H0.vector_field(x) - xdot))))
        if i % dalpha_every == 0:
            W = red.alpha.exterior_derivative(x)
            g = red.H.grad_x(x)
            for _ in range(n_tangent):
                v = rng.standard_normal(2 * n)
                v -= (v @ g) / (g @ g) * g
                v /= np.linalg.norm(v)
                dres = max(dres, abs(float(xdot @ W @ v)))
    return ReebReport(a_dev, angle, drift, dres, np.array(ratios), rho, len(traj))


__all__ = [
    "OneFormSpec",
    "LiouvilleField",
    "ContactReduction",
    "ReebReport",
    "symplectic_matrix",
    "canonical_form",
    "position_form",
    "symmetric_form",
    "exact_corrected_form",
    "verify_primitive",
    "liouville_field",
    "directional_EH",
    "directional_EH_grad",
    "pomoc_discrepancy",
    "sample_level_set",
    "contact_type_check",
    "reeb_hamiltonians",
    "reeb_flow_verify",
    "sin_angle",
]
