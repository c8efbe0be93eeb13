import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geomech import numkit
from geomech.errors import (
    AntisymmetryViolation,
    ConstraintViolation,
    GradientMismatch,
    NotSeparable,
    SingularGram,
)
from geomech.mechanics import (
    Constraint,
    ConstrainedSystemSpec,
    HamiltonianSpec,
    NaturalSystemSpec,
    canonical_flow,
    constrained_flow,
    constrained_vector_field,
    energy_value,
    hamiltonian_vector_field,
    lagrangian_value,
    legendre_momentum,
    legendre_velocity,
    magnetic_flow,
    magnetic_hamiltonian,
    shift_trajectory,
    shift_transform,
    to_hamiltonian,
)
from geomech.models import neumann_constrained, NeumannSpec, uniform_field_system
from geomech.trajectory import PhaseState


def free_particle(n=1):
    return HamiltonianSpec(n, lambda q, p: 0.5 * p @ p, lambda q, p: np.zeros_like(q), lambda q, p: p.copy())


def test_vector_field_sign_convention():
    # xdot = (H_p, -H_q)
    H = HamiltonianSpec(1, lambda q, p: 0.5 * (q @ q + p @ p), lambda q, p: q, lambda q, p: p)
    np.testing.assert_array_equal(hamiltonian_vector_field(H, np.array([2.0, 3.0])), [3.0, -2.0])


def test_legendre_round_trip_with_metric():
    K = lambda q: np.array([[2.0 + q[0] ** 2, 0.3], [0.3, 1.0]])  # noqa: E731
    theta = lambda q: np.array([-q[1], q[0]])  # noqa: E731
    sys = NaturalSystemSpec(2, lambda q: q @ q, metric=K, gyro=theta)
    q, v = np.array([0.4, -0.2]), np.array([1.0, 0.5])
    p = legendre_momentum(sys, q, v)
    np.testing.assert_allclose(legendre_velocity(sys, q, p), v, atol=1e-14)
    H = to_hamiltonian(sys)
    assert abs(H(q, p) - energy_value(sys, q, v)) < 1e-13
    # L = 1/2 <Kv, v> + <theta, v> - V
    assert abs(lagrangian_value(sys, q, v) - (0.5 * v @ K(q) @ v + theta(q) @ v - q @ q)) < 1e-14


def test_to_hamiltonian_gradients_match_fd(rng):
    K = lambda q: np.array([[2.0 + np.sin(q[0]), 0.1], [0.1, 1.0 + q[1] ** 2]])  # noqa: E731
    sys = NaturalSystemSpec(2, lambda q: np.cos(q[0]) * q[1], gyro=lambda q: np.array([q[1] ** 2, q[0] * q[1]]), metric=K)
    H = to_hamiltonian(sys)
    assert H.check_gradients(rng.uniform(-1, 1, (10, 4))) < 1e-6


def test_check_gradients_flags_wrong_gradient():
    H = HamiltonianSpec(1, lambda q, p: 0.5 * (q @ q + p @ p), lambda q, p: 2 * q, lambda q, p: p)
    with pytest.raises(GradientMismatch):
        H.check_gradients([np.array([1.0, 0.5])])


def test_split_only_for_flat_unmagnetic_systems(quartic):
    assert to_hamiltonian(quartic).split is not None
    H = to_hamiltonian(uniform_field_system(1.0))
    assert H.split is None
    with pytest.raises(NotSeparable):
        numkit.integrate_verlet(H, PhaseState([0.0, 0.0], [1.0, 0.0]), 1e-2, 10)


def test_canonical_flow_refuses_magnetic(quartic):
    H = magnetic_hamiltonian(uniform_field_system(1.0))
    with pytest.raises(ValueError):
        canonical_flow(H, PhaseState([0.0, 0.0], [1.0, 0.0]), (0.0, 1.0))


def test_magnetic_flow_rejects_non_antisymmetric_form():
    H = HamiltonianSpec(2, lambda q, p: 0.5 * p @ p, lambda q, p: np.zeros(2), lambda q, p: p.copy(), magnetic=lambda q: np.eye(2))
    with pytest.raises(AntisymmetryViolation):
        magnetic_flow(H, PhaseState([0.0, 0.0], [1.0, 0.0]), (0.0, 1.0))


def test_shift_transform_inverts():
    theta = lambda q: np.array([np.sin(q[1]), q[0] ** 2])  # noqa: E731
    s = PhaseState([0.3, -0.7], [1.0, 2.0])
    back = shift_transform(shift_transform(s, theta), lambda q: -theta(q))
    np.testing.assert_allclose(back.p, s.p, atol=1e-15)


def test_magnetic_conjugacy_nonuniform_field():
    # theta with non-constant curl; exact sigma = d theta
    theta = lambda q: np.array([-q[1] * (1 + q[0] ** 2), q[0]])  # noqa: E731
    jac = lambda q: np.array([[-2 * q[0] * q[1], -(1 + q[0] ** 2)], [1.0, 0.0]])  # noqa: E731
    sys = NaturalSystemSpec(2, lambda q: 0.5 * q @ q, lambda q: q.copy(), gyro=theta, gyro_jac=jac)
    te = np.linspace(0, 5, 101)
    s0 = PhaseState([0.2, 0.1], [0.4, -0.3])
    tw = magnetic_flow(magnetic_hamiltonian(sys), s0, (0, 5), 1e-12, t_eval=te)
    ca = canonical_flow(to_hamiltonian(sys), PhaseState(s0.q, s0.p + theta(s0.q)), (0, 5), 1e-12, t_eval=te)
    assert np.max(np.abs(shift_trajectory(ca, theta).states - tw.states)) < 1e-8


def test_neumann_multipliers_hand_solved():
    sys = neumann_constrained(NeumannSpec((1, 2, 3)))
    _, lam = constrained_vector_field(sys, np.array([1.0, 0, 0, 0, 1.0, 0]))
    np.testing.assert_allclose(lam, [0.0, 0.0], atol=1e-15)
    # l1 = (<Aq,q> - |p|^2) / (2|q|^2), l2 = <q,p>/|q|^2
    q = np.array([0.6, 0.8, 0.0])
    p = 0.5 * np.array([-0.8, 0.6, 0.0])
    xdot, lam = constrained_vector_field(sys, np.concatenate([q, p]))
    np.testing.assert_allclose(lam, [(1.64 - 0.25) / 2, 0.0], atol=1e-14)
    assert abs(q @ xdot[:3]) < 1e-14
    assert abs(xdot[:3] @ p + q @ xdot[3:]) < 1e-14


def test_singular_gram():
    c = Constraint(lambda q, p: q @ q, lambda q, p: (2 * q, np.zeros_like(p)))
    sys = ConstrainedSystemSpec(free_particle(2), (c, c), (1.0, 1.0))
    with pytest.raises(SingularGram):
        constrained_vector_field(sys, np.array([1.0, 0.0, 0.0, 1.0]))


def test_constraint_violation_at_start():
    sys = neumann_constrained(NeumannSpec((1, 2, 3)))
    with pytest.raises(ConstraintViolation):
        constrained_flow(sys, PhaseState([1.0, 0.1, 0.0], [0.0, 1.0, 0.0]), (0, 1))


def test_constrained_flow_keeps_constraints_and_energy():
    sys = neumann_constrained(NeumannSpec((1, 2, 3)))
    q = np.array([1.0, 0.3, 0.2])
    q /= np.linalg.norm(q)
    p = np.array([0.1, 1.0, 0.5])
    p -= (p @ q) * q
    tr = constrained_flow(sys, PhaseState(q, p), (0, 20), 1e-10)
    assert np.max(np.abs(tr.monitors["F1"] - 1)) < 1e-12
    assert np.max(np.abs(tr.monitors["F2"])) < 1e-12
    assert np.ptp(tr.monitors["energy"]) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1.5, 1.5), min_size=4, max_size=4))
def test_energy_conserved_by_canonical_flow(x):
    V = lambda q: 0.5 * q @ q + 0.25 * (q @ q) ** 2  # noqa: E731
    sys = NaturalSystemSpec(2, V, lambda q: q + (q @ q) * q)
    H = to_hamiltonian(sys)
    tr = canonical_flow(H, PhaseState(x[:2], x[2:]), (0.0, 3.0), 1e-10)
    E = tr.monitors["energy"]
    assert np.max(np.abs(E - E[0])) <= 1e-7 * max(1.0, abs(E[0]))
