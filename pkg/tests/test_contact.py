import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geomech import contact, models
from geomech.contact import (
    canonical_form,
    contact_type_check,
    directional_EH,
    exact_corrected_form,
    liouville_field,
    pomoc_discrepancy,
    position_form,
    reeb_flow_verify,
    reeb_hamiltonians,
    sample_level_set,
    symmetric_form,
    symplectic_matrix,
    verify_primitive,
)
from geomech.errors import EmptyLevelSet, NotContactType, PrimitiveMismatch
from geomech.mechanics import NaturalSystemSpec, to_hamiltonian
from geomech.trajectory import PhaseState

FORMS = [canonical_form, position_form, symmetric_form]


@pytest.fixture
def osc():
    return models.harmonic_system(models.HarmonicSpec((1.0,), (1.0,)))


@pytest.fixture
def kepler():
    return models.kepler_system(models.KeplerSpec())


@pytest.mark.parametrize("make", FORMS)
def test_supported_forms_are_primitives(make):
    assert verify_primitive(make(2)) <= 1e-6


def test_wrong_form_rejected():
    a = canonical_form(2)
    doubled = contact.OneFormSpec(2, lambda q, p: 2 * p, a.b)
    with pytest.raises(PrimitiveMismatch):
        verify_primitive(doubled)
    with pytest.raises(PrimitiveMismatch):
        liouville_field(doubled)


def test_exact_correction_keeps_primitive():
    # S = sin(q1) p2 + q1 q2
    def grad_S(q, p):
        return np.array([np.cos(q[0]) * p[1] + q[1], q[0], 0.0, np.sin(q[0])])

    alpha = exact_corrected_form(2, grad_S)
    assert verify_primitive(alpha) <= 1e-6
    E = liouville_field(alpha)
    x = np.array([0.3, -0.2, 0.5, 1.1])
    assert np.allclose(E(x), [-0.0, -np.sin(0.3), 0.5 + np.cos(0.3) * 1.1 - 0.2, 1.1 + 0.3])


def test_liouville_examples():
    x = np.array([0.3, -1.2, 0.7, 2.0])
    q, p = x[:2], x[2:]
    assert np.allclose(liouville_field(canonical_form(2))(x), np.concatenate([0 * q, p]))
    assert np.allclose(liouville_field(position_form(2))(x), np.concatenate([q, 0 * p]))
    assert np.allclose(liouville_field(symmetric_form(2))(x), 0.5 * x)


@pytest.mark.parametrize("make", FORMS)
def test_liouville_defining_relation(make, rng):
    alpha = make(3)
    E = liouville_field(alpha)
    Om = symplectic_matrix(3)
    worst = 0.0
    for _ in range(20):
        x = rng.uniform(-2, 2, 6)
        for _ in range(10):
            v = rng.standard_normal(6)
            worst = max(worst, abs(E(x) @ Om @ v - alpha(x, v)))
    assert worst <= 1e-12


@pytest.mark.parametrize("make", FORMS)
def test_pomoc_identity(make, quartic, kepler, rng):
    for H in (to_hamiltonian(quartic), kepler):
        alpha = make(2)
        worst = max(pomoc_discrepancy(alpha, H, rng.uniform(0.2, 2, 4)) for _ in range(100))
        assert worst <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.sampled_from(FORMS))
def test_pomoc_identity_property(x, make):
    q = np.array(x[:2])
    if np.linalg.norm(q) < 0.1:
        q = q + 0.5
    H = models.kepler_system(models.KeplerSpec())
    xx = np.concatenate([q, x[2:]])
    assert pomoc_discrepancy(make(2), H, xx) <= 1e-10 * max(1.0, np.abs(xx).max() ** 2)


def test_EH_examples(kepler, rng):
    EH = directional_EH(liouville_field(position_form(2)), kepler)
    for _ in range(20):
        x = rng.uniform(0.3, 2, 4)
        assert EH(x) == pytest.approx(1.0 / np.linalg.norm(x[:2]), rel=1e-12)

    spec = models.HarmonicSpec((1.0, 4.0), (2.0, 0.5))
    H = models.harmonic_system(spec)
    EH = directional_EH(liouville_field(symmetric_form(2)), H)
    x = rng.uniform(-1, 1, 4)
    assert EH(x) == pytest.approx(H(x[:2], x[2:]), rel=1e-12)


def test_EH_magnetic_natural_system():
    sys = models.uniform_field_system(1.5, lambda q: 0.5 * q @ q, lambda q: q)
    H = to_hamiltonian(sys)
    EH = directional_EH(liouville_field(canonical_form(2)), H)
    q, p = np.array([0.4, -0.3]), np.array([1.0, 0.2])
    theta = sys.B(q)
    assert EH(np.concatenate([q, p])) == pytest.approx(p @ (p - theta), rel=1e-12)


def test_sampler_oscillator_and_kepler(osc, kepler):
    pts = sample_level_set(osc, 0.5, 50, seed=1)
    assert max(abs(s.q @ s.q + s.p @ s.p - 1) for s in pts) <= 1e-12
    box = np.array([[-3, 3], [-3, 3], [-3, 3], [-3, 3]])
    pts = sample_level_set(kepler, -0.5, 50, seed=2, box=box, region=lambda x: 0.2 <= np.linalg.norm(x[:2]) <= 3)
    assert max(abs(kepler(s.q, s.p) + 0.5) for s in pts) <= 1e-12


def test_sampler_is_deterministic(osc):
    a = sample_level_set(osc, 0.5, 10, seed=7)
    b = sample_level_set(osc, 0.5, 10, seed=7)
    assert all(np.array_equal(x.x, y.x) for x, y in zip(a, b))


def test_sampler_empty_level(osc):
    with pytest.raises(EmptyLevelSet):
        sample_level_set(osc, -1.0, 5, max_attempts=20000)


def test_kepler_is_contact_for_radial_form(kepler):
    box = np.array([[-3, 3], [-3, 3], [-3, 3], [-3, 3]])
    pts = sample_level_set(kepler, -0.5, 100, seed=3, box=box, region=lambda x: np.linalg.norm(x[:2]) >= 0.2)
    red = contact_type_check(kepler, -0.5, position_form(2), pts)
    assert red.verdict == "ContactType"
    X = np.array([s.x for s in pts])
    assert np.allclose(red.EH_samples, 1 / np.linalg.norm(X[:, :2], axis=1))


def test_natural_system_above_max_potential_is_contact():
    # periodic potential, max V = 2
    sys = NaturalSystemSpec(2, lambda q: np.cos(q[0]) + np.cos(q[1]), lambda q: -np.sin(q), name="cos")
    H = to_hamiltonian(sys)
    pts = sample_level_set(H, 3.0, 100, seed=4, box=4.0)
    red = contact_type_check(H, 3.0, canonical_form(2), pts)
    assert red.verdict == "ContactType"
    X = np.array([s.x for s in pts])
    assert np.allclose(red.EH_samples, 2 * (3.0 - np.cos(X[:, 0]) - np.cos(X[:, 1])))


def test_harmonic_fails_for_canonical_form(osc):
    pts = sample_level_set(osc, 0.5, 100, seed=5)
    red = contact_type_check(osc, 0.5, canonical_form(1), pts)
    assert red.verdict == "Fails"
    assert red.witnesses
    for w in red.witnesses:
        assert abs(osc(w.q, w.p) - 0.5) <= 1e-10
    assert min(abs(w.p[0]) for w in red.witnesses) <= 1e-6
    with pytest.raises(NotContactType):
        reeb_hamiltonians(red)
    with pytest.raises(NotContactType):
        reeb_flow_verify(red, pts[0], (0, 1))


def test_reduction_values_on_level(kepler):
    box = np.array([[-3, 3], [-3, 3], [-3, 3], [-3, 3]])
    pts = sample_level_set(kepler, -0.5, 100, seed=6, box=box, region=lambda x: np.linalg.norm(x[:2]) >= 0.2)
    red = contact_type_check(kepler, -0.5, position_form(2), pts)
    for s in pts:
        assert abs(red.H0(s.x)) <= 1e-10
        assert abs(red.HJ(s.x) - 0.5) <= 1e-10
    H0, HJ = reeb_hamiltonians(red)
    for x in np.random.default_rng(0).uniform(0.3, 1.5, (20, 4)):
        q, p = x[:2], x[2:]
        assert H0(q, p) == pytest.approx((p @ p + 1.0) * np.linalg.norm(q) / 2 - 1, rel=1e-12)
        assert np.allclose(np.concatenate(H0.gradient(q, p)), H0.fd_gradient(q, p), atol=1e-6)
        assert np.allclose(np.concatenate(HJ.gradient(q, p)), HJ.fd_gradient(q, p), atol=1e-6)


def test_jacobi_hamiltonian_natural_form():
    # theta = 0: H_J = |p|^2 / (4(h - V) + 0)
    sys = NaturalSystemSpec(2, lambda q: np.cos(q[0]) + np.cos(q[1]), lambda q: -np.sin(q))
    H = to_hamiltonian(sys)
    h = 3.0
    pts = sample_level_set(H, h, 5, seed=8, box=4.0)
    red = contact_type_check(H, h, canonical_form(2), pts)
    x = np.array([0.2, 0.5, 1.3, -0.4])
    V = np.cos(0.2) + np.cos(0.5)
    assert red.HJ(x) == pytest.approx((x[2:] @ x[2:]) / (4 * (h - V)), rel=1e-12)


def test_jacobi_hamiltonian_with_gyroscopic_term():
    sys = models.uniform_field_system(0.4, lambda q: 0.0, lambda q: np.zeros(2))
    H = to_hamiltonian(sys)
    h = 2.0
    box = np.array([[-1, 1], [-1, 1], [-4, 4], [-4, 4]])
    pts = sample_level_set(H, h, 50, seed=9, box=box)
    red = contact_type_check(H, h, canonical_form(2), pts, refine=0)
    assert red.verdict == "ContactType"
    # theta grows without bound, so the full level set does have zeros of E(H):
    # <theta, p - theta> = -2h needs |theta| = 0.2 |q| >= 2
    full = contact_type_check(H, h, canonical_form(2), pts)
    assert full.verdict == "Fails"
    assert min(np.linalg.norm(w.q) for w in full.witnesses) >= 10 - 1e-6
    x = np.array([0.5, -0.3, 1.0, 0.7])
    q, p = x[:2], x[2:]
    th = sys.B(q)
    expected = (p - th) @ p / (4 * h + 2 * th @ (p - th))
    assert red.HJ(x) == pytest.approx(expected, rel=1e-12)


def test_reeb_flow_harmonic_speed_ratio():
    spec = models.HarmonicSpec((1.0, 1.0), (1.0, 1.0), (2,))
    H = models.harmonic_system(spec)
    h = 0.8
    pts = sample_level_set(H, h, 40, seed=10)
    red = contact_type_check(H, h, symmetric_form(2), pts)
    assert red.verdict == "ContactType"
    rep = reeb_flow_verify(red, pts[0], (0.0, 10.0), tol=1e-12)
    assert rep.alpha_deviation <= 1e-8
    assert rep.angle <= 1e-8
    assert rep.level_drift <= 1e-7
    assert rep.rho_freedom <= 1e-8
    assert rep.dalpha_residual <= 1e-6
    assert np.allclose(rep.speed_ratio, 1 / h, atol=1e-8)


def test_reeb_flow_kepler_long_span(kepler):
    box = np.array([[-3, 3], [-3, 3], [-3, 3], [-3, 3]])
    pts = sample_level_set(kepler, -0.5, 40, seed=11, box=box, region=lambda x: np.linalg.norm(x[:2]) >= 0.2)
    red = contact_type_check(kepler, -0.5, position_form(2), pts)
    s0 = models.kepler_state(models.KeplerSpec(), 1.5)
    rep = reeb_flow_verify(red, s0, (0.0, 50.0), tol=1e-12)
    assert rep.level_drift <= 1e-8
    assert rep.alpha_deviation <= 1e-8
    assert rep.angle <= 1e-8


def test_reeb_flow_rejects_off_level(kepler):
    pts = [models.kepler_state(models.KeplerSpec(), r) for r in (0.8, 1.2, 1.6)]
    red = contact_type_check(kepler, -0.5, position_form(2), pts, refine=0)
    with pytest.raises(ValueError):
        reeb_flow_verify(red, PhaseState([1.0, 0.0], [0.0, 2.0]), (0, 1))
