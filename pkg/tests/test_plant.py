import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monofo.geometry import Box, OrthantOrder
from monofo.plant import (PlantModel, check_metzler, check_monotone, fd_jacobian, monotonicity_samples,
                          sensitivity, sensitivity_fd, sensitivity_provenance, steady_output,
                          steady_state, verify_order_preservation)
from monofo.plants import gene_plant, lti_plant

A = [[-1.0, 1.0], [0.5, -1.0]]
B = [1.0, 0.0]
BW = [0.9, 0.0]
C = [[0.0, 1.0]]
GENE_BOX = Box([0.0], [0.6])


def gene_ky(u, t1=750.0, t2=0.58, g1=4.02, g2=37.5):
    """Closed form steady-state output, written out independently of the package."""
    return t1 * t2 * u / (g1 * g2 - t2 * u)


@pytest.fixture
def lti():
    return lti_plant(A, B, C, Bw=BW, w=[1.0])


@pytest.fixture
def gene():
    return gene_plant()


def test_lti_steady_state_matches_linear_solve(lti):
    oracle = np.linalg.solve(np.array(A), -np.array([1.9, 0.0]))
    np.testing.assert_allclose(steady_state(lti, [1.0]), oracle, atol=1e-12)
    np.testing.assert_allclose(oracle, [3.8, 1.9])


def test_lti_affine_data(lti):
    S, s = lti.affine_data()
    np.testing.assert_allclose(S, [[1.0]], atol=1e-14)
    np.testing.assert_allclose(s, [0.9], atol=1e-14)
    assert steady_output(lti, [0.5])[0] == pytest.approx(1.4)
    np.testing.assert_allclose(lti.with_disturbance([-1.0]).affine_data()[1], [-0.9])


def test_lti_requires_hurwitz():
    with pytest.raises(ValueError):
        lti_plant([[1.0, 0.0], [0.0, -1.0]], B, C)


@pytest.mark.parametrize("u, x_expected", [
    (0.6, (0.6 / 4.02, gene_ky(0.6))),
    (0.0, (0.0, 0.0)),
])
def test_gene_steady_state(gene, u, x_expected):
    np.testing.assert_allclose(steady_state(gene, [u]), x_expected, atol=1e-12)
    assert steady_output(gene, [u])[0] == pytest.approx(x_expected[1], abs=1e-12)
    assert gene_ky(0.6) == pytest.approx(1.73535, abs=1e-5)


def test_simulated_steady_state_agrees_with_analytic(gene):
    sim = steady_state(gene, [0.6], use_analytic=False, tol=1e-11)
    np.testing.assert_allclose(sim, steady_state(gene, [0.6]), atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.6))
def test_analytic_steady_state_is_an_equilibrium(u):
    for plant in (lti_plant(A, B, C, Bw=BW, w=[1.0]), gene_plant()):
        x = steady_state(plant, [u])
        assert np.max(np.abs(plant.f(x, [u]))) < 1e-8


@pytest.mark.parametrize("u, expected", [(0.0, 2.8855721), (0.6, 2.8989409)])
def test_gene_sensitivity(gene, u, expected):
    # independent closed form derivative of gene_ky
    t1, t2, g1, g2 = 750.0, 0.58, 4.02, 37.5
    oracle = t1 * t2 * g1 * g2 / (g1 * g2 - t2 * u) ** 2
    assert sensitivity(gene, [u], GENE_BOX)[0, 0] == pytest.approx(oracle, rel=1e-12)
    assert oracle == pytest.approx(expected, abs=1e-6)


def test_lti_sensitivity_is_one_for_any_disturbance(lti):
    for w in (-1.0, 0.0, 3.0):
        np.testing.assert_allclose(sensitivity(lti.with_disturbance([w]), [0.3]), [[1.0]])


def test_finite_difference_sensitivity_without_analytic_maps(gene):
    fd = sensitivity_fd(gene, [0.3], GENE_BOX, use_analytic=False)
    assert fd[0, 0] == pytest.approx(sensitivity(gene, [0.3])[0, 0], rel=1e-4)


def test_finite_difference_probes_stay_near_the_box(gene):
    # at the upper face the probe must not leave the slightly inflated box
    assert sensitivity_fd(gene, [0.6], GENE_BOX)[0, 0] == pytest.approx(2.8989409, rel=1e-6)


def test_provenance(gene):
    assert sensitivity_provenance(gene) == "analytic"
    bare = PlantModel(1, 1, 1, dynamics=lambda x, u, w: -x + u, output=lambda x: x)
    assert sensitivity_provenance(bare) == "finite-difference"
    assert sensitivity(bare, [0.4])[0, 0] == pytest.approx(1.0, rel=1e-6)


def test_fd_jacobian_matches_linear_map():
    M = np.array([[1.0, 2.0], [3.0, -4.0]])
    np.testing.assert_allclose(fd_jacobian(lambda v: M @ v, [0.3, -0.2]), M, atol=1e-8)


def test_lti_is_monotone(lti):
    samples = monotonicity_samples(Box([0.0, 0.0], [5.0, 5.0]), Box([-0.7], [1.0]))
    assert check_monotone(lti, samples).satisfied


def test_gene_is_monotone_on_grid(gene):
    report = check_monotone(gene, monotonicity_samples(Box([0.0, 0.0], [5.0, 5.0]), GENE_BOX))
    assert report.satisfied and report.samples_checked == 5 ** 3 + 50


def test_sign_flipped_output_violates_monotonicity():
    plant = PlantModel(1, 1, 1, dynamics=lambda x, u, w: -x + u, output=lambda x: -x)
    report = check_monotone(plant, [([0.0], [0.0]), ([1.0], [0.5])])
    assert not report.satisfied
    assert all(v.condition.startswith("dg0/dx0") for v in report.violations)
    assert report.violations[0].value == pytest.approx(-1.0)
    # with the output order reversed the same plant is monotone
    orders = (OrthantOrder([1]), OrthantOrder([1]), OrthantOrder([-1]))
    assert check_monotone(plant, [([0.0], [0.0])], orders).satisfied


def test_check_metzler_examples():
    assert check_metzler(A, [B, BW], C)
    assert not check_metzler([[-1.0, -0.1], [0.5, -1.0]], [B], C)
    assert check_metzler(np.eye(2), [np.zeros(2)], np.zeros((1, 2)))
    with pytest.raises(ValueError):
        check_metzler(A, [B], [[1.0, 0.0, 0.0]])


def test_order_preservation_examples(lti, gene):
    assert verify_order_preservation(lti, [([1.0, 1.0], [0.0, 0.0], [0.5], [0.5])]).satisfied
    same = verify_order_preservation(lti, [([0.2, 0.3], [0.2, 0.3], [0.1], [0.1])])
    assert same.satisfied and same.samples_checked > 100
    assert verify_order_preservation(gene, [([0.0, 0.0], [0.0, 0.0], [0.6], [0.3])]).satisfied


def test_order_preservation_rejects_unordered_trials(lti):
    with pytest.raises(ValueError):
        verify_order_preservation(lti, [([0.0, 0.0], [1.0, 1.0], [0.5], [0.5])])


def test_sign_flipped_plant_fails_order_preservation():
    plant = PlantModel(1, 1, 1, dynamics=lambda x, u, w: -x + u, output=lambda x: -x)
    report = verify_order_preservation(plant, [([1.0], [0.0], [0.5], [0.5])], horizon=2.0)
    assert not report.satisfied
    assert {v.kind for v in report.violations} == {"output"}
