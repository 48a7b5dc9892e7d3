import numpy as np
import pytest

from monofo.certify import (CertificationReport, Constants, IterationCapReached, MultiStartDisagreement,
                            Verdict, check_corollary1, check_lemma2, check_lemma3, check_lemma4,
                            check_lemma5_sampled, estimate_constants, fit_rate, ordered_pairs,
                            projected_gradient, small_gain_iterate, solve_reference_optimum,
                            suggest_regularization, surrogate_argmin)
from monofo.control import CostModel, quadratic_cost
from monofo.geometry import Box
from monofo.plant import PlantModel
from monofo.plants import gene_plant, lti_plant

LTI_BOX = Box([-0.7], [1.0])
GENE_BOX = Box([0.0], [0.6])


def lti(w=1.0):
    return lti_plant([[-1.0, 1.0], [0.5, -1.0]], [1.0, 0.0], [[0.0, 1.0]], Bw=[0.9, 0.0], w=[w])


LTI_COST = quadratic_cost(1.1, 1.0, 2.0)


def gene_ky(u):
    return 435.0 * u / (150.75 - 0.58 * u)


def grid_argmin(fun, lo, hi, n=600001):
    u = np.linspace(lo, hi, n)
    return u[np.argmin(fun(u))]


def closed_form_iterates(u0, n):
    """u_{n+1} = clip((1.1 - u_n) / 1.1) from the first-order condition of the LTI surrogate."""
    out = [u0]
    for _ in range(n):
        out.append(min(max((1.1 - out[-1]) / 1.1, -0.7), 1.0))
    return np.array(out)


@pytest.mark.parametrize("anchor, expected", [(0.0, 1.0), (11 / 21, 11 / 21), (1.0, 1.0 / 11)])
def test_surrogate_argmin_closed_form(anchor, expected):
    u = surrogate_argmin(LTI_COST, lti(), LTI_BOX, anchor_u=[anchor])
    assert u[0] == pytest.approx(closed_form_iterates(anchor, 1)[1], abs=1e-9)
    assert u[0] == pytest.approx(expected, abs=1e-9)


def test_surrogate_argmin_unperturbed_quadratic():
    # zero output-cost gradient at the anchor leaves beta_u u^2, minimized at 0
    cost = quadratic_cost(10.0, 1.0, 0.0)
    assert surrogate_argmin(cost, gene_plant(), GENE_BOX, anchor_u=[0.0])[0] == pytest.approx(0.0, abs=1e-12)


def test_small_gain_iterates_follow_closed_form():
    res = small_gain_iterate(LTI_COST, lti(), LTI_BOX, [0.0])
    assert res.converged
    np.testing.assert_allclose(res.iterates[:6, 0], closed_form_iterates(0.0, 5), atol=1e-9)
    np.testing.assert_allclose(res.iterates[:4, 0], [0.0, 1.0, 0.0909091, 0.9173554], atol=1e-7)
    assert res.fixed_point[0] == pytest.approx(11 / 21, abs=1e-8)
    assert res.rate == pytest.approx(10 / 11, abs=1e-3)


def test_small_gain_from_fixed_point_stops_at_once():
    res = small_gain_iterate(LTI_COST, lti(), LTI_BOX, [11 / 21])
    assert res.converged and len(res.iterates) == 2


def test_small_gain_cap_reports_non_convergence():
    res = small_gain_iterate(LTI_COST, lti(), LTI_BOX, [0.0], max_iters=5)
    assert not res.converged and res.fixed_point is None


def test_small_gain_gene_matches_grid_oracle():
    oracle = grid_argmin(lambda u: 10 * u ** 2 + (gene_ky(u) - 2.0) ** 2, 0.0, 0.6)
    res = small_gain_iterate(quadratic_cost(10.0, 1.0, 2.0), gene_plant(), GENE_BOX, [0.0])
    assert res.converged
    assert res.fixed_point[0] == pytest.approx(oracle, abs=1e-5)


@pytest.mark.parametrize("w, expected", [(1.0, 11 / 21), (-1.0, 1.0)])
def test_reference_optimum_lti(w, expected):
    opt = solve_reference_optimum(LTI_COST, lti(w), LTI_BOX)
    assert opt.u[0] == pytest.approx(expected, abs=1e-8)
    assert opt.residual < 1e-9


@pytest.mark.parametrize("y_ref", [0.0, 1.0, 2.0])
def test_reference_optimum_gene(y_ref):
    oracle = grid_argmin(lambda u: 10 * u ** 2 + (gene_ky(u) - y_ref) ** 2, 0.0, 0.6)
    opt = solve_reference_optimum(quadratic_cost(10.0, 1.0, y_ref), gene_plant(), GENE_BOX)
    assert opt.u[0] == pytest.approx(oracle, abs=1e-5)


def test_projected_gradient_on_a_box():
    box = Box([0.0, 0.0], [1.0, 1.0])
    target = np.array([2.0, 0.3])
    res = projected_gradient(lambda u: float((u - target) @ (u - target)), lambda u: 2 * (u - target),
                             box, [0.5, 0.5])
    np.testing.assert_allclose(res.u, [1.0, 0.3], atol=1e-9)


def test_projected_gradient_iteration_cap():
    with pytest.raises(IterationCapReached):
        # quartic: gradient descent converges sublinearly
        projected_gradient(lambda u: float(np.sum((u - 0.3) ** 4)), lambda u: 4 * (u - 0.3) ** 3,
                           Box([-1.0], [1.0]), [0.9], tol=1e-12, max_iter=10)


def test_multistart_disagreement_on_nonconvex_surrogate():
    # double-well input cost: two symmetric minimizers
    cost = CostModel(1, 1, phi_u=lambda u: float((u @ u - 0.25) ** 2),
                     grad_phi_u=lambda u: 4 * (u @ u - 0.25) * u,
                     phi_y=lambda e: 0.0, grad_phi_y=lambda e: np.zeros(1))
    with pytest.raises(MultiStartDisagreement):
        surrogate_argmin(cost, lti(), LTI_BOX, anchor_u=[0.0])


def test_fit_rate_recovers_geometric_decay():
    assert fit_rate(0.5 ** np.arange(40)) == pytest.approx(0.5)
    assert np.isnan(fit_rate([1.0, 0.0]))


# -- lemma checks ------------------------------------------------------------

def test_lemma2_branches():
    assert check_lemma2(lti(), LTI_COST) is Verdict.LEMMA2I
    assert check_lemma2(gene_plant(), quadratic_cost(10, 1)) is Verdict.LEMMA2I
    two = lti_plant(-np.eye(2), np.eye(2), np.eye(2))
    assert check_lemma2(two, quadratic_cost(1, 1, input_dim=2, output_dim=2),
                        [np.zeros(2)], [np.zeros(2)]) is Verdict.LEMMA2II
    # non-affine two-input plant with coupled input-cost Hessian
    nonaffine = PlantModel(2, 2, 2, dynamics=lambda x, u, w: -x + u ** 3 / 3 + u,
                           output=lambda x: x)
    coupled = CostModel(2, 2, phi_u=lambda u: float(u[0] ** 2 + u[1] ** 2 + u[0] * u[1]),
                        grad_phi_u=lambda u: np.array([2 * u[0] + u[1], 2 * u[1] + u[0]]),
                        phi_y=lambda e: float(e @ e), grad_phi_y=lambda e: 2 * e)
    assert check_lemma2(nonaffine, coupled, [np.zeros(2)], [np.zeros(2)]) is Verdict.NOT_ESTABLISHED


def test_lemma5_sampled_examples(rng):
    states = np.array([[0.0, 0.0], [4.0, 2.0]])
    pairs = ordered_pairs(LTI_BOX, states, 50, seed=3)
    for v, x, vp, xp in pairs:
        assert np.all(v <= vp) and np.all(x >= xp) and np.any(v == vp)
    assert check_lemma5_sampled(LTI_COST, lti(), LTI_BOX, pairs).verified
    same = [(np.array([0.2]), np.array([1.0, 1.0]), np.array([0.2]), np.array([1.0, 1.0]))]
    assert check_lemma5_sampled(LTI_COST, lti(), LTI_BOX, same).verified
    # output cost with decreasing gradient breaks the condition
    decreasing = CostModel(1, 1, phi_u=lambda u: float(u @ u), grad_phi_u=lambda u: 2 * u,
                           phi_y=lambda e: float(-(e @ e)), grad_phi_y=lambda e: -2 * e)
    res = check_lemma5_sampled(decreasing, lti(), LTI_BOX, pairs)
    assert not res.verified and res.verdict is Verdict.NOT_ESTABLISHED


def test_lemma5_rejects_unordered_pairs():
    bad = [(np.array([0.5]), np.zeros(2), np.array([0.1]), np.zeros(2))]
    with pytest.raises(ValueError):
        check_lemma5_sampled(LTI_COST, lti(), LTI_BOX, bad)


def test_lemma3_branches():
    assert check_lemma3(LTI_COST, lti(), LTI_BOX).verdict is Verdict.LEMMA3II
    gene = check_lemma3(quadratic_cost(10, 1, 2.0), gene_plant(), GENE_BOX)
    assert gene.verdict is Verdict.LEMMA3I and gene.sampled
    assert gene.modulus >= 20 - 4 * 0.03
    linear = CostModel(1, 1, phi_u=lambda u: float(u[0]), grad_phi_u=lambda u: np.ones(1),
                       phi_y=lambda e: float(e @ e), grad_phi_y=lambda e: 2 * e,
                       hess_phi_u=lambda u: np.zeros((1, 1)))
    assert check_lemma3(linear, lti(), LTI_BOX).verdict is Verdict.NOT_ESTABLISHED


def test_constants_lti_analytic():
    c = estimate_constants(LTI_COST, lti(), LTI_BOX)
    assert c.mu == pytest.approx(2.2, abs=1e-12) and c.ell == pytest.approx(2.0, abs=1e-12)
    assert c.contraction == pytest.approx(10 / 11)


def test_constants_gene_sampled():
    t1, t2, g1, g2 = 750.0, 0.58, 4.02, 37.5
    u = np.linspace(0, 0.6, 41)
    deriv = t1 * t2 * g1 * g2 / (g1 * g2 - t2 * u) ** 2
    c = estimate_constants(quadratic_cost(10, 1, 0.0), gene_plant(), GENE_BOX)
    assert c.sigma == pytest.approx(deriv.max(), rel=1e-9)
    assert 2.88 <= c.sigma <= 2.90
    assert c.eta <= 0.03 and c.eta == pytest.approx(0.0224, abs=5e-4)
    assert c.mu == pytest.approx(20.0, abs=1e-3)
    assert c.ell == pytest.approx(2 * deriv.max() ** 2, rel=1e-6)
    assert check_lemma4(c.mu, c.ell).verified


@pytest.mark.parametrize("mu, ell, verified", [(2.2, 2.0, True), (2.0, 2.0, False), (19.88, 16.82, True)])
def test_lemma4(mu, ell, verified):
    res = check_lemma4(mu, ell)
    assert res.verified is verified
    assert res.rate == pytest.approx(ell / mu)


def test_lemma4_rejects_nonpositive_mu():
    with pytest.raises(ValueError):
        check_lemma4(0.0, 1.0)


@pytest.mark.parametrize("beta_u, beta_y, established", [(1.1, 1.0, True), (0.9, 1.0, False), (0.01, 0.0, True)])
def test_corollary1(beta_u, beta_y, established):
    assert check_corollary1(beta_u, beta_y, [[1.0]], LTI_BOX).established is established


def test_corollary1_needs_compact_box():
    with pytest.raises(ValueError):
        check_corollary1(1.0, 1.0, [[1.0]], Box([0.0], [np.inf]))


@pytest.mark.parametrize("mu, ell, expected", [(2.2, 2.0, 0.0), (1.0, 2.0, 0.55), (1.0, 0.0, 0.0)])
def test_suggest_regularization(mu, ell, expected):
    assert suggest_regularization(mu, ell, 0.05) == pytest.approx(expected)


def test_report_verdict_and_serialization():
    c = Constants(2.2, 2.0, 1.0, 0.0, {"mu": "analytic"})
    report = CertificationReport(Verdict.LEMMA2I, Verdict.LEMMA3II, Verdict.LEMMA4, c, np.array([0.5]), True)
    assert report.certified
    d = report.to_dict()
    assert d["asm4"] == {"i": "verified-by-lemma2i", "ii": "verified-by-lemma3ii", "iii": "verified-by-lemma4"}
    assert d["constants"]["contraction"] == pytest.approx(10 / 11)
    failed = CertificationReport(Verdict.LEMMA2I, Verdict.NOT_ESTABLISHED, Verdict.LEMMA4, c, None, True)
    assert not failed.certified
    assert "NOT CERTIFIED" in failed.summary()


def test_certify_pipeline_lti(lti_reports):
    r = lti_reports[0]
    assert (r.asm4_i, r.asm4_ii, r.asm4_iii) == (Verdict.LEMMA2I, Verdict.LEMMA3II, Verdict.LEMMA4)
    assert r.certified and r.monotone
    assert r.fixed_point[0] == pytest.approx(11 / 21, abs=1e-8)
    assert lti_reports[1].fixed_point[0] == pytest.approx(1.0, abs=1e-8)


def test_certify_pipeline_gene(gene_reports):
    refs = [0.0, 2.0, 1.0]
    for r, y_ref in zip(gene_reports, refs):
        assert (r.asm4_i, r.asm4_ii, r.asm4_iii) == (Verdict.LEMMA2I, Verdict.LEMMA3I, Verdict.LEMMA4)
        oracle = grid_argmin(lambda u: 10 * u ** 2 + (gene_ky(u) - y_ref) ** 2, 0.0, 0.6)
        assert r.fixed_point[0] == pytest.approx(oracle, abs=1e-5)
