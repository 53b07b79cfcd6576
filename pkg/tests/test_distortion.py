import logging
import math

import numpy as np
import pytest

from correlation import CorrelationModel, correlation, quantum_joint
from distortion import (
    DistortionParams,
    InhibitionNetwork,
    SignedDistribution,
    affine_distort,
    clamp_renormalize,
    compose,
    correlation_scaling,
    critical_visibility_chsh,
    distort_state,
    fit_affine,
    inhibition_probabilities,
    inhibition_steady_state,
    misclassification_params,
    to_complement_form,
    uniform_inhibition_params,
)
from errors import DomainError, UnidentifiableError
from quantum_state import born_probabilities, werner_state


def test_params_derive_scale():
    d = DistortionParams(0.05, K=4)
    assert d.s == pytest.approx(1.2)
    assert DistortionParams.from_visibility(0.6).s == pytest.approx(0.6)
    with pytest.raises(DomainError):
        DistortionParams(0.1, K=1)
    with pytest.raises(DomainError):
        DistortionParams.from_visibility(1.2)


def test_affine_distort_preserves_total():
    out = affine_distort([0.4, 0.1, 0.1, 0.4], DistortionParams.from_visibility(0.5))
    np.testing.assert_allclose(out.entries, [0.325, 0.175, 0.175, 0.325], atol=1e-15)
    assert math.fsum(out.entries) == pytest.approx(1.0, abs=1e-12)
    assert not out.negative


def test_affine_distort_flags_negative(caplog):
    with caplog.at_level(logging.WARNING, logger='distortion'):
        out = affine_distort([0.5, 0.0, 0.0, 0.5], DistortionParams(0.05))
    assert out.negative
    assert 'negative probabilities' in caplog.text

    clamped = clamp_renormalize(out)
    assert not clamped.negative
    np.testing.assert_allclose(clamped.entries, [0.5, 0.0, 0.0, 0.5])


def test_affine_distort_rejects_wrong_length():
    with pytest.raises(DomainError):
        affine_distort([0.5, 0.5], DistortionParams(0.0, K=4))


def test_complement_form_and_offset_cancellation(rng):
    """Both forms of the law agree, and every correlation scales by s"""
    for _ in range(10000):
        b = rng.uniform(-0.25, 0.25)
        d = DistortionParams(b)
        p = rng.uniform(0.0, 1.0)
        assert to_complement_form(d).apply(p) == pytest.approx(d.s * p - d.b_coef, abs=1e-14)

        delta = rng.uniform(0.0, math.pi)
        joint = quantum_joint(delta, 0.0)
        distorted = affine_distort(joint, d)
        assert correlation(distorted) == pytest.approx(d.s * correlation(joint), abs=1e-14)


def test_state_distortion_commutes_with_born(random_states, rng):
    for rho in random_states:
        V, a, b = rng.uniform(0.0, 1.0), rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi)
        via_state = born_probabilities(distort_state(rho, V), a, b).cells
        via_probs = affine_distort(born_probabilities(rho, a, b), DistortionParams.from_visibility(V)).entries
        np.testing.assert_allclose(via_state, via_probs, rtol=0, atol=1e-12)


def test_distort_state_of_singlet_is_werner():
    from quantum_state import singlet_state

    np.testing.assert_allclose(distort_state(singlet_state(), 0.4).entries, werner_state(0.4).entries, atol=1e-15)


def test_compose_matches_sequential_application(rng):
    first, second = DistortionParams(0.03), DistortionParams(-0.08)
    combined = compose(first, second)
    assert combined.s == pytest.approx(first.s * second.s)
    p = [0.1, 0.2, 0.3, 0.4]
    np.testing.assert_allclose(
        affine_distort(affine_distort(p, first), second).entries,
        affine_distort(p, combined).entries,
        atol=1e-14,
    )
    assert first.then(second) == combined
    with pytest.raises(DomainError):
        compose(DistortionParams(0.0, K=2), DistortionParams(0.0, K=4))


def test_misclassification_params():
    """Swapping two outcomes with rate e is the affine law with b = -e"""
    d = misclassification_params(0.1)
    p = 0.7
    recorded = p * 0.9 + (1 - p) * 0.1
    assert affine_distort([p, 1 - p], d).entries[0] == pytest.approx(recorded)
    assert misclassification_params(0.3, K=4).b_coef == pytest.approx(-0.1)
    with pytest.raises(DomainError):
        misclassification_params(1.5)
    for K in (1, 0, 2.5):
        with pytest.raises(DomainError):
            misclassification_params(0.1, K=K)


def test_correlation_scaling():
    assert correlation_scaling(0.6) == 0.6
    assert correlation_scaling(DistortionParams.from_visibility(0.6)) == pytest.approx(0.6)


def test_critical_visibility_chsh():
    assert critical_visibility_chsh(1e-4) == pytest.approx(1 / math.sqrt(2), abs=1e-4)


def test_entangled_but_undetectable_window():
    """Werner states between 1/3 and 1/sqrt(2) are entangled yet reach no CHSH violation"""
    from correlation import maximize_chsh
    from quantum_state import is_separable_2x2

    V = 0.55
    assert not is_separable_2x2(werner_state(V))
    assert maximize_chsh(CorrelationModel.state_model(werner_state(V))).value < 2.0


def test_fit_affine_recovers_exact_law():
    d = DistortionParams(0.07, K=2)
    pairs = [(p, d.s * p - d.b_coef) for p in np.linspace(0.1, 0.9, 9)]
    fit = fit_affine(pairs, K=2)
    assert fit.params.b_coef == pytest.approx(0.07, abs=1e-12)
    assert fit.residual < 1e-12


def test_fit_affine_logistic_saturation():
    """A logistic squashing is close to an affine law with slope above the secant"""
    p = np.linspace(0.2, 0.8, 61)
    out = 1.0 / (1.0 + np.exp(-4.0 * (p - 0.5)))
    fit = fit_affine(list(zip(p, out)), K=2)
    secant = (out[-1] - out[0]) / (p[-1] - p[0])
    assert fit.params.s == pytest.approx(secant, rel=0.1)
    assert fit.residual < 0.02


def test_fit_affine_unidentifiable():
    with pytest.raises(UnidentifiableError):
        fit_affine([(0.5, 0.4), (0.5, 0.6)])


def test_inhibition_two_unit_closed_form():
    x, w = np.array([1.0, 0.8]), 0.3
    expected = [(x[0] - w * x[1]) / (1 - w * w), (x[1] - w * x[0]) / (1 - w * w)]
    linear = inhibition_steady_state(InhibitionNetwork.uniform(x, w))
    rectified = inhibition_steady_state(InhibitionNetwork.uniform(x, w, rectified=True))
    np.testing.assert_allclose(linear, expected, atol=1e-12)
    np.testing.assert_allclose(rectified, expected, atol=1e-10)


def test_inhibition_rectified_winner():
    y = inhibition_steady_state(InhibitionNetwork.uniform([1.0, 0.0], 0.5, rectified=True))
    np.testing.assert_allclose(y, [1.0, 0.0], atol=1e-10)


def test_inhibition_network_validation():
    with pytest.raises(DomainError):
        InhibitionNetwork([1.0, 1.0], [[0.0, 1.2], [1.2, 0.0]])
    with pytest.raises(DomainError):
        InhibitionNetwork([1.0, 1.0], [[0.1, 0.2], [0.2, 0.0]])
    with pytest.raises(DomainError):
        InhibitionNetwork([1.0, -1.0], [[0.0, 0.2], [0.2, 0.0]])
    for weights in ([[0, 0.1], [0.1]], 'abc', [[0, None], [0.1, 0]]):
        with pytest.raises(DomainError):
            InhibitionNetwork([1.0, 0.0], weights)
    # strong inhibition is allowed once rectified
    InhibitionNetwork([1.0, 1.0], [[0.0, 1.2], [1.2, 0.0]], rectified=True)


@pytest.mark.parametrize('weight, K', [(0.1, 2), (0.2, 3), (0.15, 4)])
def test_uniform_inhibition_is_affine(weight, K, rng):
    p = rng.dirichlet(np.ones(K))
    expected = affine_distort(p, uniform_inhibition_params(weight, K)).entries
    np.testing.assert_allclose(inhibition_probabilities(p, weight).entries, expected, atol=1e-12)


def test_uniform_inhibition_saturates():
    """Inhibition enhances contrast: s > 1 with b > 0"""
    d = uniform_inhibition_params(0.2, 2)
    assert d.b_coef == pytest.approx(0.25)
    assert d.s > 1
    with pytest.raises(DomainError):
        uniform_inhibition_params(0.5, 3)


def test_signed_distribution_requires_normalization():
    with pytest.raises(DomainError):
        SignedDistribution((0.5, 0.6))


def test_inhibition_linear_fixed_point(rng):
    for n in (2, 3, 5, 8):
        W = rng.uniform(0.0, 1.0, size=(n, n))
        np.fill_diagonal(W, 0.0)
        W *= 0.9 / np.max(np.abs(np.linalg.eigvals(W)))
        net = InhibitionNetwork(rng.uniform(0.0, 2.0, size=n), W)
        y = inhibition_steady_state(net)
        assert np.max(np.abs(y - (net.x - net.W @ y))) < 1e-9


def test_inhibition_unrectified_goes_negative():
    y = inhibition_steady_state(InhibitionNetwork.uniform([1.0, 0.0], 0.5))
    np.testing.assert_allclose(y, [4 / 3, -2 / 3], atol=1e-12)


def test_maximize_chsh_half_visibility():
    from correlation import maximize_chsh

    model = CorrelationModel.distorted(CorrelationModel.quantum(), DistortionParams.from_visibility(0.5))
    assert maximize_chsh(model).value == pytest.approx(math.sqrt(2), abs=1e-6)
