"""Surface tension validation and the induced quadratic form."""
import math

import numpy as np
import pytest

import mbo
from mbo.errors import ValidationError
from mbo.tensions import sigma_rejections


def test_uniform_sigma():
    sig = mbo.uniform_sigma(3)
    np.testing.assert_array_equal(sig.entries, np.ones((3, 3)) - np.eye(3))
    # negativity constant: -xi.sigma xi >= c |xi|^2 on zero-sum vectors, c = 1
    assert abs(sig.sigma_lower_bound - 1.0) < 1e-12
    assert sig.phase_count == 3


def test_read_shockley_frozen_values():
    # sigma(t) = t (1 - ln t) at t = theta / 15, capped at 1
    sig = mbo.read_shockley_sigma([0.0, 3.0, 10.0, 40.0])
    assert abs(sig.entries[0, 1] - 0.5218875824868201) < 1e-15
    t = 7.0 / 15.0
    assert abs(sig.entries[1, 2] - t * (1.0 - math.log(t))) < 1e-15
    assert sig.entries[0, 3] == 1.0  # capped
    assert sig.entries[2, 3] == 1.0


def test_read_shockley_coincident_orientations_rejected():
    with pytest.raises(ValidationError):
        mbo.read_shockley_sigma([5.0, 5.0, 12.0])  # zero off-diagonal entry


def test_rejection_reasons_are_specific():
    bad = np.array([[0.0, 1.0], [2.0, 0.0]])
    reasons = sigma_rejections(bad)
    assert any("symmetric" in r for r in reasons)

    bad = np.array([[0.5, 1.0], [1.0, 0.0]])
    assert any("diagonal" in r for r in sigma_rejections(bad))

    bad = np.array([[0.0, -1.0], [-1.0, 0.0]])
    assert any("positive" in r for r in sigma_rejections(bad))

    # 1-2 edge as long as the detour through 0: strictness fails
    bad = np.zeros((3, 3))
    bad[0, 1] = bad[1, 0] = 1.0
    bad[0, 2] = bad[2, 0] = 1.0
    bad[1, 2] = bad[2, 1] = 2.0
    assert any("triangle" in r for r in sigma_rejections(bad))

    assert sigma_rejections(np.zeros((2, 3)))  # not square
    assert sigma_rejections(np.zeros((1, 1)))  # too few phases


def test_validate_raises_with_reasons_attached():
    with pytest.raises(ValidationError) as info:
        mbo.validate_sigma(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    assert info.value.reasons


def test_point_embeddings_pass_validation():
    # pairwise distances of generic points satisfy strict triangle
    # inequalities and are conditionally negative definite
    rng = np.random.default_rng(31)
    for _ in range(25):
        P = int(rng.integers(2, 7))
        pts = rng.random((P, 3))
        entries = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
        if np.min(entries + np.eye(P)) < 1e-3:
            continue  # nearly coincident points make the strictness marginal
        sig = mbo.validate_sigma(entries)
        assert sig.sigma_lower_bound > 0.0


def test_norm_sq_positive_on_zero_sum_fields():
    rng = np.random.default_rng(12)
    sig = mbo.uniform_sigma(4)
    for _ in range(20):
        xi = rng.standard_normal((4, 5, 5))
        xi -= xi.mean(axis=0)
        vals = mbo.sigma_norm_sq(xi, sig)
        assert vals.min() >= 0.0
        # uniform sigma: -xi . sigma xi = |xi|^2 on the zero-sum subspace
        np.testing.assert_allclose(vals, (xi**2).sum(axis=0), atol=1e-12)


def test_norm_sq_rejects_non_zero_sum():
    sig = mbo.uniform_sigma(3)
    with pytest.raises(ValidationError):
        mbo.sigma_norm_sq(np.ones((3, 4, 4)), sig)


def test_apply_is_matrix_contraction():
    rng = np.random.default_rng(4)
    entries = np.array([[0.0, 1.0, 1.2], [1.0, 0.0, 0.7], [1.2, 0.7, 0.0]])
    sig = mbo.validate_sigma(entries)
    u = rng.random((3, 6, 6))
    np.testing.assert_allclose(sig.apply(u), np.einsum("ij,j...->i...", entries, u), atol=1e-14)
    assert abs(sig.operator_norm - np.linalg.norm(entries, 2)) < 1e-12


def test_presets():
    assert mbo.sigma_preset("uniform", phase_count=2).phase_count == 2
    sig = mbo.sigma_preset("read-shockley", theta_deg=[0.0, 4.0, 9.0])
    assert sig.phase_count == 3
    with pytest.raises(ValidationError):
        mbo.sigma_preset("uniform")
    with pytest.raises(ValidationError):
        mbo.sigma_preset("read-shockley")
    with pytest.raises(ValidationError):
        mbo.sigma_preset("bogus")
