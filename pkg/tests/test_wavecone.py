import numpy as np
import pytest

from afree import catalog
from afree.errors import DegenerateFrequency, DegenerateVector, DimensionError, UnsupportedOrderZero
from afree.operator_core import PdeOperator, augment_with_rhs, principal_symbol
from afree.wavecone import (
    SphereSampling,
    cone_distance_profile,
    constant_rank_check,
    in_wave_cone,
    kernel_basis,
    residual_at,
    sphere_points,
    write_profile_csv,
)


def circle_sweep_min(op, v, count=200_000, chunk=50_000):
    """Brute-force residual minimum on an equispaced circle."""
    v = np.asarray(v, float)
    v = v / np.abs(v).max()
    best = np.inf
    for start in range(0, count, chunk):
        t = 2 * np.pi * np.arange(start, min(start + chunk, count)) / count
        xi = np.stack([np.cos(t), np.sin(t)], axis=1)
        r = np.linalg.norm(principal_symbol(op, xi) @ v, axis=-1)
        best = min(best, float(r.min()))
    return best


D2_ENTRIES = [
    catalog.curl_annihilator(2, 2),
    catalog.higher_gradient_annihilator(2, 1, 2),
    catalog.saint_venant(2),
    catalog.divergence_operator(2),
    catalog.current_boundary_operator(2, [1]),
]


@pytest.mark.parametrize("entry", D2_ENTRIES, ids=lambda e: e.operator.label)
def test_membership_agrees_with_circle_sweep(entry):
    rng = np.random.default_rng(11)
    vectors = [entry.cone.sample_member(rng) for _ in range(3)]
    vectors += [rng.standard_normal(entry.operator.m) for _ in range(3)]
    for v in vectors:
        sweep = circle_sweep_min(entry.operator, v)
        verdict = in_wave_cone(entry.operator, v)
        assert verdict.residual <= sweep + 1e-12
        assert verdict.member == (sweep <= 1e-3)


def test_divergence_identity_residual_is_two_pi():
    op = catalog.divergence_operator(2).operator
    verdict = in_wave_cone(op, np.eye(2).ravel())
    assert not verdict.member
    assert verdict.residual == pytest.approx(2 * np.pi, abs=1e-10)


def test_witness_is_sound_and_scaling_invariant():
    op = catalog.curl_annihilator(3, 2).operator
    v = np.outer([1.0, -2.0], [0.3, 0.1, -0.5]).ravel()
    a = in_wave_cone(op, v)
    b = in_wave_cone(op, -7.5 * v)
    assert a.member and b.member
    assert a.residual == pytest.approx(b.residual, abs=1e-9)
    np.testing.assert_allclose(residual_at(op, v, a.witness_xi), 0, atol=1e-6)
    assert np.linalg.norm(a.witness_xi) == pytest.approx(1.0)


def test_augmentation_does_not_shrink_the_cone():
    op = catalog.curl_annihilator(2, 2).operator
    aug = augment_with_rhs(op)
    rng = np.random.default_rng(2)
    for _ in range(5):
        v = np.outer(rng.standard_normal(2), rng.standard_normal(2)).ravel()
        assert in_wave_cone(aug, np.append(v, rng.standard_normal(aug.m - op.m))).member


def test_verdict_is_reproducible():
    op = catalog.saint_venant(3).operator
    v = np.random.default_rng(3).standard_normal(6)
    a, b = in_wave_cone(op, v), in_wave_cone(op, v)
    assert a.as_dict() == b.as_dict()


def test_sphere_points_start_with_axes_and_are_unit():
    for d in (2, 3, 5):
        pts = sphere_points(d, 100, 0)
        np.testing.assert_array_equal(pts[:d], np.eye(d))
        np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0)


def test_kernel_basis_is_orthonormal_kernel():
    op = catalog.saint_venant(3).operator
    xi = np.array([0.2, -0.6, 0.77])
    ker = np.array(kernel_basis(op, xi))
    np.testing.assert_allclose(ker @ ker.T, np.eye(len(ker)), atol=1e-12)
    np.testing.assert_allclose(principal_symbol(op, xi) @ ker.T, 0, atol=1e-9)


def test_constant_rank_pass_and_violation():
    assert constant_rank_check(catalog.curl_annihilator(3, 2).operator).constant
    assert constant_rank_check(catalog.divergence_operator(2).operator).constant
    d1 = PdeOperator.from_terms(2, 1, 1, {(1, 0): [[1.0]]})
    prof = constant_rank_check(d1)
    assert not prof.constant
    lo_xi, hi_xi = prof.violation_pair
    assert abs(principal_symbol(d1, lo_xi)[0, 0]) < 1e-8
    assert abs(principal_symbol(d1, hi_xi)[0, 0]) > 1.0


def test_profile_is_sorted_and_writable(tmp_path):
    op = catalog.divergence_operator(2).operator
    xis, res = cone_distance_profile(op, np.eye(2).ravel(), SphereSampling(count=64))
    assert len(xis) == 68
    assert np.all(np.diff(res) >= 0)
    path = tmp_path / "p.csv"
    write_profile_csv(xis, res, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "xi0,xi1,residual" and len(lines) == 69


def test_errors():
    op = catalog.curl_annihilator(2, 2).operator
    with pytest.raises(DimensionError):
        in_wave_cone(op, np.ones(3))
    with pytest.raises(DegenerateVector):
        in_wave_cone(op, np.zeros(4))
    with pytest.raises(DegenerateFrequency):
        kernel_basis(op, np.zeros(2))
    with pytest.raises(UnsupportedOrderZero):
        constant_rank_check(PdeOperator.from_terms(2, 1, 1, {(0, 0): [[1.0]]}))
    with pytest.raises(ValueError):
        SphereSampling(count=0)
