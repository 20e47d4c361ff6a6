import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afree import catalog, exterior
from afree.errors import DimensionError
from afree.operator_core import principal_symbol
from afree.wavecone import kernel_basis, in_wave_cone


def rand_sym(rng, d):
    a = rng.standard_normal((d, d))
    return (a + a.T) / 2


def test_symmetric_flattening_is_isometric():
    rng = np.random.default_rng(0)
    for d in (2, 3, 4):
        a, b = rand_sym(rng, d), rand_sym(rng, d)
        assert catalog.sym_to_flat(a) @ catalog.sym_to_flat(b) == pytest.approx(np.trace(a @ b))
        np.testing.assert_allclose(catalog.flat_to_sym(catalog.sym_to_flat(a), d), a)
        np.testing.assert_allclose(catalog.sym_embedding(d) @ catalog.sym_to_flat(a), a.ravel())


def test_symtensor_flattening_is_isometric():
    rng = np.random.default_rng(1)
    t1 = catalog.rank_one_tensor(rng.standard_normal(2), rng.standard_normal(3), 3)
    t2 = catalog.rank_one_tensor(rng.standard_normal(2), rng.standard_normal(3), 3)
    f1, f2 = catalog.symtensor_to_flat(t1), catalog.symtensor_to_flat(t2)
    assert f1 @ f2 == pytest.approx(np.sum(t1 * t2))
    np.testing.assert_allclose(catalog.flat_to_symtensor(f1, 2, 3, 3), t1)


@pytest.mark.parametrize("d", [2, 3])
def test_saint_venant_matches_closed_formula(d):
    rng = np.random.default_rng(d)
    op = catalog.saint_venant(d).operator
    for _ in range(10):
        M, xi = rand_sym(rng, d), rng.standard_normal(d)
        got = -principal_symbol(op, xi) @ catalog.sym_to_flat(M) / (2 * np.pi) ** 2
        mx = M @ xi
        full = np.outer(mx, xi) + np.outer(xi, mx) - np.trace(M) * np.outer(xi, xi) - (xi @ xi) * M
        want = [full[j, k] for j, k in catalog.sym_pairs(d)]
        np.testing.assert_allclose(got.real, want, atol=1e-12)
        np.testing.assert_allclose(got.imag, 0, atol=1e-12)


def test_saint_venant_d2_has_one_live_row():
    op = catalog.saint_venant(2).operator
    sym = principal_symbol(op, np.array([0.3, 0.7]))
    np.testing.assert_array_equal(sym[1], 0)  # row (0, 1)
    assert np.any(sym[0] != 0) and np.any(sym[2] != 0)


def test_curl_symbol_kernel_is_rank_one():
    rng = np.random.default_rng(2)
    op = catalog.curl_annihilator(3, 2).operator
    xi = rng.standard_normal(3)
    a = rng.standard_normal(2)
    np.testing.assert_allclose(principal_symbol(op, xi) @ np.outer(a, xi).ravel(), 0, atol=1e-12)


def test_divergence_kernel_is_row_orthogonality():
    rng = np.random.default_rng(3)
    op = catalog.divergence_operator(3).operator
    xi = rng.standard_normal(3)
    M = rng.standard_normal((3, 3))
    M -= np.outer(M @ xi, xi) / (xi @ xi)
    np.testing.assert_allclose(principal_symbol(op, xi) @ M.ravel(), 0, atol=1e-12)


def test_boundary_symbol_is_interior_product():
    rng = np.random.default_rng(4)
    op = catalog.current_boundary_operator(4, [2, 3]).operator
    xi = rng.standard_normal(4)
    v2, v3 = rng.standard_normal(6), rng.standard_normal(4)
    sym = principal_symbol(op, xi) @ np.concatenate([v2, v3])
    w = exterior.omega_of(xi)
    want = np.concatenate(
        [exterior.interior_product(exterior.KVector(4, 2, v2), w).coeffs,
         exterior.interior_product(exterior.KVector(4, 3, v3), w).coeffs]
    )
    np.testing.assert_allclose(sym, -2j * np.pi * want, atol=1e-12)


ENTRIES = [
    catalog.curl_annihilator(2, 2),
    catalog.curl_annihilator(3, 2),
    catalog.higher_gradient_annihilator(2, 1, 2),
    catalog.higher_gradient_annihilator(2, 2, 3),
    catalog.saint_venant(2),
    catalog.saint_venant(3),
    catalog.divergence_operator(2),
    catalog.divergence_operator(3),
    catalog.current_boundary_operator(3, [2]),
    catalog.current_boundary_operator(3, [1, 2]),
]


@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e.operator.label)
def test_closed_form_members_are_numerical_members(entry):
    rng = np.random.default_rng(7)
    for _ in range(5):
        v = entry.cone.sample_member(rng)
        assert entry.contains(v)
        verdict = in_wave_cone(entry.operator, v)
        assert verdict.member, verdict.residual


@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e.operator.label)
def test_closed_form_agrees_with_numerics_on_generic_vectors(entry):
    rng = np.random.default_rng(8)
    for _ in range(5):
        v = rng.standard_normal(entry.operator.m)
        assert entry.contains(v) == in_wave_cone(entry.operator, v).member


def test_higher_gradient_cone_rejects_non_power():
    entry = catalog.higher_gradient_annihilator(2, 1, 2)
    # a (x) (b (x) c + c (x) b) with b != c is rank one as l x d^2 but not a square
    b, c = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    T = np.multiply.outer(np.array([1.0]), np.outer(b, c) + np.outer(c, b))
    v = catalog.symtensor_to_flat(T)
    assert not entry.contains(v)
    assert in_wave_cone(entry.operator, v).residual > 0.1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_kernel_dimensions_property(seed):
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(3)
    xi /= np.linalg.norm(xi)
    assert len(kernel_basis(catalog.curl_annihilator(3, 2).operator, xi)) == 2
    assert len(kernel_basis(catalog.saint_venant(3).operator, xi)) == 3
    assert len(kernel_basis(catalog.divergence_operator(3).operator, xi)) == 6


def test_default_entries_are_five_with_citations():
    entries = catalog.default_entries()
    assert len(entries) == 5
    assert all(e.citation for e in entries)
    assert len({e.cone.kind for e in entries}) == 5


def test_constructor_errors():
    with pytest.raises(DimensionError):
        catalog.curl_annihilator(1, 1)
    with pytest.raises(DimensionError):
        catalog.current_boundary_operator(3, [4])
    with pytest.raises(DimensionError):
        catalog.current_boundary_operator(3, [])
