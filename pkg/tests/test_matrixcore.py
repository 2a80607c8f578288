from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cplab import matrixcore as mc

from conftest import ginibre


def test_kron_mixed_product(rng):
    a, b = ginibre(3, 3, rng), ginibre(2, 2, rng)
    c, d = ginibre(3, 3, rng), ginibre(2, 2, rng)
    lhs = mc.kron(a, b) @ mc.kron(c, d)
    rhs = mc.kron(a @ c, b @ d)
    assert mc.frob(lhs - rhs) < 1e-12 * (1 + mc.frob(rhs))


def test_kron_index_convention():
    # (A ⊗ B)[(i,k),(j,l)] = A[i,j] B[k,l] with row-major grouping
    a = np.array([[1, 2], [3, 4]], dtype=complex)
    b = np.array([[5, 6], [7, 8]], dtype=complex)
    k = mc.kron(a, b)
    assert k[0 * 2 + 1, 1 * 2 + 0] == a[0, 1] * b[1, 0]


def test_partial_trace_factors(rng):
    a, b = ginibre(3, 3, rng), ginibre(4, 4, rng)
    x = mc.kron(a, b)
    t2 = mc.partial_trace(x, (3, 4), which=2)
    t1 = mc.partial_trace(x, (3, 4), which=1)
    assert mc.frob(t2 - np.trace(b) * a) < 1e-12 * mc.frob(x)
    assert mc.frob(t1 - np.trace(a) * b) < 1e-12 * mc.frob(x)
    # trace is preserved
    assert abs(np.trace(t1) - np.trace(x)) < 1e-12 * abs(np.trace(x))


def test_herm_eig_reconstructs(rng):
    h = mc.random_hermitian(5, rng)
    eig = mc.herm_eig(h)
    assert mc.frob(eig.reconstruct() - h) < 1e-12 * (1 + mc.frob(h))
    assert mc.frob(eig.vectors @ mc.dag(eig.vectors) - np.eye(5)) < 1e-12
    assert np.all(np.diff(eig.values) >= -1e-14)


def test_herm_eig_rejects_nonhermitian(rng):
    with pytest.raises(mc.NotHermitian):
        mc.herm_eig(ginibre(3, 3, rng))


def test_eig_clusters_groups_degenerate():
    vals = np.array([0.0, 1e-12, 1.0, 1.0 + 1e-10, 2.5])
    clusters = mc.eig_clusters(vals)
    assert [len(c) for c in clusters] == [2, 2, 1]


def test_spectral_projections_resolve_identity(rng):
    h = np.diag([0.0, 0.0, 1.0, 2.0]) + 0j
    pairs = mc.spectral_projections(h)
    assert [int(round(np.trace(p).real)) for _, p in pairs] == [2, 1, 1]
    mc.check_projection_family([p for _, p in pairs])
    total = sum(lam * p for lam, p in pairs)
    assert mc.frob(total - h) < 1e-12


def test_check_projection_family_rejects_overlap():
    p = np.diag([1.0, 0.0]) + 0j
    with pytest.raises(mc.NotOrthogonal):
        mc.check_projection_family([p, p])


def test_expm_matches_series(rng):
    a = 0.3 * ginibre(4, 4, rng)
    # oracle: truncated Taylor series, well within convergence for this norm
    acc = np.eye(4, dtype=complex)
    term = np.eye(4, dtype=complex)
    for k in range(1, 40):
        term = term @ a / k
        acc += term
    assert mc.frob(mc.expm(a) - acc) < 1e-12 * (1 + mc.frob(acc))


def test_expm_unitary_for_skew(rng):
    h = mc.random_hermitian(4, rng)
    u = mc.expm(-1j * h)
    assert mc.frob(u @ mc.dag(u) - np.eye(4)) < 1e-12
    assert mc.frob(u - mc.expm_herm(h, -1j)) < 1e-12


def test_vec_convention():
    a = np.array([[1, 2], [3, 4]], dtype=complex)
    v = mc.vectorize(a)
    assert v[0 * 2 + 1] == a[0, 1]
    assert mc.frob(mc.devectorize(v) - a) == 0.0


def test_mult_superops(rng):
    x, y, a = ginibre(3, 3, rng), ginibre(3, 3, rng), ginibre(3, 3, rng)
    lm = mc.devectorize(mc.left_mult(x) @ mc.vectorize(a))
    rm = mc.devectorize(mc.right_mult(y) @ mc.vectorize(a))
    sw = mc.devectorize(mc.sandwich(x, y) @ mc.vectorize(a))
    assert mc.frob(lm - x @ a) < 1e-12 * (1 + mc.frob(x @ a))
    assert mc.frob(rm - a @ y) < 1e-12 * (1 + mc.frob(a @ y))
    assert mc.frob(sw - x @ a @ y) < 1e-12 * (1 + mc.frob(x @ a @ y))


def test_superop_of_map_roundtrip(rng):
    x = ginibre(3, 3, rng)
    sup = mc.superop_of_map(lambda a: x @ a @ mc.dag(x), 3)
    a = ginibre(3, 3, rng)
    assert mc.frob(sup.apply(a) - x @ a @ mc.dag(x)) < 1e-12 * (1 + mc.frob(x) ** 2)


def test_predual_pairing(rng):
    x = ginibre(3, 3, rng)
    sup = mc.superop_of_map(lambda a: x @ a + a @ mc.dag(x), 3)
    pre = sup.predual()
    rho, a = ginibre(3, 3, rng), ginibre(3, 3, rng)
    lhs = np.trace(pre.apply(rho) @ a)
    rhs = np.trace(rho @ sup.apply(a))
    assert abs(lhs - rhs) < 1e-12 * (1 + abs(rhs))


def test_haar_unitary_moments(rng):
    # first moment of |U[0,0]|^2 is 1/d
    d, n = 3, 4000
    acc = 0.0
    for _ in range(n):
        u = mc.haar_unitary(d, rng)
        assert mc.frob(u @ mc.dag(u) - np.eye(d)) < 1e-12
        acc += abs(u[0, 0]) ** 2
    assert abs(acc / n - 1 / d) < 5 / np.sqrt(n)


def test_fix_phase():
    b = np.array([[0.0, 2j], [1.0, 0.0]])
    fixed = mc.fix_phase(b)
    assert abs(fixed[0, 1].imag) < 1e-15 and fixed[0, 1].real > 0
    # phase change only
    assert abs(abs(np.vdot(b, b)) - abs(np.vdot(fixed, fixed))) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=5), st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_commutator_superop_kills_functions(d, seed):
    r = np.random.default_rng(seed)
    k = mc.random_hermitian(d, r)
    der = mc.commutator_superop(k)
    # anything commuting with K is annihilated, e.g. K^2
    assert mc.frob(der.apply(k @ k)) < 1e-10 * (1 + mc.frob(k) ** 3)
    # derivation property on a product
    a, b = (r.normal(size=(d, d)) + 1j * r.normal(size=(d, d)) for _ in range(2))
    lhs = der.apply(a @ b)
    rhs = der.apply(a) @ b + a @ der.apply(b)
    assert mc.frob(lhs - rhs) < 1e-10 * (1 + mc.frob(rhs))
