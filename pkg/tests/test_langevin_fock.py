from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from cplab.dilation_toy import build_zr, contraction_generator, reservoir_grid
from cplab.invariance_dbc import random_covariant_blocks, small_system, \
    quadratic_balance_residual
from cplab.langevin_fock import FockTooLarge, PreconditionViolated, \
    build_fock, build_langevin_Z, commutation_residual, langevin_reduction_check, \
    one_excitation_block, scalar_decay_data, total_energy, two_level_decay_data
from cplab.matrixcore import dag, frob


def test_single_mode_truncation_matrices():
    fock = build_fock(1, 2)
    assert fock.dim == 3
    a = fock.annihilator(0).toarray()
    expected = np.array([[0, 1, 0], [0, 0, math.sqrt(2)], [0, 0, 0]])
    assert frob(a - expected) == 0.0
    assert frob(fock.creator(0).toarray() - expected.T) == 0.0


def test_basis_is_lexicographic_and_counts():
    fock = build_fock(3, 2)
    assert list(fock.basis) == sorted(fock.basis)
    assert fock.dim == math.comb(3 + 2, 2)
    assert fock.basis[fock.vacuum_index] == (0, 0, 0)


def test_number_operator_counts_occupation():
    fock = build_fock(3, 2)
    num = fock.number().toarray()
    assert np.allclose(np.diag(num), [sum(s) for s in fock.basis])
    assert np.count_nonzero(num - np.diag(np.diag(num))) == 0


def test_ccr_holds_below_the_cap():
    fock = build_fock(3, 2)
    low = [i for i, s in enumerate(fock.basis) if sum(s) <= fock.n_max - 1]
    for i in range(3):
        for j in range(3):
            a_i = fock.annihilator(i).toarray()
            a_j = fock.annihilator(j).toarray()
            comm = a_i @ a_j.conj().T - a_j.conj().T @ a_i
            block = comm[np.ix_(low, low)]
            want = np.eye(len(low)) if i == j else np.zeros((len(low), len(low)))
            assert frob(block - want) < 1e-14


def test_dgamma_general_matches_quadratic_form():
    fock = build_fock(2, 2)
    h = np.array([[0.3, 0.1 - 0.2j], [0.1 + 0.2j, -0.5]])
    built = fock.dgamma(h).toarray()
    manual = sum(h[i, j] * (fock.creator(i) @ fock.annihilator(j)).toarray()
                 for i in range(2) for j in range(2))
    assert frob(built - manual) < 1e-14


def test_dimension_cap_enforced():
    with pytest.raises(FockTooLarge):
        build_fock(200, 3)


def test_zero_coupling_is_block_diagonal_and_exact():
    upsilon = np.array([[0.4 + 0j]])
    grid = reservoir_grid(5, 11)
    fock = build_fock(11, 2)
    gen = build_langevin_Z(upsilon, (np.zeros((1, 1)),), grid, fock)
    assert gen.coupling_part.nnz == 0
    err_semi, err_cp = langevin_reduction_check(gen, 0.7, np.array([[1.0]]))
    assert err_semi < 1e-12 and err_cp < 1e-12


def test_time_zero_is_exact():
    upsilon, nu = scalar_decay_data()
    grid = reservoir_grid(5, 11)
    gen = build_langevin_Z(upsilon, nu, grid, build_fock(11, 2))
    err_semi, err_cp = langevin_reduction_check(gen, 0.0, np.array([[1.0]]))
    assert err_semi == 0.0 and err_cp < 1e-14


def test_mismatched_noise_rejected():
    upsilon, nu = scalar_decay_data()
    grid = reservoir_grid(5, 11)
    fock = build_fock(12, 2)
    with pytest.raises(ValueError):
        build_langevin_Z(upsilon, nu, grid, fock)
    with pytest.raises(ValueError):
        build_langevin_Z(upsilon, (2.0 * nu[0],), grid, build_fock(11, 2))


def test_generator_is_hermitian():
    upsilon, nu = two_level_decay_data()
    grid = reservoir_grid(5, 11)
    gen = build_langevin_Z(upsilon, nu, grid, build_fock(11, 2))
    assert sp.linalg.norm(gen.z - gen.z.getH(), "fro") < 1e-12


def test_unitary_group_on_small_space():
    upsilon, nu = scalar_decay_data()
    grid = reservoir_grid(3, 5)
    gen = build_langevin_Z(upsilon, nu, grid, build_fock(5, 2))
    u = sla.expm(-1j * 0.8 * gen.z.toarray())
    assert frob(u @ dag(u) - np.eye(gen.dim)) < 1e-10


def test_one_excitation_block_equals_toy_dilation():
    upsilon, nu = scalar_decay_data()
    grid = reservoir_grid(10, 41)
    gen = build_langevin_Z(upsilon, nu, grid, build_fock(41, 2))
    dil = build_zr(contraction_generator(upsilon), grid)
    assert frob(one_excitation_block(gen) - dil.z) < 1e-12


def test_one_excitation_compression_matches_toy_numbers():
    upsilon, nu = scalar_decay_data()
    grid = reservoir_grid(10, 41)
    gen = build_langevin_Z(upsilon, nu, grid, build_fock(41, 2))
    blk = one_excitation_block(gen)
    t = 1.0
    compressed = sla.expm(-1j * t * blk)[:1, :1]
    from cplab.dilation_toy import compressed_evolution
    toy = compressed_evolution(build_zr(contraction_generator(upsilon), grid), t)
    assert frob(compressed - toy) < 1e-12


def test_scalar_reduction_errors_at_coarse_rung():
    upsilon, nu = scalar_decay_data()
    grid = reservoir_grid(10, 41)
    gen = build_langevin_Z(upsilon, nu, grid, build_fock(41, 2))
    err_semi, err_cp = langevin_reduction_check(gen, 1.0, np.array([[1.0]]))
    # frozen reference for this exact configuration
    assert abs(err_semi - 1.90786e-02) < 1e-6
    # the only scalar observable is the identity, which compresses exactly
    assert err_cp < 1e-12


def test_two_level_reduction_errors_decrease():
    upsilon, nu = two_level_decay_data()
    a_obs = np.array([[0, 1], [1, 0]], dtype=complex)
    errs = []
    for (r, n) in [(5, 21), (10, 41)]:
        grid = reservoir_grid(r, n)
        gen = build_langevin_Z(upsilon, nu, grid, build_fock(n, 2))
        errs.append(langevin_reduction_check(gen, 1.0, a_obs))
    assert errs[1][0] < errs[0][0]
    assert errs[1][1] < errs[0][1]


def test_total_energy_commutes_for_balanced_data():
    upsilon, nu = two_level_decay_data()
    grid = reservoir_grid(5, 21)
    gen = build_langevin_Z(upsilon, nu, grid, build_fock(21, 2))
    k = np.diag([0.0, 1.0])
    e = total_energy(k, np.array([[1.0]]), gen)
    assert commutation_residual(e, gen.z) < 1e-10


def test_total_energy_zero_coupling():
    grid = reservoir_grid(3, 5)
    gen = build_langevin_Z(np.array([[0.2 + 0j]]), (np.zeros((1, 1)),),
                           grid, build_fock(5, 2))
    e = total_energy(np.array([[0.2]]), np.array([[0.0]]), gen)
    assert commutation_residual(e, gen.z) == 0.0


def test_total_energy_rejects_unbalanced_y():
    upsilon, nu = two_level_decay_data()
    grid = reservoir_grid(3, 7)
    gen = build_langevin_Z(upsilon, nu, grid, build_fock(7, 2))
    k = np.diag([0.0, 1.0])
    with pytest.raises(PreconditionViolated):
        total_energy(k, np.array([[1.3]]), gen)


def test_perturbed_y_residual_grows_with_perturbation():
    upsilon, nu = two_level_decay_data()
    grid = reservoir_grid(3, 7)
    gen = build_langevin_Z(upsilon, nu, grid, build_fock(7, 2))
    k = np.diag([0.0, 1.0])
    res = []
    for eps in (1e-3, 1e-2):
        e = total_energy(k, np.array([[1.0 + eps]]), gen, tol=1.0)
        res.append(commutation_residual(e, gen.z))
    assert 0 < res[0] < res[1]
    assert res[1] / res[0] == pytest.approx(10.0, rel=0.05)


def test_random_covariant_data_conserve_energy(rng):
    for _ in range(5):
        # dyadic spectra keep the sector energies exact, so conservation
        # is a matrix identity rather than an approximation
        k = np.diag(rng.integers(-512, 512, size=3) / 1024.0)
        sys = small_system(k)
        nu, y = random_covariant_blocks(sys, rng, n_blocks=2)
        total = sum(dag(b) @ b for b in nu.blocks)
        upsilon = 0.3 * k - 0.5j * total
        grid = reservoir_grid(2, 5)
        fock = build_fock(len(nu.blocks) * 5, 2)
        gen = build_langevin_Z(upsilon, nu.blocks, grid, fock)
        e = total_energy(sys, y, gen)
        assert commutation_residual(e, gen.z) < 1e-10


def test_thermal_covariant_blocks_balance(rng):
    k = np.diag([0.0, 0.7, 1.9])
    sys = small_system(k)
    beta = 1.3
    nu, y = random_covariant_blocks(sys, rng, n_blocks=2, thermal_beta=beta)
    assert quadratic_balance_residual(nu, y, beta) < 1e-8
    total = sum(dag(b) @ b for b in nu.blocks)
    upsilon = -0.5j * total
    grid = reservoir_grid(2, 5)
    gen = build_langevin_Z(upsilon, nu.blocks, grid,
                           build_fock(len(nu.blocks) * 5, 2))
    e = total_energy(sys, y, gen)
    assert commutation_residual(e, gen.z) < 1e-10
