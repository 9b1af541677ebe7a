import numpy as np
import pytest

from lib.errors import ConfigError, DimensionError
from lib.model import (
    FAMILIES, SIGMA_MINUS, ModelParams, annihilation, apply_generator, atom_swap, basis_index,
    basis_ket, embed_atom_op, hamiltonian, jump_operators, liouvillian, number_operator,
)
from lib.qmath import devectorize, random_density_matrix, vectorize

ALL_RATES = ModelParams(gamma=0.3, kappa=0.7, n_T=0.4, m_T=0.9, cutoff=2)


class TestModelParams:
    def test_defaults(self):
        params = ModelParams()
        assert params.cutoff == 5
        assert params.dims == (2, 2, 6)
        assert params.dim == 24

    def test_negative_rate_names_field(self):
        with pytest.raises(ConfigError) as excinfo:
            ModelParams(n_T=-1.0)
        assert any(e.startswith("params.n_T") for e in excinfo.value.errors)

    def test_collects_every_violation(self):
        with pytest.raises(ConfigError) as excinfo:
            ModelParams(n_T=-1.0, gamma=-0.5, cutoff=0)
        assert len(excinfo.value.errors) == 3

    @pytest.mark.parametrize("n_T,m_T,case", [(0, 0, "vacuum"), (1, 0, "atoms"), (0, 1, "cavity"), (1, 1, "both")])
    def test_case(self, n_T, m_T, case):
        assert ModelParams(n_T=n_T, m_T=m_T).case == case


class TestOperators:
    def test_annihilation(self):
        np.testing.assert_allclose(annihilation(1), [[0, 1], [0, 0]])
        a = annihilation(5)
        np.testing.assert_allclose(a.conj().T @ a, np.diag(np.arange(6)), atol=1e-14)

    def test_truncation_commutator(self):
        a = annihilation(4)
        commutator = a @ a.conj().T - a.conj().T @ a
        expected = np.eye(5)
        expected[4, 4] = -4
        np.testing.assert_allclose(commutator, expected, atol=1e-12)

    def test_annihilation_rejects_zero_cutoff(self):
        with pytest.raises(DimensionError):
            annihilation(0)

    def test_embedded_lowering(self):
        cutoff = 3
        sm1 = embed_atom_op(SIGMA_MINUS, 1, cutoff)
        sm2 = embed_atom_op(SIGMA_MINUS, 2, cutoff)
        np.testing.assert_allclose(sm1 @ basis_ket(1, 0, 0, cutoff), basis_ket(0, 0, 0, cutoff))
        np.testing.assert_allclose(sm2 @ basis_ket(0, 0, 0, cutoff), 0)
        np.testing.assert_allclose(sm1 @ sm2 - sm2 @ sm1, 0)

    def test_embed_rejects_bad_atom(self):
        with pytest.raises(DimensionError):
            embed_atom_op(SIGMA_MINUS, 3, 2)

    def test_basis_index_ordering(self):
        assert basis_index(0, 0, 0, 5) == 0
        assert basis_index(0, 0, 5, 5) == 5
        assert basis_index(0, 1, 0, 5) == 6
        assert basis_index(1, 1, 5, 5) == 23


class TestHamiltonian:
    def test_hermitian_and_conserves_excitations(self):
        params = ModelParams(cutoff=4)
        h = hamiltonian(params)
        n = number_operator(params)
        np.testing.assert_allclose(h, h.conj().T, atol=1e-14)
        assert np.max(np.abs(h @ n - n @ h)) <= 1e-12

    def test_matrix_elements(self):
        params = ModelParams(g=0.8, cutoff=3)
        h = hamiltonian(params)
        np.testing.assert_allclose(h @ basis_ket(0, 0, 0, 3), 0)
        expected = 0.8 * (basis_ket(1, 0, 0, 3) + basis_ket(0, 1, 0, 3))
        np.testing.assert_allclose(h @ basis_ket(0, 0, 1, 3), expected, atol=1e-14)
        assert h[basis_index(1, 1, 0, 3), basis_index(0, 0, 1, 3)] == 0

    def test_atom_swap_symmetry(self):
        params = ModelParams(cutoff=3)
        swap = atom_swap(3)
        h = hamiltonian(params)
        np.testing.assert_allclose(swap @ h @ swap.T, h, atol=1e-12)


class TestLiouvillian:
    def test_matches_direct_generator(self, rng):
        superop = liouvillian(ALL_RATES)
        for _ in range(5):
            rho = random_density_matrix(ALL_RATES.dim, rng, dims=ALL_RATES.dims)
            np.testing.assert_allclose(
                superop.apply(rho), apply_generator(ALL_RATES, rho), atol=1e-12
            )

    def test_trace_and_hermiticity_preserved(self, rng):
        superop = liouvillian(ALL_RATES)
        for _ in range(20):
            rho = random_density_matrix(ALL_RATES.dim, rng, dims=ALL_RATES.dims)
            out = devectorize(superop.matrix @ vectorize(rho))
            assert abs(np.trace(out)) <= 1e-10
            assert np.max(np.abs(out - out.conj().T)) <= 1e-10

    def test_vacuum_is_stationary(self):
        params = ModelParams(gamma=0.1, kappa=1.5)
        rho = np.outer(basis_ket(0, 0, 0, 5), basis_ket(0, 0, 0, 5))
        assert np.linalg.norm(apply_generator(params, rho)) <= 1e-12
        assert np.linalg.norm(liouvillian(params).apply(rho)) <= 1e-12

    def test_zero_temperature_has_no_pump_terms(self):
        superop = liouvillian(ModelParams(gamma=0.2, kappa=0.5, cutoff=2))
        assert set(superop.families) == set(FAMILIES)
        assert np.count_nonzero(superop.family_matrix("atom_pump")) == 0
        assert np.count_nonzero(superop.family_matrix("cavity_pump")) == 0
        assert np.count_nonzero(superop.family_matrix("atom_decay")) > 0

    def test_blocks_match_full_matrix(self):
        superop = liouvillian(ALL_RATES)
        full = superop.matrix
        sectors = superop.sectors()
        for indices in sectors.values():
            np.testing.assert_allclose(superop.block(indices, indices), full[np.ix_(indices, indices)], atol=1e-14)
        zero, one = sectors[0], sectors[1]
        assert np.count_nonzero(full[np.ix_(zero, one)]) == 0

    def test_atom_swap_symmetry(self):
        swap = atom_swap(ALL_RATES.cutoff)
        superop = liouvillian(ALL_RATES)
        permutation = np.kron(swap.conj(), swap)
        np.testing.assert_allclose(permutation @ superop.matrix @ permutation.conj().T, superop.matrix, atol=1e-12)

    def test_rates(self):
        rates = {family: rate for family, rate, _ in jump_operators(ALL_RATES)}
        assert rates["atom_decay"] == pytest.approx(1.4 * 0.3)
        assert rates["atom_pump"] == pytest.approx(0.4 * 0.3)
        assert rates["cavity_decay"] == pytest.approx(1.9 * 0.7)
        assert rates["cavity_pump"] == pytest.approx(0.9 * 0.7)

    def test_apply_generator_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            apply_generator(ModelParams(cutoff=2), np.eye(4) / 4)
