"""Inclusive scattering tables: both computation routes and their identities.

The balanced-mixer values (1/2 diagonals, -1/2 cross term) follow from the
2x2 mode rotation a+_0 -> cos(t) a+_0 - sin(t) a+_1 applied to a one-boson
input; they are asserted exactly (1e-12). The two independent table routes
(coefficient readout vs. explicit final-state sums) must agree to 1e-8 on
random unitaries; on the truncated space the agreement is exact up to
rounding, so the tolerance is pure margin.
"""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from lfun import (
    CorrelationTable,
    FockSpace,
    ModeSet,
    PolyCoefficients,
    SparseOperator,
    build_poly_operator,
    coherent_state,
    dyson_solve,
    l_from_density,
    positivity_residual,
    quasiparticle_poles,
    thermal_state,
    vacuum_state,
)
from lfun.dyson import TwoPointG, self_energy_diagrams
from lfun.inclusive import (
    InclusiveTable,
    SMatrixOp,
    beamsplitter,
    completeness_check,
    inclusive_cross_section,
    momentum_reduced_entry,
    s_hat_apply,
    sigma_bruteforce,
    sigma_from_shat,
)
from lfun.keldysh import free_propagator
from lfun.models import diagonal_coupling, free_hamiltonian


def two_mode_space(n_max: int = 4) -> FockSpace:
    return FockSpace(ModeSet(labels=(0, 1), omega=(1.0, 1.3)), n_max=n_max, hbar=1.0)


def pure_density(space: FockSpace, psi: np.ndarray) -> SparseOperator:
    return SparseOperator(space, sp.csr_matrix(np.outer(psi, psi.conj())))


def random_unitary(space: FockSpace, seed: int) -> SMatrixOp:
    rng = np.random.default_rng(seed)
    r = rng.normal(size=(space.dim, space.dim)) + 1j * rng.normal(size=(space.dim, space.dim))
    gen = SparseOperator(space, sp.csr_matrix(0.3 * (r - r.conj().T)))
    return SMatrixOp(gen.expm())


class TestSMatrixOp:
    def test_identity_is_unitary(self):
        space = two_mode_space()
        s = SMatrixOp(space.identity())
        assert s.provenance == "supplied"
        assert s.unitarity_defect() < 1e-14

    def test_nonunitary_rejected(self):
        space = two_mode_space()
        with pytest.raises(ValueError, match="not unitary"):
            SMatrixOp(0.5 * space.identity())

    def test_bad_provenance_rejected(self):
        space = two_mode_space()
        with pytest.raises(ValueError, match="provenance"):
            SMatrixOp(space.identity(), provenance="guessed")

    def test_scaled_ladders_rejected(self):
        space = FockSpace(ModeSet.single(1.0), n_max=3, hbar=2.0)
        with pytest.raises(ValueError, match="hbar = 1"):
            SMatrixOp(space.identity())

    def test_generator_must_be_antihermitian(self):
        space = two_mode_space()
        gen = PolyCoefficients().add_term((0,), (0,), 1.0)
        with pytest.raises(ValueError, match="anti-Hermitian"):
            SMatrixOp.from_generator(space, gen)

    def test_sector_cut_limits_the_check(self):
        # faithful below the top sector, lossy on it
        space = FockSpace(ModeSet.single(1.0), n_max=2, hbar=1.0)
        diag = np.ones(space.dim)
        diag[space.index[(2,)]] = 0.0
        lossy = SparseOperator(space, sp.diags(diag).tocsr())
        with pytest.raises(ValueError, match="not unitary"):
            SMatrixOp(lossy)
        s = SMatrixOp(lossy, sector_cut=1)
        assert s.unitarity_defect(sector_cut=1) < 1e-14


class TestBeamsplitter:
    def test_mode_rotation_direction(self):
        space = two_mode_space()
        theta = 0.3
        s = beamsplitter(space, theta=theta)
        out = s.op.mat @ space.basis_vector((1, 0))
        expected = math.cos(theta) * space.basis_vector((1, 0)) - math.sin(
            theta) * space.basis_vector((0, 1))
        assert np.abs(out - expected).max() < 1e-12

    def test_balanced_single_particle_table(self):
        space = two_mode_space()
        s = beamsplitter(space)
        density = pure_density(space, space.basis_vector((1, 0)))
        table = sigma_from_shat(s_hat_apply(s, density), m_max=1)
        assert abs(table.entry((0,), (0,)) - 0.5) < 1e-12
        assert abs(table.entry((1,), (1,)) - 0.5) < 1e-12
        assert abs(table.entry((0,), (1,)) - (-0.5)) < 1e-12
        assert abs(table.entry((), ()) - 1.0) < 1e-12

    def test_single_particle_rates_sum_to_one(self):
        space = two_mode_space()
        s = beamsplitter(space)
        density = pure_density(space, space.basis_vector((1, 0)))
        table = sigma_from_shat(s_hat_apply(s, density), m_max=1)
        assert abs(table.probability_sum(1) - 1.0) < 1e-10


class TestSHatApply:
    def test_identity_leaves_functional_alone(self):
        space = two_mode_space()
        density = thermal_state(space, temperature=0.7)
        before = l_from_density(density)
        after = s_hat_apply(SMatrixOp(space.identity()), density)
        assert np.abs(after.data - before.data).max() < 1e-13

    def test_free_rotation_preserves_diagonal_coefficients(self):
        space = two_mode_space()
        h0 = build_poly_operator(space, free_hamiltonian(space.modes))
        t = 0.83
        s = SMatrixOp((h0 * (-1j * t)).expm())
        density = coherent_state(space, {0: 0.3, 1: 0.2j}, tail_tol=1e-3)
        before = l_from_density(density)
        after = s_hat_apply(s, density)
        for mu in ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0)):
            assert abs(after.coefficient(mu, mu) - before.coefficient(mu, mu)) < 1e-12
        # off-diagonal coefficients rotate with the mode phase instead
        rotated = before.coefficient((1, 0), (0, 0)) * np.exp(1j * 1.0 * t)
        assert abs(after.coefficient((1, 0), (0, 0)) - rotated) < 1e-12

    def test_scattered_functional_stays_physical(self):
        space = two_mode_space()
        table = s_hat_apply(beamsplitter(space), thermal_state(space, temperature=0.9))
        assert positivity_residual(table) > -1e-9


class TestRouteAgreement:
    def test_two_mode_random_unitary(self):
        space = two_mode_space()
        s = random_unitary(space, seed=7)
        rng = np.random.default_rng(11)
        psi = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
        psi /= np.linalg.norm(psi)
        direct = sigma_bruteforce(s, psi, m_max=2)
        via_table = sigma_from_shat(s_hat_apply(s, pure_density(space, psi)), m_max=2)
        assert direct.entries.keys() == via_table.entries.keys()
        for key, value in direct.entries.items():
            assert abs(value - via_table.entries[key]) < 1e-8

    def test_three_mode_two_particle_input(self):
        space = FockSpace(
            ModeSet(labels=(0, 1, 2), omega=(1.0, 1.2, 1.5)), n_max=4, hbar=1.0
        )
        s = random_unitary(space, seed=23)
        psi = space.basis_vector((1, 1, 0))
        direct = sigma_bruteforce(s, psi, m_max=2)
        via_table = sigma_from_shat(s_hat_apply(s, pure_density(space, psi)), m_max=2)
        for key, value in direct.entries.items():
            assert abs(value - via_table.entries[key]) < 1e-8

    def test_table_invariants_on_random_unitary(self):
        space = two_mode_space()
        s = random_unitary(space, seed=3)
        rng = np.random.default_rng(5)
        psi = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
        psi /= np.linalg.norm(psi)
        table = sigma_bruteforce(s, psi, m_max=2)
        assert table.hermiticity_defect() < 1e-12
        assert table.diagonal_defect() < 1e-12

    def test_identity_on_one_particle_state(self):
        space = two_mode_space()
        s = SMatrixOp(space.identity())
        table = sigma_bruteforce(s, space.basis_vector((0, 1)), m_max=2)
        assert abs(table.entry((1,), (1,)) - 1.0) < 1e-12
        assert abs(table.entry((0,), (0,))) < 1e-12
        for left in ((0, 0), (0, 1), (1, 1)):
            assert abs(table.entry(left, left)) < 1e-12

    def test_unnormalized_state_rejected(self):
        space = two_mode_space()
        s = SMatrixOp(space.identity())
        with pytest.raises(ValueError, match="normalized"):
            sigma_bruteforce(s, 2.0 * space.basis_vector((1, 0)), m_max=1)

    def test_truncation_tail_warns(self):
        space = FockSpace(ModeSet.single(1.0), n_max=2, hbar=1.0)
        diag = np.ones(space.dim)
        diag[space.index[(2,)]] = 0.0
        lossy = SMatrixOp(SparseOperator(space, sp.diags(diag).tocsr()), sector_cut=1)
        psi = (space.basis_vector((0,)) + space.basis_vector((2,))) / math.sqrt(2)
        with pytest.warns(UserWarning, match="not converged"):
            sigma_bruteforce(lossy, psi, m_max=1)

    def test_degree_shortfall_rejected(self):
        space = two_mode_space()
        density = thermal_state(space, temperature=0.7)
        table = l_from_density(density, degree_cut=2)
        with pytest.raises(ValueError, match="degree shortfall"):
            sigma_from_shat(table, m_max=2)


class TestNumberConservingSumRules:
    def build(self, seed: int):
        space = two_mode_space(n_max=4)
        rng = np.random.default_rng(seed)
        h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        h = h + h.conj().T
        gen = PolyCoefficients()
        for k in (0, 1):
            for l in (0, 1):
                gen.add_term((k,), (l,), -1j * h[k, l])
        return space, SMatrixOp.from_generator(space, gen)

    def test_two_particle_probabilities_exhaust(self):
        space, s = self.build(seed=41)
        psi = space.basis_vector((1, 1))
        table = sigma_bruteforce(s, psi, m_max=2)
        assert abs(table.probability_sum(2) - 1.0) < 1e-9

    def test_single_mode_rates_count_particles(self):
        space, s = self.build(seed=42)
        psi = space.basis_vector((1, 1))
        table = sigma_bruteforce(s, psi, m_max=1)
        assert abs(table.probability_sum(1) - 2.0) < 1e-9


class TestCrossSections:
    def test_identity_diagonal_is_one(self):
        space = two_mode_space()
        s = SMatrixOp(space.identity())
        table = sigma_bruteforce(s, space.basis_vector((1, 0)), m_max=1)
        assert inclusive_cross_section(table, (0,)) == pytest.approx(1.0, abs=1e-12)

    def test_balanced_mixer_rate(self):
        space = two_mode_space()
        density = pure_density(space, space.basis_vector((1, 0)))
        table = sigma_from_shat(s_hat_apply(beamsplitter(space), density), m_max=1)
        assert inclusive_cross_section(table, (1,)) == pytest.approx(0.5, abs=1e-12)

    def test_missing_entry_raises(self):
        space = two_mode_space()
        table = sigma_from_shat(
            s_hat_apply(SMatrixOp(space.identity()), vacuum_state(space)), m_max=1
        )
        with pytest.raises(KeyError):
            inclusive_cross_section(table, (0, 0))

    def test_complex_diagonal_rejected(self):
        table = InclusiveTable(modes=ModeSet.single(1.0), m_max=1)
        table.entries[((0,), (0,))] = 0.3 + 0.2j
        with pytest.raises(ValueError, match="not real"):
            inclusive_cross_section(table, (0,))

    def test_momentum_reduction_on_a_ring(self):
        modes = ModeSet.lattice(3, lambda k: 1.0 + 0.2 * math.cos(k))
        space = FockSpace(modes, n_max=2, hbar=1.0)
        s = SMatrixOp(space.identity())
        table = sigma_bruteforce(s, space.basis_vector((0, 1, 0)), m_max=1)
        reduced = momentum_reduced_entry(table, (1,), (1,))
        assert abs(reduced - 2.0 * math.pi / 3.0) < 1e-12
        assert momentum_reduced_entry(table, (1,), (2,)) == 0.0

    def test_momentum_reduction_needs_momenta(self):
        table = InclusiveTable(modes=ModeSet.single(1.0), m_max=1)
        with pytest.raises(ValueError, match="momenta"):
            momentum_reduced_entry(table, (0,), (0,))


class TestCompleteness:
    def solvable(self, g: float):
        modes = ModeSet.single(1.1)
        space = FockSpace(modes, n_max=10, hbar=1.0)
        coeffs = free_hamiltonian(modes) + diagonal_coupling(modes, 0.7).scaled(g)
        return space, build_poly_operator(space, coeffs, require_hermitian=True)

    def test_empty_words(self):
        space, h = self.solvable(0.0)
        assert completeness_check([], [], vacuum_state(space), h) < 1e-14

    def test_single_ladder_words_free(self):
        space, h = self.solvable(0.0)
        a_word = [("a", 0, 0.6)]
        b_word = [("a+", 0, 0.2)]
        assert completeness_check(a_word, b_word, vacuum_state(space), h) < 1e-10

    def test_random_degree_two_words_interacting(self):
        space, h = self.solvable(0.3)
        rng = np.random.default_rng(17)
        for _ in range(4):
            ta = np.sort(rng.uniform(0.0, 2.0, size=2))[::-1]
            tb = np.sort(rng.uniform(0.0, 2.0, size=2))
            a_word = [("a", 0, ta[0]), ("a+", 0, ta[1])]
            b_word = [("a+", 0, tb[0]), ("a", 0, tb[1])]
            assert completeness_check(a_word, b_word, vacuum_state(space), h) < 1e-9

    def test_ordering_violations_rejected(self):
        space, h = self.solvable(0.0)
        bad = [("a", 0, 0.1), ("a+", 0, 0.5)]
        with pytest.raises(ValueError, match="non-increasing"):
            completeness_check(bad, [], vacuum_state(space), h)
        with pytest.raises(ValueError, match="non-decreasing"):
            completeness_check([], list(reversed(bad)), vacuum_state(space), h)

    def test_mixed_density_rejected(self):
        space, h = self.solvable(0.0)
        with pytest.raises(ValueError, match="pure-state"):
            completeness_check([], [], thermal_state(space, temperature=0.9), h)


class TestPoleBridge:
    def test_scattering_phase_rate_matches_resummed_pole(self):
        """Dressed frequency, measured two unrelated ways, must agree.

        Route 1: first-order self-energy -> resolvent -> pole fit.
        Route 2: phase rate of the one-particle coefficient of the scattered
        functional under exp(-i H t).
        """
        omega, v, g, temp = 1.1, 0.7, 0.05, 0.8
        modes = ModeSet.single(omega)

        occupation = 1.0 / math.expm1(omega / temp)
        prop = free_propagator(modes, {0: occupation}, hbar=1.0)
        spec = TwoPointG.from_free(prop, 0, 40.0, 4001).spectrum(
            np.linspace(-3.0, 3.0, 1201), eta=0.5
        )
        interaction = diagonal_coupling(modes, v).scaled(g)
        m1 = self_energy_diagrams(interaction, prop, 0, order=1)
        poles = quasiparticle_poles(dyson_solve(spec, m1))
        pole = max(poles, key=lambda z: z.real)

        space = FockSpace(modes, n_max=6, hbar=1.0)
        coeffs = free_hamiltonian(modes) + interaction
        h = build_poly_operator(space, coeffs, require_hermitian=True)
        psi = (space.basis_vector((0,)) + space.basis_vector((1,))) / math.sqrt(2)
        density = pure_density(space, psi)
        times = np.linspace(0.1, 0.9, 5)
        values = []
        for t in times:
            s = SMatrixOp((h * (-1j * t)).expm())
            table = sigma_from_shat(s_hat_apply(s, density), m_max=1)
            values.append(table.entry((), (0,)))
        phase_rate = -np.polyfit(times, np.unwrap(np.angle(values)), 1)[0]

        assert abs(phase_rate - (omega + g * v)) < 1e-10
        assert abs(pole.real - phase_rate) < 1e-4
