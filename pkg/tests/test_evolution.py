"""Lifted dynamics against dense truncated-space propagation.

The oracle throughout is direct matrix evolution on the Fock space: the
lifted equation of motion must reproduce ``-(i/hbar)(H K - K H^+)`` term by
term, and the adiabatic S-matrix builders must match time-ordered dense
integration of the same switched Hamiltonian.
"""

import math

import numpy as np
import pytest

from lfun import (
    FockSpace,
    GaussPolyL,
    GaussianL,
    ModeSet,
    PolyCoefficients,
    SparseOperator,
    build_poly_operator,
    coherent_state,
    equilibrium_gaussian,
    l_from_density,
    thermal_state,
)
from lfun.evolution import (
    AdiabaticReport,
    DressOperator,
    HatHamiltonian,
    SwitchingProfile,
    adiabatic_evolve,
    adiabatic_smatrix,
    adiabatic_trend,
    dress_rates,
    dressed_smatrix,
    evolve,
    interaction_picture_smatrix,
)
from lfun.models import diagonal_coupling, free_hamiltonian, pair_coupling, quartic_contact

TWO_MODES = ModeSet(labels=(0, 1), omega=(1.0, 1.7))


def random_operator(space, rng, protect=None):
    mat = rng.standard_normal((space.dim, space.dim)) + 1j * rng.standard_normal(
        (space.dim, space.dim)
    )
    op = SparseOperator(space, mat)
    if protect is not None:
        p = space.sector_projector(protect)
        op = p @ op @ p
    return op


def hermitian_poly(rng) -> PolyCoefficients:
    """Random Hermitian polynomial on two modes, degree <= 2 per side."""
    out = PolyCoefficients()
    words = [((0,), (0,)), ((1,), (1,)), ((0,), (1,)), ((0, 1), ()), ((0, 0), (1,)),
             ((0, 1), (0, 1))]
    for kt, lt in words:
        c = complex(rng.standard_normal(), rng.standard_normal())
        out.add_term(kt, lt, c)
        out.add_term(lt, kt, np.conj(c))
    return out


class TestHatHamiltonian:
    def test_matches_two_sided_oracle(self):
        space = FockSpace(TWO_MODES, n_max=4, hbar=1.3)
        for seed in range(4):
            rng = np.random.default_rng(100 + seed)
            coeffs = hermitian_poly(rng)
            h_op = build_poly_operator(space, coeffs, require_hermitian=True)
            k_op = random_operator(space, rng, protect=space.n_max - 2)
            hat = HatHamiltonian(TWO_MODES, space.hbar, coeffs)
            got = hat.apply(l_from_density(k_op))
            rhs_op = (h_op @ k_op + (-1.0) * (k_op @ h_op)) * (-1j / space.hbar)
            want = l_from_density(rhs_op)
            scale = max(np.abs(want.data).max(), 1.0)
            assert np.abs(got.data - want.data).max() < 1e-11 * scale, seed

    def test_nonhermitian_coefficients_use_adjoint_on_the_right(self):
        # H = c a^+_0 a_1 with complex c; the right branch must see conj(c)
        space = FockSpace(TWO_MODES, n_max=4, hbar=0.9)
        rng = np.random.default_rng(55)
        coeffs = PolyCoefficients().add_term((0,), (1,), 0.8 - 0.35j)
        h_op = build_poly_operator(space, coeffs)
        k_op = random_operator(space, rng, protect=space.n_max - 1)
        hat = HatHamiltonian(TWO_MODES, space.hbar, coeffs)
        got = hat.apply(l_from_density(k_op))
        rhs_op = (h_op @ k_op + (-1.0) * (k_op @ h_op.dagger())) * (-1j / space.hbar)
        want = l_from_density(rhs_op)
        assert np.abs(got.data - want.data).max() < 1e-11 * np.abs(want.data).max()

    def test_free_hat_annihilates_equilibrium(self):
        modes = TWO_MODES
        space = FockSpace(modes, n_max=8, hbar=1.0)
        hat = HatHamiltonian(modes, 1.0, free_hamiltonian(modes))
        table = l_from_density(thermal_state(space, temperature=1.4), degree_cut=10)
        residual = hat.apply(table)
        assert residual.norm() < 1e-13 * table.norm()
        # any diagonal Gaussian is stationary, not just the thermal one
        gauss = GaussianL(
            modes, 1.0, np.zeros((2, 2)), -np.diag([0.3, 1.1]), np.zeros((2, 2))
        )
        gp = hat.apply(GaussPolyL.constant(gauss, degree_cut=2))
        assert gp.norm() < 1e-13

    def test_quartic_erodes_but_matches_low_degrees(self):
        # one quartic application against the dense oracle, low-degree block
        modes = ModeSet.single(1.0)
        space = FockSpace(modes, n_max=8, hbar=1.0)
        coeffs = quartic_contact(modes, u=0.4)
        h_op = build_poly_operator(space, coeffs, require_hermitian=True)
        protector = space.sector_projector(4)
        state = protector @ thermal_state(space, temperature=1.0) @ protector
        hat = HatHamiltonian(modes, 1.0, coeffs)
        table = l_from_density(state, degree_cut=10)
        # four generator applications per branch: horizon drops by four
        got = hat.apply(table)
        assert got.exact_to == 6
        rhs_op = (h_op @ state + (-1.0) * (state @ h_op)) * -1j
        want = l_from_density(rhs_op, degree_cut=10)
        mask = got._deg <= 6
        assert np.abs(got.data[mask] - want.data[mask]).max() < 1e-11


class TestEvolve:
    def test_coherent_state_rotates(self):
        modes = ModeSet.single(1.3)
        space = FockSpace(modes, n_max=10, hbar=1.0)
        beta = 0.45
        table = l_from_density(coherent_state(space, {0: beta}))
        hat = HatHamiltonian(modes, 1.0, free_hamiltonian(modes))
        t = 0.9
        moved, err = evolve(table, hat, t, dt=0.01, error_estimate=True)
        assert err < 1e-8
        exact = table.free_rotation(t)
        assert np.abs(moved.data - exact.data).max() < 1e-7
        beta_t = beta * np.exp(-1.3j * t)
        rng = np.random.default_rng(8)
        for _ in range(3):
            a = 0.4 * (rng.standard_normal() + 1j * rng.standard_normal())
            want = np.exp(np.conj(a) * beta_t - a * np.conj(beta_t))
            assert abs(moved.evaluate([a]) - want) < 1e-6

    def test_rk4_is_fourth_order(self):
        modes = ModeSet.single(1.0)
        space = FockSpace(modes, n_max=6, hbar=1.0)
        table = l_from_density(coherent_state(space, {0: 0.3}))
        hat = HatHamiltonian(modes, 1.0, free_hamiltonian(modes))
        exact = table.free_rotation(1.0)
        errs = []
        for dt in (0.1, 0.05):
            moved = evolve(table, hat, 1.0, dt=dt)
            errs.append(np.abs(moved.data - exact.data).max())
        assert errs[0] / errs[1] > 8.0

    def test_richardson_estimate_tracks_actual_error(self):
        modes = ModeSet.single(1.0)
        space = FockSpace(modes, n_max=6, hbar=1.0)
        table = l_from_density(coherent_state(space, {0: 0.3}))
        hat = HatHamiltonian(modes, 1.0, free_hamiltonian(modes))
        fine, est = evolve(table, hat, 1.0, dt=0.1, error_estimate=True)
        actual = np.abs(fine.data - table.free_rotation(1.0).data).max()
        assert actual < 10 * est
        assert est < 50 * max(actual, 1e-16)


class TestSwitchingProfile:
    def test_shape(self):
        prof = SwitchingProfile(width=6.0, plateau_fraction=0.25)
        assert prof(0.0) == 1.0
        assert prof(1.4) == 1.0  # inside plateau (|t| <= 1.5)
        assert prof(6.0) == 0.0
        assert prof(7.0) == 0.0
        assert abs(prof(3.75) - 0.5) < 1e-12  # shoulder midpoint
        assert prof(-2.9) == prof(2.9)
        shoulder = prof(np.linspace(1.6, 5.9, 40))
        assert np.all(np.diff(shoulder) < 0)

    def test_half_integral_uses_shoulder_symmetry(self):
        prof = SwitchingProfile(width=6.0, plateau_fraction=0.25)
        # smoothstep satisfies s(x) + s(1-x) = 1, so the exact value is
        # plateau + half the shoulder length
        assert abs(prof.half_integral() - 3.75) < 1e-9

    def test_validation(self):
        with pytest.raises(ValueError):
            SwitchingProfile(width=0.0)
        with pytest.raises(ValueError):
            SwitchingProfile(width=1.0, plateau_fraction=1.0)


def dense_switched_unitary(space, coeffs, profile, rate, dt):
    """Time-ordered dense integration of the switched interaction picture."""
    hbar = space.hbar
    occ = space.occupations()
    energies = np.array(
        [sum(space.modes.omega[k] * hbar * occ[i, k] for k in range(len(space.modes)))
         for i in range(space.dim)]
    )
    v = build_poly_operator(space, coeffs).to_dense()
    span = profile.width / rate
    steps = int(math.ceil(2 * span / dt))
    h = 2 * span / steps

    def rhs(t, u):
        shape = profile(rate * t)
        if shape == 0.0:
            return np.zeros_like(u)
        phase = np.exp(1j * energies * t / hbar)
        v_int = (phase[:, None] * v) * np.conj(phase)[None, :]
        return (-1j / hbar) * shape * (v_int @ u)

    u = np.eye(space.dim, dtype=np.complex128)
    t = -span
    for _ in range(steps):
        k1 = rhs(t, u)
        k2 = rhs(t + h / 2, u + h / 2 * k1)
        k3 = rhs(t + h / 2, u + h / 2 * k2)
        k4 = rhs(t + h, u + h * k3)
        u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return u


class TestAdiabaticSmatrix:
    def setup_method(self):
        self.modes = ModeSet.single(1.0)
        self.space = FockSpace(self.modes, n_max=9, hbar=1.0)
        self.profile = SwitchingProfile(width=6.0, plateau_fraction=0.25)
        self.rate = 0.5
        # linear displacement coupling: noncommuting at different times
        g = 0.02
        self.coeffs = (
            PolyCoefficients().add_term((0,), (), g).add_term((), (0,), g)
        )
        self.hat = HatHamiltonian(self.modes, 1.0, self.coeffs)
        protector = self.space.sector_projector(5)
        state = protector @ thermal_state(self.space, temperature=1.0) @ protector
        self.table = l_from_density(state)
        u = dense_switched_unitary(self.space, self.coeffs, self.profile, self.rate, dt=0.02)
        evolved = u @ state.to_dense() @ u.conj().T
        self.oracle = l_from_density(SparseOperator(self.space, evolved))

    def test_nonperturbative_matches_dense(self):
        got = interaction_picture_smatrix(
            self.table, self.hat, self.profile, self.rate, dt=0.02
        )
        assert np.abs(got.data - self.oracle.data).max() < 1e-6

    def test_series_converges_to_dense(self):
        errs = []
        for order in (2, 3):
            got = adiabatic_smatrix(
                self.table, self.hat, self.profile, self.rate, order=order, n_steps=1200
            )
            errs.append(np.abs(got.data - self.oracle.data).max())
        assert errs[1] < 3e-5
        assert errs[1] < errs[0] / 3


class TestDressing:
    def test_dressing_cancels_solvable_phase(self):
        modes = ModeSet.single(1.0)
        space = FockSpace(modes, n_max=12, hbar=1.0)
        g, v = 0.3, 0.7
        profile = SwitchingProfile(width=6.0, plateau_fraction=0.25)
        rate = 0.5
        beta = 0.4
        table = l_from_density(coherent_state(space, {0: beta}), degree_cut=8)
        hat = HatHamiltonian(modes, 1.0, diagonal_coupling(modes, g * v))
        bare = interaction_picture_smatrix(table, hat, profile, rate, dt=0.01)
        theta = 2.0 * g * v * profile.half_integral() / rate
        got = bare.coefficient((0,), (1,))
        assert abs(got - beta * np.exp(-1j * theta)) < 1e-6
        rates = dress_rates(
            modes, lambda lab, x: 1.0 + x * v, coupling=g, profile=profile, rate=rate
        )
        assert abs(rates[0] - g * v * profile.half_integral() / rate) < 1e-9
        dressed = dressed_smatrix(table, hat, profile, rate, rates, dt=0.01)
        assert (dressed - table).norm(max_degree=2) < 1e-6

    def test_dress_operator_inverse(self):
        modes = ModeSet.single(1.0)
        space = FockSpace(modes, n_max=6, hbar=1.0)
        table = l_from_density(coherent_state(space, {0: 0.3 + 0.2j}))
        dress = DressOperator(modes, {0: 0.77})
        back = dress.inverse().apply(dress.apply(table))
        assert np.abs(back.data - table.data).max() < 1e-14


class TestAdiabaticTrend:
    def test_pair_coupling_returns_to_equilibrium_as_switching_slows(self):
        modes = ModeSet.lattice(1, dispersion=lambda k: 1.0)
        space = FockSpace(modes, n_max=8, hbar=1.0)
        table = l_from_density(thermal_state(space, temperature=1.0), degree_cut=8)
        hat = HatHamiltonian(modes, 1.0, pair_coupling(modes, 0.15))
        profile = SwitchingProfile(width=6.0, plateau_fraction=0.25)
        report = adiabatic_trend(
            table, hat, profile, rate_sequence=[0.8, 0.4, 0.2], dt=0.04,
            compare_degree=2,
        )
        assert isinstance(report, AdiabaticReport)
        assert len(report.defects) == 3
        assert report.monotone, report.defects
        assert report.defects[-1] < report.defects[0] / 4
        assert report.converged()

    def test_lab_and_interaction_pictures_agree(self):
        modes = ModeSet.single(1.0)
        space = FockSpace(modes, n_max=8, hbar=1.0)
        table = l_from_density(thermal_state(space, temperature=1.0), degree_cut=8)
        free = HatHamiltonian(modes, 1.0, free_hamiltonian(modes))
        hat = HatHamiltonian(modes, 1.0, pair_coupling(ModeSet.lattice(1, dispersion=lambda k: 1.0), 0.1))
        profile = SwitchingProfile(width=4.0, plateau_fraction=0.25)
        rate = 0.5
        span = profile.width / rate
        lab = adiabatic_evolve(table, free, hat, profile, rate, dt=0.02)
        inter = interaction_picture_smatrix(table, hat, profile, rate, dt=0.02)
        assert np.abs(lab.data - inter.free_rotation(span).data).max() < 1e-6
