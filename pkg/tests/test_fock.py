"""Ladder-operator layer: scaled CCR, states, Weyl elements, Heisenberg flow."""

import math

import numpy as np
import pytest

from lfun.fock import (
    FockSpace,
    ModeSet,
    PolyCoefficients,
    build_poly_operator,
    coherent_state,
    heisenberg,
    thermal_state,
    vacuum_state,
    weyl_displacement,
)


def single_mode_space(n_max, hbar=1.0, omega=1.0):
    return FockSpace(ModeSet.single(omega), n_max=n_max, hbar=hbar)


def test_ladder_matrix_elements_unit_hbar():
    space = single_mode_space(n_max=2, hbar=1.0)
    a = space.annihilator(0).to_dense()
    # <0| a |1> = sqrt(hbar * 1) = 1
    assert a[space.index[(0,)], space.index[(1,)]] == pytest.approx(1.0)


def test_ladder_matrix_elements_scaled_hbar():
    space = single_mode_space(n_max=3, hbar=2.0)
    a = space.annihilator(0).to_dense()
    # <1| a |2> = sqrt(hbar * 2) = 2
    assert a[space.index[(1,)], space.index[(2,)]] == pytest.approx(2.0)


@pytest.mark.parametrize("hbar", [1.0, 0.5, 2.0])
def test_ccr_on_protected_sector(hbar):
    # [a, a+] = hbar holds below the truncation edge; the top level is
    # corrupted by construction, so restrict with a projector.
    space = single_mode_space(n_max=12, hbar=hbar)
    a = space.annihilator(0)
    comm = a @ a.dagger() - a.dagger() @ a
    proj = space.sector_projector(space.n_max - 1)
    residual = (proj @ (comm - hbar * space.identity()) @ proj).norm()
    assert residual < 1e-12


def test_ccr_multimode_cross_commutators():
    modes = ModeSet.lattice(3, dispersion=lambda k: 1.0 + 0.2 * math.cos(k))
    space = FockSpace(modes, n_max=4, hbar=1.5)
    proj = space.sector_projector(space.n_max - 1)
    for i in modes.labels:
        for j in modes.labels:
            a_i = space.annihilator(i)
            adag_j = space.creator(j)
            comm = a_i @ adag_j - adag_j @ a_i
            expected = (1.5 if i == j else 0.0) * space.identity()
            assert (proj @ (comm - expected) @ proj).norm() < 1e-12
    # annihilators commute among themselves everywhere
    a0, a1 = space.annihilator(0), space.annihilator(1)
    assert (a0 @ a1 - a1 @ a0).norm() < 1e-14


def test_weyl_factorization_identity():
    # exp(-alpha a+ + alpha* a) = exp(-hbar |alpha|^2 / 2) exp(-alpha a+) exp(alpha* a);
    # the scalar factor follows from BCH with [alpha* a, -alpha a+] central.
    space = single_mode_space(n_max=20, hbar=1.0)
    alpha = 0.3 * np.exp(0.4j)
    lhs = weyl_displacement(space, {0: alpha})
    e_create = ((-alpha) * space.creator(0)).expm()
    e_ann = (np.conj(alpha) * space.annihilator(0)).expm()
    rhs = math.exp(-space.hbar * abs(alpha) ** 2 / 2) * (e_create @ e_ann)
    proj = space.sector_projector(space.n_max // 2)
    assert (proj @ (lhs - rhs) @ proj).norm() < 1e-8


def test_poly_operator_two_mode_number_sum():
    modes = ModeSet(labels=(0, 1), omega=(1.0, 1.7))
    space = FockSpace(modes, n_max=3, hbar=2.0)
    coeffs = PolyCoefficients()
    for lab in modes.labels:
        coeffs.add_term((lab,), (lab,), modes.omega_of(lab))
    h = build_poly_operator(space, coeffs, require_hermitian=True)
    v = space.basis_vector((1, 1))
    # a+ a has eigenvalue hbar * n, so H |1,1> = hbar (w0 + w1) |1,1>
    assert np.allclose(h.to_dense() @ v, space.hbar * (1.0 + 1.7) * v)


def test_poly_operator_matches_explicit_product():
    rng = np.random.default_rng(7)
    modes = ModeSet(labels=(0, 1), omega=(1.0, 2.0))
    space = FockSpace(modes, n_max=4, hbar=1.0)
    c = complex(rng.normal(), rng.normal())
    coeffs = PolyCoefficients().add_term((0, 1), (1,), c)
    built = build_poly_operator(space, coeffs)
    explicit = c * (space.creator(0) @ space.creator(1) @ space.annihilator(1))
    assert (built - explicit).norm() < 1e-12


def test_poly_hermitian_guard():
    coeffs = PolyCoefficients().add_term((0,), (), 1.0 + 0.5j)
    space = single_mode_space(n_max=2)
    assert coeffs.hermitian_defect() > 0.1
    with pytest.raises(ValueError):
        build_poly_operator(space, coeffs, require_hermitian=True)


def test_momentum_defect_flags_nonconserving_terms():
    modes = ModeSet.lattice(4, dispersion=lambda k: 1.0)
    good = PolyCoefficients().add_term((1, 3), (2, 2), 0.25)  # k1+k3 = 2*k2 mod 2pi
    bad = PolyCoefficients().add_term((1,), (2,), 0.5)
    assert good.momentum_defect(modes) == 0.0
    assert bad.momentum_defect(modes) == pytest.approx(0.5)


def test_lattice_modeset_closed_under_negation():
    modes = ModeSet.lattice(5, dispersion=lambda k: 1.0 + 0.3 * math.cos(k))
    assert modes.momentum_closed()
    assert modes.negation_partner(2) == 3


def test_thermal_occupation_matches_bose_factor():
    # hbar = omega = T = 1: Tr(a+ a K) = 1/(e - 1) = 0.5819767068693265
    space = single_mode_space(n_max=40, hbar=1.0, omega=1.0)
    k = thermal_state(space, temperature=1.0)
    occ = space.number_operator(0).expectation(k).real
    assert occ == pytest.approx(1.0 / (math.e - 1.0), rel=1e-12)


def test_thermal_occupation_with_chemical_potential():
    space = single_mode_space(n_max=60, hbar=0.5, omega=2.0)
    t, mu = 1.3, 0.4
    k = thermal_state(space, temperature=t, mu=mu)
    occ = space.number_operator(0).expectation(k).real
    expected = 0.5 / (math.exp(0.5 * (2.0 - 0.4) / 1.3) - 1.0)
    assert occ == pytest.approx(expected, rel=1e-10)


def test_thermal_exchange_relation():
    # a K = exp(-hbar omega / T) K a below the truncation edge
    space = single_mode_space(n_max=30, hbar=1.0, omega=1.2)
    t = 0.9
    k = thermal_state(space, temperature=t)
    a = space.annihilator(0)
    proj = space.sector_projector(space.n_max - 2)
    lhs = a @ k
    rhs = math.exp(-space.hbar * 1.2 / t) * (k @ a)
    assert (proj @ (lhs - rhs) @ proj).norm() < 1e-12


def test_thermal_rejects_bad_parameters():
    space = single_mode_space(n_max=5)
    with pytest.raises(ValueError):
        thermal_state(space, temperature=0.0)
    with pytest.raises(ValueError):
        thermal_state(space, temperature=1.0, mu=1.0)


def test_coherent_state_is_ladder_eigenstate():
    space = single_mode_space(n_max=25, hbar=2.0)
    beta = 0.4 - 0.3j
    k = coherent_state(space, {0: beta})
    assert k.trace() == pytest.approx(1.0)
    a = space.annihilator(0)
    proj = space.sector_projector(space.n_max - 2)
    assert (proj @ (a @ k - beta * k) @ proj).norm() < 1e-10


def test_coherent_state_truncation_guard():
    space = single_mode_space(n_max=4, hbar=1.0)
    with pytest.raises(ValueError):
        coherent_state(space, {0: 3.0})


def test_heisenberg_free_rotation():
    # H = omega a+ a gives a(t) = e^{-i omega t} a for any hbar
    space = single_mode_space(n_max=8, hbar=1.7, omega=0.8)
    h = 0.8 * space.number_operator(0)
    t = 0.37
    a_t = heisenberg(space.annihilator(0), h, t)
    expected = np.exp(-1j * 0.8 * t) * space.annihilator(0)
    assert (a_t - expected).norm() < 1e-12


def test_heisenberg_requires_hermitian():
    space = single_mode_space(n_max=3)
    with pytest.raises(ValueError):
        heisenberg(space.annihilator(0), space.annihilator(0), 0.1)


def test_vacuum_is_annihilated():
    space = single_mode_space(n_max=6)
    k = vacuum_state(space)
    assert k.trace() == pytest.approx(1.0)
    assert (space.annihilator(0) @ k).norm() < 1e-14


def test_weyl_displacement_is_unitary():
    space = single_mode_space(n_max=18)
    w = weyl_displacement(space, {0: 0.2 + 0.1j})
    proj = space.sector_projector(9)
    assert (proj @ (w.dagger() @ w - space.identity()) @ proj).norm() < 1e-10
