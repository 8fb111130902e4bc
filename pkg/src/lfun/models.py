"""Model Hamiltonians shared by the tests, demos, and command-line tools.

All builders return :class:`~lfun.fock.PolyCoefficients`, usable both for
constructing explicit truncated-space operators and for lifting to
superoperators acting on functionals.
"""

from __future__ import annotations

from typing import Callable, Mapping

from .fock import ModeSet, PolyCoefficients

__all__ = [
    "free_hamiltonian",
    "diagonal_coupling",
    "pair_coupling",
    "quartic_contact",
]


def _per_mode(modes: ModeSet, strength) -> dict:
    if isinstance(strength, Mapping):
        return {lab: complex(strength[lab]) for lab in modes.labels}
    if isinstance(strength, Callable):
        return {lab: complex(strength(lab)) for lab in modes.labels}
    return {lab: complex(strength) for lab in modes.labels}


def free_hamiltonian(modes: ModeSet) -> PolyCoefficients:
    """Quadratic diagonal Hamiltonian ``sum_k omega_k a^+_k a_k``."""
    out = PolyCoefficients()
    for lab in modes.labels:
        out.add_term((lab,), (lab,), modes.omega_of(lab))
    return out


def diagonal_coupling(modes: ModeSet, strength=1.0) -> PolyCoefficients:
    """Number-conserving perturbation ``sum_k v_k a^+_k a_k``.

    ``strength`` may be a scalar, a mapping ``label -> v``, or a callable.
    The exactly solvable reference model throughout: switching it on merely
    shifts each mode frequency by ``v_k``.
    """
    v = _per_mode(modes, strength)
    out = PolyCoefficients()
    for lab in modes.labels:
        out.add_term((lab,), (lab,), v[lab])
    return out


def pair_coupling(modes: ModeSet, strength=1.0) -> PolyCoefficients:
    """Pair creation/annihilation ``sum_k c_k (a^+_k a^+_{-k} + a_{-k} a_k)``.

    Requires a momentum-closed mode set (every label has a negation
    partner). Each unordered pair ``{k, -k}`` contributes once; ``c_k`` must
    be real for a Hermitian result. Unlike the number-conserving coupling,
    this one deforms every equilibrium state, which makes it the right probe
    for adiabatic return-to-stationarity checks.
    """
    if not modes.momentum_closed():
        raise ValueError("pair coupling needs a momentum-closed mode set")
    c = _per_mode(modes, strength)
    out = PolyCoefficients()
    seen = set()
    for lab in modes.labels:
        partner = modes.negation_partner(lab)
        key = frozenset((lab, partner))
        if key in seen:
            continue
        seen.add(key)
        out.add_term((lab, partner), (), c[lab])
        out.add_term((), (partner, lab), complex(c[lab]).conjugate())
    return out


def quartic_contact(modes: ModeSet, u: float = 1.0) -> PolyCoefficients:
    """Momentum-conserving contact interaction.

    ``(u / M) * sum a^+_{k1} a^+_{k2} a_{k3} a_{k4}`` over all label
    quadruples with ``k1 + k2 = k3 + k4 (mod 2 pi)``, where ``M`` is the
    number of modes. For a single abstract mode this reduces to
    ``u a^+ a^+ a a``.
    """
    out = PolyCoefficients()
    if len(modes) == 1:
        lab = modes.labels[0]
        out.add_term((lab, lab), (lab, lab), u)
        return out
    if modes.momentum is None:
        raise ValueError("multimode contact interaction needs lattice momenta")
    scale = u / len(modes)
    import math

    two_pi = 2.0 * math.pi
    for k1 in modes.labels:
        for k2 in modes.labels:
            for k3 in modes.labels:
                for k4 in modes.labels:
                    total = (
                        modes.momentum_of(k1)
                        + modes.momentum_of(k2)
                        - modes.momentum_of(k3)
                        - modes.momentum_of(k4)
                    )
                    if abs(math.remainder(total, two_pi)) < 1e-12:
                        out.add_term((k1, k2), (k3, k4), scale)
    return out
