"""Inclusive scattering tables from the lifted action of a unitary S-matrix.

A unitary ``S`` on Fock space acts on functionals through the sandwich
``K -> S K S^+``. The normal-ordered coefficients of the transformed
functional are, entry by entry, inclusive amplitudes: the ``(m, m')``
coefficient at mode tuples ``(k | k')`` equals a sum over ALL undetected
final-state content of products of exclusive scattering amplitudes,

    sum_n sum_p  sqrt((m+n)!) sqrt((m'+n)!) / n!
                 <S psi | k, p> conj(<S psi | k', p>),

where ``p`` runs over ordered tuples of extra modes and the list states
``|p_1 .. p_n> = sqrt(1/n!) a+(p_1) .. a+(p_n) |0>`` resolve the identity.
Diagonal entries are inclusive detection rates ("see exactly these modes,
plus anything else"); that is the number an experiment on an open medium
actually measures.

The module computes the table two independent ways (coefficient readout of
the transformed functional vs. the explicit amplitude sum) and checks the
identities that make it meaningful: hermiticity, diagonal positivity,
probability sums, and the final-state completeness relation between
time-ordered and anti-time-ordered operator words.

The ladder scale is fixed to ``hbar = 1`` here: the list-state normalization
and the factorial combinatorics above assume the unscaled commutator. Spaces
with any other scale are rejected.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fock import FockSpace, ModeSet, PolyCoefficients, SparseOperator, build_poly_operator, heisenberg
from .lfunctional import CorrelationTable, l_from_density

__all__ = [
    "SMatrixOp",
    "InclusiveTable",
    "beamsplitter",
    "s_hat_apply",
    "sigma_from_shat",
    "sigma_bruteforce",
    "inclusive_cross_section",
    "momentum_reduced_entry",
    "completeness_check",
]

TWO_PI = 2.0 * math.pi


def _require_unit_scale(space: FockSpace) -> None:
    if abs(space.hbar - 1.0) > 1e-12:
        raise ValueError(
            "inclusive tables assume hbar = 1 (list-state normalization); "
            f"got hbar = {space.hbar}"
        )


@dataclass
class SMatrixOp:
    """Unitary scattering operator on a truncated Fock space.

    Args:
        op: the operator; checked for unitarity at construction.
        provenance: ``"supplied"`` (built directly) or ``"adiabatic"``
            (obtained from a switching limit elsewhere).
        sector_cut: restrict the unitarity check to total occupation at or
            below this value. Operators assembled on the truncated space
            from non-number-conserving generators can leak probability
            through the cut in the top sectors while being faithful below;
            ``None`` checks the whole space.
    """

    op: SparseOperator
    provenance: str = "supplied"
    sector_cut: int | None = None
    tol: float = 1e-8

    def __post_init__(self):
        if self.provenance not in ("supplied", "adiabatic"):
            raise ValueError("provenance must be 'supplied' or 'adiabatic'")
        _require_unit_scale(self.op.space)
        defect = self.unitarity_defect(self.sector_cut)
        if defect > self.tol:
            raise ValueError(
                f"operator is not unitary on the checked sectors "
                f"(defect {defect:.3e} > {self.tol:.1e})"
            )

    @property
    def space(self) -> FockSpace:
        return self.op.space

    def unitarity_defect(self, sector_cut: int | None = None) -> float:
        """Operator norm of ``S^+ S - 1``, optionally sector-projected."""
        space = self.op.space
        defect = self.op.dagger() @ self.op - space.identity()
        if sector_cut is not None:
            proj = space.sector_projector(sector_cut)
            defect = proj @ defect @ proj
        return defect.norm("op")

    @classmethod
    def from_generator(cls, space: FockSpace, generator: PolyCoefficients,
                       provenance: str = "supplied") -> "SMatrixOp":
        """``exp(G)`` of an anti-Hermitian ladder polynomial ``G``.

        The exponential of an anti-Hermitian matrix is exactly unitary on
        the truncated space, with no leakage caveats.
        """
        g = build_poly_operator(space, generator)
        if (g + g.dagger()).norm("op") > 1e-10:
            raise ValueError("generator must be anti-Hermitian")
        return cls(g.expm(), provenance=provenance)


def beamsplitter(space: FockSpace, theta: float = math.pi / 4,
                 pair: tuple = (0, 1)) -> SMatrixOp:
    """Two-mode mixer ``exp(theta (a+_A a_B - a+_B a_A))``.

    Rotates ``a+_A -> cos(theta) a+_A - sin(theta) a+_B``; ``theta = pi/4``
    is the balanced 50/50 splitter.
    """
    a, b = pair
    gen = PolyCoefficients()
    gen.add_term((a,), (b,), theta)
    gen.add_term((b,), (a,), -theta)
    return SMatrixOp.from_generator(space, gen)


def s_hat_apply(s: SMatrixOp, density: SparseOperator,
                degree_cut: int | None = None) -> CorrelationTable:
    """Functional image of the scattered state, ``K -> S K S^+``.

    The sandwich preserves trace, hermiticity, and positivity, so the
    result is again a physical functional.
    """
    _require_unit_scale(density.space)
    transformed = s.op @ density @ s.op.dagger()
    return l_from_density(transformed, degree_cut)


def _exponents(modes: ModeSet, labels: tuple) -> tuple:
    out = [0] * len(modes)
    for lab in labels:
        out[modes.index(lab)] += 1
    return tuple(out)


def _ordered_count(labels: tuple) -> float:
    """Number of ordered arrangements of a sorted tuple."""
    count = math.factorial(len(labels))
    for _, group in itertools.groupby(labels):
        count //= math.factorial(len(tuple(group)))
    return float(count)


def _mode_tuples(modes: ModeSet, length: int):
    return itertools.combinations_with_replacement(modes.labels, length)


@dataclass
class InclusiveTable:
    """Inclusive amplitudes ``(m, m', k-tuple, k'-tuple) -> complex``.

    Entries are symmetric in each tuple separately, so keys store sorted
    tuples; ``m`` and ``m'`` are the tuple lengths. Conventions carried by
    the table: ``hbar = 1``, diagonal entries ARE the inclusive rates
    (proportionality constant 1), and mode sums are plain label sums (no
    measure factors).
    """

    modes: ModeSet
    m_max: int
    entries: dict = field(default_factory=dict)
    source: str = "coefficients"

    def entry(self, left, right) -> complex:
        """``sigma(left | right)``; raises ``KeyError`` when not tabulated."""
        key = (tuple(sorted(left)), tuple(sorted(right)))
        return self.entries[key]

    def hermiticity_defect(self) -> float:
        """Max violation of ``sigma(l|r) = conj(sigma(r|l))``."""
        worst = 0.0
        for (left, right), value in self.entries.items():
            mirror = self.entries.get((right, left), 0.0)
            worst = max(worst, abs(value - np.conj(mirror)))
        return worst

    def diagonal_defect(self) -> float:
        """Largest imaginary part or negativity among diagonal entries."""
        worst = 0.0
        for (left, right), value in self.entries.items():
            if left == right:
                worst = max(worst, abs(value.imag), max(0.0, -value.real))
        return worst

    def probability_sum(self, m: int) -> float:
        """``sum over ordered m-tuples of sigma(k|k) / m!``.

        Equals 1 when the scatterer conserves particle number and the input
        has exactly ``m`` of them (the inclusive rates then exhaust a
        complete set of outcomes).
        """
        total = 0.0
        for key in _mode_tuples(self.modes, m):
            total += (self.entry(key, key) * _ordered_count(key)).real
        return total / math.factorial(m)


def sigma_from_shat(table: CorrelationTable, m_max: int) -> InclusiveTable:
    """Read the inclusive table off a transformed functional's coefficients.

    The ``(m, m')`` coefficient of the functional at creation exponents
    ``mu`` and annihilation exponents ``nu`` is exactly the inclusive
    amplitude at the corresponding mode tuples.

    Raises:
        ValueError: when the table's degree cut cannot hold ``m_max``-tuple
            entries (needs degree ``2 m_max``).
    """
    if 2 * m_max > table.degree_cut:
        raise ValueError(
            f"degree shortfall: entries up to m = {m_max} need coefficients "
            f"of degree {2 * m_max}, table holds {table.degree_cut}"
        )
    out = InclusiveTable(modes=table.modes, m_max=m_max, source="coefficients")
    for m in range(m_max + 1):
        for left in _mode_tuples(table.modes, m):
            mu = _exponents(table.modes, left)
            for mp in range(m_max + 1):
                for right in _mode_tuples(table.modes, mp):
                    nu = _exponents(table.modes, right)
                    out.entries[(left, right)] = table.coefficient(mu, nu)
    return out


def _amplitude_map(space: FockSpace, target: np.ndarray) -> dict:
    """``<target | p_1 .. p_N>`` for every nonzero list state, by sorted tuple.

    List states are built by explicit creation-operator products on the
    vacuum (states beyond the truncation die out and prune the walk), then
    normalized by ``sqrt(1/N!)``.
    """
    labels = space.modes.labels
    creators = [space.creator(lab).mat for lab in labels]
    amps: dict[tuple, complex] = {}

    def walk(tup: tuple, vec: np.ndarray, start: int):
        amps[tup] = complex(np.vdot(target, vec)) / math.sqrt(math.factorial(len(tup)))
        for i in range(start, len(labels)):
            grown = creators[i] @ vec
            if np.any(grown):
                walk(tup + (labels[i],), grown, i)

    walk((), space.basis_vector((0,) * len(labels)), 0)
    return amps


def sigma_bruteforce(s: SMatrixOp, psi: np.ndarray, m_max: int,
                     tail_tol: float = 1e-10) -> InclusiveTable:
    """Inclusive table from the explicit sum over undetected final states.

    Independent of the coefficient route: scatters the vector, projects on
    list states, and accumulates

        sum_n sum_p sqrt((m+n)!) sqrt((m'+n)!) / n!
              <S psi | left, p> conj(<S psi | right, p>)

    over ordered extra tuples ``p`` (sorted tuples weighted by their
    arrangement count). Agreement with
    ``sigma_from_shat(s_hat_apply(s, |psi><psi|))`` is the module's central
    consistency theorem.

    Warns when the accounted probability differs from 1 by more than
    ``tail_tol`` (truncation has eaten part of the final-state sum).
    """
    space = s.space
    _require_unit_scale(space)
    psi = np.asarray(psi, dtype=np.complex128)
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"input state must be normalized (norm {norm:.6f})")
    scattered = s.op.mat @ psi
    amps = _amplitude_map(space, scattered)

    extras = []  # (sorted tuple, ordered count / n!)
    for n in range(space.n_max + 1):
        for p in _mode_tuples(space.modes, n):
            extras.append((p, _ordered_count(p) / math.factorial(n)))

    out = InclusiveTable(modes=space.modes, m_max=m_max, source="amplitudes")
    for m in range(m_max + 1):
        for left in _mode_tuples(space.modes, m):
            for mp in range(m_max + 1):
                for right in _mode_tuples(space.modes, mp):
                    total = 0.0 + 0.0j
                    for p, weight in extras:
                        a_left = amps.get(tuple(sorted(left + p)))
                        a_right = amps.get(tuple(sorted(right + p)))
                        if not a_left or not a_right:
                            continue
                        n = len(p)
                        factor = weight * math.sqrt(
                            math.factorial(m + n)) * math.sqrt(math.factorial(mp + n))
                        total += factor * a_left * np.conj(a_right)
                    out.entries[(left, right)] = total

    tail = abs(out.entries[((), ())] - 1.0)
    if tail > tail_tol:
        warnings.warn(
            f"final-state sum not converged on the truncated space "
            f"(unaccounted probability {tail:.3e})",
            stacklevel=2,
        )
    return out


def inclusive_cross_section(table: InclusiveTable, out: tuple) -> float:
    """Inclusive rate of detecting exactly the modes in ``out``.

    Diagonal entries are real and nonnegative for physical tables; the
    imaginary part is checked and discarded.
    """
    value = table.entry(out, out)
    if abs(value.imag) > 1e-9 * max(1.0, abs(value)):
        raise ValueError(f"diagonal entry is not real: {value}")
    return value.real


def momentum_reduced_entry(table: InclusiveTable, left, right) -> complex:
    """Entry with the lattice momentum-conservation factor removed.

    On a ring of ``L`` sites the continuum conservation delta becomes a
    Kronecker delta times ``L / 2 pi``; this returns ``entry / (L / 2 pi)``
    when the tuple momenta agree (mod ``2 pi``) and 0 otherwise.
    """
    modes = table.modes
    if modes.momentum is None:
        raise ValueError("mode set carries no momenta")
    total = sum(modes.momentum_of(lab) for lab in left)
    total -= sum(modes.momentum_of(lab) for lab in right)
    if abs((total + math.pi) % TWO_PI - math.pi) > 1e-9:
        return 0.0 + 0.0j
    return table.entry(left, right) / (len(modes) / TWO_PI)


def _word_operator(space: FockSpace, word, hamiltonian: SparseOperator) -> SparseOperator:
    out = space.identity()
    for kind, label, time in word:
        if kind == "a+":
            ladder = space.creator(label)
        elif kind == "a":
            ladder = space.annihilator(label)
        else:
            raise ValueError(f"word entries must be 'a+' or 'a', got {kind!r}")
        out = out @ heisenberg(ladder, hamiltonian, float(time))
    return out


def _pure_vector(density: SparseOperator) -> np.ndarray:
    evals, vecs = np.linalg.eigh(density.to_dense())
    if abs(evals[-1] - 1.0) > 1e-10 or abs(evals[:-1]).max(initial=0.0) > 1e-10:
        raise ValueError("density must be a pure-state projector")
    return vecs[:, -1]


def completeness_check(a_word, b_word, density: SparseOperator,
                       hamiltonian: SparseOperator) -> float:
    """Residual of the final-state resolution between two operator words.

    Compares ``<psi| B A |psi>`` against ``sum_p <psi|B|p><p|A|psi>`` over
    the list-state basis, where ``A`` is a time-ordered word (times
    non-increasing left to right), ``B`` an anti-time-ordered one (times
    non-decreasing), both given as sequences of ``(kind, label, time)``
    with kind ``"a+"`` or ``"a"``; ``density`` is a pure-state projector.
    On the truncated space the list states resolve the identity exactly, so
    the residual measures only the numerical pipeline.
    """
    space = density.space
    _require_unit_scale(space)
    times_a = [t for _, _, t in a_word]
    if any(t1 < t2 for t1, t2 in zip(times_a, times_a[1:])):
        raise ValueError("time-ordered word must have non-increasing times")
    times_b = [t for _, _, t in b_word]
    if any(t1 > t2 for t1, t2 in zip(times_b, times_b[1:])):
        raise ValueError("anti-time-ordered word must have non-decreasing times")

    psi = _pure_vector(density)
    a_op = _word_operator(space, a_word, hamiltonian)
    b_op = _word_operator(space, b_word, hamiltonian)
    lhs = complex(np.vdot(psi, b_op.mat @ (a_op.mat @ psi)))

    bra = (b_op.mat.conjugate().transpose() @ psi).conj()  # <psi| B, as a row
    ket = a_op.mat @ psi
    labels = space.modes.labels
    creators = [space.creator(lab).mat for lab in labels]
    rhs = 0.0 + 0.0j

    def walk(tup: tuple, vec: np.ndarray, start: int):
        nonlocal rhs
        # <psi|B|p><p|A|psi> with |p> = vec / sqrt(n!), summed over orderings
        n = len(tup)
        weight = _ordered_count(tup) / math.factorial(n)
        rhs += weight * (bra @ vec) * complex(np.vdot(vec, ket))
        for i in range(start, len(labels)):
            grown = creators[i] @ vec
            if np.any(grown):
                walk(tup + (labels[i],), grown, i)

    walk((), space.basis_vector((0,) * len(labels)), 0)
    return float(abs(lhs - rhs))
