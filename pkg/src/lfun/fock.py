"""Truncated multimode bosonic Fock space with hbar-scaled ladder operators.

Conventions used throughout the package:

* the commutator is scaled, ``[a_k, a_l^+] = hbar * delta_{kl}``, so matrix
  elements are ``a |n> = sqrt(hbar n) |n-1>`` and
  ``a^+ |n> = sqrt(hbar (n+1)) |n+1>``;
* the space is truncated by total occupation: basis states are occupation
  tuples ``(n_1, ..., n_M)`` with ``sum n_i <= n_max``;
* mode labels live in a :class:`ModeSet`, which optionally carries lattice
  momenta ``k = 2 pi j / L`` and a dispersion ``omega(k)``.

Everything downstream (functional representations, propagators, scattering)
is validated against direct matrix computations in this module, so the
implementations here favour transparency over speed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

__all__ = [
    "ModeSet",
    "FockSpace",
    "SparseOperator",
    "PolyCoefficients",
    "build_poly_operator",
    "weyl_displacement",
    "coherent_state",
    "thermal_state",
    "vacuum_state",
    "heisenberg",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModeSet:
    """Ordered collection of bosonic modes.

    Args:
        labels: hashable mode labels, e.g. integers ``0..L-1``.
        omega: dispersion value per mode (same order as ``labels``).
        momentum: optional lattice momentum per mode, in ``[0, 2 pi)``.
    """

    labels: tuple
    omega: tuple
    momentum: tuple | None = None

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("mode labels must be unique")
        if len(self.omega) != len(self.labels):
            raise ValueError("omega must match labels")
        if self.momentum is not None and len(self.momentum) != len(self.labels):
            raise ValueError("momentum must match labels")

    @classmethod
    def lattice(cls, n_sites: int, dispersion: Callable[[float], float]) -> "ModeSet":
        """Momentum modes of a 1-d periodic lattice.

        Momenta are ``k_j = 2 pi j / n_sites`` for ``j = 0..n_sites-1`` and the
        grid is closed under ``k -> -k (mod 2 pi)``.
        """
        ks = tuple(TWO_PI * j / n_sites for j in range(n_sites))
        return cls(
            labels=tuple(range(n_sites)),
            omega=tuple(float(dispersion(k)) for k in ks),
            momentum=ks,
        )

    @classmethod
    def single(cls, omega: float) -> "ModeSet":
        """One abstract mode with frequency ``omega``."""
        return cls(labels=(0,), omega=(float(omega),), momentum=None)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        return self.labels.index(label)

    def omega_of(self, label) -> float:
        return self.omega[self.index(label)]

    def momentum_of(self, label) -> float:
        if self.momentum is None:
            raise ValueError("mode set carries no momenta")
        return self.momentum[self.index(label)]

    def negation_partner(self, label):
        """Label of the mode with momentum ``-k (mod 2 pi)``."""
        k = self.momentum_of(label)
        target = (-k) % TWO_PI
        for lab, q in zip(self.labels, self.momentum):
            if abs((q - target + math.pi) % TWO_PI - math.pi) < 1e-12:
                return lab
        raise ValueError(f"momentum grid not closed under negation at k={k}")

    def momentum_closed(self) -> bool:
        if self.momentum is None:
            return False
        try:
            for lab in self.labels:
                self.negation_partner(lab)
        except ValueError:
            return False
        return True


class FockSpace:
    """Bosonic Fock space over a :class:`ModeSet`, truncated by total number.

    Args:
        modes: the mode set.
        n_max: largest allowed total occupation ``sum_k n_k``.
        hbar: ladder scale entering ``[a, a^+] = hbar``.
    """

    def __init__(self, modes: ModeSet, n_max: int, hbar: float = 1.0):
        if n_max < 0:
            raise ValueError("n_max must be >= 0")
        if hbar <= 0:
            raise ValueError("hbar must be > 0")
        self.modes = modes
        self.n_max = int(n_max)
        self.hbar = float(hbar)
        m = len(modes)
        self.basis: list[tuple] = [
            occ
            for occ in itertools.product(range(self.n_max + 1), repeat=m)
            if sum(occ) <= self.n_max
        ]
        self.index: dict[tuple, int] = {occ: i for i, occ in enumerate(self.basis)}
        self.dim = len(self.basis)
        self._ann_cache: dict[int, sp.csr_matrix] = {}

    def __repr__(self) -> str:
        return (
            f"FockSpace(modes={len(self.modes)}, n_max={self.n_max}, "
            f"hbar={self.hbar}, dim={self.dim})"
        )

    def occupations(self) -> np.ndarray:
        """Array of shape (dim, n_modes) with the basis occupation numbers."""
        return np.array(self.basis, dtype=np.int64)

    def _annihilator_matrix(self, mode_idx: int) -> sp.csr_matrix:
        if mode_idx not in self._ann_cache:
            rows, cols, vals = [], [], []
            for j, occ in enumerate(self.basis):
                n = occ[mode_idx]
                if n == 0:
                    continue
                target = list(occ)
                target[mode_idx] = n - 1
                i = self.index[tuple(target)]
                rows.append(i)
                cols.append(j)
                vals.append(math.sqrt(self.hbar * n))
            self._ann_cache[mode_idx] = sp.csr_matrix(
                (vals, (rows, cols)), shape=(self.dim, self.dim), dtype=np.complex128
            )
        return self._ann_cache[mode_idx]

    def annihilator(self, label) -> "SparseOperator":
        """Ladder operator ``a_label`` with ``a |n> = sqrt(hbar n) |n-1>``."""
        return SparseOperator(self, self._annihilator_matrix(self.modes.index(label)))

    def creator(self, label) -> "SparseOperator":
        return self.annihilator(label).dagger()

    def number_operator(self, label=None) -> "SparseOperator":
        """``a^+ a`` for one mode, or the sum over all modes.

        Eigenvalues are ``hbar * n`` because of the scaled commutator.
        """
        labels = self.modes.labels if label is None else (label,)
        occ = self.occupations()
        diag = np.zeros(self.dim)
        for lab in labels:
            diag += self.hbar * occ[:, self.modes.index(lab)]
        return SparseOperator(self, sp.diags(diag).tocsr().astype(np.complex128))

    def identity(self) -> "SparseOperator":
        return SparseOperator(self, sp.identity(self.dim, dtype=np.complex128, format="csr"))

    def zero(self) -> "SparseOperator":
        return SparseOperator(self, sp.csr_matrix((self.dim, self.dim), dtype=np.complex128))

    def basis_vector(self, occ: Sequence[int]) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.complex128)
        v[self.index[tuple(occ)]] = 1.0
        return v

    def total_number(self, state_index: int) -> int:
        return sum(self.basis[state_index])

    def sector_projector(self, max_total: int) -> "SparseOperator":
        """Projector onto basis states with ``sum n_k <= max_total``."""
        diag = np.array(
            [1.0 if sum(occ) <= max_total else 0.0 for occ in self.basis]
        )
        return SparseOperator(self, sp.diags(diag).tocsr().astype(np.complex128))


class SparseOperator:
    """Thin operator wrapper tying a sparse matrix to its :class:`FockSpace`."""

    __slots__ = ("space", "mat")

    def __init__(self, space: FockSpace, mat):
        self.space = space
        self.mat = sp.csr_matrix(mat, dtype=np.complex128)
        if self.mat.shape != (space.dim, space.dim):
            raise ValueError("matrix shape does not match space dimension")

    def _check(self, other: "SparseOperator"):
        if other.space is not self.space:
            raise ValueError("operators act on different spaces")

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        self._check(other)
        return SparseOperator(self.space, self.mat + other.mat)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        self._check(other)
        return SparseOperator(self.space, self.mat - other.mat)

    def __mul__(self, scalar) -> "SparseOperator":
        return SparseOperator(self.space, self.mat * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SparseOperator":
        return SparseOperator(self.space, -self.mat)

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        self._check(other)
        return SparseOperator(self.space, self.mat @ other.mat)

    def dagger(self) -> "SparseOperator":
        return SparseOperator(self.space, self.mat.conjugate().transpose().tocsr())

    def trace(self) -> complex:
        return complex(self.mat.diagonal().sum())

    def norm(self, kind: str = "op") -> float:
        """Operator 2-norm ("op") or Frobenius norm ("fro")."""
        if kind == "fro":
            return float(sp.linalg.norm(self.mat))
        if kind == "op":
            dense = self.to_dense()
            return float(np.linalg.norm(dense, ord=2))
        raise ValueError(f"unknown norm kind {kind!r}")

    def to_dense(self) -> np.ndarray:
        return self.mat.toarray()

    def expm(self) -> "SparseOperator":
        # dims stay small (truncated spaces); dense expm is the robust choice
        return SparseOperator(self.space, sp.csr_matrix(scipy.linalg.expm(self.to_dense())))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return (self.mat - self.mat.conjugate().transpose()).count_nonzero() == 0 or (
            abs(self.mat - self.mat.conjugate().transpose()).max() < tol
        )

    def expectation(self, state: "SparseOperator") -> complex:
        """``Tr(self @ state)`` for a density operator ``state``."""
        self._check(state)
        return complex((self.mat @ state.mat).diagonal().sum())


@dataclass
class PolyCoefficients:
    """Coefficients of a normal-ordered polynomial in ladder operators.

    A term with key ``(kt, lt)`` where ``kt`` and ``lt`` are tuples of mode
    labels stands for ``coeff * a^+(kt[0]) ... a^+(kt[-1]) a(lt[0]) ...
    a(lt[-1])``. Tuples are stored sorted, which is canonical because ladder
    operators of the same kind commute.
    """

    terms: dict = field(default_factory=dict)

    @staticmethod
    def _canon(kt: Iterable, lt: Iterable) -> tuple:
        return (tuple(sorted(kt)), tuple(sorted(lt)))

    def add_term(self, kt: Iterable, lt: Iterable, coeff: complex) -> "PolyCoefficients":
        key = self._canon(kt, lt)
        self.terms[key] = self.terms.get(key, 0.0) + complex(coeff)
        return self

    def items(self):
        return self.terms.items()

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(len(kt) + len(lt) for (kt, lt) in self.terms)

    def hermitian_defect(self) -> float:
        """Max violation of ``coeff(k|l) == conj(coeff(l|k))``."""
        worst = 0.0
        for (kt, lt), c in self.terms.items():
            mirror = self.terms.get((lt, kt), 0.0)
            worst = max(worst, abs(c - np.conj(mirror)))
        return worst

    def conjugated(self) -> "PolyCoefficients":
        """Coefficient-wise complex conjugate (same operator words)."""
        out = PolyCoefficients()
        for key, c in self.terms.items():
            out.terms[key] = np.conj(c)
        return out

    def scaled(self, factor: complex) -> "PolyCoefficients":
        out = PolyCoefficients()
        for key, c in self.terms.items():
            out.terms[key] = factor * c
        return out

    def __add__(self, other: "PolyCoefficients") -> "PolyCoefficients":
        out = PolyCoefficients(dict(self.terms))
        for (kt, lt), c in other.terms.items():
            out.add_term(kt, lt, c)
        return out

    def momentum_defect(self, modes: ModeSet) -> float:
        """Largest |coeff| on a term violating momentum conservation.

        Only meaningful when the mode set carries momenta; terms must satisfy
        ``sum k(creation) == sum k(annihilation) (mod 2 pi)``.
        """
        worst = 0.0
        for (kt, lt), c in self.terms.items():
            total = sum(modes.momentum_of(k) for k in kt) - sum(
                modes.momentum_of(l) for l in lt
            )
            if abs((total + math.pi) % TWO_PI - math.pi) > 1e-9:
                worst = max(worst, abs(c))
        return worst


def build_poly_operator(
    space: FockSpace, coeffs: PolyCoefficients, require_hermitian: bool = False
) -> SparseOperator:
    """Assemble the matrix of a normal-ordered ladder polynomial.

    Args:
        space: target Fock space.
        coeffs: term table; see :class:`PolyCoefficients`.
        require_hermitian: if set, raise when the coefficient table is not
            Hermitian (``coeff(k|l) = conj(coeff(l|k))``) to 1e-10.
    """
    if require_hermitian and coeffs.hermitian_defect() > 1e-10:
        raise ValueError("coefficient table is not Hermitian")
    out = space.zero()
    for (kt, lt), c in coeffs.items():
        term = space.identity()
        for lab in lt:
            term = space.annihilator(lab) @ term
        for lab in kt:
            term = space.creator(lab) @ term
        out = out + c * term
    return out


def weyl_displacement(space: FockSpace, alpha: Mapping) -> SparseOperator:
    """Weyl element ``exp(-sum_k alpha_k a_k^+ + conj(alpha_k) a_k)``.

    ``alpha`` maps mode labels to complex amplitudes; missing labels mean 0.
    """
    gen = space.zero()
    for lab, a in alpha.items():
        a = complex(a)
        gen = gen + (-a) * space.creator(lab) + np.conj(a) * space.annihilator(lab)
    return gen.expm()


def vacuum_state(space: FockSpace) -> SparseOperator:
    """Projector onto the zero-occupation state."""
    v = space.basis_vector((0,) * len(space.modes))
    return SparseOperator(space, sp.csr_matrix(np.outer(v, v.conj())))


def coherent_state(
    space: FockSpace, beta: Mapping, tail_tol: float = 1e-6
) -> SparseOperator:
    """Projector onto the (truncated) coherent state with ``a_k K = beta_k K``.

    Amplitudes follow the scaled ladder convention: writing
    ``x_k = beta_k / sqrt(hbar)``, the occupation amplitudes are the usual
    Poisson ones in ``x_k``.

    Raises:
        ValueError: if the truncation cuts more than ``tail_tol`` of the norm.
    """
    hbar = space.hbar
    x = {lab: complex(beta.get(lab, 0.0)) / math.sqrt(hbar) for lab in space.modes.labels}
    v = np.zeros(space.dim, dtype=np.complex128)
    for i, occ in enumerate(space.basis):
        amp = 1.0 + 0.0j
        for lab, n in zip(space.modes.labels, occ):
            amp *= x[lab] ** n / math.sqrt(math.factorial(n))
        v[i] = amp
    weight = float(np.vdot(v, v).real)
    full = math.exp(sum(abs(val) ** 2 for val in x.values()))
    deficit = 1.0 - weight / full
    if deficit > tail_tol:
        raise ValueError(
            f"coherent amplitude too large for truncation: norm deficit {deficit:.3e}"
        )
    v /= math.sqrt(weight)
    return SparseOperator(space, sp.csr_matrix(np.outer(v, v.conj())))


def thermal_state(space: FockSpace, temperature: float, mu: float = 0.0) -> SparseOperator:
    """Grand-canonical equilibrium state for the free dispersion.

    The state is ``exp(-sum_k (omega_k - mu) a_k^+ a_k / T) / Z``, assembled
    diagonally in the occupation basis (``a^+ a`` has eigenvalue ``hbar n``).

    Raises:
        ValueError: for ``T <= 0`` or ``mu >= min(omega)`` (no equilibrium).
    """
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    if mu >= min(space.modes.omega):
        raise ValueError("chemical potential must satisfy mu < min omega")
    occ = space.occupations()
    shifted = np.array(space.modes.omega) - mu
    energies = space.hbar * occ @ shifted
    weights = np.exp(-energies / temperature)
    weights /= weights.sum()
    return SparseOperator(space, sp.diags(weights).tocsr().astype(np.complex128))


def heisenberg(op: SparseOperator, hamiltonian: SparseOperator, t: float) -> SparseOperator:
    """Heisenberg picture ``exp(i H t / hbar) op exp(-i H t / hbar)``."""
    space = op.space
    h = hamiltonian.to_dense()
    if np.abs(h - h.conj().T).max() > 1e-9:
        raise ValueError("hamiltonian must be Hermitian")
    evals, vecs = np.linalg.eigh(h)
    phase = np.exp(1j * evals * t / space.hbar)
    u = (vecs * phase) @ vecs.conj().T
    return SparseOperator(space, sp.csr_matrix(u @ op.to_dense() @ u.conj().T))
