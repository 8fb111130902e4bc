"""Generating functionals of normal-ordered correlation functions.

A trace-class operator ``K`` on the truncated Fock space is represented by
the functional

    L(alpha*, alpha) = Tr exp(-alpha a^+) exp(alpha* a) K,

a polynomial (for finite spaces) in the mode amplitudes ``alpha_k`` and their
conjugates whose coefficients are the normal-ordered correlators

    c(mu | nu) = Tr a^+^mu a^nu K.

Two concrete representations are provided:

* :class:`CorrelationTable` stores the ``c(mu|nu)`` array directly, up to a
  total degree cut ``D``; exactness bookkeeping (`exact_to`) records how far
  the stored coefficients can be trusted after truncating operations.
* :class:`GaussPolyL` stores ``P(alpha*, alpha) * exp(Q(alpha*, alpha))`` with
  quadratic ``Q`` (:class:`GaussianL`) and polynomial prefactor ``P``; the
  generator action is closed on this family.

Left and right multiplications of ``K`` by ladder operators lift to four
first-order operators on functionals, indexed by :class:`SigmaIndex`:

    raise_left   L_K -> L_{a^+ K}     (hbar alpha* - d/d alpha)
    lower_left   L_K -> L_{a K}       (d/d alpha*)
    raise_right  L_K -> L_{K a}       (-hbar alpha + d/d alpha*)
    lower_right  L_K -> L_{K a^+}     (-d/d alpha)

These identities, the involution ``L_K -> L_{K^+}``, and all closed-form
values are validated against :mod:`lfun.fock` traces in the test suite.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .fock import FockSpace, ModeSet, SparseOperator

__all__ = [
    "SigmaIndex",
    "CorrelationTable",
    "GaussianL",
    "GaussPolyL",
    "DegreeOverflowError",
    "l_from_density",
    "equilibrium_gaussian",
    "apply_generator",
    "apply_weyl_element",
    "involution",
    "tilde_defect",
    "positivity_residual",
]


class SigmaIndex(enum.IntEnum):
    """Branch/type index of the lifted ladder generators.

    ``RAISE_LEFT`` and ``LOWER_LEFT`` act by left multiplication of the
    underlying operator (chronological branch); ``LOWER_RIGHT`` and
    ``RAISE_RIGHT`` act by right multiplication (antichronological branch).
    """

    RAISE_LEFT = 1   # L_K -> L_{a^+ K}
    LOWER_LEFT = 2   # L_K -> L_{a K}
    RAISE_RIGHT = 3  # L_K -> L_{K a}
    LOWER_RIGHT = 4  # L_K -> L_{K a^+}


class DegreeOverflowError(RuntimeError):
    """A generator application would push nonzero coefficients past the cut."""


# ---------------------------------------------------------------------------
# dense multidegree arrays
#
# Layout shared by CorrelationTable (c-coefficients) and GaussPolyL (monomial
# coefficients): 2M axes of length D+1; axes [0, M) hold the alpha exponents
# (creation side) and axes [M, 2M) the alpha* exponents (annihilation side).


def _axis_slice(ndim: int, axis: int, s: slice) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = s
    return tuple(idx)


def _read_up(arr: np.ndarray, axis: int) -> np.ndarray:
    """out[..., i, ...] = arr[..., i+1, ...] (top entry reads 0)."""
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    out[_axis_slice(arr.ndim, axis, slice(0, n - 1))] = arr[
        _axis_slice(arr.ndim, axis, slice(1, n))
    ]
    return out


def _weighted_read_down(arr: np.ndarray, axis: int, scale: float) -> np.ndarray:
    """out[..., i, ...] = scale * i * arr[..., i-1, ...]."""
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    shape = [1] * arr.ndim
    shape[axis] = n - 1
    weights = (scale * np.arange(1, n)).reshape(shape)
    out[_axis_slice(arr.ndim, axis, slice(1, n))] = (
        weights * arr[_axis_slice(arr.ndim, axis, slice(0, n - 1))]
    )
    return out


def _multiply_var(arr: np.ndarray, axis: int) -> np.ndarray:
    """Multiply a monomial-coefficient array by the variable of ``axis``."""
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    out[_axis_slice(arr.ndim, axis, slice(1, n))] = arr[
        _axis_slice(arr.ndim, axis, slice(0, n - 1))
    ]
    return out


def _differentiate_var(arr: np.ndarray, axis: int) -> np.ndarray:
    """d/d(variable of ``axis``) on a monomial-coefficient array."""
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    shape = [1] * arr.ndim
    shape[axis] = n - 1
    weights = np.arange(1, n).reshape(shape)
    out[_axis_slice(arr.ndim, axis, slice(0, n - 1))] = (
        weights * arr[_axis_slice(arr.ndim, axis, slice(1, n))]
    )
    return out


def _degree_array(n_axes: int, top: int) -> np.ndarray:
    deg = np.zeros((top + 1,) * n_axes, dtype=np.int64)
    for ax in range(n_axes):
        shape = [1] * n_axes
        shape[ax] = top + 1
        deg = deg + np.arange(top + 1).reshape(shape)
    return deg


def _contract(arr: np.ndarray, vectors: Sequence[np.ndarray]) -> complex:
    out = arr
    for v in reversed(vectors):
        out = np.tensordot(out, v, axes=(out.ndim - 1, 0))
    return complex(out)


def _alpha_vector(alpha, modes: ModeSet) -> np.ndarray:
    if isinstance(alpha, Mapping):
        return np.array([complex(alpha.get(lab, 0.0)) for lab in modes.labels])
    vec = np.asarray(alpha, dtype=np.complex128)
    if vec.shape != (len(modes),):
        raise ValueError("alpha must match the number of modes")
    return vec


class CorrelationTable:
    """Normal-ordered correlator array ``c(mu|nu) = Tr a^+^mu a^nu K``.

    Args:
        modes: mode set the exponents refer to.
        hbar: ladder scale of the underlying space.
        degree_cut: largest stored total degree ``|mu| + |nu|``.
        data: optional coefficient array of shape ``(D+1,)*(2M)``.
        exact_to: degree up to which coefficients are exact; ``None`` means
            the table is the complete polynomial (all higher correlators
            vanish identically).
    """

    def __init__(
        self,
        modes: ModeSet,
        hbar: float,
        degree_cut: int,
        data: np.ndarray | None = None,
        exact_to: int | None = None,
    ):
        self.modes = modes
        self.hbar = float(hbar)
        self.degree_cut = int(degree_cut)
        m = len(modes)
        shape = (self.degree_cut + 1,) * (2 * m)
        if data is None:
            data = np.zeros(shape, dtype=np.complex128)
        data = np.asarray(data, dtype=np.complex128)
        if data.shape != shape:
            raise ValueError(f"data must have shape {shape}")
        self._deg = _degree_array(2 * m, self.degree_cut)
        data = np.where(self._deg <= self.degree_cut, data, 0.0)
        self.data = data
        self.exact_to = exact_to

    # -- bookkeeping --------------------------------------------------------

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def copy(self) -> "CorrelationTable":
        return CorrelationTable(
            self.modes, self.hbar, self.degree_cut, self.data.copy(), self.exact_to
        )

    def _like(self, data: np.ndarray, exact_to) -> "CorrelationTable":
        return CorrelationTable(self.modes, self.hbar, self.degree_cut, data, exact_to)

    def coefficient(self, mu: Sequence[int], nu: Sequence[int]) -> complex:
        """``c(mu|nu)``; exponent tuples beyond the cut read as 0."""
        if sum(mu) + sum(nu) > self.degree_cut:
            return 0.0
        return complex(self.data[tuple(mu) + tuple(nu)])

    def set_coefficient(self, mu: Sequence[int], nu: Sequence[int], value: complex):
        if sum(mu) + sum(nu) > self.degree_cut:
            raise DegreeOverflowError("coefficient beyond the degree cut")
        self.data[tuple(mu) + tuple(nu)] = value

    def max_degree(self) -> int:
        nz = self._deg[np.abs(self.data) > 0]
        return int(nz.max()) if nz.size else 0

    def norm(self, max_degree: int | None = None) -> float:
        """Sup norm over stored coefficients, optionally up to a degree."""
        if max_degree is None:
            return float(np.abs(self.data).max()) if self.data.size else 0.0
        block = np.abs(self.data[self._deg <= max_degree])
        return float(block.max()) if block.size else 0.0

    def __add__(self, other: "CorrelationTable") -> "CorrelationTable":
        if not isinstance(other, CorrelationTable):
            return NotImplemented
        if other.modes != self.modes or other.degree_cut != self.degree_cut:
            raise ValueError("tables are not compatible")
        exact = _min_exact(self.exact_to, other.exact_to)
        return self._like(self.data + other.data, exact)

    def __sub__(self, other: "CorrelationTable") -> "CorrelationTable":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "CorrelationTable":
        return self._like(self.data * complex(scalar), self.exact_to)

    __rmul__ = __mul__

    # -- semantics ----------------------------------------------------------

    def evaluate(self, alpha) -> complex:
        """Value ``L(alpha*, alpha)`` at complex amplitudes ``alpha``."""
        vec = _alpha_vector(alpha, self.modes)
        top = self.degree_cut
        inv_fact = np.array([1.0 / math.factorial(j) for j in range(top + 1)])
        vectors = [(-vec[k]) ** np.arange(top + 1) * inv_fact for k in range(self.n_modes)]
        vectors += [
            np.conj(vec[k]) ** np.arange(top + 1) * inv_fact for k in range(self.n_modes)
        ]
        return _contract(self.data, vectors)

    def apply_generator(self, sigma: SigmaIndex, label) -> "CorrelationTable":
        """Apply one lifted ladder generator (see :class:`SigmaIndex`)."""
        sigma = SigmaIndex(sigma)
        k = self.modes.index(label)
        m = self.n_modes
        creation_axis = k
        annih_axis = m + k
        if sigma is SigmaIndex.LOWER_LEFT:
            data = _read_up(self.data, annih_axis)
        elif sigma is SigmaIndex.LOWER_RIGHT:
            data = _read_up(self.data, creation_axis)
        elif sigma is SigmaIndex.RAISE_LEFT:
            data = _weighted_read_down(self.data, annih_axis, self.hbar) + _read_up(
                self.data, creation_axis
            )
        elif sigma is SigmaIndex.RAISE_RIGHT:
            data = _read_up(self.data, annih_axis) + _weighted_read_down(
                self.data, creation_axis, self.hbar
            )
        else:  # pragma: no cover
            raise ValueError(sigma)
        if self.exact_to is None:
            # Lowering only moves content toward lower degree, so a complete
            # table stays complete.  Raising promotes the stored top-degree
            # slice past the cut; every stored entry is still exact, but the
            # table stops being the complete polynomial unless that slice
            # was empty.
            if sigma in (SigmaIndex.LOWER_LEFT, SigmaIndex.LOWER_RIGHT):
                exact = None
            else:
                lost = np.abs(self.data[self._deg == self.degree_cut])
                exact = None if (lost.size == 0 or lost.max() == 0.0) else self.degree_cut
        else:
            # One read per output looks one degree above the exact horizon;
            # -1 means no coefficient is certified any more.
            exact = max(-1, self.exact_to - 1)
        return self._like(data, exact)

    def involution(self) -> "CorrelationTable":
        """``L_K -> L_{K^+}``: swap exponent sides and conjugate."""
        m = self.n_modes
        perm = list(range(m, 2 * m)) + list(range(m))
        return self._like(np.conj(np.transpose(self.data, perm)), self.exact_to)

    def free_rotation(self, t: float) -> "CorrelationTable":
        """Exact evolution under the free lifted Hamiltonian for time ``t``.

        The free generator is diagonal on monomials; the coefficient with
        exponents ``(mu, nu)`` picks up ``exp(-i sum omega_k (nu_k - mu_k) t)``.
        """
        m = self.n_modes
        data = self.data
        top = self.degree_cut
        for k in range(m):
            w = self.modes.omega[k]
            onaxis = np.exp(1j * w * np.arange(top + 1) * t)
            shape = [1] * (2 * m)
            shape[k] = top + 1
            data = data * onaxis.reshape(shape)
            shape = [1] * (2 * m)
            shape[m + k] = top + 1
            data = data * np.conj(onaxis).reshape(shape)
        return self._like(data, self.exact_to)


def _min_exact(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


@dataclass
class GaussianL:
    """Gaussian functional ``exp(a* A a* + a* B a + a C a)``, value 1 at 0.

    ``a_mat`` and ``c_mat`` are symmetric M x M matrices; the equilibrium
    state has ``a_mat = c_mat = 0`` and ``b_mat = -diag(n_k)``.
    """

    modes: ModeSet
    hbar: float
    a_mat: np.ndarray
    b_mat: np.ndarray
    c_mat: np.ndarray

    def __post_init__(self):
        m = len(self.modes)
        for name in ("a_mat", "b_mat", "c_mat"):
            mat = np.asarray(getattr(self, name), dtype=np.complex128)
            if mat.shape != (m, m):
                raise ValueError(f"{name} must be {m} x {m}")
            setattr(self, name, mat)
        self.a_mat = (self.a_mat + self.a_mat.T) / 2
        self.c_mat = (self.c_mat + self.c_mat.T) / 2

    def evaluate(self, alpha) -> complex:
        vec = _alpha_vector(alpha, self.modes)
        conj = np.conj(vec)
        q = conj @ self.a_mat @ conj + conj @ self.b_mat @ vec + vec @ self.c_mat @ vec
        return complex(np.exp(q))

    def diagonal_occupations(self) -> np.ndarray:
        """Occupations ``n_k`` when the Gaussian is diagonal (``-diag(n)``)."""
        if np.abs(self.a_mat).max() > 1e-14 or np.abs(self.c_mat).max() > 1e-14:
            raise ValueError("gaussian has anomalous (pair) correlations")
        off = self.b_mat - np.diag(np.diag(self.b_mat))
        if np.abs(off).max() > 1e-14:
            raise ValueError("gaussian is not diagonal in the mode basis")
        return -np.real(np.diag(self.b_mat))

    def as_gausspoly(self, degree_cut: int = 4) -> "GaussPolyL":
        return GaussPolyL.constant(self, degree_cut)

    def apply_generator(self, sigma: "SigmaIndex", label) -> "GaussPolyL":
        """Generators leave the Gaussian family only up to a polynomial."""
        return self.as_gausspoly(degree_cut=1).apply_generator(sigma, label)

    def involution(self) -> "GaussianL":
        return GaussianL(
            self.modes,
            self.hbar,
            np.conj(self.c_mat),
            np.conj(self.b_mat).T,
            np.conj(self.a_mat),
        )


class GaussPolyL:
    """Polynomial-times-Gaussian functional ``P(alpha*, alpha) exp(Q)``.

    ``poly`` holds monomial coefficients of ``P`` in the shared axis layout
    (alpha exponents first, then alpha* exponents). The lifted generators map
    this family to itself; the polynomial array grows as needed.
    """

    def __init__(self, gaussian: GaussianL, poly: np.ndarray):
        self.gaussian = gaussian
        poly = np.asarray(poly, dtype=np.complex128)
        m = len(gaussian.modes)
        if poly.ndim != 2 * m:
            raise ValueError("poly must have 2 * n_modes axes")
        self.poly = _trim_poly(poly)

    @classmethod
    def constant(cls, gaussian: GaussianL, degree_cut: int = 4) -> "GaussPolyL":
        m = len(gaussian.modes)
        poly = np.zeros((degree_cut + 1,) * (2 * m), dtype=np.complex128)
        poly[(0,) * (2 * m)] = 1.0
        return cls(gaussian, poly)

    @property
    def modes(self) -> ModeSet:
        return self.gaussian.modes

    @property
    def hbar(self) -> float:
        return self.gaussian.hbar

    def copy(self) -> "GaussPolyL":
        return GaussPolyL(self.gaussian, self.poly.copy())

    def _grown(self) -> np.ndarray:
        """Pad every axis by one so multiplications never clip."""
        return np.pad(self.poly, [(0, 1)] * self.poly.ndim)

    def norm(self) -> float:
        """Sup norm of the polynomial prefactor coefficients."""
        return float(np.abs(self.poly).max())

    def __add__(self, other: "GaussPolyL") -> "GaussPolyL":
        if not isinstance(other, GaussPolyL):
            return NotImplemented
        if other.gaussian is not self.gaussian and not _same_gaussian(
            self.gaussian, other.gaussian
        ):
            raise ValueError("cannot add functionals over different Gaussians")
        a, b = self.poly, other.poly
        top = max(a.shape[0], b.shape[0])
        a = np.pad(a, [(0, top - a.shape[0])] * a.ndim)
        b = np.pad(b, [(0, top - b.shape[0])] * b.ndim)
        return GaussPolyL(self.gaussian, a + b)

    def __sub__(self, other: "GaussPolyL") -> "GaussPolyL":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "GaussPolyL":
        return GaussPolyL(self.gaussian, self.poly * complex(scalar))

    __rmul__ = __mul__

    def evaluate(self, alpha) -> complex:
        vec = _alpha_vector(alpha, self.modes)
        m = len(self.modes)
        top = self.poly.shape[0] - 1
        vectors = [vec[k] ** np.arange(top + 1) for k in range(m)]
        vectors += [np.conj(vec[k]) ** np.arange(top + 1) for k in range(m)]
        return _contract(self.poly, vectors) * self.gaussian.evaluate(alpha)

    def _linear_form(self, arr: np.ndarray, coeff_alpha, coeff_astar) -> np.ndarray:
        """arr * (sum_l coeff_alpha[l] alpha_l + coeff_astar[l] alpha*_l)."""
        m = len(self.modes)
        out = np.zeros_like(arr)
        for l in range(m):
            if coeff_alpha[l] != 0:
                out = out + coeff_alpha[l] * _multiply_var(arr, l)
            if coeff_astar[l] != 0:
                out = out + coeff_astar[l] * _multiply_var(arr, m + l)
        return out

    def apply_generator(self, sigma: SigmaIndex, label) -> "GaussPolyL":
        sigma = SigmaIndex(sigma)
        g = self.gaussian
        m = len(self.modes)
        k = self.modes.index(label)
        arr = self._grown()
        # dQ/d alpha*_k = sum_l 2 A_{kl} alpha*_l + B_{kl} alpha_l
        # dQ/d alpha_k  = sum_l B_{lk} alpha*_l + 2 C_{kl} alpha_l
        dq_astar = (2 * g.a_mat[k, :], g.b_mat[k, :])  # (alpha*, alpha) coefficients
        dq_alpha = (g.b_mat[:, k], 2 * g.c_mat[k, :])

        def d_astar(a):
            return _differentiate_var(a, m + k) + self._linear_form(
                a, dq_astar[1], dq_astar[0]
            )

        def d_alpha(a):
            return _differentiate_var(a, k) + self._linear_form(
                a, dq_alpha[1], dq_alpha[0]
            )

        if sigma is SigmaIndex.LOWER_LEFT:
            poly = d_astar(arr)
        elif sigma is SigmaIndex.RAISE_LEFT:
            poly = self.hbar * _multiply_var(arr, m + k) - d_alpha(arr)
        elif sigma is SigmaIndex.LOWER_RIGHT:
            poly = -d_alpha(arr)
        elif sigma is SigmaIndex.RAISE_RIGHT:
            poly = -self.hbar * _multiply_var(arr, k) + d_astar(arr)
        else:  # pragma: no cover
            raise ValueError(sigma)
        return GaussPolyL(self.gaussian, poly)

    def involution(self) -> "GaussPolyL":
        m = len(self.modes)
        perm = list(range(m, 2 * m)) + list(range(m))
        poly = np.conj(np.transpose(self.poly, perm))
        top = poly.shape[0] - 1
        deg = _degree_array(2 * m, top)
        poly = poly * np.where(deg % 2 == 0, 1.0, -1.0)
        return GaussPolyL(self.gaussian.involution(), poly)


def _trim_poly(poly: np.ndarray) -> np.ndarray:
    """Drop trailing all-zero hyperplanes (axes stay equal length >= 1)."""
    top = poly.shape[0]
    while top > 1:
        edge = max(
            np.abs(poly[_axis_slice(poly.ndim, ax, slice(top - 1, top))]).max()
            for ax in range(poly.ndim)
        )
        if edge != 0.0:
            break
        poly = poly[tuple(slice(0, top - 1) for _ in range(poly.ndim))]
        top -= 1
    return poly


def _same_gaussian(a: GaussianL, b: GaussianL) -> bool:
    return (
        a.modes == b.modes
        and a.hbar == b.hbar
        and np.allclose(a.a_mat, b.a_mat, atol=1e-14)
        and np.allclose(a.b_mat, b.b_mat, atol=1e-14)
        and np.allclose(a.c_mat, b.c_mat, atol=1e-14)
    )


# ---------------------------------------------------------------------------
# constructors


def l_from_density(
    density: SparseOperator, degree_cut: int | None = None
) -> CorrelationTable:
    """Correlation table of a (trace-class) operator on a truncated space.

    Args:
        density: operator ``K``; need not be Hermitian or normalized.
        degree_cut: largest stored total degree; defaults to the complete
            polynomial (``2 * n_max``), in which case the table is exact.

    Raises:
        ValueError: if the cut exceeds the representable degree ``2 n_max``.
    """
    space = density.space
    full = 2 * space.n_max
    if degree_cut is None:
        degree_cut = full
    if degree_cut > full:
        raise ValueError("degree cut exceeds representable correlators")
    table = CorrelationTable(
        space.modes,
        space.hbar,
        degree_cut,
        exact_to=None if degree_cut >= full else degree_cut,
    )
    m = len(space.modes)

    def multidegrees(limit):
        # all exponent tuples with total <= limit, in raising order
        out = [((0,) * m, 0)]
        frontier = [(0,) * m]
        for total in range(1, limit + 1):
            nxt = set()
            for base in frontier:
                for k in range(m):
                    t = list(base)
                    t[k] += 1
                    nxt.add(tuple(t))
            frontier = sorted(nxt)
            out.extend((t, total) for t in frontier)
        return out

    # right factors a^nu K, built by recursion on one lowered exponent
    right: dict[tuple, np.ndarray] = {(0,) * m: density.to_dense()}
    # left factors a^mu, likewise
    left: dict[tuple, np.ndarray] = {(0,) * m: np.eye(space.dim, dtype=np.complex128)}
    ann = [space._annihilator_matrix(k).toarray() for k in range(m)]

    for nu, total in multidegrees(degree_cut):
        if total > 0 and nu not in right:
            k = next(i for i in range(m) if nu[i] > 0)
            prev = list(nu)
            prev[k] -= 1
            right[nu] = ann[k] @ right[tuple(prev)]
        for mu, mt in multidegrees(degree_cut - total):
            if mt > 0 and mu not in left:
                k = next(i for i in range(m) if mu[i] > 0)
                prev = list(mu)
                prev[k] -= 1
                left[mu] = ann[k] @ left[tuple(prev)]
            # Tr a^+^mu a^nu K = Tr (a^mu)^+ (a^nu K)
            value = np.sum(np.conj(left[mu]) * right[nu])
            table.data[mu + nu] = value
    return table


def equilibrium_gaussian(
    modes: ModeSet, temperature: float, mu: float = 0.0, hbar: float = 1.0
) -> GaussianL:
    """Equilibrium Gaussian ``exp(-sum_k n_k |alpha_k|^2)``.

    Occupations follow the scaled Bose factor
    ``n_k = hbar / (exp(hbar (omega_k - mu) / T) - 1)``; a chemical potential
    shifts every frequency. Value at the origin is 1 (normalized state).

    Raises:
        ValueError: for ``T <= 0`` or ``mu >= min(omega)``.
    """
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    if mu >= min(modes.omega):
        raise ValueError("chemical potential must satisfy mu < min omega")
    def bose(w: float) -> float:
        ratio = hbar * (w - mu) / temperature
        if ratio > 700.0:  # exp overflows; the mode is numerically empty
            return 0.0
        return hbar / math.expm1(ratio)

    n = np.array([bose(w) for w in modes.omega])
    m = len(modes)
    zero = np.zeros((m, m))
    return GaussianL(modes, hbar, zero, -np.diag(n), zero.copy())


# ---------------------------------------------------------------------------
# module-level operations (dispatch on representation)


def apply_generator(functional, sigma: SigmaIndex, label):
    """Apply one lifted generator to either functional representation."""
    return functional.apply_generator(sigma, label)


def involution(functional):
    """The antilinear involution ``L_K -> L_{K^+}``."""
    return functional.involution()


def tilde_defect(functional, probes: Sequence) -> float:
    """Max |L~ - L| over probe amplitude vectors; 0 for physical states."""
    twin = functional.involution()
    return max(
        abs(twin.evaluate(alpha) - functional.evaluate(alpha)) for alpha in probes
    )


_LEFT_WORD = {"a": SigmaIndex.LOWER_LEFT, "a+": SigmaIndex.RAISE_LEFT}
# tilde action right-multiplies by the DAGGERED word, symbol by symbol
_RIGHT_WORD = {"a": SigmaIndex.LOWER_RIGHT, "a+": SigmaIndex.RAISE_RIGHT}


def apply_weyl_element(functional, word: Sequence[tuple], action: str = "left"):
    """Apply a ladder word ``A = word[0] word[1] ...`` to a functional.

    Args:
        functional: table or Gaussian-polynomial functional.
        word: sequence of ``(symbol, label)`` with symbol ``"a"`` or ``"a+"``,
            read left to right as an operator product.
        action: ``"left"`` maps ``L_K -> L_{A K}``; ``"tilde"`` maps
            ``L_K -> L_{K A^+}``; ``"sandwich"`` maps ``L_K -> L_{A K A^+}``.

    The rightmost factor of the word acts first, matching operator
    composition; tilde and plain actions commute, so the sandwich order is
    immaterial.
    """
    if action == "sandwich":
        return apply_weyl_element(
            apply_weyl_element(functional, word, "left"), word, "tilde"
        )
    if action == "left":
        mapping = _LEFT_WORD
    elif action == "tilde":
        mapping = _RIGHT_WORD
    else:
        raise ValueError(f"unknown action {action!r}")
    out = functional
    for symbol, label in reversed(list(word)):
        out = out.apply_generator(mapping[symbol], label)
    return out


def positivity_residual(functional, probe_words: Sequence[Sequence[tuple]] | None = None):
    """Most negative eigenvalue (clipped at 0) of a probe Gram matrix.

    The Gram matrix is ``G_ij = <(A_i)^+ A_j>``, with the expectation read
    off as the value of the transformed functional at the origin. Physical
    states give a positive semidefinite ``G``.
    """
    modes = functional.modes
    if probe_words is None:
        probe_words = [[]]
        probe_words += [[("a", lab)] for lab in modes.labels]
        probe_words += [[("a+", lab)] for lab in modes.labels]
    zero = {lab: 0.0 for lab in modes.labels}
    n = len(probe_words)
    gram = np.zeros((n, n), dtype=np.complex128)
    for i, wi in enumerate(probe_words):
        dagger = [("a" if s == "a+" else "a+", lab) for s, lab in reversed(list(wi))]
        for j, wj in enumerate(probe_words):
            product = list(dagger) + list(wj)
            gram[i, j] = apply_weyl_element(functional, product, "left").evaluate(zero)
    gram = (gram + gram.conj().T) / 2
    lam = np.linalg.eigvalsh(gram).min()
    return float(max(0.0, -lam))
