"""Frequency-domain channel algebra: spectra, self-energy, pole fitting.

Stationary two-point functions depend only on the time separation. A single
Fourier kernel ``exp(+i eps delta)`` maps the full 4x4 channel matrix to
frequency space, which keeps matrix algebra (inversion, the resolvent
equation) consistent across channels. Under that kernel the creation-first
block (rows/columns 1 and 4 against 2 and 3) carries its poles at
``eps = -omega`` and the conjugate block at ``eps = +omega``; the matrix is
block anti-diagonal in the ordering ``[1, 4, 2, 3]``.

Oscillations never decay on a finite mode set, so spectra are taken of the
exponentially damped signal ``G(delta) exp(-eta |delta|)``. The damping
widens every pole by ``eta``; :func:`quasiparticle_poles` adds ``eta`` back
to the fitted imaginary parts instead of pretending the broadening is
physical.

For the exactly solvable diagonal coupling the inverse propagator is linear
in frequency, ``-i (eps - omega)/hbar`` and partners, so its self-energy is
the constant matrix ``+i v/hbar`` on the chronological channels (1,2)/(2,1)
and ``-i v/hbar`` on the antichronological ones; the occupation drops out
of the inverse entirely. :func:`self_energy_diagrams` reproduces this and
the tadpole-dressed generalization at first order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fock import PolyCoefficients
from .keldysh import FreePropagator, is_zero_channel, _perfect_matchings

__all__ = [
    "TwoPointG",
    "SpectralG",
    "self_energy_extract",
    "dyson_solve",
    "self_energy_diagrams",
    "quasiparticle_poles",
]


def _simpson_weights(n: int, h: float) -> np.ndarray:
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson rule needs an odd number of nodes >= 3")
    w = np.full(n, 2.0 * h / 3.0)
    w[1::2] = 4.0 * h / 3.0
    w[0] = w[-1] = h / 3.0
    return w


@dataclass
class TwoPointG:
    """Channel matrix of a stationary two-point function on a time grid.

    ``data[s1 - 1, s2 - 1, j]`` holds the channel ``(s1, s2)`` at separation
    ``times[j]``. The grid is uniform and symmetric about zero with the
    origin on a Simpson panel boundary (the channels kink there).
    """

    label: object
    hbar: float
    times: np.ndarray
    data: np.ndarray

    @staticmethod
    def _grid(t_max: float, n_times: int) -> np.ndarray:
        n = int(n_times)
        while n % 4 != 1:
            n += 1
        return np.linspace(-float(t_max), float(t_max), n)

    @classmethod
    def sample(cls, channel: Callable, label, t_max: float, n_times: int = 4001,
               hbar: float = 1.0) -> "TwoPointG":
        """Tabulate ``channel(sigma1, sigma2, delta_array)`` on the grid."""
        times = cls._grid(t_max, n_times)
        data = np.zeros((4, 4, times.size), dtype=np.complex128)
        for s1 in range(1, 5):
            for s2 in range(1, 5):
                data[s1 - 1, s2 - 1] = np.asarray(channel(s1, s2, times), dtype=np.complex128)
        return cls(label=label, hbar=float(hbar), times=times, data=data)

    @classmethod
    def from_free(cls, propagator: FreePropagator, label, t_max: float,
                  n_times: int = 4001) -> "TwoPointG":
        def channel(s1, s2, delta):
            return propagator((s1, label, delta), (s2, label, np.zeros_like(delta)))

        return cls.sample(channel, label, t_max, n_times, hbar=propagator.hbar)

    def _origin_correction(self) -> np.ndarray:
        """Two-sided value at the origin from the exchange relation.

        The step channels jump at zero separation and the samples hold only
        the tie-break side. Exchange symmetry ``G(s1, s2; -d) = G(s2, s1; d)``
        supplies the other one-sided limit, so the origin node contributes
        ``(h/3) (G(0+) + G(0-))`` to the split Simpson rule instead of
        ``(2h/3) G(0)``.
        """
        h = self.times[1] - self.times[0]
        center = self.times.size // 2
        at_zero = self.data[:, :, center]
        return (h / 3.0) * (at_zero.T - at_zero)

    def spectrum(self, eps: Sequence, eta: float) -> "SpectralG":
        """Damped Fourier transform with the single kernel ``e^{+i eps d}``.

        Channels must obey the exchange relation (any two-point function
        does); it resolves the jump at the origin exactly.
        """
        eps = np.asarray(eps, dtype=np.float64)
        if eta <= 0:
            raise ValueError("eta must be positive")
        h = self.times[1] - self.times[0]
        weights = _simpson_weights(self.times.size, h)
        damp = np.exp(-eta * np.abs(self.times))
        kernel = np.exp(1j * np.outer(self.times, eps)) * (weights * damp)[:, None]
        flat = self.data.reshape(16, -1) @ kernel
        data = flat.reshape(4, 4, -1) + self._origin_correction()[:, :, None]
        return SpectralG(label=self.label, hbar=self.hbar, eps=eps, eta=float(eta),
                         data=data)

    def aligned_spectrum(self, eps: Sequence, eta: float) -> np.ndarray:
        """Spectra with every channel peaked at ``+omega``.

        Rows whose first leg is creation-like (sigma 1 and 4) rotate as
        ``e^{+i omega delta}`` and are transformed with the conjugate
        kernel, aligning all sixteen channels on one frequency axis. Only
        for inspection; matrix algebra must use :meth:`spectrum`.
        """
        eps = np.asarray(eps, dtype=np.float64)
        h = self.times[1] - self.times[0]
        weights = _simpson_weights(self.times.size, h)
        damp = (weights * np.exp(-eta * np.abs(self.times)))[:, None]
        plus = np.exp(1j * np.outer(self.times, eps)) * damp
        minus = np.exp(-1j * np.outer(self.times, eps)) * damp
        correction = self._origin_correction()
        out = np.empty((4, 4, eps.size), dtype=np.complex128)
        for s1 in range(1, 5):
            kernel = minus if s1 in (1, 4) else plus
            out[s1 - 1] = self.data[s1 - 1] @ kernel + correction[s1 - 1][:, None]
        return out


@dataclass
class SpectralG:
    """Frequency-space channel matrix on a grid, with its damping on record."""

    label: object
    hbar: float
    eps: np.ndarray
    eta: float
    data: np.ndarray

    def det(self) -> np.ndarray:
        return np.linalg.det(np.moveaxis(self.data, -1, 0))

    def inverse(self) -> np.ndarray:
        """Pointwise matrix inverse, shape ``(4, 4, len(eps))``.

        With ``eta > 0`` the damped spectrum is never singular on the real
        axis, so no regularization is required.
        """
        inv = np.linalg.inv(np.moveaxis(self.data, -1, 0))
        return np.moveaxis(inv, 0, -1)

    def _compatible(self, other: "SpectralG") -> None:
        if self.eps.shape != other.eps.shape or not np.allclose(self.eps, other.eps):
            raise ValueError("frequency grids differ")
        if abs(self.eta - other.eta) > 1e-12:
            raise ValueError("dampings differ")


def self_energy_extract(bold: SpectralG, free: SpectralG) -> np.ndarray:
    """``M = bold^{-1} - free^{-1}`` pointwise on the frequency grid."""
    bold._compatible(free)
    return bold.inverse() - free.inverse()


def dyson_solve(free: SpectralG, m) -> SpectralG:
    """Resolve the resolvent equation ``bold^{-1} = free^{-1} + M``.

    ``m`` is a constant ``(4, 4)`` matrix or a ``(4, 4, len(eps))`` array.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim == 2:
        m = m[:, :, None] * np.ones(free.eps.size)[None, None, :]
    if m.shape != (4, 4, free.eps.size):
        raise ValueError("self-energy must be (4, 4) or (4, 4, n_eps)")
    inv = np.moveaxis(free.inverse() + m, -1, 0)
    data = np.moveaxis(np.linalg.inv(inv), 0, -1)
    return SpectralG(label=free.label, hbar=free.hbar, eps=free.eps, eta=free.eta,
                     data=data)


_FIRST_ORDER_PATTERN = np.zeros((4, 4))
_FIRST_ORDER_PATTERN[0, 1] = _FIRST_ORDER_PATTERN[1, 0] = 1.0
_FIRST_ORDER_PATTERN[2, 3] = _FIRST_ORDER_PATTERN[3, 2] = -1.0


def _tadpole(kt: tuple, lt: tuple, occupations) -> float:
    """Sum over same-mode pairings of leftover vertex legs, value ``n_k`` each."""
    if not kt:
        return 1.0 if not lt else 0.0
    if len(kt) != len(lt):
        return 0.0
    first, rest = kt[0], kt[1:]
    total = 0.0
    for i, lab in enumerate(lt):
        if lab == first:
            total += occupations[lab] * _tadpole(rest, lt[:i] + lt[i + 1:], occupations)
    return total


def _vertex_options(interaction: PolyCoefficients, hbar: float):
    options = []
    for (kt, lt), coeff in interaction.items():
        options.append((+1, kt, lt, -1j / hbar * complex(coeff)))
        options.append((-1, kt, lt, +1j / hbar * np.conj(complex(coeff))))
    return options


def self_energy_diagrams(interaction: PolyCoefficients, propagator: FreePropagator,
                         label, order: int):
    """Amputated one-particle-irreducible insertions from the interaction.

    Args:
        interaction: normal-ordered perturbation.
        propagator: free background (supplies occupations and the scale).
        label: mode carrying the external stubs.
        order: 1 returns the constant ``(4, 4)`` matrix (stub pair plus
            fully tadpole-contracted remainder); 2 returns a callable
            mapping separations to ``(4, 4, n)`` (two pinned vertices, all
            internal contractions with at least two lines bridging them).

    Terms that cannot supply one creation and one annihilation stub on the
    requested mode with a self-contracted remainder (for example pair
    production terms) contribute nothing at first order.
    """
    hbar = propagator.hbar
    occ = propagator.occupations
    if order == 1:
        v_eff = 0.0 + 0.0j
        for (kt, lt), coeff in interaction.items():
            n_create = kt.count(label)
            n_annih = lt.count(label)
            if n_create == 0 or n_annih == 0:
                continue
            rem_kt = list(kt)
            rem_kt.remove(label)
            rem_lt = list(lt)
            rem_lt.remove(label)
            weight = _tadpole(tuple(rem_kt), tuple(rem_lt), occ)
            v_eff += complex(coeff) * n_create * n_annih * weight
        return (1j * v_eff / hbar) * _FIRST_ORDER_PATTERN

    if order != 2:
        raise ValueError("only orders 1 and 2 are implemented")

    options = _vertex_options(interaction, hbar)

    def sigma2(delta) -> np.ndarray:
        delta = np.atleast_1d(np.asarray(delta, dtype=np.float64))
        out = np.zeros((4, 4, delta.size), dtype=np.complex128)
        for b1, kt1, lt1, f1 in options:
            legs1 = [(1 if b1 == 1 else 3, lab, 0) for lab in kt1]
            legs1 += [(2 if b1 == 1 else 4, lab, 0) for lab in lt1]
            for b2, kt2, lt2, f2 in options:
                legs2 = [(1 if b2 == 1 else 3, lab, 1) for lab in kt2]
                legs2 += [(2 if b2 == 1 else 4, lab, 1) for lab in lt2]
                legs = legs1 + legs2
                stubs1 = [i for i, leg in enumerate(legs) if leg[2] == 0 and leg[1] == label]
                stubs2 = [i for i, leg in enumerate(legs) if leg[2] == 1 and leg[1] == label]
                for i1 in stubs1:
                    for i2 in stubs2:
                        rest = [i for i in range(len(legs)) if i not in (i1, i2)]

                        def compatible(a, b):
                            return legs[a][1] == legs[b][1] and not is_zero_channel(
                                legs[a][0], legs[b][0]
                            )

                        for pairs in _perfect_matchings(rest, compatible):
                            bridges = sum(1 for a, b in pairs if legs[a][2] != legs[b][2])
                            if bridges < 2:
                                continue
                            value = np.full(delta.size, f1 * f2, dtype=np.complex128)
                            for a, b in pairs:
                                ta = delta if legs[a][2] == 0 else np.zeros_like(delta)
                                tb = delta if legs[b][2] == 0 else np.zeros_like(delta)
                                value = value * propagator(
                                    (legs[a][0], legs[a][1], ta),
                                    (legs[b][0], legs[b][1], tb),
                                )
                            out[legs[i1][0] - 1, legs[i2][0] - 1] += value
        return out

    return sigma2


def quasiparticle_poles(spec: SpectralG, dip_ratio: float = 100.0) -> np.ndarray:
    """Pole locations of the channel matrix from its determinant.

    The inverse channel matrix is entrywise linear in frequency for any
    constant self-energy, so ``1/det G`` is (up to the smooth transform
    systematics) a polynomial of degree two per pole pair. Local minima of
    ``|1/det G|`` within ``dip_ratio`` of the deepest one count the pairs;
    one global least-squares polynomial of that degree then supplies every
    root at once. Local fits fail here: with the widths at hand the dips
    overlap and their minima sit well off the true real parts.

    Roots come in conjugate pairs; each cluster (grouped by real part)
    yields one pole ``re + i im`` where ``im`` has the artificial damping
    ``eta`` added back. Residual ``|im|`` of an undamped mode measures the
    numerical error of the whole pipeline.
    """
    d = 1.0 / spec.det()
    mag = np.abs(d)
    eps = spec.eps
    floor = mag.min()
    minima = [
        i for i in range(1, eps.size - 1)
        if mag[i] <= mag[i - 1] and mag[i] <= mag[i + 1] and mag[i] < dip_ratio * floor
    ]
    if not minima:
        return np.array([], dtype=np.complex128)
    mid = 0.5 * (eps[0] + eps[-1])
    half = 0.5 * (eps[-1] - eps[0])
    coeffs = np.polynomial.polynomial.polyfit((eps - mid) / half, d, 2 * len(minima))
    roots = mid + half * np.polynomial.polynomial.polyroots(coeffs)
    candidates = sorted(
        (z for z in roots if eps[0] <= z.real <= eps[-1]), key=lambda z: z.real
    )
    if not candidates:
        return np.array([], dtype=np.complex128)
    spacing = eps[1] - eps[0]
    clusters = [[candidates[0]]]
    for z in candidates[1:]:
        if z.real - clusters[-1][-1].real < 4 * spacing:
            clusters[-1].append(z)
        else:
            clusters.append([z])
    poles = []
    for group in clusters:
        re = float(np.mean([z.real for z in group]))
        width = float(np.mean([abs(z.imag) for z in group]))
        poles.append(re - 1j * (width - spec.eta))
    return np.array(poles, dtype=np.complex128)
