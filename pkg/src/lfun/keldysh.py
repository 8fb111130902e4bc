"""Two-branch Green functions: free channels, exact traces, Wick diagrams.

A Green-function leg is a triple ``(sigma, label, time)``. The branch index
``sigma`` follows :class:`~lfun.lfunctional.SigmaIndex`: 1 and 2 multiply the
state from the left by a creation/annihilation operator (chronological
branch), 3 and 4 multiply from the right by an annihilation/creation
operator (antichronological branch). Legs act in ascending time order, the
earliest leg innermost; legs at exactly equal times act in reverse argument
order (the later argument first), which fixes the equal-time value of every
channel.

Channels pairing two creation-like legs (sigma in {1, 4}) or two
annihilation-like legs (sigma in {2, 3}) vanish on any particle-number
conserving background, as do channels pairing different modes of a diagonal
background; eight of the sixteen ordered channels survive.

The diagram expansion assigns each interaction vertex a branch: the
chronological copy carries ``-(i/hbar) c`` and legs with sigma in {1, 2};
the antichronological copy carries ``+(i/hbar) conj(c)`` and legs with
sigma in {3, 4}. Summing all labeled perfect matchings (weighted only by
``1/p!`` for vertex permutations) reproduces derivatives of the exact Green
functions; the branch sum cancels the integrand outside the hull of the
external times, so finite integration windows suffice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .fock import FockSpace, ModeSet, PolyCoefficients, SparseOperator, build_poly_operator, heisenberg
from .lfunctional import GaussianL
from .evolution import SwitchingProfile

__all__ = [
    "CREATION_LIKE",
    "ANNIHILATION_LIKE",
    "is_zero_channel",
    "FreePropagator",
    "free_propagator",
    "ggreen_exact",
    "ggreen_switched",
    "Diagram",
    "wick_diagrams",
    "evaluate_diagrams",
]

CREATION_LIKE = frozenset({1, 4})
ANNIHILATION_LIKE = frozenset({2, 3})


def is_zero_channel(sigma1: int, sigma2: int) -> bool:
    """True when both legs create or both annihilate (channel vanishes)."""
    return (int(sigma1) in CREATION_LIKE) == (int(sigma2) in CREATION_LIKE)


class FreePropagator:
    """Closed-form two-point function of a diagonal Gaussian background.

    Args:
        modes: mode set with dispersion.
        occupations: mapping ``label -> n_k`` (ladder-scaled, so the
            commutator contributes ``n_k + hbar``).
        hbar: ladder scale.
    """

    def __init__(self, modes: ModeSet, occupations: Mapping, hbar: float = 1.0):
        self.modes = modes
        self.hbar = float(hbar)
        self.occupations = {lab: float(occupations[lab]) for lab in modes.labels}

    @classmethod
    def from_equilibrium(cls, gaussian: GaussianL) -> "FreePropagator":
        occ = gaussian.diagonal_occupations()
        return cls(
            gaussian.modes,
            {lab: occ[i] for i, lab in enumerate(gaussian.modes.labels)},
            gaussian.hbar,
        )

    def __call__(self, leg1, leg2):
        """Channel value; times may be scalars or broadcastable arrays."""
        s1, k1, t1 = leg1
        s2, k2, t2 = leg2
        s1, s2 = int(s1), int(s2)
        array_out = bool(np.ndim(t1) or np.ndim(t2))
        if k1 != k2 or is_zero_channel(s1, s2):
            if array_out:
                shape = np.broadcast(np.asarray(t1), np.asarray(t2)).shape
                return np.zeros(shape, dtype=np.complex128)
            return 0.0 + 0.0j
        w = self.modes.omega_of(k1)
        n = self.occupations[k1]
        h = self.hbar
        t1 = np.asarray(t1, dtype=np.float64)
        t2 = np.asarray(t2, dtype=np.float64)
        # phase rotates + with the creation-like leg, - with the other
        if s1 in CREATION_LIKE:
            phase = np.exp(1j * w * (t1 - t2))
        else:
            phase = np.exp(1j * w * (t2 - t1))
        # cross-branch channels carry no step function
        if (s1, s2) in ((1, 3), (3, 1)):
            amp = n + h
        elif (s1, s2) in ((2, 4), (4, 2)):
            amp = n
        elif (s1, s2) in ((1, 2), (3, 4)):
            # ties: the second argument acts first, next to the state
            amp = np.where(t1 >= t2, n, n + h)
        else:  # (2, 1) and (4, 3)
            amp = np.where(t2 > t1, n, n + h)
        value = amp * phase
        return value if array_out else complex(value)

    def matrix(self, label, t1, t2) -> np.ndarray:
        """All sixteen ordered channels at one mode, order ``[1, 2, 3, 4]``."""
        out = np.zeros((4, 4), dtype=np.complex128)
        for i, s1 in enumerate((1, 2, 3, 4)):
            for j, s2 in enumerate((1, 2, 3, 4)):
                out[i, j] = self((s1, label, t1), (s2, label, t2))
        return out


def free_propagator(modes: ModeSet, occupations: Mapping, hbar: float = 1.0) -> FreePropagator:
    return FreePropagator(modes, occupations, hbar)


def _ordered_legs(legs: Sequence) -> list:
    """Ascending time; at ties the later argument-list position acts first."""
    indexed = list(enumerate(legs))
    indexed.sort(key=lambda item: (item[1][2], -item[0]))
    return [leg for _, leg in indexed]


def ggreen_exact(density: SparseOperator, hamiltonian: SparseOperator, legs: Sequence) -> complex:
    """Multi-leg Green function by dense Heisenberg evolution.

    Args:
        density: background state ``K`` (need not be normalized).
        hamiltonian: full Hamiltonian generating the Heisenberg motion.
        legs: sequence of ``(sigma, label, time)``.

    Legs act on ``K`` in ascending time order (ties: later argument first):
    sigma 1/2 multiply from the left by the Heisenberg creation/annihilation
    operator, sigma 3/4 from the right by annihilation/creation. The result
    is the trace of the decorated state.
    """
    space = density.space
    state = density
    for sigma, label, t in _ordered_legs(legs):
        sigma = int(sigma)
        base = space.creator(label) if sigma in (1, 4) else space.annihilator(label)
        op = heisenberg(base, hamiltonian, t)
        if sigma in (1, 2):
            state = op @ state
        else:
            state = state @ op
    return state.trace()


def ggreen_switched(density: SparseOperator, free_h: SparseOperator,
                    interaction: SparseOperator, profile: SwitchingProfile,
                    rate: float, legs: Sequence, dt: float = 0.01) -> complex:
    """Green function under an adiabatically switched interaction.

    The evolution operator is the time-ordered exponential of
    ``H0 + h(rate t) V`` starting at the left edge of the switching support,
    where ``density`` is prepared. Leg operators are taken in the
    corresponding switched Heisenberg picture.
    """
    space = density.space
    hbar = space.hbar
    span = profile.width / rate
    times = sorted({float(leg[2]) for leg in legs})
    if times and (times[0] < -span or times[-1] > span):
        raise ValueError("leg times must lie inside the switching window")
    h0 = free_h.to_dense()
    v = interaction.to_dense()

    def rhs(t, u):
        h = h0 + profile(rate * t) * v
        return (-1j / hbar) * (h @ u)

    # integrate once, snapshotting the evolution at each leg time
    snapshots = {}
    u = np.eye(space.dim, dtype=np.complex128)
    t = -span
    for target in times:
        steps = max(1, int(math.ceil((target - t) / dt)))
        h = (target - t) / steps if steps else 0.0
        for _ in range(steps):
            k1 = rhs(t, u)
            k2 = rhs(t + h / 2, u + h / 2 * k1)
            k3 = rhs(t + h / 2, u + h / 2 * k2)
            k4 = rhs(t + h, u + h * k3)
            u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        snapshots[target] = u.copy()

    state = density
    for sigma, label, tl in _ordered_legs(legs):
        sigma = int(sigma)
        base = space.creator(label) if sigma in (1, 4) else space.annihilator(label)
        w = snapshots[float(tl)]
        op = SparseOperator(space, w.conj().T @ base.to_dense() @ w)
        if sigma in (1, 2):
            state = op @ state
        else:
            state = state @ op
    return state.trace()


@dataclass(frozen=True)
class Diagram:
    """One labeled Wick contraction.

    ``legs`` lists ``(sigma, label, vertex)`` with ``vertex = None`` for
    external legs (whose times are fixed) and a vertex index otherwise
    (whose time is integrated). ``pairs`` are index pairs into ``legs``.
    ``prefactor`` collects the vertex couplings and branch factors;
    ``symmetry`` is ``1/p!``.
    """

    order: int
    branches: tuple
    prefactor: complex
    legs: tuple
    pairs: tuple
    symmetry: float
    connected: bool


def _perfect_matchings(indices: list, compatible) -> list:
    if not indices:
        return [[]]
    first, rest = indices[0], indices[1:]
    out = []
    for i, partner in enumerate(rest):
        if not compatible(first, partner):
            continue
        remaining = rest[:i] + rest[i + 1:]
        for tail in _perfect_matchings(remaining, compatible):
            out.append([(first, partner)] + tail)
    return out


def wick_diagrams(interaction: PolyCoefficients, externals: Sequence, order: int,
                  hbar: float = 1.0) -> list:
    """All branch-resolved labeled contractions at a given order.

    Args:
        interaction: normal-ordered perturbation ``V``.
        externals: external legs ``(sigma, label, time)``.
        order: number of interaction vertices (0 gives the free matchings).
        hbar: ladder scale entering the vertex factors ``-(i/hbar) c``.

    Every perfect matching of the external and vertex legs appears as its
    own :class:`Diagram`; mode-mismatched and same-type (vanishing channel)
    pairings are pruned during enumeration. Disconnected contractions are
    kept: their branch sum cancels pointwise, which the tests rely on.
    """
    vertex_options = []
    for (kt, lt), coeff in interaction.items():
        vertex_options.append((+1, kt, lt, -1j / hbar * complex(coeff)))
        vertex_options.append((-1, kt, lt, +1j / hbar * np.conj(complex(coeff))))
    symmetry = 1.0 / math.factorial(order)
    diagrams = []
    for combo in itertools.product(vertex_options, repeat=order):
        legs = [(int(s), lab, None) for s, lab, _t in externals]
        for v, (branch, kt, lt, _f) in enumerate(combo):
            if branch == +1:
                legs += [(1, lab, v) for lab in kt]
                legs += [(2, lab, v) for lab in lt]
            else:
                legs += [(3, lab, v) for lab in kt]
                legs += [(4, lab, v) for lab in lt]
        prefactor = complex(np.prod([f for _b, _kt, _lt, f in combo])) if combo else 1.0

        def compatible(i, j, legs=legs):
            si, ki, _ = legs[i]
            sj, kj, _ = legs[j]
            return ki == kj and not is_zero_channel(si, sj)

        for pairs in _perfect_matchings(list(range(len(legs))), compatible):
            diagrams.append(
                Diagram(
                    order=order,
                    branches=tuple(b for b, _kt, _lt, _f in combo),
                    prefactor=prefactor,
                    legs=tuple(legs),
                    pairs=tuple(tuple(p) for p in pairs),
                    symmetry=symmetry,
                    connected=_is_connected(legs, pairs, order),
                )
            )
    return diagrams


def _is_connected(legs, pairs, order) -> bool:
    """Single component over vertices and external legs."""

    def node_of(leg_index):
        _sigma, _lab, vertex = legs[leg_index]
        return ("v", vertex) if vertex is not None else ("e", leg_index)

    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for i, j in pairs:
        union(node_of(i), node_of(j))
    for v in range(order):
        find(("v", v))
    for i, leg in enumerate(legs):
        if leg[2] is None:
            find(("e", i))
    roots = {find(x) for x in list(parent)}
    return len(roots) <= 1


def _segmented_quadrature(window: tuple, breakpoints: Sequence, n_nodes: int):
    """Composite Simpson nodes and weights, split at the breakpoints.

    Contraction integrands jump at the external leg times (the step
    functions inside the channels), so each segment between consecutive
    breakpoints gets its own Simpson rule and its boundary nodes are nudged
    a hair inward to sample the correct side of the jump.
    """
    lo, hi = float(window[0]), float(window[1])
    if hi <= lo:
        raise ValueError("window must have positive length")
    cuts = sorted({lo, hi} | {float(t) for t in breakpoints if lo < float(t) < hi})
    total = hi - lo
    eps = 1e-9 * total
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = max(4, int(round(n_nodes * (b - a) / total)))
        m += m % 2
        xs = np.linspace(a, b, m + 1)
        h = (b - a) / m
        w = np.full(m + 1, 2 * h / 3)
        w[1::2] = 4 * h / 3
        w[0] = w[-1] = h / 3
        if a != lo:
            xs[0] = a + eps
        if b != hi:
            xs[-1] = b - eps
        nodes.append(xs)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def evaluate_diagrams(diagrams: Sequence, propagator: FreePropagator,
                      externals: Sequence, window: tuple, n_nodes: int = 401,
                      profile: SwitchingProfile | None = None, rate: float = 1.0) -> complex:
    """Numerically integrate a diagram family over its vertex times.

    Args:
        diagrams: output of :func:`wick_diagrams` (any mix of orders).
        propagator: free two-point function supplying every contraction.
        externals: the same external legs the diagrams were built with
            (provides the fixed times).
        window: integration interval ``(lo, hi)`` for each vertex time.
            The branch sum cancels the integrand for vertices later than
            every external leg, so extra room at the top is harmless. Early
            vertices cancel too when the background commutes with the
            perturbation (or a switching profile kills them); otherwise the
            window must start at the anchor of the Heisenberg legs (time
            zero for :func:`ggreen_exact`).
        n_nodes: approximate quadrature nodes per vertex axis.
        profile: optional switching profile; vertices then pick up a factor
            ``h(rate * t_v)`` each, giving the adiabatically switched series.

    Jumps at the external times fall on segment boundaries of the
    quadrature and cost nothing; at order two the same-branch
    vertex-vertex channels still jump across the coincidence diagonal,
    which limits plain product quadrature to roughly first order there.

    Returns the sum over diagrams of ``symmetry * prefactor * integral``.
    """
    ext_times = [float(t) for _s, _lab, t in externals]
    grid, quad_w = _segmented_quadrature(window, ext_times, n_nodes)
    n_grid = grid.size
    total = 0.0 + 0.0j
    for diagram in diagrams:
        p = diagram.order

        def leg_time(leg_index):
            _sigma, _lab, vertex = diagram.legs[leg_index]
            if vertex is None:
                return ext_times[leg_index]
            axis_shape = [1] * p
            axis_shape[vertex] = n_grid
            return grid.reshape(axis_shape)

        integrand = np.ones((n_grid,) * p, dtype=np.complex128)
        for i, j in diagram.pairs:
            si, ki, _ = diagram.legs[i]
            sj, kj, _ = diagram.legs[j]
            integrand = integrand * propagator(
                (si, ki, leg_time(i)), (sj, kj, leg_time(j))
            )
        if profile is not None and p:
            shape_factor = profile(rate * grid)
            for v in range(p):
                axis_shape = [1] * p
                axis_shape[v] = n_grid
                integrand = integrand * shape_factor.reshape(axis_shape)
        value = integrand
        for _axis in range(p):
            value = np.tensordot(value, quad_w, axes=([-1], [0]))
        total += diagram.symmetry * diagram.prefactor * complex(value)
    return total
