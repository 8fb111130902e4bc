"""Quasiparticle poles of a weakly perturbed lattice.

For the exactly solvable frequency-shift model the interacting one-particle
energy is omega(k) + g v(k). This demo recovers it numerically end to end:
closed-form free propagator, frequency-space channel matrix, first-order
self-energy, resolvent equation, then pole extraction from the damped
determinant, and compares against the known answer.
"""

import csv
import math
from pathlib import Path

import numpy as np

from lfun import ModeSet
from lfun.dyson import TwoPointG, dyson_solve, quasiparticle_poles, self_energy_diagrams
from lfun.keldysh import free_propagator
from lfun.models import diagonal_coupling

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def main() -> None:
    g, temp = 0.08, 0.8
    modes = ModeSet.lattice(3, dispersion=lambda k: 1.0 + 0.25 * (2.0 - 2.0 * math.cos(k)))
    v_k = {lab: 0.7 + 0.2 * math.cos(modes.momentum_of(lab)) for lab in modes.labels}
    occ = {lab: 1.0 / math.expm1(modes.omega_of(lab) / temp) for lab in modes.labels}
    prop = free_propagator(modes, occ, hbar=1.0)
    interaction = diagonal_coupling(modes, v_k).scaled(g)
    eps = np.linspace(-3.0, 3.0, 1201)
    eta = 0.5

    print(f"ring of {len(modes)} modes, coupling g = {g}, damping eta = {eta}")
    print(f"{'k':>8s} {'omega(k)':>10s} {'pole':>12s} {'shift':>12s} {'g*v(k)':>10s} {'defect':>10s}")
    rows = []
    for lab in modes.labels:
        free_spec = TwoPointG.from_free(prop, lab, 40.0, 4001).spectrum(eps, eta)
        sigma = self_energy_diagrams(interaction, prop, lab, 1)
        bold = dyson_solve(free_spec, sigma)
        poles = quasiparticle_poles(bold)
        omega = modes.omega_of(lab)
        pole = poles[np.argmin(np.abs(poles.real - omega))]
        shift = pole.real - omega
        want = g * v_k[lab]
        print(f"{modes.momentum_of(lab):8.4f} {omega:10.6f} {pole.real:12.8f} "
              f"{shift:12.8f} {want:10.6f} {abs(shift - want):10.2e}")
        rows.append([modes.momentum_of(lab), omega, pole.real, pole.imag, shift, want])
    with open(OUT / "quasiparticle_poles.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["momentum", "omega", "pole_re", "pole_im", "shift", "expected"])
        writer.writerows(rows)
    print("\nthe imaginary parts return the added damping, so the dressed",
          "excitations are as sharp as the free ones at this order")
    print(f"wrote {OUT / 'quasiparticle_poles.csv'}")


if __name__ == "__main__":
    main()
