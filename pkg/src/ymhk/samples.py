"""Closed-form U(1) configurations with known lattice observables."""

from __future__ import annotations

import numpy as np

from .algebra import U1
from .energy import FlowParams
from .fields import GaugeField, HiggsField
from .flow import FlowState
from .lattice import LatticeShape


def uniform_flux_links(L: int, h: float, flux: int) -> GaugeField:
    """U(1) links on an ``L x L`` torus with ``flux`` quanta spread evenly.

    Every plaquette equals ``exp(2 pi i flux / L^2)``, so
    ``F_01 = 2 pi i flux / (L h)^2`` at every site.
    """
    lat = LatticeShape.cubic(2, L, h)
    x = lat.coordinate_grid()
    phase = np.zeros((L, L, 2))
    phase[..., 1] = 2 * np.pi * flux * x[..., 0] / L ** 2
    phase[L - 1, :, 0] = -2 * np.pi * flux * x[L - 1, :, 1] / L
    return GaugeField(lat, U1, np.exp(1j * phase)[..., None, None])


def plane_wave_state(L: int, h: float, params: FlowParams, alpha: float = 0.3,
                     beta: float = 0.5) -> FlowState:
    """Smooth U(1) state on ``T^2`` with period ``ell = L h``.

    Potential ``A_1 = alpha sin(2 pi x_0 / ell)`` (so ``U_1 = exp(i h A_1)``,
    ``U_0 = 1``) and Higgs ``u = beta exp(2 pi i (x_0 + x_1) / ell)``.
    """
    lat = LatticeShape.cubic(2, L, h)
    ell = L * h
    x = lat.coordinate_grid() * h
    links = np.ones((L, L, 2, 1, 1), dtype=complex)
    links[..., 1, 0, 0] = np.exp(1j * h * alpha * np.sin(2 * np.pi * x[..., 0] / ell))
    u = beta * np.exp(2j * np.pi * (x[..., 0] + x[..., 1]) / ell)[..., None]
    return FlowState(0.0, GaugeField(lat, U1, links), HiggsField(lat, U1, u), params).with_energy()
