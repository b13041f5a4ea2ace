"""Discrete Yang-Mills-Higgs k-energy with Higgs self-interaction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import GaugeField, HiggsField, curvature, iterated_deriv
from .parallel import tree_sum

MAX_K = 3


@dataclass(frozen=True)
class FlowParams:
    k: int = 1
    lam: float = 0.0

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or not 0 <= self.k <= MAX_K:
            raise ValueError(f"k must be an integer in 0..{MAX_K}, got {self.k!r}")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class EnergyBreakdown:
    curvature_term: float
    higgs_term: float
    potential_term: float

    @property
    def total(self) -> float:
        return self.curvature_term + self.higgs_term + self.potential_term


def energy_order(k: int) -> int:
    """Highest difference order appearing in the k-energy."""
    return k + 1


def potential_density(u: HiggsField) -> np.ndarray:
    return ((np.abs(u.values) ** 2).sum(axis=-1) - 1.0) ** 2


def ymh_k_energy(U: GaugeField, u: HiggsField, p: FlowParams) -> EnergyBreakdown:
    """``1/2 |D^k F|^2 + 1/2 |D^{k+1} u|^2 + lambda/8 (|u|^2 - 1)^2``, integrated.

    Raises ``CurvatureTooRoughError`` if a plaquette leaves the log chart and
    ``LatticeTooSmallError`` if an extent is below ``k + 2``.
    """
    U.lattice.require_order(energy_order(p.k))
    F = curvature(U)
    curv = 0.5 * iterated_deriv(U, F, p.k).norm_sq()
    higgs = 0.5 * iterated_deriv(U, u.as_tensor(), p.k + 1).norm_sq()
    pot = 0.0
    if p.lam > 0:
        pot = p.lam / 8.0 * U.lattice.site_volume * tree_sum(potential_density(u))
    return EnergyBreakdown(curv, higgs, pot)


def ymh_energy(U: GaugeField, u: HiggsField) -> EnergyBreakdown:
    """Plain Yang-Mills-Higgs energy (k = 0, no self-interaction)."""
    return ymh_k_energy(U, u, FlowParams(0, 0.0))
