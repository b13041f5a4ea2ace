"""Invariant checks shared by ``ymhk verify`` and the test suites.

Each check returns plain numbers; thresholds are applied by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import algebra as alg
from .analysis import GaugeTransform, observables, transform_state
from .energy import FlowParams
from .fields import (
    ALGEBRA, HIGGS, GaugeField, HiggsField, TensorField, cov_diff, cov_diff_adjoint, iterated_deriv,
    kato_violations,
)
from .flow import FlowState, hot_start, step
from .gradient import fd_check, gradient
from .lattice import LatticeShape


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28} {self.value:.3e}  (limit {self.threshold:.1e})"


def random_links(rng: np.random.Generator, lattice: LatticeShape, group: alg.Group) -> GaugeField:
    return GaugeField(lattice, group, alg.random_group(rng, lattice.extents + (lattice.n,), group))


def random_tensor(rng: np.random.Generator, lattice: LatticeShape, group: alg.Group, kind: str,
                  rank: int) -> TensorField:
    idx = lattice.extents + (lattice.n,) * rank
    if kind == ALGEBRA:
        data = alg.random_algebra(rng, idx, group)
    else:
        z = rng.standard_normal(idx + (group.r, 2))
        data = z[..., 0] + 1j * z[..., 1]
    return TensorField(lattice, kind, rank, data)


def adjoint_residual(rng: np.random.Generator, lattice: LatticeShape, group: alg.Group,
                     kind: str = HIGGS, rank: int = 0) -> float:
    """``|<D phi, psi> - <phi, D* psi>| / (|phi| |psi|)`` for random ``U, phi, psi``."""
    U = random_links(rng, lattice, group)
    phi = random_tensor(rng, lattice, group, kind, rank)
    psi = random_tensor(rng, lattice, group, kind, rank + 1)
    lhs = cov_diff(U, phi).inner(psi)
    rhs = phi.inner(cov_diff_adjoint(U, psi))
    return abs(lhs - rhs) / (phi.norm() * psi.norm())


_SCALARS = ("E_total", "E_curv", "E_higgs", "E_pot", "E_ymh", "l2_u", "sup_F", "sup_u2")


def gauge_invariance_error(state: FlowState, g: GaugeTransform) -> float:
    """Largest relative change of a scalar observable; a moved argmax counts as 1."""
    a = observables(state)
    b = observables(transform_state(state, g))
    worst = 0.0 if a["argmax_m"] == b["argmax_m"] else 1.0
    for key in _SCALARS:
        scale = max(abs(a[key]), abs(b[key]))
        if scale > 0:
            worst = max(worst, abs(a[key] - b[key]) / scale)
    return worst


def random_direction(rng: np.random.Generator, lattice: LatticeShape,
                     group: alg.Group) -> tuple[np.ndarray, np.ndarray]:
    link_dir = alg.random_algebra(rng, lattice.extents + (lattice.n,), group)
    z = rng.standard_normal(lattice.extents + (group.r, 2))
    return link_dir, z[..., 0] + 1j * z[..., 1]


def fd_errors(state: FlowState, rng: np.random.Generator, directions: int, eps: float = 1e-5) -> list[float]:
    grad = gradient(state.U, state.u, state.params)
    return [
        fd_check(state.U, state.u, state.params, random_direction(rng, state.lattice, state.U.group),
                 eps, grad).rel_err
        for _ in range(directions)
    ]


@dataclass(frozen=True)
class MonotonicityReport:
    steps: int
    energy_increases: int
    l2_increases: int
    kato_violations: int
    energies: list[float]


def monotonicity_run(state: FlowState, steps: int, dt0: float, kato_every: int = 0) -> MonotonicityReport:
    """Backtracking steps from ``state``; counts energy and ``|u|`` increases.

    An energy increase is a rise above ``1e-15`` relative. With
    ``kato_every > 0`` the Kato inequality is checked on every such step.
    """
    e_inc = l2_inc = kato = 0
    energies = [state.energy().total]
    l2 = state.u.l2_sq()
    for i in range(steps):
        dt = dt0 if state.last_dt == 0 else min(dt0, 2 * state.last_dt)
        state, st = step(state, "backtracking", dt)
        e = state.energy().total
        if e - energies[-1] > 1e-15 * abs(energies[-1]):
            e_inc += 1
        new_l2 = state.u.l2_sq()
        if new_l2 > l2:
            l2_inc += 1
        l2 = new_l2
        energies.append(e)
        if kato_every and (i + 1) % kato_every == 0:
            kato += kato_violations(state.U, state.u)
    return MonotonicityReport(steps, e_inc, l2_inc, kato, energies)


def euler_l2_rate(state: FlowState, dt: float) -> tuple[float, float]:
    """``(observed, predicted)`` first-order rate of ``|u|^2`` for one Euler step at ``lambda = 0``.

    Observed is ``(|u_1|^2 - |u_0|^2) / dt`` with ``u_1 = u_0 - dt g``, the
    Higgs half of an Euler step (``|u|^2`` does not see the links, so the
    link half is skipped); predicted is ``-2 |D^{k+1} u|^2``.
    """
    p = replace(state.params, lam=0.0)
    g = gradient(state.U, state.u, p).higgs_grad
    u1 = HiggsField(state.lattice, state.u.group, state.u.values - dt * g)
    observed = (u1.l2_sq() - state.u.l2_sq()) / dt
    predicted = -2.0 * iterated_deriv(state.U, state.u.as_tensor(), p.k + 1).norm_sq()
    return observed, predicted


def invariant_suite(lattice: LatticeShape, group: alg.Group, params: FlowParams, seed: int,
                    smoke_steps: int = 20) -> list[CheckResult]:
    """The table printed by ``ymhk verify``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    results = []

    adj = max(adjoint_residual(rng, lattice, group, kind, rank)
              for kind in (HIGGS, ALGEBRA) for rank in (0, 1) for _ in range(3))
    results.append(CheckResult("adjointness", adj < 1e-12, adj, 1e-12))

    state = hot_start(lattice, group, params, 0.3, seed)
    gauge = max(gauge_invariance_error(state, GaugeTransform.random(rng, lattice, group)) for _ in range(3))
    results.append(CheckResult("gauge invariance", gauge < 1e-12, gauge, 1e-12))

    fd = max(fd_errors(state, rng, 5))
    results.append(CheckResult("finite-difference gradient", fd < 1e-6, fd, 1e-6))

    dt0 = 0.1 * lattice.h ** (2 * (params.k + 1))
    mono = monotonicity_run(state, smoke_steps, dt0, kato_every=1)
    kato = kato_violations(state.U, state.u) + mono.kato_violations
    results.append(CheckResult("Kato inequality", kato == 0, float(kato), 0.0))
    results.append(CheckResult("energy monotonicity", mono.energy_increases == 0,
                               float(mono.energy_increases), 0.0))
    return results

