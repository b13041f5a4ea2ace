"""Time integration of the Yang-Mills-Higgs k-flow.

The flow is steepest descent of the discrete k-energy. Links move by a
Lie-Euler step on the left trivialization, ``U <- exp(-dt * c * Z) U``, and
the Higgs field by ``u <- u - dt * g``. Here ``(Z, g)`` is the exact
gradient and ``c = h^(2-n)`` converts the unweighted link gradient into the
L^2 velocity of the gauge potential (``c = 1`` at unit spacing).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Protocol

import numpy as np

from . import algebra as alg
from .config import RunConfig
from .energy import EnergyBreakdown, FlowParams, ymh_energy, ymh_k_energy
from .errors import BlowUpSignal, CurvatureTooRoughError, StallSignal
from .fields import GaugeField, HiggsField, curvature, iterated_deriv
from .gradient import GradientPair, gradient
from .lattice import LatticeShape
from .parallel import tree_sum

log = logging.getLogger(__name__)

MAX_HALVINGS = 30
STALL_RTOL = 1e-15
REUNITARIZE_EVERY = 100


@dataclass(frozen=True)
class FlowState:
    t: float
    U: GaugeField
    u: HiggsField
    params: FlowParams
    step_count: int = 0
    last_dt: float = 0.0
    last_energy: EnergyBreakdown | None = None

    @property
    def lattice(self) -> LatticeShape:
        return self.U.lattice

    def energy(self) -> EnergyBreakdown:
        if self.last_energy is None:
            return ymh_k_energy(self.U, self.u, self.params)
        return self.last_energy

    def with_energy(self) -> "FlowState":
        return replace(self, last_energy=ymh_k_energy(self.U, self.u, self.params))

    def revalidate(self, rtol: float = 1e-12) -> bool:
        """Recompute the energy and compare with the cached breakdown."""
        fresh = ymh_k_energy(self.U, self.u, self.params).total
        cached = self.energy().total
        return abs(fresh - cached) <= rtol * max(abs(fresh), 1e-300)


@dataclass(frozen=True)
class StepStats:
    dt_used: float
    backtrack_count: int
    energy_before: float
    energy_after: float
    grad_norm: float
    sup_F: float
    sup_u2: float
    stalled: bool = False


def cold_start(lattice: LatticeShape, group: alg.Group, params: FlowParams) -> FlowState:
    return FlowState(0.0, GaugeField.cold(lattice, group), HiggsField.zeros(lattice, group),
                     params).with_energy()


def hot_start(lattice: LatticeShape, group: alg.Group, params: FlowParams, amplitude: float,
              seed: int) -> FlowState:
    """Links ``exp(X)`` with ``X`` uniform in the chart ball of radius ``amplitude``;
    Higgs entries complex Gaussian with standard deviation ``amplitude`` per real part.

    Draws come from one PCG64 stream consumed in site-id order, links first.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    n = lattice.n
    flat = alg.random_ball_algebra(rng, (lattice.num_sites, n), group, amplitude)
    links = lattice.from_site_order(alg.exp_map(flat))
    z = rng.standard_normal((lattice.num_sites, group.r, 2))
    higgs = lattice.from_site_order(amplitude * (z[..., 0] + 1j * z[..., 1]))
    return FlowState(0.0, GaugeField(lattice, group, links), HiggsField(lattice, group, higgs),
                     params).with_energy()


def link_rate(lattice: LatticeShape) -> float:
    return lattice.h ** (2 - lattice.n)


def grad_norm(lattice: LatticeShape, g: GradientPair) -> float:
    """L^2 norm of the flow velocity, so that ``dE/dt = -grad_norm**2``."""
    links = link_rate(lattice) * tree_sum(alg.norm_sq(g.link_grad))
    higgs = lattice.site_volume * tree_sum(np.abs(g.higgs_grad) ** 2)
    return float(np.sqrt(links + higgs))


def sup_observables(U: GaugeField, u: HiggsField) -> tuple[float, float]:
    """``(max |F|, max |u|^2)`` over sites."""
    f2 = curvature(U).pointwise_norm_sq()
    u2 = (np.abs(u.values) ** 2).sum(axis=-1)
    return float(np.sqrt(f2.max())), float(u2.max())


def _advance(state: FlowState, g: GradientPair, dt: float, reunitarize: bool) -> tuple[GaugeField, HiggsField]:
    rate = link_rate(state.lattice)
    links = alg.mm(alg.exp_map(-dt * rate * g.link_grad), state.U.links)
    if reunitarize:
        links = alg.reunitarize(links)
    return state.U.with_links(links), HiggsField(state.u.lattice, state.u.group, state.u.values - dt * g.higgs_grad)


def step(state: FlowState, mode: str = "backtracking", dt0: float = 0.01) -> tuple[FlowState, StepStats]:
    """One Lie-Euler step of the flow.

    In ``backtracking`` mode ``dt`` is halved (at most 30 times) until the
    energy decreases, or changes by less than 1e-15 relative (a stall). At
    ``lambda = 0`` the step must also not increase ``|u|_{L^2}``. Trial states
    whose plaquettes leave the log chart are rejected like any other.

    Raises
    ------
    StallSignal
        No admissible step after the maximum number of halvings.
    BlowUpSignal
        Euler mode produced a state outside the log chart.
    """
    if not dt0 > 0:
        raise ValueError("dt0 must be positive")
    if mode not in ("euler", "backtracking"):
        raise ValueError(f"unknown step mode {mode!r}")
    p = state.params
    e0 = state.energy().total
    g = gradient(state.U, state.u, p)
    gnorm = grad_norm(state.lattice, g)
    reun = (state.step_count + 1) % REUNITARIZE_EVERY == 0
    l2_before = state.u.l2_sq() if p.lam == 0 else None

    def finish(U, u, energy, dt, backtracks, stalled):
        sup_f, sup_u2 = sup_observables(U, u)
        new = FlowState(state.t + dt, U, u, p, state.step_count + 1, dt, energy)
        return new, StepStats(dt, backtracks, e0, energy.total, gnorm, sup_f, sup_u2, stalled)

    if mode == "euler":
        U, u = _advance(state, g, dt0, reun)
        try:
            energy = ymh_k_energy(U, u, p)
        except CurvatureTooRoughError as exc:
            raise BlowUpSignal(f"euler step left the log chart: {exc}", state) from exc
        return finish(U, u, energy, dt0, 0, False)

    if gnorm == 0.0 and not reun:
        return finish(state.U, state.u, state.energy(), dt0, 0, True)

    dt = dt0
    for halvings in range(MAX_HALVINGS + 1):
        U, u = _advance(state, g, dt, reun)
        try:
            energy = ymh_k_energy(U, u, p)
        except CurvatureTooRoughError:
            dt *= 0.5
            continue
        e1 = energy.total
        l2_ok = l2_before is None or u.l2_sq() <= l2_before
        if l2_ok and e1 < e0:
            return finish(U, u, energy, dt, halvings, False)
        if l2_ok and e1 - e0 <= STALL_RTOL * abs(e0):
            return finish(U, u, energy, dt, halvings, True)
        dt *= 0.5
    raise StallSignal(f"no energy decrease after {MAX_HALVINGS} halvings at step {state.step_count}")


@dataclass(frozen=True)
class TraceRecord:
    step: int
    t: float
    dt: float
    E_total: float
    E_curv: float
    E_higgs: float
    E_pot: float
    l2_u: float
    sup_F: float
    sup_u2: float
    grad_norm: float
    E_ymh: float
    dF_l2: tuple[float, ...] | None = None

    def as_row(self) -> dict:
        row = {
            "step": self.step, "t": self.t, "dt": self.dt, "E_total": self.E_total,
            "E_curv": self.E_curv, "E_higgs": self.E_higgs, "E_pot": self.E_pot,
            "l2_u": self.l2_u, "sup_F": self.sup_F, "sup_u2": self.sup_u2,
            "grad_norm": self.grad_norm, "E_ymh": self.E_ymh,
        }
        for q, v in enumerate(self.dF_l2 or ()):
            row[f"d{q}F_l2"] = v
        return row


def derivative_norms(U: GaugeField, k: int) -> tuple[float, ...]:
    """``|D^q F|_{L^2}`` for ``q = 0..k``."""
    F = curvature(U)
    out = [F.norm()]
    d = F
    for _ in range(k):
        d = iterated_deriv(U, d, 1)
        out.append(d.norm())
    return tuple(out)


def make_record(state: FlowState, dt: float, gnorm: float, sup_f: float, sup_u2: float,
                record_derivatives: bool) -> TraceRecord:
    e = state.energy()
    ymh = ymh_energy(state.U, state.u).total
    derivs = derivative_norms(state.U, state.params.k) if record_derivatives else None
    return TraceRecord(state.step_count, state.t, dt, e.total, e.curvature_term, e.higgs_term,
                       e.potential_term, state.u.l2(), sup_f, sup_u2, gnorm, ymh, derivs)


class RunSink(Protocol):
    def record(self, rec: TraceRecord) -> None: ...

    def snapshot(self, state: FlowState, tag: str) -> None: ...


@dataclass
class RunResult:
    final: FlowState
    trace: list[TraceRecord]
    reason: str  # "t_max", "max_steps", "stall" or "blowup"
    stats: list[StepStats]


def run(initial: FlowState, cfg: RunConfig, sink: RunSink | None = None,
        on_step: Callable[[FlowState, StepStats], None] | None = None) -> RunResult:
    """Iterate :func:`step` until ``t_max``, ``max_steps``, a stall or a blow-up."""
    trace: list[TraceRecord] = []
    stats: list[StepStats] = []
    state = initial if initial.last_energy is not None else initial.with_energy()
    if cfg.t_max <= 0:
        return RunResult(state, trace, "t_max", stats)

    def emit(rec: TraceRecord) -> None:
        trace.append(rec)
        if sink is not None:
            sink.record(rec)

    g0 = gradient(state.U, state.u, state.params)
    emit(make_record(state, 0.0, grad_norm(state.lattice, g0), *sup_observables(state.U, state.u),
                     cfg.record_derivatives))
    base_dt = cfg.dt
    last_recorded = state.step_count
    reason = "t_max"
    st: StepStats | None = None
    while True:
        remaining = cfg.t_max - state.t
        if remaining <= 1e-12 * cfg.t_max:
            reason = "t_max"
            break
        if cfg.max_steps and state.step_count - initial.step_count >= cfg.max_steps:
            reason = "max_steps"
            break
        dt0 = base_dt
        if cfg.integrator == "backtracking" and state.last_dt > 0:
            dt0 = min(base_dt, 2.0 * state.last_dt)
        dt0 = min(dt0, remaining)
        try:
            state, st = step(state, cfg.integrator, dt0)
        except StallSignal as exc:
            log.info("run stalled: %s", exc)
            reason = "stall"
            break
        except BlowUpSignal as exc:
            log.warning("blow-up: %s", exc)
            reason = "blowup"
            break
        stats.append(st)
        if on_step is not None:
            on_step(state, st)
        if state.step_count % cfg.record_every == 0:
            emit(make_record(state, st.dt_used, st.grad_norm, st.sup_F, st.sup_u2, cfg.record_derivatives))
            last_recorded = state.step_count
        if sink is not None and cfg.snapshot_every and state.step_count % cfg.snapshot_every == 0:
            sink.snapshot(state, f"step{state.step_count:08d}")
        if st.sup_F + st.sup_u2 > cfg.blowup_ceiling:
            log.warning("blow-up ceiling exceeded: sup_F + sup_u2 = %g", st.sup_F + st.sup_u2)
            reason = "blowup"
            break
    if st is not None and last_recorded != state.step_count:
        emit(make_record(state, st.dt_used, st.grad_norm, st.sup_F, st.sup_u2, cfg.record_derivatives))
    if sink is not None:
        sink.snapshot(state, "blowup" if reason == "blowup" else "final")
    return RunResult(state, trace, reason, stats)
