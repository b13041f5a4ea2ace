"""Gauge transforms, parabolic rescaling, blow-up extraction and smoothing diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import algebra as alg
from .energy import ymh_energy, ymh_k_energy
from .errors import BranchError, ConfigError, CurvatureTooRoughError, NoSingularityError
from .fields import GaugeField, HiggsField, curvature, gauge_act_links
from .flow import FlowState
from .lattice import LatticeShape
from .parallel import tree_sum


@dataclass(frozen=True)
class GaugeTransform:
    g: np.ndarray  # (*extents, r, r)

    @classmethod
    def random(cls, rng: np.random.Generator, lattice: LatticeShape, group: alg.Group) -> "GaugeTransform":
        return cls(alg.random_group(rng, lattice.extents, group))

    @classmethod
    def identity(cls, lattice: LatticeShape, group: alg.Group) -> "GaugeTransform":
        return cls(alg.identity(lattice.extents, group.r))

    def then(self, other: "GaugeTransform") -> "GaugeTransform":
        """Apply ``self`` first, then ``other``: the pointwise product ``other * self``."""
        return GaugeTransform(alg.mm(other.g, self.g))


def gauge_transform(U: GaugeField, u: HiggsField, g: GaugeTransform) -> tuple[GaugeField, HiggsField]:
    """``U_mu(x) -> g(x) U_mu(x) g(x+mu)^-1`` and ``u(x) -> g(x) u(x)``."""
    links = gauge_act_links(g.g, U.links)
    return U.with_links(links), HiggsField(u.lattice, u.group, alg.mv(g.g, u.values))


def transform_state(state: FlowState, g: GaugeTransform) -> FlowState:
    U, u = gauge_transform(state.U, state.u, g)
    return replace(state, U=U, u=u, last_energy=None)


def singularity_measure(U: GaugeField, u: HiggsField) -> np.ndarray:
    """``m(x) = |F(x)| + |u(x)|^2`` with ``|F|^2 = sum_{mu<nu} inner(F, F)``."""
    f = np.sqrt(curvature(U).pointwise_norm_sq())
    return f + (np.abs(u.values) ** 2).sum(axis=-1)


def argmax_site(lattice: LatticeShape, values: np.ndarray) -> int:
    """Site id of the maximum; ties go to the smallest site id."""
    return int(np.argmax(lattice.to_site_order(values)))


def observables(state: FlowState) -> dict:
    """Gauge-invariant scalar observables of a state."""
    U, u = state.U, state.u
    e = ymh_k_energy(U, u, state.params)
    m = singularity_measure(U, u)
    f2 = curvature(U).pointwise_norm_sq()
    return {
        "E_total": e.total, "E_curv": e.curvature_term, "E_higgs": e.higgs_term,
        "E_pot": e.potential_term, "E_ymh": ymh_energy(U, u).total, "l2_u": u.l2(),
        "sup_F": float(np.sqrt(f2.max())), "sup_u2": float((np.abs(u.values) ** 2).sum(-1).max()),
        "argmax_m": argmax_site(U.lattice, m),
    }


@dataclass(frozen=True)
class RescaleReport:
    rho: float
    k: int
    n: int
    energy_before: float
    energy_after: float
    energy_ratio_observed: float
    interpolation_error_estimate: float

    @property
    def energy_ratio_predicted(self) -> float:
        return predicted_energy_ratio(self.rho, self.k, self.n)

    @property
    def time_dilation(self) -> float:
        return self.rho ** (2 * (self.k + 1))

    @property
    def relative_deviation(self) -> float:
        return abs(self.energy_ratio_observed / self.energy_ratio_predicted - 1.0)


def predicted_energy_ratio(rho: float, k: int, n: int) -> float:
    return rho ** (2 * k + 4 - n)


def interpolation_matrix(L: int, y: np.ndarray, method: str = "fourier") -> np.ndarray:
    """Real ``(len(y), L)`` matrix evaluating the periodic interpolant of ``L``
    unit-spaced samples at positions ``y``.

    ``"fourier"`` is trigonometric interpolation (the Nyquist mode of an even
    ``L`` enters as a cosine, so real data stay real); ``"linear"`` is the
    periodic hat-function interpolant.
    """
    d = np.asarray(y, dtype=float)[:, None] - np.arange(L)[None, :]
    if method == "linear":
        d = np.abs(d - L * np.round(d / L))
        return np.maximum(0.0, 1.0 - d)
    if method != "fourier":
        raise ValueError(f"unknown interpolation method {method!r}")
    out = np.ones_like(d)
    for q in range(1, (L - 1) // 2 + 1):
        out += 2.0 * np.cos(2 * np.pi * q * d / L)
    if L % 2 == 0:
        out += np.cos(np.pi * d)
    return out / L


def resample_separable(values: np.ndarray, positions: list[np.ndarray], method: str = "fourier") -> np.ndarray:
    """Interpolate a periodic site array onto the tensor grid ``positions[0] x positions[1] x ...``.

    ``values`` has shape ``(*extents, *tail)``; positions are in lattice units.
    """
    out = values
    for a, y in enumerate(positions):
        m = interpolation_matrix(values.shape[a], y, method)
        out = np.moveaxis(np.tensordot(m, out, axes=([1], [a])), 0, a)
    return out


def _link_potentials(U: GaugeField) -> np.ndarray:
    """Chart coordinates of ``h * A = log U`` per link, shape ``(*extents, n, dim)``."""
    try:
        return alg.to_coeffs(alg.log_map(U.links))
    except BranchError as exc:
        raise CurvatureTooRoughError(f"link outside the log chart: {exc}") from exc


def _interp_error_estimate(arrays: list[np.ndarray], n: int) -> float:
    """``(1/8) sum_a max |second difference along a|`` relative to the field scale."""
    est = 0.0
    scale = 0.0
    for arr in arrays:
        scale = max(scale, float(np.max(np.abs(arr))) if arr.size else 0.0)
        for a in range(n):
            d2 = np.roll(arr, -1, axis=a) - 2 * arr + np.roll(arr, 1, axis=a)
            est += float(np.max(np.abs(d2))) / 8.0
    return est / scale if scale > 0 else 0.0


def _resample(state: FlowState, sigma: float, center: tuple[int, ...], new_extents: tuple[int, ...],
              centered: bool, method: str) -> tuple[FlowState, float]:
    """Sample ``sigma * A(c + sigma x)`` and ``sigma * u(c + sigma x)`` on a lattice of spacing ``h sigma``."""
    lat = state.lattice
    n = lat.n
    new_lat = LatticeShape(n, new_extents, lat.h * sigma)
    s2 = sigma * sigma
    axes = []
    for a, e in enumerate(new_extents):
        j = np.arange(e, dtype=float)
        if centered:
            j = np.where(j >= e / 2, j - e, j)
        axes.append(j)
    coeffs = _link_potentials(state.U)
    links = np.empty(new_extents + (n, state.U.group.r, state.U.group.r), dtype=complex)
    for mu in range(n):
        # link mu at site i sits at i + e_mu / 2 in either lattice
        pos = [center[a] + s2 * (axes[a] + 0.5 * (a == mu)) - 0.5 * (a == mu) for a in range(n)]
        a = resample_separable(coeffs[..., mu, :], pos, method)
        links[..., mu, :, :] = alg.exp_map(alg.from_coeffs(s2 * a))
    pos = [center[a] + s2 * axes[a] for a in range(n)]
    higgs = sigma * resample_separable(state.u.values, pos, method)
    U = GaugeField(new_lat, state.U.group, links)
    u = HiggsField(new_lat, state.u.group, higgs)
    est = _interp_error_estimate([coeffs, state.u.values], n)
    t = state.t / sigma ** (2 * (state.params.k + 1))
    return FlowState(t, U, u, state.params), est


def _unit_change(state: FlowState, sigma: float, center: tuple[int, ...]) -> FlowState:
    """Exact rescaling: spacing ``h / sigma``, links unchanged, Higgs times ``sigma``,
    translated so ``center`` becomes site 0."""
    lat = state.lattice
    shift = tuple(-c for c in center)
    axes = tuple(range(lat.n))
    new_lat = LatticeShape(lat.n, lat.extents, lat.h / sigma)
    links = np.roll(state.U.links, shift, axis=axes)
    higgs = sigma * np.roll(state.u.values, shift, axis=axes)
    t = state.t / sigma ** (2 * (state.params.k + 1))
    return FlowState(t, GaugeField(new_lat, state.U.group, links),
                     HiggsField(new_lat, state.u.group, higgs), state.params)


def rescale(state: FlowState, rho_inv: int, center: int = 0, resample: bool = True,
            method: str = "fourier") -> tuple[FlowState, RescaleReport]:
    """Parabolic rescaling by ``rho = 1 / rho_inv``.

    With ``resample`` the rescaled fields ``rho * A(c + rho x)`` and
    ``rho * u(c + rho x)`` are interpolated onto a lattice of spacing
    ``h * rho`` with extents ``L * rho_inv**2``, which covers the preimage of
    the whole torus. ``method`` picks the periodic interpolant (``"fourier"``
    or ``"linear"``); the linear one has kinks that spoil ``k >= 1``
    energies, whose stencils see second differences. Without it the state is only re-expressed in new units
    (spacing ``h * rho_inv``), which is exact. Flow time is divided by the
    time dilation ``rho^(2(k+1))``.
    """
    if int(rho_inv) != rho_inv or rho_inv < 1:
        raise ValueError(f"rho_inv must be a positive integer, got {rho_inv}")
    rho_inv = int(rho_inv)
    rho = 1.0 / rho_inv
    lat = state.lattice
    c = lat.coords(center)
    before = ymh_k_energy(state.U, state.u, state.params).total
    if resample:
        new_ext = tuple(e * rho_inv ** 2 for e in lat.extents)
        new, est = _resample(state, rho, c, new_ext, centered=False, method=method)
    else:
        new, est = _unit_change(state, rho, c), 0.0
    new = new.with_energy()
    after = new.energy().total
    ratio = after / before if before != 0 else float("nan")
    return new, RescaleReport(rho, state.params.k, lat.n, before, after, ratio, est)


def blowup_extract(state: FlowState, resample: bool = False,
                   extents: tuple[int, ...] | None = None, method: str = "fourier") -> tuple[FlowState, float, int]:
    """Normalize the state at the maximum of ``m = |F| + |u|^2``.

    Uses ``rho = m_max^-(k+1)`` and the spatial factor
    ``sigma = rho^(1/(2(k+1))) = m_max^(-1/2)``, so the rescaled state has
    ``m = 1`` at site 0 and flow time 0. Without ``resample`` this is a pure
    unit change and exact. With it, fields are interpolated onto a lattice
    of spacing ``h * sigma`` (same extents unless given) centred on the
    maximum; away from the centre the window need not be periodic.
    """
    m = singularity_measure(state.U, state.u)
    site = argmax_site(state.lattice, m)
    c = state.lattice.coords(site)
    m_max = float(m[c])
    if not m_max > 0:
        raise NoSingularityError("m = |F| + |u|^2 vanishes identically")
    k = state.params.k
    rho = m_max ** (-(k + 1))
    sigma = rho ** (1.0 / (2 * (k + 1)))
    if resample:
        new, _ = _resample(state, sigma, c, tuple(extents or state.lattice.extents), centered=True,
                           method=method)
    else:
        new = _unit_change(state, sigma, c)
    return replace(new, t=0.0).with_energy(), rho, site


def center_value(state: FlowState, site: int = 0) -> float:
    m = singularity_measure(state.U, state.u)
    return float(m[state.lattice.coords(site)])


def ball_masses(U: GaugeField, center: int, radii: list[float]) -> list[float]:
    """``h^n sum |F|^2`` over sites within minimal-image lattice distance ``r`` of ``center``."""
    lat = U.lattice
    f2 = curvature(U).pointwise_norm_sq()
    grid = lat.coordinate_grid()
    c = np.array(lat.coords(center))
    ext = np.array(lat.extents)
    d = (grid - c) % ext
    d = np.minimum(d, ext - d)
    dist = np.sqrt((d.astype(float) ** 2).sum(axis=-1))
    return [lat.site_volume * tree_sum(np.where(dist <= r, f2, 0.0)) for r in radii]


def compensation_exponent(q: int, k: int) -> float:
    return q / (k + 1)


def smoothing_diagnostic(rows: list[dict], q: int, k: int) -> list[tuple[float, float]]:
    """``(t, t^(q/(k+1)) |D^q F|^2_{L^2})`` per trace row."""
    col = f"d{q}F_l2"
    if not rows or col not in rows[0]:
        raise ConfigError(f"trace has no column {col!r}; run with record_derivatives = true", "record_derivatives")
    ex = compensation_exponent(q, k)
    return [(r["t"], r["t"] ** ex * r[col] ** 2) for r in rows]


def final_decade_log_slope(series: list[tuple[float, float]]) -> float:
    """Least-squares slope of ``log value`` against ``log t`` for ``t`` in ``[t_end/10, t_end]``."""
    t_end = max(t for t, _ in series)
    pts = [(t, v) for t, v in series if t >= t_end / 10 and t > 0]
    if all(v == 0 for _, v in pts):
        return 0.0
    pts = [(t, v) for t, v in pts if v > 0]
    if len(pts) < 2:
        raise ValueError("need at least two positive points in the final decade")
    x = np.log([t for t, _ in pts])
    y = np.log([v for _, v in pts])
    return float(np.polyfit(x, y, 1)[0])
