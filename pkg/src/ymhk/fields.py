"""Lattice field containers and the covariant calculus.

Link ``U_mu(x)`` transports from ``x + e_mu`` back to ``x``; the covariant
forward difference of a section is ``(U_mu(x) phi(x+e_mu) - phi(x)) / h``.
Algebra-valued (adjoint-bundle) tensors are transported by conjugation.
Direction indices of higher-rank tensors are not transported: the base is
flat, so the Levi-Civita part of the derivative is a plain shift.

Array layout: ``(*extents, n, ..., n, *value_shape)`` with one ``n`` axis per
direction index, the newest (outermost derivative) first. Values are
``(r, r)`` matrices for ``kind="algebra"`` and ``(r,)`` vectors for
``kind="higgs"``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import factorial

import numpy as np

from . import algebra as alg
from .algebra import Group
from .errors import BranchError, CurvatureTooRoughError
from .lattice import LatticeShape, roll
from .parallel import map_split, tree_sum

ALGEBRA = "algebra"
HIGGS = "higgs"


@dataclass(frozen=True)
class GaugeField:
    lattice: LatticeShape
    group: Group
    links: np.ndarray  # (*extents, n, r, r)

    def __post_init__(self):
        want = self.lattice.extents + (self.lattice.n, self.group.r, self.group.r)
        if self.links.shape != want:
            raise ValueError(f"links have shape {self.links.shape}, expected {want}")

    @classmethod
    def cold(cls, lattice: LatticeShape, group: Group) -> "GaugeField":
        return cls(lattice, group, alg.identity(lattice.extents + (lattice.n,), group.r))

    def link(self, mu: int) -> np.ndarray:
        return self.links[..., mu, :, :]

    def with_links(self, links: np.ndarray) -> "GaugeField":
        return replace(self, links=links)

    def reunitarized(self) -> "GaugeField":
        return self.with_links(alg.reunitarize(self.links))


@dataclass(frozen=True)
class HiggsField:
    lattice: LatticeShape
    group: Group
    values: np.ndarray  # (*extents, r)

    def __post_init__(self):
        want = self.lattice.extents + (self.group.r,)
        if self.values.shape != want:
            raise ValueError(f"Higgs values have shape {self.values.shape}, expected {want}")

    @classmethod
    def zeros(cls, lattice: LatticeShape, group: Group) -> "HiggsField":
        return cls(lattice, group, np.zeros(lattice.extents + (group.r,), dtype=complex))

    def as_tensor(self) -> "TensorField":
        return TensorField(self.lattice, HIGGS, 0, self.values)

    def l2_sq(self) -> float:
        return self.as_tensor().norm_sq()

    def l2(self) -> float:
        return float(np.sqrt(self.l2_sq()))


@dataclass(frozen=True)
class TensorField:
    """Rank-``rank`` lattice tensor with algebra or C^r values.

    ``form_degree`` is the number of trailing antisymmetric (form) indices;
    the pointwise norm divides the full index sum by ``form_degree!`` so a
    2-form counts each plane once.
    """

    lattice: LatticeShape
    kind: str
    rank: int
    data: np.ndarray
    form_degree: int = 0

    def __post_init__(self):
        if self.kind not in (ALGEBRA, HIGGS):
            raise ValueError(f"unknown tensor kind {self.kind!r}")
        n = self.lattice.n
        idx = self.data.shape[n:n + self.rank]
        if self.data.shape[:n] != self.lattice.extents or idx != (n,) * self.rank:
            raise ValueError(f"tensor data shape {self.data.shape} does not match rank {self.rank}")
        if self.form_degree > self.rank:
            raise ValueError("form degree exceeds rank")

    @property
    def value_ndim(self) -> int:
        return 2 if self.kind == ALGEBRA else 1

    @property
    def weight(self) -> float:
        """Per-site weight of the global inner product."""
        return self.lattice.site_volume / factorial(self.form_degree)

    def with_data(self, data: np.ndarray, rank: int | None = None) -> "TensorField":
        return replace(self, data=data, rank=self.rank if rank is None else rank)

    def pointwise_norm_sq(self) -> np.ndarray:
        """``|phi(x)|^2`` per site, summing over direction indices."""
        d = self.data
        sq = (d.real ** 2 + d.imag ** 2)
        n = self.lattice.n
        axes = tuple(range(n, d.ndim))
        return sq.sum(axis=axes) / factorial(self.form_degree)

    def inner(self, other: "TensorField") -> float:
        """Global real inner product ``sum_x h^n <phi(x), psi(x)>``."""
        _check_compatible(self, other)
        dens = np.real(np.conj(self.data) * other.data)
        return self.weight * tree_sum(dens)

    def norm_sq(self) -> float:
        d = self.data
        return self.weight * tree_sum(d.real ** 2 + d.imag ** 2)

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def __add__(self, other: "TensorField") -> "TensorField":
        _check_compatible(self, other)
        return self.with_data(self.data + other.data)

    def __sub__(self, other: "TensorField") -> "TensorField":
        _check_compatible(self, other)
        return self.with_data(self.data - other.data)

    def __mul__(self, c: float) -> "TensorField":
        return self.with_data(c * self.data)

    __rmul__ = __mul__

    def __neg__(self) -> "TensorField":
        return self.with_data(-self.data)


def _check_compatible(a: TensorField, b: TensorField) -> None:
    if (a.kind, a.rank, a.form_degree, a.data.shape) != (b.kind, b.rank, b.form_degree, b.data.shape):
        raise ValueError("tensor fields are not compatible")


def zeros_tensor(lattice: LatticeShape, group: Group, kind: str, rank: int,
                 form_degree: int = 0) -> TensorField:
    vs = (group.r, group.r) if kind == ALGEBRA else (group.r,)
    data = np.zeros(lattice.extents + (lattice.n,) * rank + vs, dtype=complex)
    return TensorField(lattice, kind, rank, data, form_degree)


def _broadcast_link(link: np.ndarray, rank: int) -> np.ndarray:
    # (*ext, r, r) -> (*ext, 1 x rank, r, r)
    n_ext = link.ndim - 2
    return link.reshape(link.shape[:n_ext] + (1,) * rank + link.shape[n_ext:])


def _transport_fwd(kind: str):
    if kind == HIGGS:
        return alg.mv
    return lambda u, x: alg.mm(alg.mm(u, x), alg.dag(u))


def _transport_back(kind: str):
    if kind == HIGGS:
        return lambda u, v: alg.mv(alg.dag(u), v)
    return lambda u, x: alg.mm(alg.mm(alg.dag(u), x), u)


def transport(link: np.ndarray, values: np.ndarray, kind: str, rank: int, inverse: bool = False) -> np.ndarray:
    """Apply ``U`` (or ``U^dagger`` if ``inverse``) to values sitewise."""
    op = _transport_back(kind) if inverse else _transport_fwd(kind)
    return map_split(op, _broadcast_link(link, rank), values)


def cov_diff(U: GaugeField, phi: TensorField) -> TensorField:
    """Covariant forward difference; the new direction index comes first."""
    lat = U.lattice
    h = lat.h
    parts = []
    for mu in range(lat.n):
        ahead = roll(phi.data, mu, +1)
        parts.append((transport(U.link(mu), ahead, phi.kind, phi.rank) - phi.data) / h)
    data = np.stack(parts, axis=lat.n)
    return replace(phi, data=data, rank=phi.rank + 1)


def cov_diff_adjoint(U: GaugeField, psi: TensorField) -> TensorField:
    """Exact transpose of :func:`cov_diff` under :meth:`TensorField.inner`."""
    if psi.rank < 1:
        raise ValueError("cov_diff_adjoint needs a tensor of rank >= 1")
    if psi.form_degree > psi.rank - 1:
        raise ValueError("leading index of a form-degree tensor cannot be contracted")
    lat = U.lattice
    h = lat.h
    n = lat.n
    out = None
    for mu in range(n):
        comp = np.take(psi.data, mu, axis=n)
        back = roll(transport(U.link(mu), comp, psi.kind, psi.rank - 1, inverse=True), mu, -1)
        term = back - comp
        out = term if out is None else out + term
    return replace(psi, data=out / h, rank=psi.rank - 1)


def iterated_deriv(U: GaugeField, phi: TensorField, m: int) -> TensorField:
    if m < 0:
        raise ValueError("derivative count must be >= 0")
    U.lattice.require_order(m)
    out = phi
    for _ in range(m):
        out = cov_diff(U, out)
    return out


def iterated_deriv_chain(U: GaugeField, phi: TensorField, m: int) -> list[TensorField]:
    """``[phi, D phi, ..., D^m phi]``."""
    chain = [phi]
    for _ in range(m):
        chain.append(cov_diff(U, chain[-1]))
    return chain


def bochner_laplacian(U: GaugeField, phi: TensorField) -> TensorField:
    return -cov_diff_adjoint(U, cov_diff(U, phi))


def iterated_laplacian(U: GaugeField, phi: TensorField, k: int) -> TensorField:
    U.lattice.require_order(k)
    out = phi
    for _ in range(k):
        out = bochner_laplacian(U, out)
    return out


def plaquette(U: GaugeField, mu: int, nu: int) -> np.ndarray:
    """``P_{mu nu}(x) = U_mu(x) U_nu(x+mu) U_mu(x+nu)^dagger U_nu(x)^dagger``."""
    umu = U.link(mu)
    unu = U.link(nu)
    a = alg.mm(umu, roll(unu, mu, +1))
    b = alg.mm(unu, roll(umu, nu, +1))
    return alg.mm(a, alg.dag(b))


def planes(n: int) -> list[tuple[int, int]]:
    return [(mu, nu) for mu in range(n) for nu in range(mu + 1, n)]


def plaquette_logs(U: GaugeField) -> dict[tuple[int, int], tuple[np.ndarray, np.ndarray]]:
    """``{(mu, nu): (P, log P)}`` for ``mu < nu``."""
    out = {}
    for mu, nu in planes(U.lattice.n):
        p = plaquette(U, mu, nu)
        try:
            lg = alg.log_map(p)
        except BranchError as exc:
            flat = exc.args[1]
            coords = np.unravel_index(flat, U.lattice.extents)
            site = U.lattice.site_id(coords)
            raise CurvatureTooRoughError(
                f"plaquette ({mu},{nu}) at site {site} {tuple(int(c) for c in coords)} "
                f"is outside the log chart", site=site, plane=(mu, nu)) from exc
        out[(mu, nu)] = (p, lg)
    return out


def curvature_from_logs(U: GaugeField, logs) -> TensorField:
    lat = U.lattice
    r = U.group.r
    data = np.zeros(lat.extents + (lat.n, lat.n, r, r), dtype=complex)
    scale = 1.0 / lat.h ** 2
    for (mu, nu), (_, lg) in logs.items():
        f = lg * scale
        data[..., mu, nu, :, :] = f
        data[..., nu, mu, :, :] = -f
    return TensorField(lat, ALGEBRA, 2, data, form_degree=2)


def curvature(U: GaugeField) -> TensorField:
    """``F_{mu nu}(x) = log(P_{mu nu}(x)) / h^2`` as an antisymmetric 2-form."""
    return curvature_from_logs(U, plaquette_logs(U))


def kato_violations(U: GaugeField, u: HiggsField, rtol: float = 1e-12) -> int:
    """Count sites/axes where ``| |u(x+mu)| - |u(x)| | / h > |D_mu u(x)|``.

    Holds exactly for unitary transport; ``rtol`` absorbs rounding and the
    allowed unitarity drift of the links.
    """
    lat = U.lattice
    mag = np.sqrt((np.abs(u.values) ** 2).sum(axis=-1))
    du = cov_diff(U, u.as_tensor()).data
    count = 0
    for mu in range(lat.n):
        lhs = np.abs(roll(mag, mu, +1) - mag) / lat.h
        rhs = np.sqrt((np.abs(np.take(du, mu, axis=lat.n)) ** 2).sum(axis=-1))
        slack = rtol * (roll(mag, mu, +1) + mag) / lat.h
        count += int(np.count_nonzero(lhs > rhs + slack))
    return count


def gauge_act_links(g: np.ndarray, links: np.ndarray) -> np.ndarray:
    """``U_mu(x) -> g(x) U_mu(x) g(x+mu)^dagger``."""
    n = links.ndim - 3
    out = np.empty_like(links)
    for mu in range(n):
        out[..., mu, :, :] = alg.mm(alg.mm(g, links[..., mu, :, :]), alg.dag(roll(g, mu, +1)))
    return out


def gauge_act_tensor(g: np.ndarray, phi: TensorField) -> TensorField:
    gb = _broadcast_link(g, phi.rank)
    if phi.kind == HIGGS:
        return phi.with_data(alg.mv(gb, phi.data))
    return phi.with_data(alg.adjoint_action(gb, phi.data))
