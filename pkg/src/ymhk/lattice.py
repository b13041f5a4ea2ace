"""Periodic rectangular lattices over the flat torus.

Field arrays keep one numpy axis per lattice axis, in axis order, so that
``field[c_0, ..., c_{n-1}]`` is the value at coordinate ``c``. Site ids are
lexicographic with axis 0 running fastest; :meth:`LatticeShape.coords` and
:meth:`LatticeShape.site_id` convert between the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np

from .errors import LatticeTooSmallError

MIN_EXTENT = 4
MAX_DIM = 4


@dataclass(frozen=True)
class LatticeShape:
    n: int
    extents: tuple[int, ...]
    h: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        object.__setattr__(self, "h", float(self.h))
        if not 1 <= self.n <= MAX_DIM:
            raise ValueError(f"lattice dimension must be in 1..{MAX_DIM}, got {self.n}")
        if len(self.extents) != self.n:
            raise ValueError(f"expected {self.n} extents, got {len(self.extents)}")
        if any(e < MIN_EXTENT for e in self.extents):
            raise ValueError(f"every extent must be >= {MIN_EXTENT}, got {list(self.extents)}")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"lattice spacing must be positive, got {self.h}")

    @classmethod
    def cubic(cls, n: int, L: int, h: float = 1.0) -> "LatticeShape":
        return cls(n, (L,) * n, h)

    @property
    def num_sites(self) -> int:
        return prod(self.extents)

    @property
    def site_volume(self) -> float:
        """Volume element h^n carried by each site."""
        return self.h ** self.n

    @property
    def volume(self) -> float:
        return self.site_volume * self.num_sites

    def coords(self, site: int) -> tuple[int, ...]:
        if not 0 <= site < self.num_sites:
            raise IndexError(f"site id {site} out of range for {self.num_sites} sites")
        return tuple(int(c) for c in np.unravel_index(site, self.extents, order="F"))

    def site_id(self, coords: Sequence[int]) -> int:
        if len(coords) != self.n:
            raise ValueError(f"expected {self.n} coordinates, got {len(coords)}")
        wrapped = [int(c) % e for c, e in zip(coords, self.extents)]
        return int(np.ravel_multi_index(wrapped, self.extents, order="F"))

    def shift(self, site: int, axis: int, direction: int) -> int:
        """Neighbour of ``site`` one step along ``axis`` (``direction`` is +1 or -1)."""
        if not 0 <= axis < self.n:
            raise ValueError(f"axis {axis} out of range for n = {self.n}")
        if direction not in (1, -1):
            raise ValueError(f"direction must be +1 or -1, got {direction}")
        c = list(self.coords(site))
        c[axis] = (c[axis] + direction) % self.extents[axis]
        return self.site_id(c)

    def require_order(self, order: int) -> None:
        """Stencil-radius guard: derivatives up to ``order`` need extents >= order + 1."""
        if any(e < order + 1 for e in self.extents):
            raise LatticeTooSmallError(
                f"derivative order {order} needs every extent >= {order + 1}, "
                f"got {list(self.extents)}"
            )

    def coordinate_grid(self) -> np.ndarray:
        """Integer coordinates of every site, shape ``(*extents, n)``."""
        axes = [np.arange(e) for e in self.extents]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def to_site_order(self, field: np.ndarray) -> np.ndarray:
        """Flatten the leading site axes into site-id order (axis 0 fastest)."""
        value_shape = field.shape[self.n:]
        perm = tuple(reversed(range(self.n))) + tuple(range(self.n, field.ndim))
        return np.ascontiguousarray(field.transpose(perm)).reshape((self.num_sites,) + value_shape)

    def from_site_order(self, flat: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_site_order`."""
        value_shape = flat.shape[1:]
        rev = tuple(reversed(self.extents))
        arr = flat.reshape(rev + value_shape)
        perm = tuple(reversed(range(self.n))) + tuple(range(self.n, arr.ndim))
        return np.ascontiguousarray(arr.transpose(perm))


def roll(field: np.ndarray, axis: int, direction: int) -> np.ndarray:
    """Return ``g`` with ``g(x) = field(x + direction * e_axis)``."""
    return np.roll(field, -direction, axis=axis)
