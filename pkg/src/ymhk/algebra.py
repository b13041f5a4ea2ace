"""Structure-group kernels for U(1) and SU(2).

Both groups are stored as stacks of ``r x r`` complex matrices: U(1) as
``1 x 1`` and SU(2) as ``2 x 2``. Every kernel here broadcasts over leading
axes and infers the group from the trailing matrix size, so the same field
code serves both groups.

Algebra elements are anti-Hermitian (and traceless for su(2)). The SU(2)
chart is ``X = sum_j a_j * i*sigma_j`` with rotation angle ``|a|``; U(1)
uses ``X = i*a``. The trace form ``inner(X, Y) = Re tr(X^dagger Y)`` carries
no extra normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchError

THETA_MAX = np.pi - 0.1

# i * Pauli matrices, the su(2) generators used by the coefficient chart.
_ISIGMA = np.array(
    [
        [[0, 1j], [1j, 0]],
        [[0, 1], [-1, 0]],
        [[1j, 0], [0, -1j]],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class Group:
    name: str
    code: int  # snapshot byte
    r: int  # matrix size == Higgs fibre dimension
    dim: int  # real dimension of the Lie algebra

    @property
    def label(self) -> str:
        return {"u1": "U(1)", "su2": "SU(2)"}[self.name]


U1 = Group("u1", 0, 1, 1)
SU2 = Group("su2", 1, 2, 3)
GROUPS = {"u1": U1, "su2": SU2}


def group_by_code(code: int) -> Group:
    for g in GROUPS.values():
        if g.code == code:
            return g
    raise KeyError(code)


def group_of(mat: np.ndarray) -> Group:
    r = mat.shape[-1]
    if r == 1:
        return U1
    if r == 2:
        return SU2
    raise ValueError(f"unsupported matrix size {r}")


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Broadcast product of stacks of small matrices.

    Written out term by term so each entry is a fixed-order sum; this keeps
    results bitwise reproducible (no BLAS dispatch) and is faster than
    ``np.matmul`` for 2x2 stacks.
    """
    if a.shape[-1] == 1:
        return a * b
    a00, a01 = a[..., 0:1, 0:1], a[..., 0:1, 1:2]
    a10, a11 = a[..., 1:2, 0:1], a[..., 1:2, 1:2]
    b0 = b[..., 0:1, :]
    b1 = b[..., 1:2, :]
    return np.concatenate((a00 * b0 + a01 * b1, a10 * b0 + a11 * b1), axis=-2)


def mv(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Broadcast matrix-vector product ``a @ v`` for stacks of small matrices."""
    if a.shape[-1] == 1:
        return a[..., 0] * v
    return np.stack(
        (a[..., 0, 0] * v[..., 0] + a[..., 0, 1] * v[..., 1],
         a[..., 1, 0] * v[..., 0] + a[..., 1, 1] * v[..., 1]),
        axis=-1,
    )


def adjoint_action(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``g x g^dagger``."""
    return mm(mm(g, x), dag(g))


def identity(shape: tuple[int, ...], r: int) -> np.ndarray:
    out = np.zeros(shape + (r, r), dtype=complex)
    for i in range(r):
        out[..., i, i] = 1.0
    return out


def inner(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pointwise trace form ``Re tr(x^dagger y)``."""
    return np.real(np.conj(x) * y).sum(axis=(-1, -2))


def norm_sq(x: np.ndarray) -> np.ndarray:
    return (x.real ** 2 + x.imag ** 2).sum(axis=(-1, -2))


def project(m: np.ndarray) -> np.ndarray:
    """Orthogonal projection of an arbitrary matrix onto the Lie algebra."""
    x = 0.5 * (m - dag(m))
    if m.shape[-1] == 2:
        tr = 0.5 * (x[..., 0, 0] + x[..., 1, 1])
        x = x.copy()
        x[..., 0, 0] -= tr
        x[..., 1, 1] -= tr
    return x


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return mm(x, y) - mm(y, x)


def to_coeffs(x: np.ndarray) -> np.ndarray:
    """Real chart coordinates: ``x = i*a`` (U(1)) or ``x = sum a_j i*sigma_j`` (SU(2))."""
    if x.shape[-1] == 1:
        return x[..., 0, 0].imag[..., None].copy()
    a1 = 0.5 * (x[..., 0, 1].imag + x[..., 1, 0].imag)
    a2 = 0.5 * (x[..., 0, 1].real - x[..., 1, 0].real)
    a3 = 0.5 * (x[..., 0, 0].imag - x[..., 1, 1].imag)
    return np.stack((a1, a2, a3), axis=-1)


def from_coeffs(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[-1] == 1:
        return (1j * a)[..., None]
    if a.shape[-1] == 3:
        return np.tensordot(a, _ISIGMA, axes=([-1], [0]))
    raise ValueError(f"expected 1 or 3 chart coordinates, got {a.shape[-1]}")


def _angle_sq(x: np.ndarray) -> np.ndarray:
    # rotation angle squared: |a|^2 in the chart
    return norm_sq(x) / x.shape[-1]


def exp_map(x: np.ndarray) -> np.ndarray:
    """Closed-form group exponential of algebra elements."""
    if x.shape[-1] == 1:
        return np.exp(x)
    theta = np.sqrt(_angle_sq(x))
    c = np.cos(theta)[..., None, None]
    s = np.sinc(theta / np.pi)[..., None, None]
    out = s * x
    out[..., 0, 0] += c[..., 0, 0]
    out[..., 1, 1] += c[..., 0, 0]
    return out


def rotation_angle(u: np.ndarray) -> np.ndarray:
    """Principal rotation angle in ``[0, pi]`` of each group element."""
    if u.shape[-1] == 1:
        return np.abs(np.angle(u[..., 0, 0]))
    y = project(u)
    s = np.sqrt(_angle_sq(y))
    c = 0.5 * (u[..., 0, 0].real + u[..., 1, 1].real)
    return np.arctan2(s, c)


def log_map(u: np.ndarray, theta_max: float = THETA_MAX) -> np.ndarray:
    """Principal logarithm.

    Raises
    ------
    BranchError
        If any element has rotation angle above ``theta_max``. The flat
        index of the first offender is stored in ``args[1]``.
    """
    if u.shape[-1] == 1:
        ang = np.asarray(np.angle(u[..., 0, 0]))
        theta = np.abs(ang)
        out = (1j * ang)[..., None, None]
    else:
        y = project(u)
        s = np.sqrt(_angle_sq(y))
        c = 0.5 * (u[..., 0, 0].real + u[..., 1, 1].real)
        theta = np.arctan2(s, c)
        safe = np.where(s > 0, s, 1.0)
        ratio = np.where(s > 1e-300, theta / safe, 1.0)
        out = ratio[..., None, None] * y
    bad = theta > theta_max
    if np.any(bad):
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise BranchError(f"group element within the cut-locus margin (angle {theta.ravel()[idx]:.6f})", idx)
    return out


def reunitarize(u: np.ndarray) -> np.ndarray:
    """Nearest group element (Frobenius) to each slightly drifted matrix."""
    if u.shape[-1] == 1:
        return u / np.abs(u)
    alpha = 0.5 * (u[..., 0, 0] + np.conj(u[..., 1, 1]))
    beta = 0.5 * (u[..., 0, 1] - np.conj(u[..., 1, 0]))
    nrm = np.sqrt(np.abs(alpha) ** 2 + np.abs(beta) ** 2)
    alpha = alpha / nrm
    beta = beta / nrm
    return np.stack(
        (np.stack((alpha, beta), axis=-1), np.stack((-np.conj(beta), np.conj(alpha)), axis=-1)),
        axis=-2,
    )


def unitarity_defect(u: np.ndarray) -> float:
    """Max of ``|U^dagger U - I|`` and, for SU(2), ``|det U - 1|``."""
    r = u.shape[-1]
    d = mm(dag(u), u) - identity(u.shape[:-2], r)
    out = float(np.max(np.abs(d))) if d.size else 0.0
    if r == 2 and u.size:
        det = u[..., 0, 0] * u[..., 1, 1] - u[..., 0, 1] * u[..., 1, 0]
        out = max(out, float(np.max(np.abs(det - 1))))
    return out


def random_algebra(rng: np.random.Generator, shape: tuple[int, ...], group: Group,
                   scale: float = 1.0) -> np.ndarray:
    """Gaussian algebra elements with i.i.d. N(0, scale^2) chart coordinates."""
    return from_coeffs(scale * rng.standard_normal(shape + (group.dim,)))


def random_ball_algebra(rng: np.random.Generator, shape: tuple[int, ...], group: Group,
                        amplitude: float) -> np.ndarray:
    """Algebra elements uniform in the chart ball of radius ``amplitude``."""
    if group.dim == 1:
        return from_coeffs(rng.uniform(-amplitude, amplitude, shape + (1,)))
    v = rng.standard_normal(shape + (3,))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    radius = amplitude * rng.uniform(0.0, 1.0, shape) ** (1.0 / 3.0)
    return from_coeffs(v * radius[..., None])


def random_group(rng: np.random.Generator, shape: tuple[int, ...], group: Group) -> np.ndarray:
    """Haar-distributed group elements."""
    if group.dim == 1:
        return np.exp(1j * rng.uniform(-np.pi, np.pi, shape))[..., None, None]
    q = rng.standard_normal(shape + (4,))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    alpha = q[..., 0] + 1j * q[..., 3]
    beta = q[..., 2] + 1j * q[..., 1]
    return np.stack(
        (np.stack((alpha, beta), axis=-1), np.stack((-np.conj(beta), np.conj(alpha)), axis=-1)),
        axis=-2,
    )


def dlog_transpose(log_p: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Transpose of the differential of the principal log.

    With ``L = log(P)`` and ``P -> exp(sY) P``, the derivative of ``log`` is
    ``Y_par + theta*cot(theta)*Y_perp - [L, Y]/2`` (parallel/perpendicular to
    ``L``). Under the Ad-invariant trace form its transpose flips the sign of
    the commutator term; this returns that transpose applied to ``a``.
    """
    if log_p.shape[-1] == 1:
        return a
    theta2 = _angle_sq(log_p)
    theta = np.sqrt(theta2)
    small = theta < 1e-4
    tsafe = np.where(small, 1.0, theta)
    c = np.where(small, 1.0 - theta2 / 3.0, tsafe / np.tan(tsafe))
    # (1 - c) / |L|^2 with |L|^2 = 2 theta^2; the series limit is 1/6
    w = np.where(small, 1.0 / 6.0 + theta2 / 90.0, (1.0 - c) / (2.0 * np.where(small, 1.0, theta2)))
    par = inner(log_p, a)
    return (c[..., None, None] * a + (w * par)[..., None, None] * log_p
            + 0.5 * commutator(log_p, a))
