"""Landmark preprocessing and rotation-group utilities.

A raw configuration is a ``(k+1, p)`` array of landmark coordinates.  Location
is removed with the Helmert submatrix, giving a ``(k, p)`` pre-form ``X``.  The
pre-form is split by a singular value decomposition ``X = U D R^T`` into the
size-and-shape representative ``Y = U D`` and an orientation ``R`` in SO(p).

Conventions
-----------
* The Helmert submatrix is ``k x (k+1)``: the row proportional to the mean is
  dropped, so that ``H @ X_raw`` is ``k x p``.
* Rotations act on the right: ``X = Y @ R.T`` and ``Y = X @ R``.
* Euler angles are Z-Y-Z: ``R = Rz(t1) @ Ry(t2) @ Rz(t3)`` with
  ``t1, t3`` in ``[0, 2 pi)`` and ``t2`` in ``[0, pi]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateConfigurationError

ROTATION_TOL = 1e-10
RANK_TOL = 1e-12
TWO_PI = 2.0 * np.pi


def helmert_submatrix(k: int) -> np.ndarray:
    """Return the ``k x (k+1)`` Helmert submatrix.

    Row ``j`` (1-based) is ``(-d_j, ..., -d_j, j d_j, 0, ..., 0)`` with ``j``
    leading entries equal to ``-d_j`` and ``d_j = 1 / sqrt(j (j + 1))``.

    Examples
    --------
    >>> helmert_submatrix(1)
    array([[-0.70710678,  0.70710678]])
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    k = int(k)
    h = np.zeros((k, k + 1))
    for j in range(1, k + 1):
        dj = 1.0 / np.sqrt(j * (j + 1))
        h[j - 1, :j] = -dj
        h[j - 1, j] = j * dj
    return h


def _as_configuration(coords) -> np.ndarray:
    x = np.asarray(coords, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"configuration must be a 2-d array, got shape {x.shape}")
    k, p = x.shape[0] - 1, x.shape[1]
    if p not in (2, 3):
        raise ValueError(f"landmark dimension p must be 2 or 3, got {p}")
    if k < p:
        raise ValueError(f"need k >= p (k+1 = {k + 1} landmarks in dimension {p})")
    if not np.all(np.isfinite(x)):
        raise ValueError("configuration contains non-finite coordinates")
    return x


def helmertize(coords) -> np.ndarray:
    """Remove location from a ``(k+1, p)`` configuration, returning the ``(k, p)`` pre-form."""
    x = _as_configuration(coords)
    return helmert_submatrix(x.shape[0] - 1) @ x


def unhelmertize(pre_form, translation=None) -> np.ndarray:
    """Map a pre-form back to a ``(k+1, p)`` configuration with the given centroid."""
    x = np.asarray(pre_form, dtype=float)
    raw = helmert_submatrix(x.shape[0]).T @ x
    if translation is not None:
        raw = raw + np.asarray(translation, dtype=float)[None, :]
    return raw


@dataclass(frozen=True)
class SizeAndShape:
    """Rotation-free representative ``Y = U D`` of a pre-form."""

    y: np.ndarray
    singular_values: np.ndarray

    @property
    def k(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.y.shape[1]


def decompose(pre_form) -> tuple[SizeAndShape, np.ndarray]:
    """Split a pre-form into its size-and-shape and its orientation.

    Returns ``(sas, R)`` with ``pre_form == sas.y @ R.T`` and ``R`` in SO(p).

    The raw SVD is made deterministic: for each of the first ``p - 1`` columns
    of ``U`` the entry of largest magnitude is made positive, and the sign of
    the last column is then fixed by ``det(R) = +1``.  Any reflection is thus
    carried by ``Y``.

    Raises
    ------
    DegenerateConfigurationError
        If the pre-form does not have full column rank.
    """
    x = np.asarray(pre_form, dtype=float)
    if x.ndim != 2 or x.shape[0] < x.shape[1]:
        raise ValueError(f"pre-form must be k x p with k >= p, got shape {x.shape}")
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s[-1] < RANK_TOL * s[0] or s[0] == 0.0:
        raise DegenerateConfigurationError(
            f"pre-form is rank deficient (singular values {s})"
        )
    v = vt.T
    p = x.shape[1]
    if np.linalg.det(v) < 0:
        u[:, -1] *= -1
        v[:, -1] *= -1
    for j in range(p - 1):
        if u[np.argmax(np.abs(u[:, j])), j] < 0:
            u[:, [j, p - 1]] *= -1
            v[:, [j, p - 1]] *= -1
    return SizeAndShape(u * s, s), v


def is_rotation(r, tol: float = ROTATION_TOL) -> bool:
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        return False
    eye = np.eye(r.shape[0])
    return bool(
        np.max(np.abs(r.T @ r - eye)) <= tol and abs(np.linalg.det(r) - 1.0) <= tol
    )


def wrap_angle(t) -> np.ndarray:
    """Reduce angles to ``[0, 2 pi)``; tiny negative inputs do not round up to ``2 pi``."""
    r = np.mod(np.asarray(t, dtype=float), TWO_PI)
    return np.where(r >= TWO_PI, 0.0, r)


def rotation_from_angle(theta) -> np.ndarray:
    """Planar rotation ``((cos t, -sin t), (sin t, cos t))``.

    Accepts a scalar or an array of angles; an array of shape ``s`` gives
    rotations of shape ``s + (2, 2)``.
    """
    t = wrap_angle(theta)
    c, s = np.cos(t), np.sin(t)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def angle_from_rotation(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return wrap_angle(np.arctan2(r[..., 1, 0], r[..., 0, 0]))


def wrap_euler(t1, t2, t3):
    """Bring Z-Y-Z angles into ``[0, 2pi) x [0, pi] x [0, 2pi)`` without changing the rotation."""
    t1 = np.asarray(t1, dtype=float)
    t2 = wrap_angle(t2)
    t3 = np.asarray(t3, dtype=float)
    # Rz(a) Ry(-b) Rz(c) == Rz(a + pi) Ry(b) Rz(c + pi)
    flip = t2 > np.pi
    t2 = np.where(flip, TWO_PI - t2, t2)
    t1 = np.where(flip, t1 + np.pi, t1)
    t3 = np.where(flip, t3 + np.pi, t3)
    return wrap_angle(t1), t2, wrap_angle(t3)


def rotation_from_euler(t1, t2, t3) -> np.ndarray:
    """Z-Y-Z Euler rotation ``Rz(t1) @ Ry(t2) @ Rz(t3)``; broadcasts over array inputs."""
    t1, t2, t3 = np.broadcast_arrays(*wrap_euler(t1, t2, t3))
    c1, s1 = np.cos(t1), np.sin(t1)
    c2, s2 = np.cos(t2), np.sin(t2)
    c3, s3 = np.cos(t3), np.sin(t3)
    r = np.empty(t1.shape + (3, 3))
    r[..., 0, 0] = c1 * c2 * c3 - s1 * s3
    r[..., 0, 1] = -c1 * c2 * s3 - s1 * c3
    r[..., 0, 2] = c1 * s2
    r[..., 1, 0] = s1 * c2 * c3 + c1 * s3
    r[..., 1, 1] = -s1 * c2 * s3 + c1 * c3
    r[..., 1, 2] = s1 * s2
    r[..., 2, 0] = -s2 * c3
    r[..., 2, 1] = s2 * s3
    r[..., 2, 2] = c2
    return r


def euler_from_rotation(r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`rotation_from_euler`.

    At the gimbal points ``t2 in {0, pi}`` only ``t1 +/- t3`` is determined;
    ``t3 = 0`` is returned there.
    """
    r = np.asarray(r, dtype=float)
    t2 = np.arccos(np.clip(r[..., 2, 2], -1.0, 1.0))
    sb = np.hypot(r[..., 0, 2], r[..., 1, 2])
    regular = sb > 1e-12
    t1 = np.where(regular, np.arctan2(r[..., 1, 2], r[..., 0, 2]), 0.0)
    t3 = np.where(regular, np.arctan2(r[..., 2, 1], -r[..., 2, 0]), 0.0)
    at_zero = ~regular & (r[..., 2, 2] > 0)
    at_pi = ~regular & (r[..., 2, 2] <= 0)
    t1 = np.where(at_zero, np.arctan2(r[..., 1, 0], r[..., 0, 0]), t1)
    t1 = np.where(at_pi, np.arctan2(-r[..., 0, 1], -r[..., 0, 0]), t1)
    return wrap_angle(t1), t2, wrap_angle(t3)


def proper_svd(a):
    """SVD ``a = U diag(s) V^T`` with ``U, V`` in SO(p); the last ``s`` may be negative.

    Works on stacks of square matrices.
    """
    u, s, vt = np.linalg.svd(np.asarray(a, dtype=float))
    fu = np.where(np.linalg.det(u) < 0, -1.0, 1.0)
    fv = np.where(np.linalg.det(vt) < 0, -1.0, 1.0)
    u[..., :, -1] *= fu[..., None]
    vt[..., -1, :] *= fv[..., None]
    s[..., -1] *= fu * fv
    return u, s, vt


def nearest_rotation(a) -> np.ndarray:
    """Rotation ``R`` in SO(p) maximizing ``tr(R^T a)`` (the proper polar factor)."""
    u, _, vt = proper_svd(a)
    return u @ vt


def random_rotation(p: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Haar-distributed rotation(s) in SO(p) via QR of a Gaussian matrix."""
    shape = () if size is None else tuple(np.atleast_1d(size))
    g = rng.standard_normal(shape + (p, p))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[..., None, :]
    neg = np.linalg.det(q) < 0
    q[..., :, 0] = np.where(neg[..., None], -q[..., :, 0], q[..., :, 0])
    return q


def ss_distance(y1, y2) -> float:
    """Riemannian size-and-shape distance ``min_{R in SO(p)} ||y1 R - y2||_F``.

    Accepts arrays or :class:`SizeAndShape` values.  The minimizer is the
    proper polar factor of ``y1^T y2``; ties between equal singular values do
    not affect the minimum.
    """
    a = np.asarray(getattr(y1, "y", y1), dtype=float)
    b = np.asarray(getattr(y2, "y", y2), dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if np.array_equal(a, b):
        return 0.0
    r = nearest_rotation(a.T @ b)
    return float(np.linalg.norm(a @ r - b))
