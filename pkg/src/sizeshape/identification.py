"""Remap posterior draws to the identified parameterization.

The likelihood is unchanged when every ``B_h`` is right-multiplied by a common
rotation, so draws are mapped to a canonical representative: the reference
coefficient matrix ``B`` is rotated until its top ``p x p`` block is lower
triangular with nonnegative diagonal in the first ``p - 1`` positions.  The
last diagonal entry keeps its sign, since a reflection cannot be undone by a
rotation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateConstraintError
from .model import ParamState, pack_beta

RANK_TOL = 1e-12


@dataclass(frozen=True)
class IdentificationPolicy:
    """Which coefficient matrix carries the constraint (0-based index into ``B_1..B_d``)."""

    reference_h: int = 0


def constraint_rotation(b) -> np.ndarray:
    """Rotation ``L`` in SO(p) such that ``b @ L`` satisfies the identification constraint.

    Uses a QR factorization of the transposed top block, ``T^T = Q R``, so that
    ``T Q = R^T`` is lower triangular.
    """
    b = np.asarray(b, dtype=float)
    k, p = b.shape
    if k < p:
        raise ValueError(f"need k >= p, got b of shape {b.shape}")
    top = b[:p, :p]
    q, r = np.linalg.qr(top.T)
    diag = np.abs(np.diag(r))
    if diag.min() <= RANK_TOL * max(diag.max(), np.finfo(float).tiny):
        raise DegenerateConstraintError(
            f"top {p}x{p} block of the reference coefficients is rank deficient"
        )
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    q = q * signs[None, :]
    if np.linalg.det(q) < 0:
        q[:, -1] *= -1
    return q


def satisfies_constraint(b, tol: float = 1e-10) -> bool:
    b = np.asarray(b, dtype=float)
    p = b.shape[1]
    scale = max(np.max(np.abs(b[:p, :p])), 1.0)
    upper = np.triu(b[:p, :p], 1)
    diag_ok = all(b[l, l] >= -tol * scale for l in range(p - 1))
    return bool(np.all(np.abs(upper) <= tol * scale) and diag_ok)


def identify_draw(state: ParamState, policy: IdentificationPolicy = IdentificationPolicy()) -> ParamState:
    """Rotate every ``B_h`` by ``L = constraint_rotation(B_ref)``; co-rotate the latent rotations.

    ``R_i -> R_i L`` keeps ``X_i - mu_i`` a rotated copy of itself, so the
    complete-data log-likelihood is unchanged.
    """
    b = state.b
    if not 0 <= policy.reference_h < b.shape[0]:
        raise ValueError(f"reference_h={policy.reference_h} out of range for d={b.shape[0]}")
    lam = constraint_rotation(b[policy.reference_h])
    rotated = b @ lam
    # the constrained entries are zero by construction; drop the round-off
    p = rotated.shape[-1]
    ref = rotated[policy.reference_h]
    ref[:p, :p] = np.tril(ref[:p, :p])
    return ParamState(
        beta=pack_beta(rotated),
        sigma=state.sigma.copy(),
        rotations=state.rotations @ lam,
    )
