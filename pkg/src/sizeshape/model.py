"""Latent-rotation Gaussian regression model for size-and-shape data.

For object ``i`` with size-and-shape ``Y_i`` (``k x p``) and covariates
``z_i`` (length ``d``), the latent rotation ``R_i`` gives
``X_i = Y_i R_i`` whose columns are independent ``N_k(Z_i beta_l, Sigma)``
with ``Z_i = I_k kron z_i^T``.

Coefficient packing
-------------------
``beta`` is stored as a ``(p, k*d)`` array, one row per coordinate column
``l``.  With ``Z_i = I_k kron z_i^T`` the entry ``beta[l, j*d + h]`` is
``B_h[j, l]`` (landmark-major, covariate-minor), so that ``Z_i @ beta[l]``
equals column ``l`` of ``sum_h z_ih B_h``.  For ``d = 1`` this is simply
``beta[l] = B_1[:, l]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .exceptions import NumericalError
from .geometry import is_rotation


def cholesky(a, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor, raising :class:`NumericalError` with a condition estimate on failure."""
    try:
        c = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh((a + np.swapaxes(a, -1, -2)) / 2)
        raise NumericalError(
            f"{what} is not positive definite (eigenvalues in [{w.min():.3g}, {w.max():.3g}])"
        ) from None
    if not np.all(np.isfinite(c)):
        raise NumericalError(f"{what} has non-finite entries")
    return c


def spd_inverse(a, what: str = "matrix") -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via its Cholesky factor."""
    c = cholesky(a, what)
    return linalg.cho_solve((c, True), np.eye(a.shape[0]), check_finite=False)


@dataclass(frozen=True)
class Dataset:
    """``n`` size-and-shape responses ``y`` (``n x k x p``) with covariates ``z`` (``n x d``)."""

    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        if y.ndim != 3:
            raise ValueError(f"y must have shape (n, k, p), got {y.shape}")
        if z.ndim != 2 or z.shape[0] != y.shape[0]:
            raise ValueError(f"z must have shape (n, d) with n={y.shape[0]}, got {z.shape}")
        if y.shape[0] < 1:
            raise ValueError("dataset must contain at least one object")
        if z.shape[1] < 1:
            raise ValueError("need at least one covariate")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(z))):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @classmethod
    def intercept_only(cls, y) -> "Dataset":
        y = np.asarray(y, dtype=float)
        return cls(y, np.ones((y.shape[0], 1)))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.y.shape[1]

    @property
    def p(self) -> int:
        return self.y.shape[2]

    @property
    def d(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class Priors:
    """Normal priors ``beta_l ~ N(m[l], v[l])`` and ``Sigma ~ IW(nu, psi)``.

    The Inverse-Wishart uses the scale parameterization with mean
    ``psi / (nu - k - 1)`` for ``nu > k + 1``.
    """

    m: np.ndarray
    v: np.ndarray
    nu: float
    psi: np.ndarray
    v_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.m, dtype=float))
        v = np.asarray(self.v, dtype=float)
        psi = np.atleast_2d(np.asarray(self.psi, dtype=float))
        if v.ndim == 2:
            v = v[None]
        p, kd = m.shape
        if v.shape != (p, kd, kd):
            raise ValueError(f"v must have shape {(p, kd, kd)}, got {v.shape}")
        k = psi.shape[0]
        if psi.shape != (k, k):
            raise ValueError(f"psi must be square, got {psi.shape}")
        if kd % k:
            raise ValueError(f"length of m ({kd}) is not a multiple of k={k}")
        if not self.nu > k - 1:
            raise ValueError(f"nu must exceed k - 1 = {k - 1}, got {self.nu}")
        for a, name in [(psi, "psi")] + [(v[l], f"v[{l}]") for l in range(p)]:
            if not np.allclose(a, a.T, rtol=1e-12, atol=0):
                raise ValueError(f"{name} is not symmetric")
            cholesky(a, name)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "v_inv", np.stack([spd_inverse(a) for a in v]))

    @classmethod
    def default(cls, k: int, p: int, d: int = 1, m_scalar: float = 0.0,
                v_scale: float = 1e6, nu: float | None = None, psi=None) -> "Priors":
        """Vague priors ``M_l = m_scalar``, ``V_l = v_scale I``, ``nu = k + 1``, ``Psi = I_k``."""
        kd = k * d
        return cls(
            m=np.full((p, kd), float(m_scalar)),
            v=np.broadcast_to(v_scale * np.eye(kd), (p, kd, kd)).copy(),
            nu=k + 1 if nu is None else nu,
            psi=np.eye(k) if psi is None else psi,
        )

    @property
    def k(self) -> int:
        return self.psi.shape[0]

    @property
    def p(self) -> int:
        return self.m.shape[0]

    @property
    def d(self) -> int:
        return self.m.shape[1] // self.k

    def check_dataset(self, data: Dataset) -> None:
        if (data.k, data.p, data.d) != (self.k, self.p, self.d):
            raise ValueError(
                f"priors are for (k, p, d) = {(self.k, self.p, self.d)}, "
                f"data has {(data.k, data.p, data.d)}"
            )


def pack_beta(b) -> np.ndarray:
    """``(d, k, p)`` stack of coefficient matrices ``B_h`` -> ``(p, k*d)`` beta.

    Leading axes are carried through, as in :func:`unpack_beta`.
    """
    b = np.asarray(b, dtype=float)
    d, k, p = b.shape[-3:]
    return np.ascontiguousarray(np.swapaxes(b, -1, -3).reshape(b.shape[:-3] + (p, k * d)))


def unpack_beta(beta, k: int) -> np.ndarray:
    """``(p, k*d)`` beta -> ``(d, k, p)`` stack of ``B_h``."""
    beta = np.asarray(beta, dtype=float)
    p = beta.shape[-2]
    d = beta.shape[-1] // k
    return np.swapaxes(beta.reshape(beta.shape[:-2] + (p, k, d)), -1, -3)


@dataclass
class ParamState:
    """MCMC state: ``beta`` (``p x kd``), ``sigma`` (``k x k``), ``rotations`` (``n x p x p``)."""

    beta: np.ndarray
    sigma: np.ndarray
    rotations: np.ndarray

    @property
    def k(self) -> int:
        return self.sigma.shape[0]

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    @property
    def b(self) -> np.ndarray:
        """Coefficient matrices as a ``(d, k, p)`` array."""
        return unpack_beta(self.beta, self.k)

    def copy(self) -> "ParamState":
        return replace(self, beta=self.beta.copy(), sigma=self.sigma.copy(),
                       rotations=self.rotations.copy())

    def validate(self) -> None:
        cholesky(self.sigma, "sigma")
        for i, r in enumerate(self.rotations):
            if not is_rotation(r):
                raise ValueError(f"rotation {i} is not in SO({self.p})")


def design_matrix(z, k: int) -> np.ndarray:
    """``Z = I_k kron z^T``, a ``k x (k*d)`` matrix."""
    z = np.asarray(z, dtype=float).ravel()
    if z.size == 0:
        raise ValueError("covariate vector is empty")
    return np.kron(np.eye(k), z[None, :])


def mean_configuration(state: ParamState, z) -> np.ndarray:
    """``mu = sum_h z_h B_h``; with a ``(n, d)`` covariate array returns ``(n, k, p)``."""
    z = np.asarray(z, dtype=float)
    b = state.b
    if z.shape[-1] != b.shape[0]:
        raise ValueError(f"expected {b.shape[0]} covariates, got {z.shape[-1]}")
    return np.tensordot(z, b, axes=([-1], [0]))


def complete_data_loglik(state: ParamState, data: Dataset) -> float:
    """Gaussian log-density of ``X_i = Y_i R_i`` summed over objects and columns."""
    k, p, n = data.k, data.p, data.n
    c = cholesky(state.sigma, "sigma")
    resid = data.y @ state.rotations - mean_configuration(state, data.z)
    # whiten columns: solve C w = e for every (i, l)
    e = resid.transpose(1, 0, 2).reshape(k, n * p)
    w = linalg.solve_triangular(c, e, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(c)))
    return float(-0.5 * np.sum(w * w) - 0.5 * n * p * (k * np.log(2 * np.pi) + logdet))


def trace_invariance_check(mu, sigma, lam) -> float:
    """``|tr(L^T mu^T S^-1 mu L) - tr(mu^T S^-1 mu)|`` for a rotation ``L``."""
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    c = cholesky(np.asarray(sigma, dtype=float), "sigma")
    g = linalg.cho_solve((c, True), mu)
    base = np.trace(mu.T @ g)
    rotated = np.trace(lam.T @ mu.T @ g @ lam)
    return float(abs(rotated - base))
