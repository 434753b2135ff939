"""Gibbs / Metropolis-within-Gibbs sampler for the latent-rotation model.

One sweep updates, in order, each coefficient column ``beta_l`` (Gaussian),
the covariance ``Sigma`` (Inverse-Wishart) and every latent rotation ``R_i``
(Matrix Fisher).  Rotations are conditionally independent given
``(beta, Sigma)``, so they are updated as one vectorized block.

Matrix Fisher convention: a rotation with parameter ``F`` has density
proportional to ``exp(tr(R F^T))`` with respect to Haar measure.  Under
``X_i = Y_i R_i`` the full conditional of ``R_i`` has
``F_i = A_i^T`` where ``A_i = mu_i^T Sigma^-1 Y_i``.

For ``p = 2`` the angle of ``R_i`` is von Mises and is drawn exactly by the
Best-Fisher rejection scheme.  For ``p = 3`` a random-walk Metropolis step in
Z-Y-Z Euler angles is used, targeting ``exp(tr(R F^T)) sin(t2)``; the
``sin(t2)`` factor is the Haar-measure Jacobian of the Euler chart.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import NumericalError
from .geometry import (
    TWO_PI,
    euler_from_rotation,
    proper_svd,
    rotation_from_angle,
    rotation_from_euler,
    wrap_angle,
)
from .identification import IdentificationPolicy, identify_draw
from .model import (
    Dataset,
    ParamState,
    Priors,
    cholesky,
    complete_data_loglik,
    mean_configuration,
    pack_beta,
)

log = logging.getLogger(__name__)

# Ry(pi/2): the Euler chart is centred here, far from the gimbal points t2 in {0, pi}.
_CHART_CENTRE = rotation_from_euler(0.0, np.pi / 2, 0.0)
EULER_CHARTS = ("pooled", "per-object", "identity")


@dataclass(frozen=True)
class SamplerConfig:
    """MCMC settings.

    ``euler_step`` is the Euler-angle proposal scale (radians) for ``p = 3``.
    With ``scale_euler_step`` the scale used for object ``i`` is
    ``min(euler_step, step_scale / sqrt(s2 + s3))`` where ``s`` are the proper
    singular values of its Matrix Fisher parameter, i.e. proportional to the
    conditional spread of the rotation.  ``euler_chart`` selects the frame the
    angles are measured in: ``"pooled"`` puts the mode of the mean Matrix
    Fisher parameter at ``(0, pi/2, 0)``, away from the gimbal points;
    ``"per-object"`` does this for each object separately (costs a batched
    SVD per sweep); ``"identity"`` uses raw angles.  Frames and scales depend
    only on ``(beta, Sigma)`` and the data, so every full conditional is left
    invariant.  The pooled choice also computes the step from the mean
    parameter.
    """

    iterations: int = 5000
    burn_in: int = 3000
    seed: int = 0
    euler_step: float = 0.5
    thin: int = 1
    rotation_steps: int = 1
    scale_euler_step: bool = True
    step_scale: float = 1.0
    euler_chart: str = "pooled"
    store_rotations: bool = True
    identification: IdentificationPolicy = field(default_factory=IdentificationPolicy)

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be positive")
        if not 0 < self.euler_step <= np.pi:
            raise ValueError("euler_step must lie in (0, pi]")
        if self.rotation_steps < 1:
            raise ValueError("rotation_steps must be positive")
        if self.euler_chart not in EULER_CHARTS:
            raise ValueError(f"euler_chart must be one of {EULER_CHARTS}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_draws(self) -> int:
        return len(range(self.burn_in, self.iterations, self.thin))


def make_rng(seed: int, chain_index: int = 0) -> np.random.Generator:
    """Independent stream for chain ``chain_index`` derived from ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chain_index,)))


# --------------------------------------------------------------------------
# beta_l | rest


def _sigma_inverse(sigma) -> np.ndarray:
    c = cholesky(sigma, "sigma")
    return linalg.cho_solve((c, True), np.eye(sigma.shape[0]), check_finite=False)


def _beta_precision_and_shift(s_inv, x_col, z, m_l, v_inv_l):
    """Posterior precision ``sum Z^T S^-1 Z + V^-1`` and ``sum Z^T S^-1 x + V^-1 M``.

    ``x_col`` is ``(n, k)``: column ``l`` of every ``X_i``.  Uses
    ``sum_i Z_i^T S^-1 Z_i = S^-1 kron (sum_i z_i z_i^T)``.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    k, d = s_inv.shape[0], z.shape[1]
    ztz = z.T @ z
    prec = (s_inv[:, None, :, None] * ztz[None, :, None, :]).reshape(k * d, k * d) + v_inv_l
    shift = (s_inv @ (x_col.T @ z)).ravel() + v_inv_l @ m_l
    return prec, shift


def beta_conditional(sigma, x_col, z, m_l, v_l):
    """Closed-form ``(M_l*, V_l*)`` of the full conditional of ``beta_l``.

    Works for ``n = 0`` (``x_col`` of shape ``(0, k)``), giving the prior.
    """
    v_inv = linalg.cho_solve((cholesky(v_l, "prior covariance"), True), np.eye(len(m_l)))
    prec, shift = _beta_precision_and_shift(
        _sigma_inverse(np.asarray(sigma, dtype=float)), np.asarray(x_col, dtype=float), z, m_l, v_inv
    )
    c = cholesky(prec, "beta posterior precision")
    return linalg.cho_solve((c, True), shift), linalg.cho_solve((c, True), np.eye(len(m_l)))


def _draw_beta(s_inv, data: Dataset, rotations, priors: Priors, l: int, rng) -> np.ndarray:
    x_col = np.einsum("nkp,np->nk", data.y, rotations[:, :, l])
    prec, shift = _beta_precision_and_shift(s_inv, x_col, data.z, priors.m[l], priors.v_inv[l])
    c = cholesky(prec, f"beta[{l}] posterior precision")
    mean = linalg.cho_solve((c, True), shift, check_finite=False)
    noise = linalg.solve_triangular(c.T, rng.standard_normal(len(mean)), lower=False,
                                    check_finite=False)
    return mean + noise


def sample_beta(state: ParamState, data: Dataset, priors: Priors, l: int,
                rng: np.random.Generator) -> np.ndarray:
    """Draw ``beta_l`` from its Gaussian full conditional given the current rotations.

    The posterior precision is factored by Cholesky; its inverse is never formed.
    """
    return _draw_beta(_sigma_inverse(state.sigma), data, state.rotations, priors, l, rng)


# --------------------------------------------------------------------------
# Sigma | rest


def sample_inverse_wishart(nu: float, psi, rng: np.random.Generator) -> np.ndarray:
    """Draw from ``IW(nu, psi)`` (mean ``psi / (nu - k - 1)``).

    Draws ``W ~ Wishart(nu, psi^-1)`` by the Bartlett decomposition and returns
    ``W^-1``, formed from triangular solves only.
    """
    psi = np.asarray(psi, dtype=float)
    k = psi.shape[0]
    c = cholesky(psi, "inverse-Wishart scale")
    a = np.tril(rng.standard_normal((k, k)), -1)
    a[np.diag_indices(k)] = np.sqrt(rng.chisquare(nu - np.arange(k)))
    # W = C^-T A A^T C^-1, so W^-1 = (C A^-T)(C A^-T)^T
    t = linalg.solve_triangular(a, c.T, lower=True, check_finite=False)
    out = t.T @ t
    return (out + out.T) / 2


def sigma_conditional(state: ParamState, data: Dataset, priors: Priors):
    """``(nu*, Psi*)`` of the Inverse-Wishart full conditional of ``Sigma``."""
    resid = data.y @ state.rotations - mean_configuration(state, data.z)
    psi_star = priors.psi + np.einsum("nkp,njp->kj", resid, resid)
    return priors.nu + data.n * data.p, (psi_star + psi_star.T) / 2


def sample_sigma(state: ParamState, data: Dataset, priors: Priors,
                 rng: np.random.Generator) -> np.ndarray:
    nu_star, psi_star = sigma_conditional(state, data, priors)
    return sample_inverse_wishart(nu_star, psi_star, rng)


# --------------------------------------------------------------------------
# R_i | rest


def rotation_conditional_params(state: ParamState, data: Dataset, i: int | None = None) -> np.ndarray:
    """``A_i = mu_i^T Sigma^-1 Y_i`` for object ``i``, or stacked ``(n, p, p)`` when ``i`` is None.

    The full conditional of ``R_i`` is Matrix Fisher with parameter ``A_i^T``,
    i.e. density proportional to ``exp(tr(A_i R_i))``.
    """
    c = cholesky(state.sigma, "sigma")
    y = data.y if i is None else data.y[i:i + 1]
    z = data.z if i is None else data.z[i:i + 1]
    n, k, p = y.shape
    mu = mean_configuration(state, z)
    g = linalg.cho_solve((c, True), y.transpose(1, 0, 2).reshape(k, n * p), check_finite=False)
    g = g.reshape(k, n, p).transpose(1, 0, 2)
    a = np.swapaxes(mu, -1, -2) @ g
    return a if i is None else a[0]


def von_mises_params(f):
    """``(kappa, eta)`` with ``tr(R(t) F^T) = kappa cos(t - eta)`` for planar rotations."""
    f = np.asarray(f, dtype=float)
    c = f[..., 0, 0] + f[..., 1, 1]
    s = f[..., 1, 0] - f[..., 0, 1]
    return np.hypot(c, s), np.arctan2(s, c)


def sample_von_mises(mu, kappa, rng: np.random.Generator) -> np.ndarray:
    """Exact von Mises draws by Best-Fisher rejection, vectorized over parameters.

    The envelope constants are computed in a cancellation-free form so the
    sampler stays accurate for concentrations far above ``1e6``.
    """
    mu, kappa = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(kappa, dtype=float))
    shape = mu.shape
    mu, kappa = mu.ravel(), kappa.ravel()
    out = np.empty(mu.size)

    flat = kappa < 1e-12
    out[flat] = rng.uniform(0.0, TWO_PI, flat.sum())
    idx = np.flatnonzero(~flat)
    kap = kappa[idx]
    root = np.sqrt(1.0 + 4.0 * kap * kap)
    tau = 1.0 + root
    # 1 - rho, where rho = (tau - sqrt(2 tau)) / (2 kappa)
    one_minus_rho = (np.sqrt(2.0 * tau) - 1.0 - 1.0 / (2.0 * kap + root)) / (2.0 * kap)
    rho = 1.0 - one_minus_rho
    # r - 1 = (1 - rho)^2 / (2 rho); for tiny kappa use r = 1/kappa + kappa
    delta = np.where(kap < 1e-5, 1.0 / np.maximum(kap, 1e-300) + kap - 1.0,
                     one_minus_rho**2 / (2.0 * rho))
    while idx.size:
        u1, u2, u3 = rng.random((3, idx.size))
        z = np.cos(np.pi * u1)
        one_plus_z = 2.0 * np.cos(0.5 * np.pi * u1) ** 2
        denom = one_plus_z + delta
        one_minus_f = delta * (1.0 - z) / denom
        c = kap * (delta + one_minus_f)
        with np.errstate(divide="ignore"):
            accept = (c * (2.0 - c) - u2 > 0) | (np.log(c / u2) + 1.0 - c >= 0)
        dev = 2.0 * np.arcsin(np.sqrt(np.clip(one_minus_f / 2.0, 0.0, 1.0)))
        theta = mu[idx] + np.where(u3 > 0.5, dev, -dev)
        out[idx[accept]] = theta[accept]
        keep = ~accept
        idx, kap, delta = idx[keep], kap[keep], delta[keep]
    return wrap_angle(out).reshape(shape)


def sample_rotation_p2(f, rng: np.random.Generator) -> np.ndarray:
    """Exact draw(s) from the planar Matrix Fisher ``exp(tr(R F^T))``; ``f`` may be stacked."""
    kappa, eta = von_mises_params(f)
    return rotation_from_angle(sample_von_mises(eta, kappa, rng))


def euler_log_target(t1, t2, t3, f) -> np.ndarray:
    """Log density ``tr(R F^T) + log sin(t2)`` of the Matrix Fisher in Z-Y-Z coordinates."""
    r = rotation_from_euler(t1, t2, t3)
    with np.errstate(divide="ignore"):
        return np.sum(r * f, axis=(-2, -1)) + np.log(np.sin(t2))


def euler_chart(f, config: SamplerConfig):
    """Frame(s) and proposal scale(s) for the Euler-angle update of Matrix Fisher ``f``.

    The frame ``G`` satisfies ``G^T @ mode = Ry(pi/2)`` where ``mode`` is the
    proper polar factor of ``f``; the scale is
    ``min(euler_step, step_scale / sqrt(s2 + s3))`` (or ``euler_step`` when
    scaling is off).
    """
    f = np.asarray(f, dtype=float)
    u, s, vt = proper_svd(f)
    frame = u @ vt @ _CHART_CENTRE.T
    if config.scale_euler_step:
        spread = np.maximum(s[..., 1] + s[..., 2], 1e-300)
        step = np.minimum(config.euler_step, config.step_scale / np.sqrt(spread))
    else:
        step = np.full(f.shape[:-2], config.euler_step)
    return frame, step


def sample_rotation_p3(f, current, config: SamplerConfig, rng: np.random.Generator,
                       frame=None, step=None):
    """One Metropolis update of rotation(s) targeting the Matrix Fisher ``exp(tr(R F^T))``.

    The proposal perturbs each Z-Y-Z angle of ``frame^T @ current`` by an
    independent Gaussian of scale ``step`` (default ``config.euler_step``),
    wrapping ``t1, t3`` and reflecting ``t2`` into ``[0, pi]``.  Since Haar
    measure is left invariant, working in the frame ``G`` amounts to sampling
    ``G^T R`` from a Matrix Fisher with parameter ``G^T F``.

    Returns ``(new, accepted)``; both broadcast over leading axes of ``f``.
    """
    f = np.asarray(f, dtype=float)
    current = np.asarray(current, dtype=float)
    batch = np.broadcast_shapes(f.shape[:-2], current.shape[:-2])
    if frame is None:
        frame = np.eye(3)
    frame = np.asarray(frame, dtype=float)
    frame_t = np.swapaxes(frame, -1, -2)
    f_loc = frame_t @ f
    local = frame_t @ current
    if step is None:
        step = config.euler_step
    step = np.asarray(step, dtype=float)

    t1, t2, t3 = euler_from_rotation(local)
    eps = rng.standard_normal((3,) + batch) * step
    q1 = wrap_angle(t1 + eps[0])
    q2 = wrap_angle(t2 + eps[1])
    q2 = np.where(q2 > np.pi, TWO_PI - q2, q2)
    q3 = wrap_angle(t3 + eps[2])

    with np.errstate(divide="ignore"):
        log_cur = np.sum(local * f_loc, axis=(-2, -1)) + np.log(np.sin(t2))
    proposal = rotation_from_euler(q1, q2, q3)
    with np.errstate(divide="ignore"):
        log_new = np.sum(proposal * f_loc, axis=(-2, -1)) + np.log(np.sin(q2))
    log_u = np.log(rng.random(batch))
    with np.errstate(invalid="ignore"):
        accepted = log_u < log_new - log_cur
    accepted = accepted | (np.isneginf(log_cur) & np.isfinite(log_new))
    new_local = np.where(accepted[..., None, None], proposal, local)
    return frame @ new_local, accepted


def update_rotations(state: ParamState, data: Dataset, config: SamplerConfig,
                     rng: np.random.Generator):
    """Redraw every ``R_i`` from its full conditional; returns ``(rotations, n_accepted)``."""
    f = np.swapaxes(rotation_conditional_params(state, data), -1, -2)
    if data.p == 2:
        return sample_rotation_p2(f, rng), data.n
    if config.euler_chart == "per-object":
        frame, step = euler_chart(f, config)
    else:
        frame, step = euler_chart(f.mean(axis=0), config)
        if config.euler_chart == "identity":
            frame = np.eye(3)
    rot = state.rotations
    n_acc = 0
    for _ in range(config.rotation_steps):
        rot, acc = sample_rotation_p3(f, rot, config, rng, frame=frame, step=step)
        n_acc += int(acc.sum())
    return rot, n_acc


# --------------------------------------------------------------------------
# full sweep and driver


def initial_state(data: Dataset, priors: Priors) -> ParamState:
    """Least-squares ``beta`` with ``R_i = I``, ``Sigma = Psi / (nu + k + 1)``."""
    n, k, p = data.y.shape
    coef, *_ = np.linalg.lstsq(data.z, data.y.reshape(n, k * p), rcond=None)
    b = coef.reshape(data.d, k, p)
    return ParamState(
        beta=pack_beta(b),
        sigma=priors.psi / (priors.nu + k + 1),
        rotations=np.broadcast_to(np.eye(p), (n, p, p)).copy(),
    )


def gibbs_sweep(state: ParamState, data: Dataset, priors: Priors, config: SamplerConfig,
                rng: np.random.Generator) -> int:
    """One in-place sweep; returns the number of accepted rotation proposals."""
    s_inv = _sigma_inverse(state.sigma)
    for l in range(data.p):
        state.beta[l] = _draw_beta(s_inv, data, state.rotations, priors, l, rng)
    state.sigma = sample_sigma(state, data, priors, rng)
    state.rotations, n_acc = update_rotations(state, data, config, rng)
    return n_acc


@dataclass
class Chain:
    """Identified posterior draws.

    ``beta`` is ``(S, p, k*d)``, ``sigma`` is ``(S, k, k)``, ``rotations`` is
    ``(S, n, p, p)`` or None, and ``loglik`` holds the complete-data
    log-likelihood of each draw.
    """

    beta: np.ndarray
    sigma: np.ndarray
    loglik: np.ndarray
    rotations: np.ndarray | None = None
    acceptance_rate: float | None = None
    seed: int | None = None
    config: SamplerConfig | None = None
    wall_time: float = 0.0

    def __len__(self) -> int:
        return self.beta.shape[0]

    @property
    def k(self) -> int:
        return self.sigma.shape[-1]

    def draw(self, s: int) -> ParamState:
        p = self.beta.shape[1]
        rot = self.rotations[s] if self.rotations is not None else np.zeros((0, p, p))
        return ParamState(self.beta[s].copy(), self.sigma[s].copy(), rot.copy())

    @property
    def draws(self):
        return [self.draw(s) for s in range(len(self))]


def gibbs_run(data: Dataset, priors: Priors, config: SamplerConfig = SamplerConfig(),
              init: ParamState | None = None, chain_index: int = 0) -> Chain:
    """Run the sampler and return identified, thinned post-burn-in draws.

    Deterministic given ``(data, priors, config, chain_index)``.
    """
    priors.check_dataset(data)
    rng = make_rng(config.seed, chain_index)
    state = initial_state(data, priors) if init is None else init.copy()
    n, k, p = data.y.shape
    s_total = config.n_draws
    beta = np.empty((s_total, p, k * data.d))
    sigma = np.empty((s_total, k, k))
    loglik = np.empty(s_total)
    rotations = np.empty((s_total, n, p, p)) if config.store_rotations else None

    t0 = time.perf_counter()
    accepted = proposed = 0
    s = 0
    for it in range(config.iterations):
        try:
            n_acc = gibbs_sweep(state, data, priors, config, rng)
        except NumericalError as exc:
            raise NumericalError(f"sweep {it}: {exc}") from exc
        if p == 3:
            accepted += n_acc
            proposed += n * config.rotation_steps
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            ident = identify_draw(state, config.identification)
            beta[s] = ident.beta
            sigma[s] = ident.sigma
            loglik[s] = complete_data_loglik(state, data)
            if rotations is not None:
                rotations[s] = ident.rotations
            s += 1
    wall = time.perf_counter() - t0
    rate = accepted / proposed if proposed else None
    if rate is not None:
        log.info("rotation Metropolis acceptance rate %.3f", rate)
    return Chain(beta, sigma, loglik, rotations, rate, config.seed, config, wall)
