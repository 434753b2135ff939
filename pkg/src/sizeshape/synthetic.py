"""Simulated datasets from the latent-rotation model.

The default scenario has ``k = 3`` landmarks (after Helmertization), an
intercept-only design (``d = 1``) and ``Sigma = kappa I``.  Data are drawn at
the pre-form level and then reduced to size-and-shape by :func:`decompose`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateConfigurationError
from .geometry import decompose, random_rotation, unhelmertize
from .identification import identify_draw
from .model import Dataset, ParamState, Priors, cholesky, mean_configuration
from .sampler import make_rng, sample_inverse_wishart

log = logging.getLogger(__name__)

TABLE1_BETA = (
    (60.0, 1.0, 100.0),
    (10.0, 30.0, 180.0),
    (20.0, 400.0, 0.5),
)
MAX_RETRIES = 10


@dataclass(frozen=True)
class ScenarioSpec:
    """Simulation scenario; ``beta_true[l]`` is column ``l`` of ``B_1`` (``d = 1``)."""

    p: int
    n: int
    kappa: float
    beta_true: tuple
    seed: int = 0
    k: int = 3
    d: int = 1

    def __post_init__(self):
        if self.p not in (2, 3):
            raise ValueError(f"p must be 2 or 3, got {self.p}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        beta = np.asarray(self.beta_true, dtype=float)
        if beta.shape != (self.p, self.k * self.d):
            raise ValueError(f"beta_true must have shape {(self.p, self.k * self.d)}, got {beta.shape}")

    @property
    def beta(self) -> np.ndarray:
        return np.asarray(self.beta_true, dtype=float)

    @property
    def sigma(self) -> np.ndarray:
        return self.kappa * np.eye(self.k)


def default_scenario(p: int, n: int, kappa: float, seed: int = 0) -> ScenarioSpec:
    """Scenario with ``beta_1 = (60, 1, 100)``, ``beta_2 = (10, 30, 180)``, ``beta_3 = (20, 400, 0.5)``."""
    if p not in (2, 3):
        raise ValueError(f"p must be 2 or 3, got {p}")
    return ScenarioSpec(p=p, n=n, kappa=kappa, beta_true=TABLE1_BETA[:p], seed=seed)


@dataclass
class GroundTruth:
    """Raw and identified truth.

    ``raw.rotations`` holds the latent rotations ``R_i = Rbreve_i^T`` so
    that ``Y_i R_i`` is the simulated pre-form; ``orientations`` keeps the
    decomposition output ``Rbreve_i`` itself.
    """

    raw: ParamState
    identified: ParamState
    orientations: np.ndarray
    pre_forms: np.ndarray | None = None


def draw_pre_forms(mu, sigma, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` pre-forms whose columns are independent ``N_k(mu[:, l], sigma)``."""
    mu = np.asarray(mu, dtype=float)
    c = cholesky(np.asarray(sigma, dtype=float), "sigma")
    k, p = mu.shape[-2:]
    noise = c @ rng.standard_normal((size, k, p))
    return mu + noise


def generate(spec: ScenarioSpec, keep_pre_forms: bool = False) -> tuple[Dataset, GroundTruth]:
    """Simulate ``spec.n`` objects; deterministic given ``spec.seed``."""
    rng = make_rng(spec.seed)
    if spec.d != 1:
        raise NotImplementedError("only intercept-only scenarios are simulated")
    mu = spec.beta.T
    sigma = spec.sigma
    ys, orients, xs = [], [], []
    for i in range(spec.n):
        for attempt in range(MAX_RETRIES + 1):
            x = draw_pre_forms(mu, sigma, rng, 1)[0]
            try:
                sas, r = decompose(x)
                break
            except DegenerateConfigurationError:
                log.warning("object %d: degenerate draw, resampling (attempt %d)", i, attempt + 1)
        else:
            raise DegenerateConfigurationError(f"object {i}: {MAX_RETRIES} degenerate draws")
        ys.append(sas.y)
        orients.append(r)
        xs.append(x)
    data = Dataset.intercept_only(np.stack(ys))
    orients = np.stack(orients)
    raw = ParamState(spec.beta.copy(), sigma.copy(), np.swapaxes(orients, -1, -2).copy())
    truth = GroundTruth(raw, identify_draw(raw), orients, np.stack(xs) if keep_pre_forms else None)
    return data, truth


def raw_configurations(pre_forms, rng: np.random.Generator, spread: float = 10.0) -> np.ndarray:
    """Embed pre-forms as ``(k+1)``-landmark configurations with random centroids.

    Helmertizing the result recovers the pre-forms exactly (up to rounding).
    """
    pre_forms = np.asarray(pre_forms, dtype=float)
    shifts = rng.normal(scale=spread, size=(pre_forms.shape[0], pre_forms.shape[2]))
    return np.stack([unhelmertize(x, t) for x, t in zip(pre_forms, shifts)])


# --------------------------------------------------------------------------
# joint draws used by the getting-it-right test


def draw_from_prior(priors: Priors, n: int, rng: np.random.Generator) -> ParamState:
    """``beta_l ~ N(M_l, V_l)``, ``Sigma ~ IW``, ``R_i ~ Haar``."""
    p = priors.p
    beta = np.stack([
        rng.multivariate_normal(priors.m[l], priors.v[l], method="cholesky") for l in range(p)
    ])
    sigma = sample_inverse_wishart(priors.nu, priors.psi, rng)
    rot = random_rotation(p, rng, size=n)
    return ParamState(beta, sigma, rot)


def draw_responses(state: ParamState, z, rng: np.random.Generator) -> np.ndarray:
    """``Y_i = X_i R_i^T`` with ``X_i`` drawn from the Gaussian model."""
    mu = mean_configuration(state, z)
    x = draw_pre_forms(mu, state.sigma, rng, mu.shape[0])
    return x @ np.swapaxes(state.rotations, -1, -2)

