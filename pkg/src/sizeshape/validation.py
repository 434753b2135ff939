"""Statistical self-checks of the samplers.

These routines compare sampler output with independent oracles: grid
densities for the rotation samplers, closed-form conditionals for the
conjugate steps and the getting-it-right joint-distribution test for a whole
sweep.  They return plain numbers so callers decide on tolerances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .diagnostics import effective_sample_size
from .geometry import TWO_PI, angle_from_rotation, euler_from_rotation, proper_svd, random_rotation
from .model import Dataset, ParamState, Priors, mean_configuration
from .sampler import (
    SamplerConfig,
    gibbs_sweep,
    make_rng,
    sample_rotation_p2,
    sample_rotation_p3,
    von_mises_params,
)
from .synthetic import draw_from_prior, draw_responses


def total_variation(p, q) -> float:
    """``0.5 * sum |p - q|`` of two probability vectors (each renormalized)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


def von_mises_bin_probabilities(kappa: float, eta: float, bins: int = 512) -> np.ndarray:
    """Exact bin masses of ``exp(kappa cos(t - eta))`` on ``bins`` equal arcs of ``[0, 2 pi)``."""
    edges = np.linspace(0.0, TWO_PI, bins + 1)
    mass = np.array([
        integrate.quad(lambda t: np.exp(kappa * (np.cos(t - eta) - 1.0)), a, b)[0]
        for a, b in zip(edges[:-1], edges[1:])
    ])
    return mass / mass.sum()


def p2_sampler_tv(f, n_draws: int = 10**6, bins: int = 512, seed: int = 0) -> float:
    """TV distance between the histogram of planar Matrix Fisher draws and the exact bin masses."""
    f = np.asarray(f, dtype=float)
    kappa, eta = von_mises_params(f)
    rng = make_rng(seed)
    theta = angle_from_rotation(sample_rotation_p2(np.broadcast_to(f, (n_draws, 2, 2)), rng))
    counts, _ = np.histogram(theta, bins=bins, range=(0.0, TWO_PI))
    return total_variation(counts, von_mises_bin_probabilities(float(kappa), float(eta), bins))


def p3_uniform_theta2_tv(n_draws: int = 10**5, chains: int = 1000, burn_in: int = 200,
                         thin: int = 10, bins: int = 50, euler_step: float = 0.5,
                         seed: int = 0) -> float:
    """TV distance of the Euler ``t2`` histogram from ``sin(t2) / 2`` for the ``F = 0`` chain.

    ``chains`` independent Metropolis chains start at the identity, run
    ``burn_in`` steps and then contribute every ``thin``-th state until
    ``n_draws`` post-burn-in draws are collected.  The proposal uses the fixed
    identity chart with scale ``euler_step``.
    """
    config = SamplerConfig(euler_step=euler_step, scale_euler_step=False, euler_chart="identity")
    rng = make_rng(seed)
    f = np.zeros((3, 3))
    rot = np.broadcast_to(np.eye(3), (chains, 3, 3)).copy()
    per_chain = -(-n_draws // chains)
    kept = []
    for it in range(burn_in + per_chain * thin):
        rot, _ = sample_rotation_p3(f, rot, config, rng)
        if it >= burn_in and (it - burn_in) % thin == thin - 1:
            kept.append(euler_from_rotation(rot)[1])
    t2 = np.concatenate(kept)[:n_draws]
    edges = np.linspace(0.0, np.pi, bins + 1)
    counts, _ = np.histogram(t2, bins=edges)
    expected = (np.cos(edges[:-1]) - np.cos(edges[1:])) / 2.0
    return total_variation(counts, expected)


def matrix_fisher_trace_mean(c: float) -> float:
    """``E[tr R]`` under the Matrix Fisher ``exp(c tr R)`` on SO(3), by quadrature.

    The rotation angle ``w`` of a Haar rotation has density proportional to
    ``1 - cos w`` on ``[0, pi]`` and ``tr R = 1 + 2 cos w``.
    """
    def weight(w):
        return np.exp(c * 2.0 * (np.cos(w) - 1.0)) * (1.0 - np.cos(w))

    num = integrate.quad(lambda w: (1.0 + 2.0 * np.cos(w)) * weight(w), 0.0, np.pi)[0]
    den = integrate.quad(weight, 0.0, np.pi)[0]
    return num / den


def exact_matrix_fisher_p3(f, size: int, rng: np.random.Generator) -> np.ndarray:
    """Exact Matrix Fisher draws on SO(3) by rejection from Haar measure.

    The acceptance probability is ``exp(tr(R F^T) - sum(s))`` with ``s`` the
    proper singular values of ``F``, so this is only practical for small ``F``.
    """
    f = np.asarray(f, dtype=float)
    bound = proper_svd(f)[1].sum()
    out = []
    total = 0
    while total < size:
        r = random_rotation(3, rng, size=size)
        log_acc = np.sum(r * f, axis=(-2, -1)) - bound
        keep = r[np.log(rng.random(size)) < log_acc]
        out.append(keep)
        total += len(keep)
    return np.concatenate(out)[:size]


def three_state_flow(f, n_draws: int = 10**5, seed: int = 0, step: float = 0.5):
    """Empirical transition flows of one Metropolis step between three ``t2`` regions.

    Starting from exact draws of the target, one update is applied and the
    ``(from, to)`` region counts are tabulated.  For a reversible kernel that
    preserves the target the count matrix is symmetric up to noise, and its row
    and column sums agree.

    Returns ``(counts, z)`` where ``z`` holds the standardized asymmetries
    ``(N_ab - N_ba) / sqrt(N_ab + N_ba)`` for ``a < b``.
    """
    rng = make_rng(seed)
    config = SamplerConfig(euler_step=step, scale_euler_step=False, euler_chart="identity")
    start = exact_matrix_fisher_p3(f, n_draws, rng)
    new, _ = sample_rotation_p3(f, start, config, rng)
    edges = np.array([0.0, np.pi / 3, 2 * np.pi / 3, np.pi + 1e-12])

    def region(r):
        return np.clip(np.searchsorted(edges, euler_from_rotation(r)[1], side="right") - 1, 0, 2)

    counts = np.zeros((3, 3))
    np.add.at(counts, (region(start), region(new)), 1)
    z = [
        (counts[a, b] - counts[b, a]) / np.sqrt(max(counts[a, b] + counts[b, a], 1.0))
        for a in range(3) for b in range(a + 1, 3)
    ]
    return counts, np.array(z)


# --------------------------------------------------------------------------
# getting-it-right


def geweke_functions(state: ParamState, y=None, z=None) -> dict[str, float]:
    """Scalar test functions of a joint (parameter, data) draw.

    Each beta entry, each lower-triangular Sigma entry and ``tr(R_1)``.  Given
    the responses ``y`` (and covariates ``z``), also ``<Y_1 R_1, mu_1>``, which
    ties the rotation to the data.  The rotation updates never feed back into
    the beta and Sigma updates of the successive-conditional simulator, and
    ``tr(R_1)`` is blind to transposing ``R_1``, so this term is what exposes a
    mis-oriented rotation conditional.
    """
    out = {}
    p, kd = state.beta.shape
    for l in range(p):
        for j in range(kd):
            out[f"beta[{l},{j}]"] = state.beta[l, j]
    k = state.sigma.shape[0]
    for a in range(k):
        for b in range(a + 1):
            out[f"sigma[{a},{b}]"] = state.sigma[a, b]
    out["tr(R_1)"] = np.trace(state.rotations[0])
    if y is not None:
        mu = mean_configuration(state, np.asarray(z, dtype=float)[0])
        out["<Y_1 R_1, mu_1>"] = float(np.sum((y[0] @ state.rotations[0]) * mu))
    return out


@dataclass
class GewekeResult:
    """Per test function: z-scores of the first and second moment differences."""

    names: list
    z_first: np.ndarray
    z_second: np.ndarray

    @property
    def max_abs_z(self) -> float:
        return float(max(np.abs(self.z_first).max(), np.abs(self.z_second).max()))


def _moment_z(a: np.ndarray, b: np.ndarray, b_dependent: bool) -> float:
    se_a = a.std(ddof=1) / np.sqrt(len(a))
    ess_b = effective_sample_size(b) if b_dependent else len(b)
    se_b = b.std(ddof=1) / np.sqrt(ess_b)
    return float((a.mean() - b.mean()) / np.hypot(se_a, se_b))


def geweke_test(priors: Priors, n: int, z=None, sweeps: int = 20000, seed: int = 0,
                config: SamplerConfig | None = None) -> GewekeResult:
    """Getting-it-right comparison of the marginal- and successive-conditional simulators.

    The marginal-conditional simulator draws parameters from the prior (the
    rotations from Haar measure) and then responses, so its test functions are
    independent draws.
    The successive-conditional simulator alternates one Gibbs sweep with a
    fresh draw of the responses given the parameters; its standard errors use
    the effective sample size.
    """
    config = config or SamplerConfig()
    z = np.ones((n, 1)) if z is None else np.asarray(z, dtype=float)
    rng_m = make_rng(seed, 0)
    rng_s = make_rng(seed, 1)

    marginal = []
    for _ in range(sweeps):
        state = draw_from_prior(priors, n, rng_m)
        marginal.append(geweke_functions(state, draw_responses(state, z, rng_m), z))

    state = draw_from_prior(priors, n, rng_s)
    successive = []
    for _ in range(sweeps):
        data = Dataset(draw_responses(state, z, rng_s), z)
        gibbs_sweep(state, data, priors, config, rng_s)
        successive.append(geweke_functions(state, data.y, z))

    names = list(marginal[0])
    mc = np.array([[g[nm] for nm in names] for g in marginal])
    sc = np.array([[g[nm] for nm in names] for g in successive])
    z1 = np.array([_moment_z(mc[:, j], sc[:, j], True) for j in range(len(names))])
    z2 = np.array([_moment_z(mc[:, j] ** 2, sc[:, j] ** 2, True) for j in range(len(names))])
    return GewekeResult(names, z1, z2)
