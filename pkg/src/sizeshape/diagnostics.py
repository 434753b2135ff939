"""Posterior summaries, interval coverage and the size-and-shape error ``rho``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import decompose, ss_distance
from .identification import identify_draw
from .model import ParamState, unpack_beta


def beta_names(p: int, k: int, d: int) -> list[str]:
    """Names ``B{h}[{j},{l}]`` (1-based) in the ``(p, k*d)`` packing order."""
    return [f"B{h + 1}[{j + 1},{l + 1}]" for l in range(p) for j in range(k) for h in range(d)]


def sigma_names(k: int) -> list[str]:
    """Names of the lower-triangular entries of ``Sigma``, row by row."""
    return [f"Sigma[{a + 1},{b + 1}]" for a in range(k) for b in range(a + 1)]


def flatten_params(beta, sigma) -> dict[str, np.ndarray]:
    """Scalar parameters keyed by name; leading axes of the inputs are kept."""
    beta = np.asarray(beta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    p, kd = beta.shape[-2:]
    k = sigma.shape[-1]
    out = dict(zip(beta_names(p, k, kd // k), np.moveaxis(beta.reshape(beta.shape[:-2] + (p * kd,)), -1, 0)))
    rows, cols = np.tril_indices(k)
    out.update(zip(sigma_names(k), np.moveaxis(sigma[..., rows, cols], -1, 0)))
    return out


def effective_sample_size(x) -> float:
    """ESS from Geyer's initial positive sequence of autocorrelations."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    xc = x - x.mean()
    var = xc @ xc / n
    if var <= 0:
        return float(n)
    m = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(xc, m)
    acf = np.fft.irfft(spec * np.conj(spec), m)[:n] / (n * var)
    tau = -1.0
    for t in range(0, n - 1, 2):
        pair = acf[t] + acf[t + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(n / max(tau, 1e-12))


@dataclass
class PosteriorSummary:
    beta_mean: np.ndarray
    sigma_mean: np.ndarray
    ci: dict = field(default_factory=dict)
    ess: dict = field(default_factory=dict)
    rho: float | None = None
    n_draws: int = 0

    def to_dict(self) -> dict:
        means = flatten_params(self.beta_mean, self.sigma_mean)
        return {
            "n_draws": self.n_draws,
            "rho": self.rho,
            "beta_mean": self.beta_mean.tolist(),
            "sigma_mean": self.sigma_mean.tolist(),
            "parameters": {
                name: {
                    "mean": float(means[name]),
                    "ci95": [float(v) for v in self.ci[name]],
                    "ess": self.ess.get(name),
                }
                for name in self.ci
            },
        }


def posterior_mean_configuration(beta, k: int, z=None) -> np.ndarray:
    """``sum_h z_h mean(B_h)``; ``z`` defaults to ``(1, 0, ..., 0)``."""
    b = unpack_beta(np.asarray(beta, dtype=float).mean(axis=0), k)
    if z is None:
        z = np.eye(b.shape[0])[0]
    return np.tensordot(np.asarray(z, dtype=float), b, axes=1)


def summarize(chain, truth: ParamState | None = None, z=None, with_ess: bool = True) -> PosteriorSummary:
    """Posterior means, 95% equal-tailed intervals, ESS and (given ``truth``) ``rho``.

    ``chain`` is anything with ``beta`` (``S x p x kd``) and ``sigma``
    (``S x k x k``) arrays of identified draws.  ``rho`` is the size-and-shape
    distance between the posterior-mean configuration and the true one at
    covariates ``z``.
    """
    beta = np.asarray(chain.beta, dtype=float)
    sigma = np.asarray(chain.sigma, dtype=float)
    if beta.shape[0] == 0:
        raise ValueError("cannot summarize an empty chain")
    k = sigma.shape[-1]
    flat = flatten_params(beta, sigma)
    ci = {
        name: tuple(float(q) for q in np.percentile(v, [2.5, 97.5]))
        for name, v in flat.items()
    }
    ess = {name: effective_sample_size(v) for name, v in flat.items()} if with_ess else {}
    rho = None
    if truth is not None:
        est = posterior_mean_configuration(beta, k, z)
        true_mu = np.tensordot(
            np.eye(truth.b.shape[0])[0] if z is None else np.asarray(z, dtype=float), truth.b, axes=1
        )
        rho = ss_distance(decompose(est)[0], decompose(true_mu)[0])
    return PosteriorSummary(beta.mean(axis=0), sigma.mean(axis=0), ci, ess, rho, beta.shape[0])


def true_values(truth: ParamState, identify: bool = True) -> dict[str, float]:
    """Scalar truth keyed like the summary intervals (identified by default)."""
    state = identify_draw(truth) if identify else truth
    return {name: float(v) for name, v in flatten_params(state.beta, state.sigma).items()}


def coverage_report(summaries, truth) -> dict[str, float]:
    """Fraction of replicates whose 95% interval contains the true value, per parameter.

    ``truth`` is a name -> value mapping, an identified :class:`ParamState`,
    or a list of either (one per replicate).
    """
    summaries = list(summaries)
    if not summaries:
        raise ValueError("need at least one replicate")
    truths = truth if isinstance(truth, (list, tuple)) else [truth] * len(summaries)
    truths = [t if isinstance(t, dict) else true_values(t, identify=False) for t in truths]
    names = summaries[0].ci.keys()
    out = {}
    for name in names:
        hits = [lo <= t[name] <= hi for s, t in zip(summaries, truths) for lo, hi in [s.ci[name]]]
        out[name] = float(np.mean(hits))
    return out


def format_table1(rows) -> str:
    """Text table of ``(n, kappa, rho_2, rho_3)`` rows."""
    lines = [f"{'n':>5} {'kappa':>6} {'rho_2':>9} {'rho_3':>9}", "-" * 32]
    for n, kappa, r2, r3 in rows:
        cells = ["" if r is None else f"{r:.4f}" for r in (r2, r3)]
        lines.append(f"{n:>5} {kappa:>6} {cells[0]:>9} {cells[1]:>9}")
    return "\n".join(lines)
