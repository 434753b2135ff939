import numpy as np
import pytest

from sizeshape.diagnostics import (
    PosteriorSummary,
    beta_names,
    coverage_report,
    effective_sample_size,
    flatten_params,
    format_table1,
    sigma_names,
    summarize,
    true_values,
)
from sizeshape.geometry import random_rotation
from sizeshape.model import pack_beta, unpack_beta
from sizeshape.sampler import Chain, SamplerConfig, gibbs_run
from sizeshape.model import Priors
from sizeshape.synthetic import default_scenario, generate


def fake_chain(rng, s=400, k=3, p=2):
    beta = rng.normal(size=(s, p, k))
    a = rng.normal(size=(s, k, k))
    sigma = a @ np.swapaxes(a, 1, 2) + np.eye(k)
    return Chain(beta, sigma, np.zeros(s))


class TestNames:
    def test_beta_names_follow_packing(self):
        names = beta_names(2, 3, 2)
        assert names[:3] == ["B1[1,1]", "B2[1,1]", "B1[2,1]"]
        b = np.arange(12.0).reshape(2, 3, 2)
        flat = flatten_params(pack_beta(b), np.eye(3))
        assert flat["B2[3,1]"] == b[1, 2, 0]
        assert flat["B1[1,2]"] == b[0, 0, 1]

    def test_sigma_names(self):
        assert sigma_names(2) == ["Sigma[1,1]", "Sigma[2,1]", "Sigma[2,2]"]


class TestESS:
    def test_iid(self, rng):
        assert effective_sample_size(rng.normal(size=20000)) == pytest.approx(20000, rel=0.1)

    def test_ar1(self, rng):
        phi, n = 0.8, 200000
        e = rng.normal(size=n)
        x = np.empty(n)
        x[0] = e[0]
        for t in range(1, n):
            x[t] = phi * x[t - 1] + e[t]
        assert effective_sample_size(x) == pytest.approx(n * (1 - phi) / (1 + phi), rel=0.1)

    def test_constant(self):
        assert effective_sample_size(np.ones(50)) == 50


class TestSummarize:
    def test_means_and_intervals(self, rng):
        chain = fake_chain(rng)
        s = summarize(chain)
        np.testing.assert_allclose(s.beta_mean, chain.beta.mean(axis=0))
        lo, hi = s.ci["B1[2,1]"]
        assert lo == pytest.approx(np.percentile(chain.beta[:, 0, 1], 2.5))
        assert hi == pytest.approx(np.percentile(chain.beta[:, 0, 1], 97.5))
        assert s.n_draws == 400 and s.rho is None

    def test_permutation_invariant(self, rng):
        chain = fake_chain(rng)
        perm = rng.permutation(len(chain))
        shuffled = Chain(chain.beta[perm], chain.sigma[perm], chain.loglik[perm])
        a, b = summarize(chain, with_ess=False), summarize(shuffled, with_ess=False)
        np.testing.assert_allclose(a.beta_mean, b.beta_mean, rtol=1e-14)
        assert a.ci == b.ci

    @pytest.mark.parametrize("p", [2, 3])
    def test_rho_rotation_invariant(self, rng, p):
        _, truth = generate(default_scenario(p, 5, 0.1, seed=1))
        chain = fake_chain(rng, k=3, p=p)
        chain.beta += truth.raw.beta
        q = random_rotation(p, rng)
        turned = Chain(pack_beta(unpack_beta(chain.beta, 3) @ q), chain.sigma, chain.loglik)
        rho = summarize(chain, truth.raw, with_ess=False).rho
        assert summarize(turned, truth.raw, with_ess=False).rho == pytest.approx(rho, abs=1e-9)
        assert summarize(turned, truth.identified, with_ess=False).rho == pytest.approx(rho, abs=1e-9)

    def test_rho_zero_at_truth(self):
        _, truth = generate(default_scenario(2, 5, 0.1, seed=1))
        chain = Chain(truth.identified.beta[None], truth.raw.sigma[None], np.zeros(1))
        assert summarize(chain, truth.raw).rho == pytest.approx(0.0, abs=1e-9)

    def test_to_dict(self, rng):
        doc = summarize(fake_chain(rng)).to_dict()
        entry = doc["parameters"]["Sigma[2,1]"]
        assert set(entry) == {"mean", "ci95", "ess"} and len(entry["ci95"]) == 2

    def test_empty(self):
        with pytest.raises(ValueError):
            summarize(Chain(np.zeros((0, 2, 3)), np.zeros((0, 3, 3)), np.zeros(0)))


class TestCoverage:
    def test_trivial_cases(self, rng):
        _, truth = generate(default_scenario(2, 5, 0.1, seed=1))
        ident = truth.identified
        chain = Chain(np.repeat(ident.beta[None], 10, 0), np.repeat(ident.sigma[None], 10, 0), np.zeros(10))
        s = summarize(chain, with_ess=False)
        assert set(coverage_report([s], true_values(truth.raw)).values()) == {1.0}
        far = {name: v + 1e6 for name, v in true_values(truth.raw).items()}
        assert set(coverage_report([s, s], far).values()) == {0.0}

    def test_state_truth_accepted(self, rng):
        _, truth = generate(default_scenario(2, 5, 0.1, seed=1))
        chain = Chain(truth.identified.beta[None], truth.identified.sigma[None], np.zeros(1))
        s = summarize(chain, with_ess=False)
        assert min(coverage_report([s], truth.identified).values()) == 1.0

    def test_small_replication(self):
        summaries, truths = [], []
        for seed in range(3):
            data, truth = generate(default_scenario(2, 30, 0.1, seed=seed))
            chain = gibbs_run(data, Priors.default(3, 2), SamplerConfig(iterations=800, burn_in=300, seed=seed))
            summaries.append(summarize(chain, with_ess=False))
            truths.append(true_values(truth.raw))
        cov = coverage_report(summaries, truths)
        assert np.mean(list(cov.values())) >= 0.6

    def test_needs_replicates(self):
        with pytest.raises(ValueError):
            coverage_report([], {})


def test_format_table1():
    text = format_table1([(20, 0.1, 0.0712, None), (300, 0.3, 0.0308, 0.0482)])
    lines = text.splitlines()
    assert lines[0].split() == ["n", "kappa", "rho_2", "rho_3"]
    assert lines[2].split() == ["20", "0.1", "0.0712"]
    assert lines[3].split() == ["300", "0.3", "0.0308", "0.0482"]


def test_summary_default_fields():
    s = PosteriorSummary(np.zeros((2, 3)), np.eye(3))
    assert s.ci == {} and s.rho is None
