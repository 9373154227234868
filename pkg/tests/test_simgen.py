import numpy as np
import pytest
from scipy.stats import spearmanr

from hetcop.simgen import (
    MarginalSpec,
    NetworkSpec,
    SimulationError,
    assign_column_kinds,
    generate_truth,
    sample_mixed_data,
)


class TestSpecs:
    def test_network_spec_validation(self):
        with pytest.raises(SimulationError):
            NetworkSpec(kind="smallworld", p=10, n_groups=2)
        with pytest.raises(SimulationError):
            NetworkSpec(kind="random", p=1, n_groups=2)
        with pytest.raises(SimulationError):
            NetworkSpec(kind="random", p=10, n_groups=2, rho=1.2)
        with pytest.raises(SimulationError):
            NetworkSpec(kind="random", p=10, n_groups=2, edge_prob=0.0)
        with pytest.raises(SimulationError):
            NetworkSpec(kind="random", p=10, n_groups=2, epsilon=0.0)

    def test_marginal_spec_validation(self):
        with pytest.raises(SimulationError):
            MarginalSpec(prop_binary=0.5, prop_ordinal=0.5, prop_poisson=0.5,
                         prop_gaussian=0.0)
        with pytest.raises(SimulationError):
            MarginalSpec(ordinal_levels=1)


class TestGenerateTruth:
    def test_deterministic(self):
        spec = NetworkSpec(kind="random", p=20, n_groups=3, seed=5)
        t1, t2 = generate_truth(spec), generate_truth(spec)
        for a, b in zip(t1.precisions, t2.precisions):
            assert np.array_equal(a, b)
        assert t1.edge_sets == t2.edge_sets

    def test_positive_definite_outputs(self):
        for kind in ("random", "cluster", "scalefree"):
            spec = NetworkSpec(kind=kind, p=15, n_groups=2, edge_prob=0.1, seed=2)
            truth = generate_truth(spec)
            for theta, corr in zip(truth.precisions, truth.correlations):
                np.linalg.cholesky(corr)
                np.linalg.cholesky(theta)
                assert np.allclose(np.diag(corr), 1.0)

    def test_rho_zero_shares_edge_sets(self):
        spec = NetworkSpec(kind="random", p=20, n_groups=3, rho=0.0,
                           edge_prob=0.15, seed=7)
        truth = generate_truth(spec)
        for edges in truth.edge_sets:
            assert edges == truth.shared_edges

    def test_perturbation_only_adds_edges(self):
        spec = NetworkSpec(kind="random", p=20, n_groups=3, rho=0.4,
                           edge_prob=0.15, seed=8)
        truth = generate_truth(spec)
        M = len(truth.shared_edges)
        for edges in truth.edge_sets:
            assert truth.shared_edges <= edges
            assert len(edges) == M + int(np.floor(0.4 * M))

    def test_edge_support_matches_precision(self):
        spec = NetworkSpec(kind="random", p=12, n_groups=2, rho=0.25,
                           edge_prob=0.2, seed=9)
        truth = generate_truth(spec)
        for theta, edges in zip(truth.precisions, truth.edge_sets):
            found = {
                (i, j)
                for i in range(12)
                for j in range(i + 1, 12)
                if abs(theta[i, j]) > 1e-8
            }
            assert found == edges

    def test_random_edge_count_binomial(self):
        # Total edges over 30 seeds ~ Binomial(30 * C(50,2), 0.05).
        total = 0
        trials = 30 * 1225
        for seed in range(30):
            spec = NetworkSpec(kind="random", p=50, n_groups=1,
                               edge_prob=0.05, seed=seed)
            total += len(generate_truth(spec).shared_edges)
        mean = trials * 0.05
        sd = np.sqrt(trials * 0.05 * 0.95)
        assert abs(total - mean) < 3 * sd

    def test_scalefree_is_a_tree(self):
        spec = NetworkSpec(kind="scalefree", p=25, n_groups=1, rho=0.0, seed=3)
        truth = generate_truth(spec)
        assert len(truth.shared_edges) == 24

    def test_entry_values_in_declared_range(self):
        spec = NetworkSpec(kind="random", p=15, n_groups=1, rho=0.0,
                           edge_prob=0.2, seed=4)
        truth = generate_truth(spec)
        vals = np.abs(
            [truth.shared_precision[i, j] for i, j in truth.shared_edges]
        )
        assert np.all((vals >= 0.5) & (vals <= 1.0))


class TestColumnKinds:
    def test_paper_proportions_at_p50(self):
        kinds = assign_column_kinds(50, MarginalSpec(), np.random.default_rng(0))
        tags = [k.tag for k in kinds]
        assert tags.count("binary") == 5
        assert tags.count("ordinal") == 25
        assert tags.count("count") == 10
        assert tags.count("continuous") == 10

    def test_gaussian_gets_floor_remainder(self):
        kinds = assign_column_kinds(7, MarginalSpec(), np.random.default_rng(1))
        tags = [k.tag for k in kinds]
        # floor(0.7)=0 binary, floor(3.5)=3 ordinal, floor(1.4)=1 count.
        assert tags.count("binary") == 0
        assert tags.count("ordinal") == 3
        assert tags.count("count") == 1
        assert tags.count("continuous") == 3


@pytest.fixture(scope="module")
def truth():
    return generate_truth(
        NetworkSpec(kind="random", p=10, n_groups=2, edge_prob=0.2, seed=6)
    )


class TestSampleMixedData:

    def test_deterministic(self, truth):
        d1 = sample_mixed_data(truth, (30, 40), seed=11)
        d2 = sample_mixed_data(truth, (30, 40), seed=11)
        for a, b in zip(d1.groups, d2.groups):
            assert np.array_equal(a, b)

    def test_shapes_and_labels(self, truth):
        ds = sample_mixed_data(truth, (30, 40), seed=11)
        assert ds.group_sizes == (30, 40)
        assert ds.group_labels == ("g1", "g2")

    def test_all_gaussian_is_the_latent_draw(self, truth):
        marg = MarginalSpec(0.0, 0.0, 0.0, 1.0)
        ds = sample_mixed_data(truth, (4000, 30), marg, seed=12)
        # Continuous columns are the raw latent normals: empirical
        # correlation approaches the generating correlation.
        emp = np.corrcoef(ds.groups[0], rowvar=False)
        assert np.max(np.abs(emp - truth.correlations[0])) < 0.08

    def test_marginal_families(self, truth):
        marg = MarginalSpec()
        ds = sample_mixed_data(truth, (10000, 30), marg, seed=13)
        block = ds.groups[0]
        for j, kind in enumerate(ds.kinds):
            col = block[:, j]
            if kind.tag == "binary":
                assert abs(col.mean() - 0.5) < 0.03
            elif kind.tag == "ordinal":
                freqs = np.bincount(col.astype(int), minlength=6) / len(col)
                assert np.max(np.abs(freqs - 1 / 6)) < 0.02
            elif kind.tag == "count":
                assert abs(col.mean() - 10.0) < 0.3

    def test_rank_fidelity_of_discretization(self, truth):
        # The quantile transform is monotone: observed discrete columns are
        # perfectly rank-aligned with re-derived latent ranks via the
        # identity columns' joint draw -- check Spearman of count columns
        # against their own continuous re-transform.
        marg = MarginalSpec(0.0, 0.0, 0.0, 1.0)
        ds = sample_mixed_data(truth, (500, 30), marg, seed=14)
        from scipy.special import ndtr
        from scipy.stats import poisson

        z = ds.groups[0][:, 0]
        x = poisson.ppf(ndtr(z), 10.0)
        rho, _ = spearmanr(z, x)
        assert rho > 0.99

    def test_size_validation(self, truth):
        with pytest.raises(SimulationError):
            sample_mixed_data(truth, (30,), seed=1)
        with pytest.raises(SimulationError):
            sample_mixed_data(truth, (30, 0), seed=1)
