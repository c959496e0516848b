import numpy as np
import pytest

import nethist as nh
from nethist.graph import from_edges
from nethist.histogram import Bandwidth, canonical_assignment
from nethist.optimizer import (
    brute_force_fit,
    partition_space_size,
    random_assignment,
    swap_delta,
)

from conftest import erdos_renyi, planted_two_block, same_partition

FOUR_CYCLE = from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


class TestRandomAssignment:
    def test_group_sizes_preserved(self):
        for seed in range(5):
            z = random_assignment(11, 3, seed)
            counts = np.bincount(z, minlength=4)[1:]
            assert counts.tolist() == [3, 3, 5]

    def test_determinism(self):
        assert np.array_equal(random_assignment(20, 4, 7),
                              random_assignment(20, 4, 7))
        assert not np.array_equal(random_assignment(20, 4, 7),
                                  random_assignment(20, 4, 8))


class TestSwapDelta:
    def test_requires_distinct_groups(self):
        hist = nh.bin_heights(FOUR_CYCLE, np.array([1, 1, 2, 2]), 2)
        with pytest.raises(ValueError):
            swap_delta(FOUR_CYCLE, hist, 0, 1)

    def test_involution(self):
        rng = np.random.default_rng(0)
        for trial in range(30):
            n = 12
            g = erdos_renyi(n, 0.4, 100 + trial)
            z = rng.permutation(canonical_assignment(Bandwidth(n, 4)))
            hist = nh.bin_heights(g, z, 4)
            i, j = 0, int(np.flatnonzero(z != z[0])[0])
            d1 = swap_delta(g, hist, i, j)
            z2 = z.copy()
            z2[i], z2[j] = z2[j], z2[i]
            hist2 = nh.bin_heights(g, z2, 4)
            d2 = swap_delta(g, hist2, i, j)
            assert abs(d1 + d2) < 1e-9

    def test_twin_nodes_zero_delta(self):
        # nodes 0 and 2 have identical neighborhoods in the 4-cycle
        hist = nh.bin_heights(FOUR_CYCLE, np.array([1, 2, 1, 2]), 2)
        assert swap_delta(FOUR_CYCLE, hist, 0, 1) == pytest.approx(
            swap_delta(FOUR_CYCLE, hist, 2, 1))

    def test_against_full_recompute(self):
        rng = np.random.default_rng(1)
        for trial in range(40):
            n = 14
            g = erdos_renyi(n, 0.5, 200 + trial)
            z = rng.permutation(canonical_assignment(Bandwidth(n, 4)))
            hist = nh.bin_heights(g, z, 4)
            i = int(rng.integers(n))
            others = np.flatnonzero(z != z[i])
            j = int(rng.choice(others))
            z2 = z.copy()
            z2[i], z2[j] = z2[j], z2[i]
            full = nh.log_likelihood(g, z2, 4) - nh.log_likelihood(g, z, 4)
            assert swap_delta(g, hist, i, j) == pytest.approx(full, abs=1e-9)


class TestBruteForce:
    def test_partition_counts(self):
        assert partition_space_size(4, 2) == 3
        assert partition_space_size(9, 3) == 280
        assert partition_space_size(7, 3) == 35

    def test_four_cycle_optimum(self):
        # the alternating split puts both edgesets entirely off-diagonal,
        # giving a perfect (zero) profile log-likelihood
        z = brute_force_fit(FOUR_CYCLE, 2)
        assert nh.log_likelihood(FOUR_CYCLE, z, 2) == pytest.approx(0.0)
        assert same_partition(z, [1, 2, 1, 2])

    def test_two_triangles_perfect_fit(self):
        g = from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
        z = brute_force_fit(g, 3)
        assert nh.log_likelihood(g, z, 3) == pytest.approx(0.0)
        assert same_partition(z, [1, 1, 1, 2, 2, 2])

    def test_space_limit(self):
        g = erdos_renyi(30, 0.3, 0)
        with pytest.raises(ValueError, match="exceeds limit"):
            brute_force_fit(g, 3, limit=1000)

    def test_remainder_group_enumeration(self):
        # n = 7, h = 3: groups of size 3 and 4, remainder carries label 2
        g = from_edges(7, [(0, 1), (1, 2), (0, 2),
                           (3, 4), (4, 5), (5, 6), (3, 6), (3, 5), (4, 6)])
        z = brute_force_fit(g, 3)
        assert nh.log_likelihood(g, z, 3) == pytest.approx(0.0)
        assert np.bincount(z, minlength=3)[1:].tolist() == [3, 4]
        assert same_partition(z, [1, 1, 1, 2, 2, 2, 2])


class TestFit:
    def test_beats_random_assignments(self):
        g = erdos_renyi(12, 0.5, 3)
        res = nh.fit(g, 4, nh.SearchConfig(restarts=20, seed=1))
        rng = np.random.default_rng(9)
        rand_lls = [nh.log_likelihood(g, random_assignment(12, 4, rng), 4)
                    for _ in range(1000)]
        assert res.log_likelihood >= max(rand_lls) - 1e-9

    def test_matches_brute_force_small(self):
        hits = 0
        for seed in range(10):
            g = erdos_renyi(8, 0.5, 400 + seed)
            if g.edge_count == 0:
                continue
            res = nh.fit(g, 4, nh.SearchConfig(restarts=40, seed=seed))
            z_star = brute_force_fit(g, 4)
            if res.log_likelihood == pytest.approx(
                    nh.log_likelihood(g, z_star, 4), abs=1e-9):
                hits += 1
        assert hits >= 9

    def test_planted_recovery(self):
        g, blocks = planted_two_block(60, 0.8, 0.05, 11)
        res = nh.fit(g, 30, nh.SearchConfig(restarts=30, seed=2))
        assert same_partition(res.best.z, blocks)

    def test_restart_history_and_determinism(self):
        g = erdos_renyi(16, 0.4, 5)
        cfg = nh.SearchConfig(restarts=15, seed=3)
        r1 = nh.fit(g, 4, cfg)
        r2 = nh.fit(g, 4, cfg)
        assert r1.history.shape == (15,)
        assert np.array_equal(r1.best.z, r2.best.z)
        assert r1.log_likelihood == r2.log_likelihood
        assert r1.proposals_evaluated == r2.proposals_evaluated
        assert r1.log_likelihood >= r1.history.max() - 1e-9

    def test_more_restarts_never_worse(self):
        g = erdos_renyi(18, 0.4, 6)
        small = nh.fit(g, 6, nh.SearchConfig(restarts=3, perturb_rounds=0,
                                             seed=4))
        large = nh.fit(g, 6, nh.SearchConfig(restarts=30, perturb_rounds=0,
                                             seed=4))
        assert large.log_likelihood >= small.log_likelihood - 1e-9

    def test_parallel_matches_serial(self):
        g = erdos_renyi(16, 0.4, 8)
        cfg1 = nh.SearchConfig(restarts=8, seed=5, threads=1)
        cfg2 = nh.SearchConfig(restarts=8, seed=5, threads=2)
        r1 = nh.fit(g, 4, cfg1)
        r2 = nh.fit(g, 4, cfg2)
        assert r1.log_likelihood == pytest.approx(r2.log_likelihood, abs=1e-9)
        assert np.array_equal(np.sort(r1.history), np.sort(r2.history))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            nh.SearchConfig(restarts=0)
        with pytest.raises(ValueError):
            nh.SearchConfig(triple_proportion=1.5)
