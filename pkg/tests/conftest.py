import os
from pathlib import Path

import numpy as np
import pytest

import nethist as nh

POLBLOGS_ENV = "NETHIST_POLBLOGS"
_DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def polblogs_path():
    """Edge-list location for the political weblog dataset, if available."""
    env = os.environ.get(POLBLOGS_ENV)
    if env and Path(env).exists():
        return Path(env)
    for name in ("polblogs.txt", "polblogs_edges.txt", "polblogs.edgelist"):
        cand = _DATA_DIR / name
        if cand.exists():
            return cand
    return None


@pytest.fixture(scope="session")
def polblogs():
    path = polblogs_path()
    if path is None:
        pytest.skip(
            "polblogs dataset not available; set NETHIST_POLBLOGS to an "
            "edge-list file or place polblogs.txt under data/"
        )
    g, _ = nh.load_edge_list(path)
    g, _ = nh.filter_zero_degree(g)
    return g


def planted_two_block(n, p_in, p_out, seed):
    """Graph from a planted equal-half 2-block model, plus the plant."""
    rng = np.random.default_rng(seed)
    blocks = np.repeat([1, 2], n // 2)
    p = np.where(blocks[:, None] == blocks[None, :], p_in, p_out)
    u = rng.random((n, n))
    upper = np.triu(u < p, k=1)
    return nh.Graph(upper | upper.T), blocks


def erdos_renyi(n, p, seed):
    rng = np.random.default_rng(seed)
    u = rng.random((n, n))
    upper = np.triu(u < p, k=1)
    return nh.Graph(upper | upper.T)


def same_partition(z1, z2):
    """True when two assignments induce the same node partition."""
    groups1 = {}
    for i, a in enumerate(z1):
        groups1.setdefault(int(a), set()).add(i)
    groups2 = {}
    for i, a in enumerate(z2):
        groups2.setdefault(int(a), set()).add(i)
    return set(map(frozenset, groups1.values())) == set(
        map(frozenset, groups2.values()))
