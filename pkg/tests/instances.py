"""Random small instances shared by the test modules."""

import numpy as np

from ddtruss.dataset import MaterialDataset
from ddtruss.errors import KinematicallyIndeterminate
from ddtruss.truss import build_model


def random_truss(rng, max_members=4, max_dofs=4):
    """A random kinematically determinate planar truss with m <= 4 and n <= 4."""
    while True:
        n_free_nodes = int(rng.integers(1, 3))
        n_anchor = 3
        nodes = rng.uniform(0.0, 2.0, size=(n_free_nodes + n_anchor, 2))
        fixed = [(a, k) for a in range(n_free_nodes, n_free_nodes + n_anchor) for k in range(2)]
        # occasionally turn a free node into a roller
        for a in range(n_free_nodes):
            if rng.random() < 0.3:
                fixed.append((a, int(rng.integers(0, 2))))
        pairs = [(i, j) for i in range(len(nodes)) for j in range(i + 1, len(nodes))
                 if i < n_free_nodes]
        m = int(rng.integers(1, max_members + 1))
        if m > len(pairs):
            continue
        chosen = rng.choice(len(pairs), size=m, replace=False)
        members = [(pairs[k][0], pairs[k][1], float(rng.uniform(0.5, 2.0))) for k in chosen]
        try:
            model = build_model(nodes, members, fixed)
        except KinematicallyIndeterminate:
            continue
        if model.n <= max_dofs and np.linalg.cond(model.B.T @ model.B) < 1e6:
            return model


def random_instance(seed, d_range=(2, 6)):
    """(model, dataset, c, p) with objective values of order one."""
    rng = np.random.default_rng(seed)
    model = random_truss(rng)
    d = int(rng.integers(d_range[0], d_range[1] + 1))
    c = float(rng.uniform(0.5, 2.0))
    strain = rng.normal(0.0, 1.0, size=d)
    stress = c * strain + rng.normal(0.0, 0.5, size=d)
    dataset = MaterialDataset(strain, stress)
    p = rng.normal(0.0, 1.0, size=model.n) * float(np.mean(model.volumes))
    return model, dataset, c, p
