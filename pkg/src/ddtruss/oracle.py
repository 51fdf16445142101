"""Brute-force reference solver: evaluate every one of the d**m assignments."""

from __future__ import annotations

import time

import numpy as np

from .dataset import MaterialDataset
from .errors import TooLarge
from .miqp import OPTIMAL, ExactReport
from .state import reference_stiffness, solve_fixed_assignment
from .truss import TrussModel

DEFAULT_LIMIT = 10 ** 6
CHUNK = 1 << 15


def batch_objectives(model: TrussModel, dataset: MaterialDataset, c: float, p,
                     assignments: np.ndarray) -> np.ndarray:
    """Objective of each row of ``assignments`` (shape (N, m)).

    Same closed form as the single-assignment kernel, with all right-hand
    sides solved against the one cached factorization.
    """
    K = reference_stiffness(model, c)
    B, v = model.B, model.volumes
    e = dataset.strain[assignments].T        # (m, N)
    s = dataset.stress[assignments].T
    u = K.solve(B.T @ (v[:, None] * c * e))
    eta = K.solve(np.asarray(p, dtype=float)[:, None] - B.T @ (v[:, None] * s))
    eps = B @ u
    sig = s + c * (B @ eta)
    return (0.5 * c * v[:, None] * (eps - e) ** 2 + 0.5 / c * v[:, None] * (sig - s) ** 2).sum(axis=0)


def brute_force(model: TrussModel, dataset: MaterialDataset, c: float, p,
                enumeration_limit: int = DEFAULT_LIMIT) -> ExactReport:
    """Global minimum by exhaustive enumeration in lexicographic order.

    Member 0 varies slowest. Among equal objectives the first assignment in
    that order wins.
    """
    m, d = model.m, dataset.d
    total = d ** m
    if total > enumeration_limit:
        raise TooLarge(f"d**m = {d}**{m} = {total} exceeds the enumeration limit {enumeration_limit}")
    start = time.perf_counter()
    best_val, best_flat = np.inf, -1
    for lo in range(0, total, CHUNK):
        flat = np.arange(lo, min(lo + CHUNK, total))
        assignments = np.stack(np.unravel_index(flat, (d,) * m), axis=1)
        vals = batch_objectives(model, dataset, c, p, assignments)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_flat = float(vals[k]), int(flat[k])
    best = np.array(np.unravel_index(best_flat, (d,) * m))
    state = solve_fixed_assignment(model, dataset, c, best, p)
    return ExactReport(state.objective, state, best, total,
                       time.perf_counter() - start, 0.0, OPTIMAL, state.objective)
