"""Mechanical state for a fixed data-point assignment.

With every member tied to one data point ``(e_i, s_i)`` the remaining
problem is an equality-constrained convex QP in ``(u, eps, sig)``. Its
stationarity conditions split into two solves with the reference stiffness
``K = sum_i v_i c b_i b_i^T``::

    K u   = sum_i v_i c e_i b_i
    K eta = p - sum_i v_i s_i b_i,     sig_i = s_i + c b_i^T eta
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dataset import MaterialDataset
from .errors import NotPositiveDefinite
from .truss import TrussModel


class ReferenceStiffness:
    """``K = c B^T V B`` with a cached Cholesky factor.

    ``solves`` counts right-hand sides solved against the factor and
    ``factorizations`` counts factorizations (always 1).
    """

    def __init__(self, model: TrussModel, c: float):
        self.c = float(c)
        if not self.c > 0:
            raise ValueError("c must be positive")
        self.B = model.B
        self.volumes = model.volumes
        K = self.c * (model.B.T @ (model.volumes[:, None] * model.B))
        self.matrix = 0.5 * (K + K.T)
        self.matrix.setflags(write=False)
        try:
            self._factor = scipy.linalg.cho_factor(self.matrix, lower=True, check_finite=True)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("reference stiffness is not positive definite") from None
        self.factorizations = 1
        self.solves = 0

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``K x = rhs``; ``rhs`` may hold several columns."""
        rhs = np.asarray(rhs, dtype=float)
        self.solves += 1 if rhs.ndim == 1 else rhs.shape[1]
        return scipy.linalg.cho_solve(self._factor, rhs, check_finite=False)


_stiffness_cache: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def reference_stiffness(model: TrussModel, c: float) -> ReferenceStiffness:
    """Return the (cached) reference stiffness of ``model`` at modulus ``c``."""
    per_model = _stiffness_cache.setdefault(model, {})
    key = float(c)
    if key not in per_model:
        per_model[key] = ReferenceStiffness(model, key)
    return per_model[key]


@dataclass(frozen=True, eq=False)
class MechanicalState:
    u: np.ndarray
    eps: np.ndarray
    sig: np.ndarray
    e: np.ndarray
    s: np.ndarray
    objective: float
    assignment: np.ndarray | None = None

    def equilibrium_residual(self, model: TrussModel, p) -> float:
        return float(np.linalg.norm(model.B.T @ (model.volumes * self.sig) - np.asarray(p)))


def objective_of(state: MechanicalState, model: TrussModel, c: float) -> float:
    """Sum over members of (v c/2)(eps - e)^2 + (v/2c)(sig - s)^2, from the raw fields."""
    v = model.volumes
    de = np.asarray(state.eps) - np.asarray(state.e)
    ds = np.asarray(state.sig) - np.asarray(state.s)
    return float(np.sum(0.5 * v * c * de ** 2) + np.sum(0.5 * v / c * ds ** 2))


def solve_fixed_assignment(model: TrussModel, dataset: MaterialDataset, c: float,
                           assignment, p, stiffness: ReferenceStiffness | None = None
                           ) -> MechanicalState:
    """Closest compatible/equilibrated state to the assigned data points."""
    assignment = np.asarray(assignment, dtype=int)
    if assignment.shape != (model.m,):
        raise ValueError(f"assignment must have one entry per member ({model.m})")
    e = dataset.strain[assignment]
    s = dataset.stress[assignment]
    return solve_targets(model, c, e, s, p, stiffness, assignment)


def solve_targets(model, c, e, s, p, stiffness=None, assignment=None) -> MechanicalState:
    """Same as :func:`solve_fixed_assignment` with explicit targets ``(e, s)``."""
    K = stiffness if stiffness is not None else reference_stiffness(model, c)
    B, v = model.B, model.volumes
    p = np.asarray(p, dtype=float)
    u = K.solve(B.T @ (v * c * e))
    eta = K.solve(p - B.T @ (v * s))
    eps = B @ u
    sig = s + c * (B @ eta)
    obj = float(np.sum(0.5 * v * c * (eps - e) ** 2) + np.sum(0.5 * v / c * (sig - s) ** 2))
    return MechanicalState(u, eps, sig, np.array(e, dtype=float), np.array(s, dtype=float),
                           obj, None if assignment is None else assignment.copy())


def linear_elastic_state(model: TrussModel, c: float, p) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Displacements, strains and stresses of the linear truss with modulus ``c``."""
    K = reference_stiffness(model, c)
    u = K.solve(np.asarray(p, dtype=float))
    eps = model.B @ u
    return u, eps, c * eps


class QuadraticForm:
    """The objective as a function of the targets alone, after eliminating
    ``(u, eps, sig)``::

        J(e, s) = 1/2 || L_e e ||^2 + 1/2 || L_s s - y ||^2

    ``L_e`` has ``m - n`` rows (the strain targets only matter through their
    incompatible part) and ``L_s`` has ``n`` rows. Stacking gives
    ``J = 1/2 || G z - r ||^2`` with ``z = (e, s)`` and ``G`` of size m x 2m.
    """

    def __init__(self, model: TrussModel, c: float, p):
        self.c = float(c)
        B, v = model.B, model.volumes
        m, n = B.shape
        sqv = np.sqrt(v)
        C = sqv[:, None] * B
        # orthonormal basis of the complement of range(C)
        q, _ = np.linalg.qr(C, mode="complete")
        N = q[:, n:]
        self.L_e = np.sqrt(self.c) * (N.T * sqv)
        Kc = self.c * (C.T @ C)
        R = scipy.linalg.cholesky(Kc, lower=False)
        self.L_s = scipy.linalg.solve_triangular(R, (B * v[:, None]).T, trans="T")
        self.y = scipy.linalg.solve_triangular(R, np.asarray(p, dtype=float), trans="T")
        self.G = np.zeros((m, 2 * m))
        self.G[: m - n, :m] = self.L_e
        self.G[m - n:, m:] = self.L_s
        self.r = np.concatenate([np.zeros(m - n), self.y])

    def value(self, e, s) -> float:
        res = self.G @ np.concatenate([e, s]) - self.r
        return 0.5 * float(res @ res)
