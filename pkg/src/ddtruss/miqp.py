"""Exact global solver: best-first branch and bound over data assignments.

Branching is d-way on one member at a time (the member is tied to each of
its allowed data points in turn), so every node is a partial assignment
and the tree has depth at most m.

Two certified lower bounds are available:

``"free"``
    Members without a data point contribute nothing; the remaining
    equality-constrained QP in ``(u, sig)`` is solved exactly.
``"hull"`` (default)
    Every free member's target ``(e_i, s_i)`` is relaxed to the convex hull
    of its allowed data points. The relaxation is solved approximately by
    an accelerated projected gradient method, and the value reported is
    the dual function evaluated at the residual, which is a lower bound
    whatever the accuracy of the inner solve. Child bounds start from the
    parent's dual point, so a child bound never drops below its parent's.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import MaterialDataset
from .errors import NoFreeMember
from .heuristic import solve_heuristic
from .state import (MechanicalState, QuadraticForm, reference_stiffness,
                    solve_fixed_assignment, solve_targets)
from .truss import TrussModel

PRUNE_TOL = 1e-12
OPTIMAL_GAP = 1e-9
DEFAULT_NODE_LIMIT = 10_000_000

OPTIMAL = "Optimal"
GAP_REACHED = "GapReached"
TIME_LIMIT = "TimeLimit"
NODE_LIMIT = "NodeLimit"


@dataclass
class PartialAssignment:
    """``fixed[i]`` is a data index, or -1 when member ``i`` is free.

    ``allowed[i]`` restricts a free member to a subset of data indices;
    ``None`` (for the whole tuple or one entry) means every index.
    """

    fixed: np.ndarray
    allowed: tuple | None = None

    @classmethod
    def root(cls, m: int) -> PartialAssignment:
        return cls(np.full(m, -1, dtype=int))

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(self.fixed < 0)

    def allowed_for(self, i: int, d: int) -> np.ndarray:
        if self.fixed[i] >= 0:
            return np.array([self.fixed[i]])
        if self.allowed is None or self.allowed[i] is None:
            return np.arange(d)
        return np.unique(np.asarray(self.allowed[i], dtype=int))

    def with_fixed(self, i: int, j: int) -> PartialAssignment:
        fixed = self.fixed.copy()
        fixed[i] = j
        return PartialAssignment(fixed, self.allowed)

    def is_leaf(self) -> bool:
        return bool(np.all(self.fixed >= 0))


@dataclass
class BnBNode:
    partial: PartialAssignment
    lower_bound: float
    depth: int
    id: int = 0
    parent: int = -1
    # warm start for the hull relaxation: dual point and primal weights
    dual: np.ndarray | None = field(default=None, repr=False)
    weights: dict | None = field(default=None, repr=False)


@dataclass
class ExactReport:
    objective: float
    state: MechanicalState
    assignment: np.ndarray
    nodes_explored: int
    wall_time: float
    gap: float
    status: str
    best_bound: float = 0.0
    tree: list | None = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# -- geometry helpers -----------------------------------------------------------

def convex_hull_indices(points: np.ndarray) -> np.ndarray:
    """Indices of the hull vertices of 2-D points (monotone chain).

    Collinear and duplicate points are dropped; degenerate sets return one
    or two indices.
    """
    pts = np.asarray(points, dtype=float)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    uniq = [order[0]]
    for k in order[1:]:
        if not np.array_equal(pts[k], pts[uniq[-1]]):
            uniq.append(k)
    if len(uniq) <= 2:
        return np.array(uniq)

    def cross(o, a, b):
        return (pts[a, 0] - pts[o, 0]) * (pts[b, 1] - pts[o, 1]) - \
               (pts[a, 1] - pts[o, 1]) * (pts[b, 0] - pts[o, 0])

    lower, upper = [], []
    for k in uniq:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], k) <= 0:
            lower.pop()
        lower.append(k)
    for k in reversed(uniq):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], k) <= 0:
            upper.pop()
        upper.append(k)
    return np.array(lower[:-1] + upper[:-1])


def project_simplex_rows(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of every row of ``v`` onto the unit simplex."""
    k = v.shape[1]
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, k + 1)
    cond = u - css / ind > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(v.shape[0]), rho] / (rho + 1)
    return np.maximum(v - theta[:, None], 0.0)


# -- bounding --------------------------------------------------------------------

class Relaxation:
    """Precomputed data for bounding one instance ``(model, dataset, c, p)``.

    Works in the reduced form ``J = 1/2 || sum_i w_i - r ||^2`` where
    ``w_i`` is the image of member ``i``'s target under the elimination of
    ``(u, eps, sig)`` (see :class:`~ddtruss.state.QuadraticForm`).
    """

    def __init__(self, model: TrussModel, dataset: MaterialDataset, c: float, p):
        self.model, self.dataset, self.c = model, dataset, float(c)
        self.p = np.asarray(p, dtype=float)
        self.K = reference_stiffness(model, c)
        qf = QuadraticForm(model, c, p)
        m = model.m
        sc = np.sqrt(self.c)
        self.Ge = qf.G[:, :m] / sc          # per-member column for scaled strain
        self.Gs = qf.G[:, m:] * sc          # per-member column for scaled stress
        self.r = qf.r
        self.zs = np.column_stack([dataset.strain * sc, dataset.stress / sc])
        # W[i, j] = image of data point j when tied to member i
        self.W = (self.Ge.T[:, None, :] * self.zs[None, :, 0, None]
                  + self.Gs.T[:, None, :] * self.zs[None, :, 1, None])
        self.hull_all = convex_hull_indices(self.zs)
        self._hull_cache = {}
        self.inner_iterations = 0

    # exact objective of a complete assignment, reduced form
    def leaf_value(self, assignment) -> float:
        res = self.W[np.arange(self.model.m), assignment].sum(axis=0) - self.r
        return 0.5 * float(res @ res)

    def target_shift(self, fixed: np.ndarray) -> np.ndarray:
        """``r`` minus the contribution of the fixed members."""
        idx = np.flatnonzero(fixed >= 0)
        return self.r - self.W[idx, fixed[idx]].sum(axis=0)

    def hull_of(self, allowed: np.ndarray | None) -> np.ndarray:
        if allowed is None:
            return self.hull_all
        key = allowed.tobytes()
        if key not in self._hull_cache:
            self._hull_cache[key] = allowed[convex_hull_indices(self.zs[allowed])]
        return self._hull_cache[key]

    def vertex_images(self, partial: PartialAssignment, free: np.ndarray):
        """(|free|, h, q) hull-vertex images, and the (|free|, h) data indices."""
        hulls = []
        for i in free:
            if partial.allowed is None or partial.allowed[i] is None:
                hulls.append(self.hull_all)
            else:
                hulls.append(self.hull_of(np.unique(np.asarray(partial.allowed[i], dtype=int))))
        h = max(len(v) for v in hulls)
        idx = np.array([np.concatenate([v, np.full(h - len(v), v[0])]) for v in hulls])
        return self.W[free[:, None], idx], idx

    @staticmethod
    def dual_value(y, t, images) -> float:
        """Dual function at ``y``: a lower bound on the hull relaxation."""
        val = -0.5 * float(y @ y) - float(y @ t)
        if images.shape[0]:
            val += float((images @ y).min(axis=1).sum())
        return val

    def hull_bound(self, partial: PartialAssignment, dual0=None, weights0=None,
                   cutoff=np.inf, max_iter=200, rel_tol=1e-9):
        """Certified lower bound of the hull relaxation at ``partial``.

        Returns ``(bound, dual, weights, targets)`` where ``targets`` are the
        relaxed scaled targets of every member (fixed ones at their data).
        """
        free = partial.free
        t = self.target_shift(partial.fixed)
        if free.size == 0:
            return 0.5 * float(t @ t), -t, {}, self._targets(partial, free, None, None)
        images, idx = self.vertex_images(partial, free)
        nf, h, q = images.shape
        M = images.reshape(nf * h, q)

        lam = np.full((nf, h), 1.0 / h)
        if weights0:
            for a, i in enumerate(free):
                w = weights0.get(int(i))
                if w is not None and w.shape == (h,):
                    lam[a] = w
        best = -np.inf
        best_dual = None
        if dual0 is not None:
            best = self.dual_value(dual0, t, images)
            best_dual = dual0
            if best >= cutoff:
                return best, best_dual, self._weights(free, lam), None

        L = float(np.linalg.norm(M, 2)) ** 2
        if L == 0.0:
            res = -t
            val = self.dual_value(res, t, images)
            return max(val, best), res, self._weights(free, lam), self._targets(partial, free, idx, lam)

        x = lam
        x_prev = x
        theta = 1.0
        f_prev = np.inf
        for it in range(max_iter):
            res = M.T @ x.ravel() - t
            f = 0.5 * float(res @ res)
            g = (M @ res).reshape(nf, h)
            lb = -0.5 * float(res @ res) - float(res @ t) + float(g.min(axis=1).sum())
            if lb > best:
                best, best_dual = lb, res
            if best >= cutoff or f - best <= rel_tol * max(f, 1e-300) or f <= 1e-300:
                break
            if f > f_prev:  # adaptive restart
                theta = 1.0
                x_prev = x
            f_prev = f
            theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
            yk = x + ((theta - 1.0) / theta_next) * (x - x_prev)
            resy = M.T @ yk.ravel() - t
            gy = (M @ resy).reshape(nf, h)
            x_prev = x
            x = project_simplex_rows(yk - gy / L)
            theta = theta_next
        self.inner_iterations += it + 1
        return best, best_dual, self._weights(free, x), self._targets(partial, free, idx, x)

    @staticmethod
    def _weights(free, lam):
        return {int(i): lam[a] for a, i in enumerate(free)}

    def _targets(self, partial, free, idx, lam):
        m = self.model.m
        z = np.zeros((m, 2))
        fixed = np.flatnonzero(partial.fixed >= 0)
        z[fixed] = self.zs[partial.fixed[fixed]]
        if free.size:
            z[free] = np.einsum("ah,ahk->ak", lam, self.zs[idx])
        return z

    def unscale(self, z):
        sc = np.sqrt(self.c)
        return z[:, 0] / sc, z[:, 1] * sc


def free_bound(partial: PartialAssignment, model: TrussModel, dataset: MaterialDataset,
               c: float, p):
    """Bound with free members' terms dropped.

    Minimizes the fixed members' penalties over ``(u, sig)`` subject to
    equilibrium. The problem splits into a weighted least-squares fit of
    ``u`` to the fixed strains and a minimum-norm stress correction in
    which free members' stresses are unconstrained. Returns
    ``(bound, u, sig)``.
    """
    B, v = model.B, model.volumes
    m, n = B.shape
    p = np.asarray(p, dtype=float)
    fx = np.flatnonzero(partial.fixed >= 0)
    fr = np.flatnonzero(partial.fixed < 0)
    e = dataset.strain[partial.fixed[fx]]
    s = dataset.stress[partial.fixed[fx]]

    # strain block, rows scaled by sqrt(v c)
    wsq = np.sqrt(v[fx] * c)
    if fx.size:
        A = wsq[:, None] * B[fx]
        rhs = wsq * e
        u, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        res_u = A @ u - rhs
        j_u = 0.5 * float(res_u @ res_u)
    else:
        u = np.zeros(n)
        j_u = 0.0

    # stress block: KKT system in (w, sig_free, mu) with w_i = sqrt(v_i/c) (sig_i - s_i)
    Af = (B[fx] * (np.sqrt(v[fx] * c))[:, None]).T      # n x |fx|
    Ar = (B[fr] * v[fr][:, None]).T                      # n x |fr|
    r = p - B[fx].T @ (v[fx] * s)
    nf, nr = fx.size, fr.size
    kkt = np.zeros((nf + nr + n, nf + nr + n))
    kkt[:nf, :nf] = np.eye(nf)
    kkt[:nf, nf + nr:] = Af.T
    kkt[nf:nf + nr, nf + nr:] = Ar.T
    kkt[nf + nr:, :nf] = Af
    kkt[nf + nr:, nf:nf + nr] = Ar
    rhs = np.concatenate([np.zeros(nf + nr), r])
    # column scaling of the free-stress block keeps lstsq's rank cutoff meaningful
    colscale = np.ones(nf + nr + n)
    if nr:
        colscale[nf:nf + nr] = 1.0 / np.maximum(np.linalg.norm(Ar, axis=0), 1e-300)
    sol, *_ = np.linalg.lstsq(kkt * colscale, rhs, rcond=None)
    sol = sol * colscale
    w = sol[:nf]
    sig = np.zeros(m)
    sig[fx] = s + w * np.sqrt(c / v[fx])
    sig[fr] = sol[nf:nf + nr]
    j_s = 0.5 * float(w @ w)
    return j_u + j_s, u, sig


def lower_bound(node, model: TrussModel, dataset: MaterialDataset, c: float, p,
                method: str = "hull") -> float:
    """Certified lower bound on every completion of ``node`` (a BnBNode or
    PartialAssignment)."""
    partial = node.partial if isinstance(node, BnBNode) else node
    if method == "free":
        return free_bound(partial, model, dataset, c, p)[0]
    if method == "hull":
        return Relaxation(model, dataset, c, p).hull_bound(partial, max_iter=20000, rel_tol=1e-14)[0]
    raise ValueError(f"unknown bound method {method!r}")


# -- branching -------------------------------------------------------------------

def branch(node: BnBNode, relaxation_state, model: TrussModel, dataset: MaterialDataset,
           c: float) -> list[BnBNode]:
    """Split ``node`` on its most ambiguous free member.

    ``relaxation_state`` is ``(eps, sig)`` of the bound solution. The chosen
    member has the smallest ratio of second-nearest to nearest allowed
    distance (lowest index on ties); one child per allowed data point,
    nearest first.
    """
    member, order, _ = select_branching(node.partial, relaxation_state, model, dataset, c)
    return [BnBNode(node.partial.with_fixed(member, int(j)), node.lower_bound, node.depth + 1,
                    parent=node.id)
            for j in order]


def select_branching(partial: PartialAssignment, relaxation_state, model, dataset, c):
    """Return ``(member, child order, per-member nearest index of free members)``."""
    free = partial.free
    if free.size == 0:
        raise NoFreeMember("node has no free member to branch on")
    eps, sig = relaxation_state
    v = model.volumes
    best = None
    nearest = {}
    for i in free:
        allowed = partial.allowed_for(i, dataset.d)
        dist = 0.5 * v[i] * c * (eps[i] - dataset.strain[allowed]) ** 2 \
            + 0.5 * v[i] / c * (sig[i] - dataset.stress[allowed]) ** 2
        order = np.argsort(dist, kind="stable")
        nearest[int(i)] = int(allowed[order[0]])
        if allowed.size == 1:
            ratio = np.inf
        else:
            d0, d1 = dist[order[0]], dist[order[1]]
            ratio = np.inf if d0 <= 0.0 else d1 / d0
        if best is None or ratio < best[0]:
            best = (ratio, int(i), allowed[order])
    return best[1], best[2], nearest


# -- search ----------------------------------------------------------------------

def solve_exact(model: TrussModel, dataset: MaterialDataset, c: float, p,
                gap_tol: float = 0.0, time_limit: float | None = None,
                node_limit: int = DEFAULT_NODE_LIMIT, bound: str = "hull",
                prune: bool = True, record_tree: bool = False,
                heuristic_cap: int = 10000, callback=None) -> ExactReport:
    """Globally minimize the data-driven objective by branch and bound.

    Parameters
    ----------
    gap_tol : float
        Stop once ``incumbent - best_bound <= gap_tol * max(1, |incumbent|)``.
    time_limit : float or None
        Wall-clock seconds.
    node_limit : int
        Maximum number of processed nodes.
    bound : {"hull", "free"}
    prune : bool
        With False the whole tree is enumerated (bounds are still computed).
    record_tree : bool
        Keep ``(id, parent, depth, lower_bound, fixed)`` of every processed
        node, and of every evaluated leaf, in ``report.tree``.
    callback : callable, optional
        Called as ``callback(incumbent, pool_bound)`` after each processed
        node, where ``pool_bound`` is the smallest bound left in the pool.
    """
    if gap_tol < 0:
        raise ValueError("gap_tol must be non-negative")
    if bound not in ("hull", "free"):
        raise ValueError(f"unknown bound method {bound!r}")
    start = time.perf_counter()
    p = np.asarray(p, dtype=float)
    K = reference_stiffness(model, c)
    relax = Relaxation(model, dataset, c, p)
    m, d = model.m, dataset.d

    heur = solve_heuristic(model, dataset, c, p, cap=heuristic_cap)
    inc_state = solve_fixed_assignment(model, dataset, c, heur.state.assignment, p, K)
    incumbent = inc_state.objective
    tree = [] if record_tree else None

    def cutoff():
        return incumbent - PRUNE_TOL if prune else np.inf

    def offer(assignment):
        nonlocal incumbent, inc_state
        st = solve_fixed_assignment(model, dataset, c, assignment, p, K)
        if st.objective < incumbent:
            incumbent, inc_state = st.objective, st

    counter = 0
    root = BnBNode(PartialAssignment.root(m), 0.0, 0, id=0)
    heap = [(0.0, 0, 0, root)]
    explored = 0
    status = OPTIMAL
    next_id = 1

    while heap:
        gap = incumbent - heap[0][0]
        if prune and gap <= gap_tol * max(1.0, abs(incumbent)):
            if gap > OPTIMAL_GAP:
                status = GAP_REACHED
            break
        if explored >= node_limit:
            status = NODE_LIMIT
            break
        if time_limit is not None and time.perf_counter() - start > time_limit:
            status = TIME_LIMIT
            break

        _, _, _, node = heapq.heappop(heap)
        if prune and node.lower_bound >= incumbent - PRUNE_TOL:
            continue
        explored += 1
        partial = node.partial

        if bound == "hull":
            lb, dual, weights, z = relax.hull_bound(
                partial, node.dual, node.weights, cutoff(),
                max_iter=60 if node.dual is not None else 300)
            lb = max(lb, node.lower_bound)
        else:
            lb, u_fb, sig_fb = free_bound(partial, model, dataset, c, p)
            lb = max(lb, node.lower_bound)
            dual = weights = z = None
        node.lower_bound = lb
        if tree is not None:
            tree.append((node.id, node.parent, node.depth, lb, partial.fixed.copy()))
        if prune and lb >= incumbent - PRUNE_TOL:
            continue

        if bound == "hull":
            e, s = relax.unscale(z)
            st = solve_targets(model, c, e, s, p, K)
            rstate = (st.eps, st.sig)
        else:
            rstate = (model.B @ u_fb, sig_fb)

        member, order, nearest = select_branching(partial, rstate, model, dataset, c)
        # round the relaxation: free members to their nearest data point
        rounded = partial.fixed.copy()
        for i, j in nearest.items():
            rounded[i] = j
        if relax.leaf_value(rounded) < incumbent - PRUNE_TOL:
            offer(rounded)

        t_parent = relax.target_shift(partial.fixed)
        if bound == "hull" and dual is not None:
            # cheap child bounds from the parent's dual point
            images, _ = relax.vertex_images(partial, np.array([member]))
            h_i = float((images[0] @ dual).min())
            child_lb = lb + relax.W[member, order] @ dual - h_i
        else:
            child_lb = np.full(order.size, lb)

        last = partial.free.size == 1
        for j, clb in zip(order, child_lb):
            j = int(j)
            if last:
                res = t_parent - relax.W[member, j]
                val = 0.5 * float(res @ res)
                if val < incumbent - PRUNE_TOL or not prune:
                    child = partial.with_fixed(member, j)
                    offer(child.fixed)
                    if tree is not None:
                        tree.append((next_id, node.id, node.depth + 1, val, child.fixed.copy()))
                    next_id += 1
                continue
            clb = max(float(clb), lb)
            if prune and clb >= incumbent - PRUNE_TOL:
                continue
            child = BnBNode(partial.with_fixed(member, j), clb, node.depth + 1,
                            id=next_id, parent=node.id, dual=dual, weights=weights)
            next_id += 1
            counter += 1
            heapq.heappush(heap, (clb, -child.depth, counter, child))
        if callback is not None:
            callback(incumbent, heap[0][0] if heap else np.inf)

    best_bound = min(incumbent, heap[0][0]) if heap else incumbent
    if status == OPTIMAL:
        best_bound = max(best_bound, incumbent - OPTIMAL_GAP)
    rel_gap = (incumbent - best_bound) / max(1.0, abs(incumbent))
    return ExactReport(incumbent, inc_state, inc_state.assignment, explored,
                       time.perf_counter() - start, rel_gap, status, best_bound, tree)

