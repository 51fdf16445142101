"""Pin-jointed truss under small deformation.

A :class:`TrussModel` holds the geometry together with the quantities the
data-driven problem is written in: one compatibility vector ``b_i`` per
member (so that the member strain is ``b_i @ u``), the member volumes
``v_i`` and a reference load pattern over the free degrees of freedom.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import InputError, KinematicallyIndeterminate, ZeroLengthMember

TEN_BAR_SPACING = 3.6  # m
TEN_BAR_LOAD = -400.0  # N per unit load multiplier, vertical
DEFAULT_AREA = 1.0e-3  # m^2


@dataclass(frozen=True)
class Member:
    end_nodes: tuple[int, int]
    area: float
    length: float

    @property
    def volume(self) -> float:
        return self.area * self.length


@dataclass(frozen=True, eq=False)
class TrussModel:
    """Truss geometry plus the compatibility operator over the free DOFs.

    Attributes
    ----------
    nodes : (N, dim) array
        Nodal coordinates in meters.
    members : tuple of Member
    fixed_dofs : frozenset of (node, axis)
    free_dofs : list of (node, axis)
        Free DOFs in the compacted order used by every vector of length ``n``.
    B : (m, n) array
        Row ``i`` is the compatibility vector ``b_i``.
    volumes : (m,) array
    load_pattern : (n,) array
        Load at unit multiplier, in newtons.
    """

    nodes: np.ndarray
    members: tuple[Member, ...]
    fixed_dofs: frozenset
    free_dofs: tuple[tuple[int, int], ...]
    B: np.ndarray
    volumes: np.ndarray
    load_pattern: np.ndarray
    _dof_index: dict = field(repr=False, default_factory=dict)

    @property
    def n(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.B.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def b_vectors(self) -> list[np.ndarray]:
        return list(self.B)

    def dof_index(self, node: int, axis: int) -> int:
        """Position of the free DOF ``(node, axis)`` in vectors of length n."""
        try:
            return self._dof_index[(node, axis)]
        except KeyError:
            raise KeyError(f"DOF (node={node}, axis={axis}) is fixed or does not exist") from None

    def member_lengths(self, u: np.ndarray | None = None) -> np.ndarray:
        """Member lengths, optionally in the configuration displaced by ``u``."""
        x = self.nodes.copy()
        if u is not None:
            for k, (node, axis) in enumerate(self.free_dofs):
                x[node, axis] += u[k]
        return np.array([np.linalg.norm(x[mb.end_nodes[1]] - x[mb.end_nodes[0]])
                         for mb in self.members])

    def load_vector(self, lam: float) -> np.ndarray:
        return load_vector(self, lam)


def build_model(nodes, members, fixed_dofs, load_pattern=None) -> TrussModel:
    """Assemble a :class:`TrussModel`.

    Parameters
    ----------
    nodes : sequence of coordinate tuples (2-D or 3-D), meters
    members : sequence of ``(i, j, area)``
    fixed_dofs : iterable of ``(node, axis)``
    load_pattern : ``(n,)`` array over the free DOFs, or a sequence of
        ``(node, axis, newtons)`` triples, or None for no load.

    Free DOFs are numbered node by node in declaration order, x before y
    (before z), with the fixed ones removed.
    """
    xyz = np.asarray(nodes, dtype=float)
    if xyz.ndim != 2 or xyz.shape[1] not in (2, 3):
        raise InputError("nodes must be an (N, 2) or (N, 3) array of coordinates")
    if not np.all(np.isfinite(xyz)):
        raise InputError("node coordinates must be finite")
    n_nodes, dim = xyz.shape

    fixed = set()
    for node, axis in fixed_dofs:
        node, axis = int(node), int(axis)
        if not (0 <= node < n_nodes and 0 <= axis < dim):
            raise InputError(f"fixed DOF (node={node}, axis={axis}) out of range")
        fixed.add((node, axis))
    free = tuple((a, k) for a in range(n_nodes) for k in range(dim) if (a, k) not in fixed)
    if not free:
        raise KinematicallyIndeterminate("truss has no free degrees of freedom")
    index = {dof: k for k, dof in enumerate(free)}

    mbs = []
    rows = []
    for idx, mb in enumerate(members):
        i, j, area = int(mb[0]), int(mb[1]), float(mb[2])
        if i == j or not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise InputError(f"member {idx} has invalid end nodes ({i}, {j})")
        if not area > 0:
            raise InputError(f"member {idx} has non-positive area {area}")
        delta = xyz[j] - xyz[i]
        length = float(np.linalg.norm(delta))
        if length == 0.0:
            raise ZeroLengthMember(f"member {idx} joins coincident nodes {i} and {j}")
        cosines = delta / length
        row = np.zeros(len(free))
        for axis in range(dim):
            # elongation = cos . (u_j - u_i)
            if (j, axis) in index:
                row[index[(j, axis)]] += cosines[axis] / length
            if (i, axis) in index:
                row[index[(i, axis)]] -= cosines[axis] / length
        rows.append(row)
        mbs.append(Member((i, j), area, length))
    if not mbs:
        raise InputError("truss has no members")

    B = np.array(rows)
    volumes = np.array([mb.volume for mb in mbs])

    p = np.zeros(len(free))
    if load_pattern is not None:
        arr = np.asarray(load_pattern, dtype=float)
        if arr.ndim == 1 and arr.shape == (len(free),):
            p = arr.copy()
        else:
            for node, axis, value in load_pattern:
                dof = (int(node), int(axis))
                if dof not in index:
                    raise InputError(f"load applied to fixed or missing DOF {dof}")
                p[index[dof]] += float(value)

    # spanning check: sum v_i b_i b_i^T must be positive definite
    K = B.T @ (volumes[:, None] * B)
    try:
        scipy.linalg.cholesky(K, lower=True)
    except np.linalg.LinAlgError:
        raise KinematicallyIndeterminate(
            "compatibility vectors do not span the free DOFs (mechanism or missing support)"
        ) from None
    if np.linalg.cond(K) > 1e14:
        raise KinematicallyIndeterminate("reference stiffness is numerically singular")

    for a in (B, volumes, p):
        a.setflags(write=False)
    xyz.setflags(write=False)
    return TrussModel(xyz, tuple(mbs), frozenset(fixed), free, B, volumes, p, index)


def load_vector(model: TrussModel, lam: float) -> np.ndarray:
    """External load at multiplier ``lam`` (newtons)."""
    return lam * model.load_pattern


def builtin_ten_bar(area: float = DEFAULT_AREA) -> TrussModel:
    """The two-bay, 10-bar cantilever truss.

    Node layout (3.6 m spacing)::

        3 ---- 4 ---- 5
        |      |      |
        0 ---- 1 ---- 2

    Nodes 0 and 3 are pinned. A downward load of 0.4 kN per unit multiplier
    acts at nodes 1 and 2. The vertical displacement of node 2 (the bottom
    right node) is the monitored quantity of the equilibrium path.
    """
    if not area > 0:
        raise InputError("area must be positive")
    a = TEN_BAR_SPACING
    nodes = [(0, 0), (a, 0), (2 * a, 0), (0, a), (a, a), (2 * a, a)]
    topology = [
        (3, 4), (4, 5),  # top chords
        (0, 1), (1, 2),  # bottom chords
        (1, 4), (2, 5),  # verticals
        (0, 4), (1, 3),  # diagonals, left bay
        (1, 5), (2, 4),  # diagonals, right bay
    ]
    members = [(i, j, area) for i, j in topology]
    fixed = [(0, 0), (0, 1), (3, 0), (3, 1)]
    loads = [(1, 1, TEN_BAR_LOAD), (2, 1, TEN_BAR_LOAD)]
    return build_model(nodes, members, fixed, loads)


TEN_BAR_MONITOR = (2, 1)  # (node, axis) of the equilibrium-path displacement


def load_truss_file(path) -> TrussModel:
    """Read a truss from a JSON document.

    Schema::

        {
          "nodes":      [[x, y], ...],               # meters
          "members":    [[i, j, area], ...],         # node indices, m^2
          "fixed_dofs": [[node, axis], ...],         # axis 0 = x, 1 = y
          "loads":      [[node, axis, newtons], ...] # per unit multiplier
        }

    Node indices are zero-based.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    missing = [k for k in ("nodes", "members", "fixed_dofs") if k not in doc]
    if missing:
        raise InputError(f"{path}: missing keys {missing}")
    try:
        return build_model(doc["nodes"], doc["members"], doc["fixed_dofs"], doc.get("loads", []))
    except (TypeError, ValueError, IndexError) as exc:
        raise InputError(f"{path}: malformed truss document ({exc})") from exc


def dump_truss(model: TrussModel) -> dict:
    """Inverse of :func:`load_truss_file` (as a dict ready for ``json.dump``)."""
    loads = [[node, axis, float(model.load_pattern[k])]
             for k, (node, axis) in enumerate(model.free_dofs) if model.load_pattern[k] != 0.0]
    return {
        "nodes": model.nodes.tolist(),
        "members": [[mb.end_nodes[0], mb.end_nodes[1], mb.area] for mb in model.members],
        "fixed_dofs": sorted([list(d) for d in model.fixed_dofs]),
        "loads": loads,
    }
