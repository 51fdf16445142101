"""Fixed-point data-driven solver.

Alternates between the closest compatible/equilibrated state for the
current assignment and the nearest data point of every member, until the
assignment stops changing. Both half-steps minimize the same objective
over their block of variables, so the objective never increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import MaterialDataset, nearest_assignment
from .state import MechanicalState, reference_stiffness, solve_fixed_assignment
from .truss import TrussModel

DEFAULT_CAP = 10000


@dataclass
class HeuristicReport:
    converged: bool
    iterations: int
    state: MechanicalState
    assignment: np.ndarray
    trace: list[float] = field(default_factory=list)
    cycled: bool = False

    @property
    def objective(self) -> float:
        return self.state.objective


def initial_assignment(model: TrussModel, dataset: MaterialDataset, c: float, init="zero") -> np.ndarray:
    """Starting assignment: nearest data point to the zero state, or an explicit array."""
    if isinstance(init, str):
        if init != "zero":
            raise ValueError(f"unknown init {init!r}")
        zeros = np.zeros(model.m)
        return nearest_assignment(zeros, zeros, c, model.volumes, dataset)
    init = np.asarray(init, dtype=int)
    if init.shape != (model.m,) or init.min() < 0 or init.max() >= dataset.d:
        raise ValueError("explicit initial assignment has wrong shape or range")
    return init.copy()


def solve_heuristic(model: TrussModel, dataset: MaterialDataset, c: float, p,
                    cap: int = DEFAULT_CAP, init="zero", detect_cycles: bool = False
                    ) -> HeuristicReport:
    """Run the alternating scheme for at most ``cap`` iterations.

    One iteration is a state solve followed by a reassignment. With
    ``detect_cycles`` the loop also stops (unconverged) as soon as an
    assignment repeats.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    K = reference_stiffness(model, c)
    assignment = initial_assignment(model, dataset, c, init)
    seen = {assignment.tobytes()} if detect_cycles else None
    trace = []
    for it in range(1, cap + 1):
        state = solve_fixed_assignment(model, dataset, c, assignment, p, K)
        trace.append(state.objective)
        new = nearest_assignment(state.eps, state.sig, c, model.volumes, dataset)
        if np.array_equal(new, assignment):
            return HeuristicReport(True, it, state, assignment, trace)
        if detect_cycles:
            key = new.tobytes()
            if key in seen:
                return HeuristicReport(False, it, state, assignment, trace, cycled=True)
            seen.add(key)
        assignment = new
    return HeuristicReport(False, cap, state, state.assignment, trace)
