"""Material data sets of uniaxial (strain, stress) observations."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (DegenerateDataset, EmptyAllowedSet, EmptyDataset,
                     InvalidCurveSpec, ParseError)

ZERO_STRAIN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MaterialDataset:
    """Observed points; index ``j`` refers to row ``j`` of the source (zero-based)."""

    strain: np.ndarray
    stress: np.ndarray

    def __post_init__(self):
        strain = np.array(self.strain, dtype=float).ravel()
        stress = np.array(self.stress, dtype=float).ravel()
        if strain.shape != stress.shape:
            raise ValueError("strain and stress must have the same length")
        if strain.size == 0:
            raise EmptyDataset("material data set is empty")
        if not (np.all(np.isfinite(strain)) and np.all(np.isfinite(stress))):
            raise ValueError("data points must be finite")
        strain.setflags(write=False)
        stress.setflags(write=False)
        object.__setattr__(self, "strain", strain)
        object.__setattr__(self, "stress", stress)

    @classmethod
    def from_points(cls, points) -> MaterialDataset:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(pts[:, 0], pts[:, 1])

    @property
    def d(self) -> int:
        return self.strain.size

    def __len__(self):
        return self.d

    def point(self, j: int) -> tuple[float, float]:
        return float(self.strain[j]), float(self.stress[j])

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.strain, self.stress])


@dataclass(frozen=True)
class Weighting:
    """The weighting modulus ``c`` (Pa) of the phase-space metric."""

    c: float
    skipped: int = 0  # zero-strain points left out of the mean

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise DegenerateDataset(f"weighting constant must be positive, got {self.c}")

    def __float__(self):
        return float(self.c)


def load_csv(path) -> MaterialDataset:
    """Read a two-column (strain, stress [Pa]) CSV file. A header row is optional."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    strain, stress = [], []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < 2:
            raise ParseError(f"{path}: row {lineno}: expected 2 columns, found {len(row)}")
        try:
            e, s = float(row[0]), float(row[1])
        except ValueError:
            if lineno == 1 and not strain:
                continue  # header
            bad = 1 if _not_float(row[0]) else 2
            raise ParseError(
                f"{path}: row {lineno}, column {bad}: non-numeric value {row[bad - 1]!r}"
            ) from None
        if not (math.isfinite(e) and math.isfinite(s)):
            raise ParseError(f"{path}: row {lineno}: non-finite value")
        strain.append(e)
        stress.append(s)
    if not strain:
        raise EmptyDataset(f"{path}: no data rows")
    return MaterialDataset(np.array(strain), np.array(stress))


def _not_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return True
    return False


def write_csv(dataset: MaterialDataset, path) -> None:
    lines = ["strain,stress"]
    lines += [f"{e!r},{s!r}" for e, s in zip(dataset.strain.tolist(), dataset.stress.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def compute_c(dataset: MaterialDataset) -> Weighting:
    """Mean of the secant ratios stress/strain over the data set.

    Points with ``|strain| <= 1e-12`` are skipped; the number skipped is
    recorded on the result.
    """
    usable = np.abs(dataset.strain) > ZERO_STRAIN_TOL
    if not usable.any():
        raise DegenerateDataset("no data point has nonzero strain")
    ratios = dataset.stress[usable] / dataset.strain[usable]
    c = math.fsum(ratios.tolist()) / ratios.size
    if not c > 0:
        raise DegenerateDataset(f"mean stress/strain ratio is not positive ({c:g})")
    return Weighting(c, skipped=int((~usable).sum()))


def squared_distances(eps, sig, c, v, dataset: MaterialDataset, allowed=None) -> np.ndarray:
    """(v c / 2)(eps - e_j)^2 + (v / 2c)(sig - s_j)^2 for each allowed data point."""
    if allowed is None:
        e, s = dataset.strain, dataset.stress
    else:
        e, s = dataset.strain[allowed], dataset.stress[allowed]
    return 0.5 * v * c * (eps - e) ** 2 + 0.5 * v / c * (sig - s) ** 2


def nearest_point(eps, sig, c, v, dataset: MaterialDataset, allowed=None) -> tuple[int, float]:
    """Index of the closest allowed data point and its squared distance.

    Ties go to the smallest index. ``allowed`` is an optional sequence of
    data indices; all points are considered when it is None.
    """
    if allowed is None:
        dist = squared_distances(eps, sig, c, v, dataset)
        k = int(np.argmin(dist))
        return k, float(dist[k])
    idx = np.unique(np.asarray(allowed, dtype=int))
    if idx.size == 0:
        raise EmptyAllowedSet("allowed index set is empty")
    dist = squared_distances(eps, sig, c, v, dataset, idx)
    k = int(np.argmin(dist))  # first minimum, idx is sorted
    return int(idx[k]), float(dist[k])


def nearest_assignment(eps, sig, c, volumes, dataset: MaterialDataset) -> np.ndarray:
    """Vectorized :func:`nearest_point` over all members, no restriction."""
    eps = np.asarray(eps, dtype=float)[:, None]
    sig = np.asarray(sig, dtype=float)[:, None]
    v = np.asarray(volumes, dtype=float)[:, None]
    dist = 0.5 * v * c * (eps - dataset.strain) ** 2 + 0.5 * v / c * (sig - dataset.stress) ** 2
    return np.argmin(dist, axis=1)


# -- synthetic data -----------------------------------------------------------

_CURVE_RE = re.compile(r"^\s*(\w+)\s*\(([^)]*)\)\s*$")


@dataclass(frozen=True)
class Curve:
    kind: str
    E: float
    beta: float = 0.0

    def __call__(self, strain):
        strain = np.asarray(strain, dtype=float)
        if self.kind == "linear":
            return self.E * strain
        return self.E * strain - self.beta * strain ** 3


def parse_curve(spec) -> Curve:
    """Accept a :class:`Curve` or a string such as ``"linear(E=2e9)"`` or
    ``"cubic_softening(E=2e9, beta=1.5e12)"``."""
    if isinstance(spec, Curve):
        curve = spec
    else:
        m = _CURVE_RE.match(str(spec))
        if not m:
            raise InvalidCurveSpec(f"cannot parse curve spec {spec!r}")
        kind, argtext = m.group(1), m.group(2)
        kwargs = {}
        for k, part in enumerate(a for a in argtext.split(",") if a.strip()):
            name, sep, value = part.partition("=")
            if not sep:
                name, value = ("E", "beta")[k] if k < 2 else "?", part
            try:
                kwargs[name.strip()] = float(value)
            except ValueError:
                raise InvalidCurveSpec(f"bad parameter {part!r} in {spec!r}") from None
        try:
            curve = Curve(kind, **kwargs)
        except TypeError as exc:
            raise InvalidCurveSpec(f"{spec!r}: {exc}") from None
    if curve.kind not in ("linear", "cubic_softening"):
        raise InvalidCurveSpec(f"unknown curve kind {curve.kind!r}")
    if not (math.isfinite(curve.E) and math.isfinite(curve.beta)):
        raise InvalidCurveSpec("curve parameters must be finite")
    if curve.kind == "linear" and curve.beta != 0.0:
        raise InvalidCurveSpec("linear curve takes only E")
    return curve


DEFAULT_CURVE = "cubic_softening(E=2e9, beta=1.5e12)"
DEFAULT_STRAIN_RANGE = (-0.02, 0.02)
DEFAULT_NOISE = 1.0e6  # Pa


def generate_synthetic(curve_spec=DEFAULT_CURVE, d: int = 300, noise_std: float = DEFAULT_NOISE,
                       seed: int = 0, strain_range=DEFAULT_STRAIN_RANGE,
                       strains=None) -> MaterialDataset:
    """Sample ``d`` noisy points along a stress-strain curve.

    Strains are drawn uniformly from ``strain_range`` unless given
    explicitly; stresses are ``curve(strain)`` plus Gaussian noise of
    standard deviation ``noise_std`` (Pa).
    """
    curve = parse_curve(curve_spec)
    if noise_std < 0:
        raise InvalidCurveSpec("noise_std must be non-negative")
    rng = np.random.default_rng(seed)
    if strains is None:
        if int(d) < 1:
            raise EmptyDataset("d must be at least 1")
        lo, hi = strain_range
        strains = rng.uniform(lo, hi, size=int(d))
    else:
        strains = np.asarray(strains, dtype=float)
    stress = curve(strains)
    if noise_std > 0:
        stress = stress + rng.normal(0.0, noise_std, size=strains.size)
    return MaterialDataset(strains, stress)
