"""Points, separated sets and the antipodal-paired partition of S^d.

Points are stored as rows of float arrays of shape ``(count, d + 1)``;
:class:`SpherePoint` wraps a single row when a validated scalar object is
more convenient.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BudgetError, DomainError

UNIT_TOL = 1e-10
TIE_TOL = 1e-12


@dataclass(frozen=True)
class SpherePoint:
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.size < 2:
            raise DomainError("a sphere point needs at least two coordinates")
        if abs(np.linalg.norm(c) - 1.0) > UNIT_TOL:
            raise DomainError(f"not a unit vector (norm {np.linalg.norm(c)!r})")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def d(self) -> int:
        return self.coords.size - 1

    def __neg__(self) -> "SpherePoint":
        return SpherePoint(-self.coords)

    @classmethod
    def from_angle(cls, phi: float) -> "SpherePoint":
        """Point (cos phi, sin phi) on the circle."""
        return cls(np.array([math.cos(phi), math.sin(phi)]))


def as_array(x) -> np.ndarray:
    """Coordinates of a point or point set as a float array."""
    if isinstance(x, SpherePoint):
        return x.coords
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], SpherePoint):
        return np.stack([p.coords for p in x])
    return np.asarray(x, dtype=float)


def normalize(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def basis_vector(d: int, k: int) -> np.ndarray:
    e = np.zeros(d + 1)
    e[k] = 1.0
    return e


def north_pole(d: int) -> np.ndarray:
    return basis_vector(d, d)


def geodesic(a, b):
    """Great-circle distance arccos(a.b), with the dot product clipped to [-1, 1]."""
    dots = np.sum(as_array(a) * as_array(b), axis=-1)
    out = np.arccos(np.clip(dots, -1.0, 1.0))
    return float(out) if np.ndim(out) == 0 else out


def sample_uniform(d: int, count: int, seed) -> np.ndarray:
    """``count`` uniform points on S^d (normalized Gaussians)."""
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    return normalize(rng.standard_normal((count, d + 1)))


def tangent_frame(z: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the tangent space of S^d at ``z``."""
    z = np.asarray(z, dtype=float)
    q, _ = np.linalg.qr(np.column_stack([z, np.eye(z.size)]))
    return q[:, 1:z.size].T


def sample_cap(z, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from the geodesic cap {x : rho(x, z) <= radius}.

    The polar angle has density proportional to sin(a)^(d-1) on [0, radius]; it
    is drawn from the a^(d-1) proposal and thinned by (sin a / a)^(d-1).
    """
    z = np.asarray(z, dtype=float)
    d = z.size - 1
    radius = min(radius, math.pi)
    angles = np.empty(0)
    while angles.size < count:
        a = radius * rng.random(2 * count) ** (1.0 / d)
        with np.errstate(invalid="ignore", divide="ignore"):
            keep = np.where(a > 0, (np.sin(a) / a) ** (d - 1), 1.0)
        angles = np.concatenate([angles, a[rng.random(a.size) < keep]])
    angles = angles[:count]
    frame = tangent_frame(z)
    dirs = normalize(rng.standard_normal((count, d)) @ frame)
    return normalize(np.cos(angles)[:, None] * z + np.sin(angles)[:, None] * dirs)


# -- separated sets -----------------------------------------------------------

@dataclass(frozen=True)
class SeparatedSet:
    """Centers with pairwise geodesic distance > w inside the shrunken upper hemisphere."""

    centers: np.ndarray
    w: float

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        if c.ndim != 2 or c.shape[0] == 0:
            raise DomainError("need a nonempty (k, d+1) array of centers")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def d(self) -> int:
        return self.centers.shape[1] - 1

    def __len__(self) -> int:
        return self.centers.shape[0]

    def min_separation(self) -> float:
        if len(self) < 2:
            return math.pi
        g = np.arccos(np.clip(self.centers @ self.centers.T, -1.0, 1.0))
        np.fill_diagonal(g, np.inf)
        return float(g.min())

    def to_dict(self) -> dict:
        return {"d": self.d, "w": self.w, "centers": self.centers.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "SeparatedSet":
        return cls(np.array(payload["centers"]), payload["w"])


def expected_centers(d: int, w: float) -> float:
    return (math.pi / w) ** d


def default_candidate_budget(d: int, w: float) -> int:
    return int(math.ceil(100 * expected_centers(d, w)))


def greedy_separated_set(d: int, w: float, candidate_budget: int | None = None, seed=0) -> SeparatedSet:
    """Farthest-point packing of S^d_+(w) = {x : x_{d+1} > sin(w/2)}.

    Candidates are uniform samples folded into the upper hemisphere.  The
    first center is the candidate closest to the north pole; each next one is
    the candidate farthest from the current set, until no candidate lies
    more than ``w`` away.  The result is maximal with respect to the pool.
    """
    if not 0 < w < math.pi:
        raise DomainError(f"w must lie in (0, pi), got {w}")
    if candidate_budget is None:
        candidate_budget = default_candidate_budget(d, w)
    if candidate_budget < 10 * expected_centers(d, w):
        raise BudgetError(f"candidate_budget {candidate_budget} gives fewer than 10 candidates per expected center")
    pool = sample_uniform(d, candidate_budget, seed)
    pool[pool[:, d] < 0] *= -1.0
    pool = pool[pool[:, d] > math.sin(w / 2.0)]
    if pool.shape[0] == 0:
        raise BudgetError("no candidate fell inside the shrunken hemisphere")
    first = int(np.argmax(pool[:, d]))
    chosen = [first]
    min_dist = np.arccos(np.clip(pool @ pool[first], -1.0, 1.0))
    while True:
        nxt = int(np.argmax(min_dist))
        if min_dist[nxt] <= w:
            break
        chosen.append(nxt)
        min_dist = np.minimum(min_dist, np.arccos(np.clip(pool @ pool[nxt], -1.0, 1.0)))
    return SeparatedSet(pool[chosen], w)


# -- partition ----------------------------------------------------------------

def hemisphere_representative(x) -> np.ndarray:
    """Map x to whichever of x, -x has its last nonzero coordinate positive.

    This equals the "negate when the last coordinate is negative" rule off the
    equator and extends it to the equator so that x and -x always share a
    representative.
    """
    x = np.atleast_2d(as_array(x)).astype(float, copy=True)
    nz = np.abs(x) > 0
    last = x.shape[1] - 1 - np.argmax(nz[:, ::-1], axis=1)
    sign = np.sign(x[np.arange(x.shape[0]), last])
    sign[sign == 0] = 1.0
    return x * sign[:, None]


@dataclass(frozen=True)
class SpherePartition:
    """Voronoi cells of the centers on the upper hemisphere, paired with their antipodes.

    Region j is R_j^+ (hemisphere representatives nearest to center j) union
    its mirror image R_j^- = -R_j^+.  Ties go to the lowest center index.
    """

    centers: SeparatedSet
    _c: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_c", self.centers.centers)

    def __len__(self) -> int:
        return len(self.centers)

    def assign(self, x) -> np.ndarray:
        """Region index for each row of ``x`` (a scalar int for a single point)."""
        arr = as_array(x)
        single = arr.ndim == 1
        rep = hemisphere_representative(arr)
        dots = rep @ self._c.T
        best = dots.max(axis=1, keepdims=True)
        idx = np.argmax(dots >= best - TIE_TOL, axis=1)
        return int(idx[0]) if single else idx

    def to_dict(self) -> dict:
        return {"centers": self.centers.to_dict(), "representative": "last_nonzero_positive",
                "rule": "nearest_center_geodesic", "tie_break": "lowest_index", "tie_tol": TIE_TOL}


def build_partition(centers: SeparatedSet) -> SpherePartition:
    return SpherePartition(centers)


def region_samples(partition: SpherePartition, z_index: int, samples: int, seed=0,
                   radius: float | None = None, max_tries: int = 8) -> np.ndarray:
    """Dense uniform samples of the region of center ``z_index`` (both halves).

    Points are drawn from caps around z and -z and filtered by the partition.
    The cap radius starts at 2.5 w and doubles whenever accepted points come
    close to its rim, so the sample covers the whole region.
    """
    sep = partition.centers
    if not 0 <= z_index < len(sep):
        raise IndexError(f"center index {z_index} out of range")
    z = sep.centers[z_index]
    rng = np.random.default_rng(seed)
    r = 2.5 * sep.w if radius is None else radius
    for _ in range(max_tries):
        kept = []
        total = 0
        n_prop = max(samples, 256)
        while total < samples:
            prop = np.concatenate([sample_cap(z, r, n_prop, rng), sample_cap(-z, r, n_prop, rng)])
            hit = prop[partition.assign(prop) == z_index]
            kept.append(hit)
            total += hit.shape[0]
            if hit.shape[0] == 0:
                n_prop *= 2
        pts = np.concatenate(kept)
        reach = np.minimum(geodesic(pts, z), geodesic(pts, -z)).max()
        if r >= math.pi or reach < 0.95 * r:
            return pts
        r = min(2.0 * r, math.pi)
    raise BudgetError("region sampling did not stabilise")


def region_distance(region_pts: np.ndarray, target) -> float:
    """Sampled inf over the region of rho(x, target)."""
    return float(geodesic(region_pts, np.asarray(target)).min())


def annulus_bins(partition: SpherePartition, z_index: int, region_pts: np.ndarray) -> dict[int, list[int]]:
    """Group the other centers by i with i w/2 < rho(R_z, z~) <= (i+1) w/2."""
    sep = partition.centers
    half = sep.w / 2.0
    bins: dict[int, list[int]] = {}
    for k in range(len(sep)):
        if k == z_index:
            continue
        rho = region_distance(region_pts, sep.centers[k])
        i = max(0, int(math.ceil(rho / half)) - 1)
        bins.setdefault(i, []).append(k)
    return bins


def annulus_counts(centers: SeparatedSet, partition: SpherePartition, z_index: int,
                   samples: int = 2000, seed=0) -> list[int]:
    """|Z_i| for i = 0..max, where Z_i groups centers by their distance to region z."""
    if len(centers) == 1:
        return []
    pts = region_samples(partition, z_index, samples, seed)
    bins = annulus_bins(partition, z_index, pts)
    top = max(bins)
    return [len(bins.get(i, [])) for i in range(top + 1)]


def dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj.to_dict(), fh, indent=2, sort_keys=True)
