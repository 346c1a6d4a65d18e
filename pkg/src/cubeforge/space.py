"""Finite quasi-metric point sets.

A space is a set of point ids 0..n-1 with a symmetric distance that is
positive off the diagonal and satisfies the inflated triangle inequality
rho(x, y) <= tri_const * (rho(x, z) + rho(z, y)). Balls are strict:
ball(x, r) = {y : rho(y, x) < r}. Distances live either in a dense table
(n <= TABLE_CAP) or behind a per-row oracle so the same API scales to
spaces where an n x n table would not fit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BadSpec, NegativeDistance, SymmetryViolation, ZeroDistance

TABLE_CAP = 2048
EXHAUSTIVE_TRIPLE_CAP = 512
SAMPLED_TRIPLES = 1_000_000
_REL_TOL = 1e-9


@dataclass
class SpaceProfile:
    """Numeric profile of a space.

    tri_const: triangle inflation constant (exact for small spaces, a declared
    analytic bound for generated large ones). doubling_count: greedy upper
    bound on how many half-radius balls cover any ball; filled lazily because
    it costs far more than the rest of the profile.
    """

    tri_const: float
    diam: float
    min_gap: Optional[float]
    doubling_count: Optional[int] = None

    @property
    def doubling_exp(self) -> Optional[float]:
        if self.doubling_count is None:
            return None
        return math.log2(self.doubling_count)

    def to_json(self):
        return {
            "A_0": float(self.tri_const),
            "A_1": None if self.doubling_count is None else int(self.doubling_count),
            "diam": float(self.diam),
            "min_gap": None if self.min_gap is None else float(self.min_gap),
        }

    @classmethod
    def from_json(cls, d):
        return cls(tri_const=float(d["A_0"]),
                   diam=float(d["diam"]),
                   min_gap=None if d.get("min_gap") is None else float(d["min_gap"]),
                   doubling_count=None if d.get("A_1") is None else int(d["A_1"]))


class QuasiMetricSpace:
    """Point ids 0..n-1 plus a distance accessor and a validated profile."""

    def __init__(self, n, table=None, row_fn=None, coords=None, profile=None,
                 generator=None):
        if table is None and row_fn is None:
            raise BadSpec("need a distance table or a row oracle")
        self.n = int(n)
        self.table = table
        self._row_fn = row_fn
        self.coords = coords
        self.profile = profile
        self.generator = generator

    # -- distances ---------------------------------------------------------

    def dist_row(self, i: int) -> np.ndarray:
        if self.table is not None:
            return self.table[i]
        return self._row_fn(i)

    def dist(self, i: int, j: int) -> float:
        if self.table is not None:
            return float(self.table[i, j])
        return float(self._row_fn(i)[j])

    def points(self):
        return range(self.n)

    # -- derived geometry ----------------------------------------------------

    def radii_from(self, center: int) -> np.ndarray:
        """Sorted distinct positive distances from `center`, plus one value
        above the diameter, so every distinct ball centred there is realized."""
        row = self.dist_row(center)
        vals = np.unique(row[row > 0])
        top = self._above_diam()
        if vals.size == 0 or vals[-1] < top:
            vals = np.append(vals, top)
        return vals

    def all_radii(self) -> np.ndarray:
        """Sorted distinct pairwise distances plus one value above the
        diameter. Dense-table spaces only."""
        if self.table is None:
            raise BadSpec("all_radii needs a dense distance table")
        iu = np.triu_indices(self.n, k=1)
        vals = np.unique(self.table[iu]) if self.n > 1 else np.array([])
        return np.append(vals, self._above_diam())

    def _above_diam(self) -> float:
        d = self.profile.diam if self.profile is not None else self._diam_scan()
        return d * 1.25 + 1.0

    def _diam_scan(self) -> float:
        return max(float(self.dist_row(i).max()) for i in self.points())

    def realized_balls(self):
        """All distinct balls of the space, deduplicated.

        Returns (masks, meta) where masks is a boolean (m, n) array and
        meta[i] = (center, radius) names one realization of ball i.
        Intended for the exhaustive analysis sweeps, so dense spaces only.
        """
        if self.table is None:
            raise BadSpec("realized_balls needs a dense distance table")
        masks, meta, seen = [], [], set()
        for c in self.points():
            row = self.table[c]
            for r in self.radii_from(c):
                mask = row < r
                key = mask.tobytes()
                if key not in seen:
                    seen.add(key)
                    masks.append(mask)
                    meta.append((c, float(r)))
        return np.array(masks), meta

    # -- construction --------------------------------------------------------

    @classmethod
    def from_table(cls, table, coords=None, generator=None, declared_tri_const=None):
        table = np.asarray(table, dtype=float)
        n = table.shape[0]
        space = cls(n, table=table, coords=coords, generator=generator)
        space.profile = validate_quasi_metric(range(n), table,
                                              declared_tri_const=declared_tri_const)
        return space

    @classmethod
    def from_coords(cls, coords, generator=None, declared_tri_const=1.0):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if coords.shape[0] == 1 and coords.shape[1] > 1 and generator is None:
            coords = coords.T
        n = coords.shape[0]
        if n <= TABLE_CAP:
            diff = coords[:, None, :] - coords[None, :, :]
            table = np.sqrt((diff * diff).sum(axis=2))
            return cls.from_table(table, coords=coords, generator=generator,
                                  declared_tri_const=declared_tri_const)
        space = cls(n, row_fn=lambda i: np.linalg.norm(coords - coords[i], axis=1),
                    coords=coords, generator=generator)
        space.profile = validate_quasi_metric(range(n), space.dist_row,
                                              declared_tri_const=declared_tri_const)
        return space

    @classmethod
    def from_line(cls, positions, generator=None):
        """1-d point set with the absolute-difference metric."""
        pos = np.asarray(sorted(positions), dtype=float)
        table = np.abs(pos[:, None] - pos[None, :])
        return cls.from_table(table, coords=pos.reshape(-1, 1), generator=generator,
                              declared_tri_const=1.0)

    # -- serialization ---------------------------------------------------------

    def to_json(self):
        out = {
            "n": self.n,
            "coords": None if self.coords is None else np.asarray(self.coords).tolist(),
            "generator": self.generator,
            "profile": None if self.profile is None else self.profile.to_json(),
        }
        if self.table is not None and self.n <= TABLE_CAP:
            out["distances"] = self.table.ravel().tolist()
        return out

    @classmethod
    def from_json(cls, d):
        n = int(d["n"])
        coords = None if d.get("coords") is None else np.asarray(d["coords"], dtype=float)
        if d.get("distances") is not None:
            table = np.asarray(d["distances"], dtype=float).reshape(n, n)
            space = cls(n, table=table, coords=coords, generator=d.get("generator"))
        elif coords is not None:
            return cls.from_coords(coords, generator=d.get("generator"))
        else:
            raise BadSpec("serialized space has neither distances nor coords")
        if d.get("profile") is not None:
            space.profile = SpaceProfile.from_json(d["profile"])
        return space


# -- validation ----------------------------------------------------------------


def validate_quasi_metric(points, distance, declared_tri_const=None,
                          exhaustive_cap=EXHAUSTIVE_TRIPLE_CAP) -> SpaceProfile:
    """Check symmetry/positivity and measure the triangle inflation constant.

    `distance` may be a dense (n, n) array or a row oracle i -> row.
    Exhaustive over all ordered triples for n <= exhaustive_cap; larger spaces
    are sampled (1e6 seeded triples) and must come with a declared analytic
    bound, which is asserted and returned.
    """
    pts = list(points)
    n = len(pts)
    if pts != list(range(n)):
        raise BadSpec("points must be ids 0..n-1")

    row_of = (lambda i: distance[i]) if isinstance(distance, np.ndarray) else distance

    diam = 0.0
    min_gap = None
    for i in range(n):
        row = np.asarray(row_of(i), dtype=float)
        neg = np.where(row < 0)[0]
        if neg.size:
            raise NegativeDistance(i, int(neg[0]), float(row[neg[0]]))
        if row[i] != 0:
            raise BadSpec(f"d({i},{i}) = {row[i]!r}, expected 0")
        off_ids = np.delete(np.arange(n), i)
        if off_ids.size:
            off = row[off_ids]
            zeros = np.where(off == 0)[0]
            if zeros.size:
                raise ZeroDistance(i, int(off_ids[zeros[0]]))
            diam = max(diam, float(off.max()))
            gap = float(off.min())
            min_gap = gap if min_gap is None else min(min_gap, gap)

    if n <= exhaustive_cap:
        tri = _tri_const_exhaustive(n, row_of)
    else:
        # sampled lower estimate; a declared bound, if given, wins below
        tri = _tri_const_sampled(n, row_of)
    if declared_tri_const is not None:
        if tri > declared_tri_const * (1 + _REL_TOL):
            raise BadSpec(
                f"measured triangle constant {tri} exceeds declared bound "
                f"{declared_tri_const}")
        tri = float(declared_tri_const)
    return SpaceProfile(tri_const=max(1.0, tri), diam=diam, min_gap=min_gap)


def _tri_const_exhaustive(n, row_of):
    if n < 2:
        return 1.0
    rows = np.array([row_of(i) for i in range(n)], dtype=float)
    sym = np.argwhere(~np.isclose(rows, rows.T, rtol=1e-12, atol=0))
    if sym.size:
        i, j = map(int, sym[0])
        raise SymmetryViolation(i, j, float(rows[i, j]), float(rows[j, i]))
    worst = 1.0
    off_diag = ~np.eye(n, dtype=bool)
    for z in range(n):
        denom = rows[:, z][:, None] + rows[z][None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(off_diag & (denom > 0), rows / denom, 0.0)
        worst = max(worst, float(ratio.max()))
    return worst


def _tri_const_sampled(n, row_of, n_samples=SAMPLED_TRIPLES, seed=0):
    rng = np.random.default_rng(seed)
    worst = 1.0
    batch = 4096
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        xs = rng.integers(0, n, m)
        for x in np.unique(xs):
            cnt = int((xs == x).sum())
            row = np.asarray(row_of(int(x)), dtype=float)
            ys = rng.integers(0, n, cnt)
            zs = rng.integers(0, n, cnt)
            keep = ys != x
            ys, zs = ys[keep], zs[keep]
            if ys.size == 0:
                continue
            num = row[ys]
            den = row[zs] + np.array([row_of(int(z))[y] for z, y in zip(zs, ys)])
            ok = den > 0
            if ok.any():
                worst = max(worst, float((num[ok] / den[ok]).max()))
        done += m
    return worst


# -- balls and doubling ----------------------------------------------------------


def ball(space: QuasiMetricSpace, center: int, radius: float) -> np.ndarray:
    """Ids strictly closer than `radius` to `center` (always includes it)."""
    return np.where(space.dist_row(center) < radius)[0]


def doubling_estimate(space: QuasiMetricSpace, center_cap=512, seed=0) -> int:
    """Upper bound on the half-radius covering count.

    For every center, sweeps each realized distance d and the float value
    just above it, greedily covering the ball by half-radius balls centred
    at its own points; returns the worst count. The just-above radii matter:
    ball sets are constant between consecutive distances, so the cover at the
    lower endpoint's limit dominates the whole interval, which makes the
    returned count a genuine doubling bound for every radius, not only the
    swept ones. Centers are subsampled above `center_cap` to keep large
    spaces tractable.
    """
    n = space.n
    if n == 1:
        return 1
    if n <= center_cap:
        centers = range(n)
    else:
        centers = np.random.default_rng(seed).choice(n, size=center_cap, replace=False)
    worst = 1
    for c in centers:
        row = space.dist_row(int(c))
        base = np.unique(row[row > 0])
        for r in np.concatenate([base, np.nextafter(base, np.inf)]):
            members = np.where(row < r)[0]
            worst = max(worst, _greedy_cover_count(space, members, r / 2.0))
    return worst


def _greedy_cover_count(space, members, radius):
    uncovered = np.ones(len(members), dtype=bool)
    count = 0
    while uncovered.any():
        p = members[np.argmax(uncovered)]  # first uncovered, ascending id
        covered = space.dist_row(int(p))[members] < radius
        uncovered &= ~covered
        count += 1
    return count


# -- generators -------------------------------------------------------------------


def generate_space(spec: dict) -> QuasiMetricSpace:
    """Build one of the supported synthetic spaces from a descriptor dict.

    kinds: euclidean_cloud(n, dim, box, seed), power_snowflake(base, exponent),
    geometric_line(levels, delta).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise BadSpec(f"descriptor must be a dict with a 'kind': {spec!r}")
    kind = spec["kind"]
    if kind == "euclidean_cloud":
        return _gen_cloud(spec)
    if kind == "power_snowflake":
        return _gen_snowflake(spec)
    if kind == "geometric_line":
        return _gen_line(spec)
    raise BadSpec(f"unknown space kind {kind!r}")


def _req(spec, key, typ=float):
    if key not in spec:
        raise BadSpec(f"{spec['kind']}: missing {key!r}")
    try:
        return typ(spec[key])
    except (TypeError, ValueError) as e:
        raise BadSpec(f"{spec['kind']}: bad {key!r}: {spec[key]!r}") from e


def _gen_cloud(spec):
    n = _req(spec, "n", int)
    dim = int(spec.get("dim", 2))
    box = float(spec.get("box", 1.0))
    seed = int(spec.get("seed", 0))
    if n < 1 or dim < 1 or box <= 0:
        raise BadSpec(f"euclidean_cloud: need n >= 1, dim >= 1, box > 0")
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, box, size=(n, dim))
    gen = {"kind": "euclidean_cloud", "n": n, "dim": dim, "box": box, "seed": seed}
    return QuasiMetricSpace.from_coords(coords, generator=gen, declared_tri_const=1.0)


def _gen_snowflake(spec):
    s = _req(spec, "exponent", float)
    if s <= 0:
        raise BadSpec("power_snowflake: exponent must be positive")
    base = spec.get("base")
    if isinstance(base, dict):
        base = generate_space(base)
    if not isinstance(base, QuasiMetricSpace):
        raise BadSpec("power_snowflake: base must be a space or a descriptor")
    base_tri = base.profile.tri_const if base.profile else 1.0
    declared = max(1.0, base_tri ** s * (2.0 ** (s - 1.0) if s > 1 else 1.0))
    gen = {"kind": "power_snowflake", "exponent": s,
           "base": base.generator if base.generator else "inline"}
    if base.table is not None:
        return QuasiMetricSpace.from_table(base.table ** s, coords=base.coords,
                                           generator=gen, declared_tri_const=declared)
    space = QuasiMetricSpace(base.n, row_fn=lambda i: base.dist_row(i) ** s,
                             coords=base.coords, generator=gen)
    space.profile = validate_quasi_metric(range(base.n), space.dist_row,
                                          declared_tri_const=declared)
    return space


def _gen_line(spec):
    levels = _req(spec, "levels", int)
    delta = _req(spec, "delta", float)
    if levels < 1:
        raise BadSpec("geometric_line: need levels >= 1")
    if not (0 < delta <= 0.5):
        raise BadSpec("geometric_line: need 0 < delta <= 1/2 so gaps stay >= 1")
    q = 1.0 / delta
    # cumulative geometric gaps 1, q, q^2, ...: min gap exactly 1,
    # diameter (q^levels - 1)/(q - 1) <= q^levels
    positions = np.concatenate([[0.0], np.cumsum(q ** np.arange(levels))])
    gen = {"kind": "geometric_line", "levels": levels, "delta": delta}
    return QuasiMetricSpace.from_line(positions, generator=gen)
