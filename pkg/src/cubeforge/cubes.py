"""Hierarchical cube partitions built over per-level center families.

Construction runs in two stages. build_partial_order links every center on
level k+1 to a parent on level k: a uniquely-close parent when one exists
within sep_const * ratio**k / (2 * tri_const) (a "tight" link; two such
candidates would contradict level separation and raise), otherwise the
first-listed center within cover_const * ratio**k. build_cube_system then
closes the order downward: the cube of a center is the set of finest-level
points whose parent chain passes through it, which partitions the space at
every level by construction.

The checker re-derives the promised geometry from the realized member sets:
partition, nesting across levels, the inner/outer ball sandwich with
inner_const = sep_const / (3 * tri_const^2) and
outer_const = 2 * tri_const * cover_const, containment of descendant outer
balls, and proximity of descendant centers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ModeViolation, NoParent, TightAmbiguity
from .report import VerificationReport
from .space import QuasiMetricSpace

_TOL = 1e-12


@dataclass
class SystemConstants:
    delta: float
    tri_const: float
    sep_const: float
    cover_const: float

    @property
    def inner_const(self) -> float:
        return self.sep_const / (3.0 * self.tri_const ** 2)

    @property
    def outer_const(self) -> float:
        return 2.0 * self.tri_const * self.cover_const

    def to_json(self):
        return {"c0": self.sep_const, "C0": self.cover_const,
                "c1": self.inner_const, "C1": self.outer_const}


@dataclass
class ParentMaps:
    """Parent links between consecutive levels of center lists."""

    k_top: int
    constants: SystemConstants
    mode: str
    maps: list = field(default_factory=list)   # maps[j][i] = parent index
    tight: list = field(default_factory=list)  # tight[j][i] = unique-close link

    def parent_of(self, k: int, child_index: int) -> int:
        return int(self.maps[k - self.k_top][child_index])

    def children_of(self, k: int, parent_index: int) -> np.ndarray:
        return np.where(self.maps[k - self.k_top] == parent_index)[0]


@dataclass
class Cube:
    center: int
    members: np.ndarray

    def to_json(self):
        return {"center": int(self.center), "members": self.members.tolist()}


@dataclass
class CubeSystem:
    space: QuasiMetricSpace
    k_min: int
    k_max: int
    constants: SystemConstants
    mode: str
    level_points: list = field(default_factory=list)  # arrays of center ids
    order: Optional[ParentMaps] = None
    cubes: list = field(default_factory=list)         # list of lists of Cube
    assign: list = field(default_factory=list)        # arrays point -> cube index

    @property
    def delta(self) -> float:
        return self.constants.delta

    def level_ks(self):
        return range(self.k_min, self.k_max + 1)

    def cubes_at(self, k: int):
        return self.cubes[k - self.k_min]

    def cube(self, k: int, index: int) -> Cube:
        return self.cubes[k - self.k_min][index]

    def locate(self, k: int, point: int) -> int:
        """Index of the cube containing `point` on level k."""
        return int(self.assign[k - self.k_min][point])

    def chain(self, point: int):
        """Cube indices containing `point`, coarsest level first."""
        return [int(a[point]) for a in self.assign]

    def center_point(self, k: int, index: int) -> int:
        return int(self.level_points[k - self.k_min][index])

    def to_json(self):
        return {
            "delta": self.delta,
            "mode": self.mode,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "constants": self.constants.to_json(),
            "levels": [{"k": k, "cubes": [c.to_json() for c in self.cubes_at(k)]}
                       for k in self.level_ks()],
            "parents": [{"k": self.k_min + j, "map": m.tolist(), "tight": t.tolist()}
                        for j, (m, t) in enumerate(zip(self.order.maps, self.order.tight))]
                       if self.order else [],
        }

    @classmethod
    def from_json(cls, d, space):
        consts = SystemConstants(delta=float(d["delta"]),
                                 tri_const=space.profile.tri_const,
                                 sep_const=float(d["constants"]["c0"]),
                                 cover_const=float(d["constants"]["C0"]))
        k_min, k_max = int(d["k_min"]), int(d["k_max"])
        order = ParentMaps(k_top=k_min, constants=consts, mode=d["mode"],
                           maps=[np.asarray(p["map"], dtype=int) for p in d["parents"]],
                           tight=[np.asarray(p["tight"], dtype=bool) for p in d["parents"]])
        cubes, level_points, assign = [], [], []
        for lv in d["levels"]:
            cs = [Cube(int(c["center"]), np.asarray(c["members"], dtype=int))
                  for c in lv["cubes"]]
            cubes.append(cs)
            level_points.append(np.array([c.center for c in cs], dtype=int))
            a = np.full(space.n, -1, dtype=int)
            for i, c in enumerate(cs):
                a[c.members] = i
            assign.append(a)
        return cls(space=space, k_min=k_min, k_max=k_max, constants=consts,
                   mode=d["mode"], level_points=level_points, order=order,
                   cubes=cubes, assign=assign)


def build_partial_order(space: QuasiMetricSpace, level_points, delta: float,
                        sep_const: float, cover_const: float, tri_const: float,
                        k_top: int, mode: str = "strict") -> ParentMaps:
    """Link each center to its parent one level up; see the module docstring
    for the tight/loose rule. Strict mode insists on the scale headroom
    12 * tri_const^3 * cover_const * delta <= sep_const."""
    if mode == "strict":
        product = 12.0 * tri_const ** 3 * cover_const * delta
        if product > sep_const * (1 + _TOL):
            raise ModeViolation(product, sep_const, "parent-order scale headroom")
    consts = SystemConstants(delta, tri_const, sep_const, cover_const)
    out = ParentMaps(k_top=k_top, constants=consts, mode=mode)
    for j in range(len(level_points) - 1):
        k = k_top + j
        parents = np.asarray(level_points[j], dtype=int)
        children = np.asarray(level_points[j + 1], dtype=int)
        tight_thr = sep_const * delta ** k / (2.0 * tri_const)
        loose_thr = cover_const * delta ** k
        dists = np.array([space.dist_row(int(c))[parents] for c in children])
        near = dists < tight_thr
        counts = near.sum(axis=1)
        if (counts > 1).any():
            i = int(np.argmax(counts > 1))
            cands = parents[near[i]].tolist()
            raise TightAmbiguity(k, i, int(children[i]), cands)
        in_range = dists < loose_thr
        if (~in_range.any(axis=1) & (counts == 0)).any():
            i = int(np.argmax(~in_range.any(axis=1) & (counts == 0)))
            raise NoParent(k, i, int(children[i]))
        tight_idx = near.argmax(axis=1)
        loose_idx = in_range.argmax(axis=1)  # first listed within cover radius
        out.maps.append(np.where(counts == 1, tight_idx, loose_idx).astype(int))
        out.tight.append(counts == 1)
    return out


def build_cube_system(space: QuasiMetricSpace, level_points,
                      order: ParentMaps) -> CubeSystem:
    """Close the parent order downward into per-level partitions.

    The finest level list must contain every point of the space (it seeds the
    member closure); coarser members are unions of their children's members.
    """
    finest = np.asarray(level_points[-1], dtype=int)
    if sorted(finest.tolist()) != list(range(space.n)):
        raise ValueError("finest level must enumerate every point of the space")
    n_levels = len(level_points)
    assign = [None] * n_levels
    pos = np.empty(space.n, dtype=int)
    pos[finest] = np.arange(len(finest))
    assign[-1] = pos
    for j in range(n_levels - 2, -1, -1):
        assign[j] = order.maps[j][assign[j + 1]]
    cubes = []
    for j in range(n_levels):
        level = []
        for i, center in enumerate(np.asarray(level_points[j], dtype=int)):
            level.append(Cube(int(center), np.where(assign[j] == i)[0]))
        cubes.append(level)
    return CubeSystem(space=space, k_min=order.k_top,
                      k_max=order.k_top + n_levels - 1, constants=order.constants,
                      mode=order.mode,
                      level_points=[np.asarray(lv, dtype=int) for lv in level_points],
                      order=order, cubes=cubes, assign=assign)


def verify_cube_axioms(system: CubeSystem) -> VerificationReport:
    """Re-derive the promised cube geometry from realized member sets."""
    space = system.space
    n = space.n
    delta = system.delta
    inner = system.constants.inner_const
    outer = system.constants.outer_const
    rep = VerificationReport("cube axioms")

    # partition: member lists of one level cover each point exactly once
    part_bad, part_n = [], 0
    member_assign = []
    for k in system.level_ks():
        all_members = np.concatenate([c.members for c in system.cubes_at(k)]) \
            if system.cubes_at(k) else np.array([], dtype=int)
        counts = np.bincount(all_members, minlength=n)
        arr = np.full(n, -1, dtype=int)
        for i, cube in enumerate(system.cubes_at(k)):
            arr[cube.members] = i
        member_assign.append(arr)
        part_n += n
        if (counts != 1).any():
            bad = int(np.argmax(counts != 1))
            part_bad.append((k, bad, int(counts[bad])))
    rep.add("partition", not part_bad, part_n, part_bad,
            note="witness: (level, point, multiplicity)")

    # nesting: a finer cube's members sit inside a single coarser cube
    nest_bad, nest_n = [], 0
    ks = list(system.level_ks())
    for a, k in enumerate(ks):
        for b in range(a + 1, len(ks)):
            fine = ks[b]
            for i, cube in enumerate(system.cubes_at(fine)):
                if cube.members.size == 0:
                    continue
                nest_n += 1
                up = np.unique(member_assign[a][cube.members])
                if up.size != 1 or up[0] < 0:
                    nest_bad.append((k, fine, i, up.tolist()))
    rep.add("nesting", not nest_bad, nest_n, nest_bad,
            note="witness: (coarse level, fine level, cube, coarse indices hit)")

    # ball sandwich around each center
    lo_bad, hi_bad, sand_n = [], [], 0
    for k in system.level_ks():
        r_in = inner * delta ** k
        r_out = outer * delta ** k
        arr = member_assign[k - system.k_min]
        for i, cube in enumerate(system.cubes_at(k)):
            sand_n += 1
            row = space.dist_row(cube.center)
            inside = np.where(row < r_in)[0]
            if (arr[inside] != i).any():
                miss = int(inside[np.argmax(arr[inside] != i)])
                lo_bad.append((k, i, miss, float(row[miss])))
            if cube.members.size and (row[cube.members] >= r_out).any():
                far = int(cube.members[np.argmax(row[cube.members] >= r_out)])
                hi_bad.append((k, i, far, float(row[far])))
    rep.add("ball_sandwich_inner", not lo_bad, sand_n, lo_bad,
            note="points inside the inner ball must be members")
    rep.add("ball_sandwich_outer", not hi_bad, sand_n, hi_bad,
            note="members must stay inside the outer ball")

    # descendants: outer balls nest as sets, radii close arithmetically,
    # and descendant centers stay near ancestor centers
    anc = _ancestor_tables(system)
    set_bad, radii_bad, prox_bad, desc_n = [], [], [], 0
    for b, fine in enumerate(ks):
        for a in range(b):
            k = ks[a]
            pts_f = system.level_points[b]
            pts_c = system.level_points[a]
            r_f = outer * delta ** fine
            r_c = outer * delta ** k
            for i, zf in enumerate(pts_f):
                alpha = anc[b][a][i]
                zc = int(pts_c[alpha])
                desc_n += 1
                row_f = space.dist_row(int(zf))
                row_c = space.dist_row(zc)
                inside = row_f < r_f
                if (row_c[inside] >= r_c).any():
                    set_bad.append((k, fine, i))
                if fine == k + 1:
                    # arithmetic closure is an immediate-step bound; deeper
                    # pairs inherit containment by chaining the steps
                    gap = system.constants.tri_const * (row_c[int(zf)] + r_f)
                    if gap > r_c * (1 + _TOL):
                        radii_bad.append((k, fine, i, float(gap), float(r_c)))
                if row_c[int(zf)] >= r_c:
                    prox_bad.append((k, fine, i, float(row_c[int(zf)])))
    rep.add("descendant_ball_sets", not set_bad, desc_n, set_bad)
    rep.add("descendant_ball_radii", not radii_bad, desc_n, radii_bad,
            note="one-step arithmetic bound between consecutive levels")
    rep.add("descendant_center_proximity", not prox_bad, desc_n, prox_bad)

    rep.add("topology", True, 0,
            note="interior/closure coincide on finite point sets; nothing to check")
    return rep


def _ancestor_tables(system):
    """anc[b][a][i]: index on level a of the ancestor of cube i on level b."""
    n_levels = len(system.level_points)
    anc = []
    for b in range(n_levels):
        rows = [None] * b
        cur = np.arange(len(system.level_points[b]))
        for a in range(b - 1, -1, -1):
            cur = system.order.maps[a][cur]
            rows[a] = cur
        anc.append(rows)
    return anc


def boundary_zone(system: CubeSystem, k: int, index: int, eps: float) -> np.ndarray:
    """Members of the cube within eps (inclusive) of its complement.

    The cube covering the whole space has an empty boundary zone.
    """
    cube = system.cube(k, index)
    members = cube.members
    if members.size == system.space.n:
        return np.array([], dtype=int)
    outside = np.setdiff1d(np.arange(system.space.n), members, assume_unique=False)
    out = [int(x) for x in members
           if system.space.dist_row(int(x))[outside].min() <= eps]
    return np.array(out, dtype=int)
