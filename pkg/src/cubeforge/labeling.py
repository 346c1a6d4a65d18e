"""Label the reference hierarchy and select new center points from it.

Children here are children of the reference order: the partial order built
over the reference nets with unit separation and covering constants, so a
center's tight radius is ratio**k / (2 * tri_const) and its loose radius is
ratio**k. The conflict relation uses the tighter radius of the selected
points instead: two centers of one level are "in conflict" when they sit
closer than ratio**(k-1) / (4 * tri_const**2), and two centers are
"neighbours" when some pair of their children is in conflict. Primary labels
are greedy: walking the level in ascending index order, each center takes the
smallest value in {0, 1, 2, ...} unused among its already-labeled neighbours.
Children then carry a pair label: the parent's primary label plus the
child's 1-based ordinal among its siblings (ascending index).

Selection rules pick one child per center, producing one new point per old
point. The fallback in every rule is the designated near child: the child
closest to the parent (ties to the smallest index), required to sit within
ratio**(k+1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cubes import ParentMaps, build_partial_order
from .errors import ConfigError, ModeViolation, NoNearChild, NotAChild
from .nets import NetHierarchy
from .report import VerificationReport

_TOL = 1e-12
LABEL_PRODUCT_LIMIT = 96.0


@dataclass
class LabeledHierarchy:
    hierarchy: NetHierarchy
    order: ParentMaps
    conflicts: list = field(default_factory=list)   # per level: [(i, j), ...]
    neighbours: list = field(default_factory=list)  # per parent level
    primary: list = field(default_factory=list)     # per parent level: int array
    duplex: list = field(default_factory=list)      # per child level: (n, 2) array
    near: list = field(default_factory=list)        # per parent level: designated
    max_label: int = 0                              # largest primary label seen
    max_children: int = 1                           # largest sibling count seen

    @property
    def space(self):
        return self.hierarchy.space

    @property
    def k_min(self):
        return self.hierarchy.k_min

    @property
    def k_max(self):
        return self.hierarchy.k_max

    def parent_ks(self):
        return range(self.k_min, self.k_max)

    def label1(self, k: int, index: int) -> int:
        return int(self.primary[k - self.k_min][index])

    def label2(self, k_child: int, index: int):
        l, m = self.duplex[k_child - self.k_min - 1][index]
        return int(l), int(m)

    def children_of(self, k: int, index: int) -> np.ndarray:
        return self.order.children_of(k, index)

    def designated_near(self, k: int, index: int) -> int:
        """Child index closest to the parent, or -1 if none is near enough."""
        return int(self.near[k - self.k_min][index])

    def near_children(self, k: int, index: int) -> np.ndarray:
        """Children within ratio**(k+1) of the parent point."""
        kids = self.children_of(k, index)
        parent_pt = int(self.hierarchy.level(k)[index])
        child_pts = self.hierarchy.level(k + 1)[kids]
        row = self.space.dist_row(parent_pt)[child_pts]
        return kids[row < self.hierarchy.delta ** (k + 1)]

    def to_json(self):
        out = {"L": self.max_label, "M": self.max_children, "levels": []}
        for k in self.hierarchy.level_ks():
            j = k - self.k_min
            entry = {"k": k,
                     "conflicts": [list(p) for p in self.conflicts[j]],
                     "labels": None, "neighbours": None, "duplex": None}
            if k < self.k_max:
                entry["labels"] = self.primary[j].tolist()
                entry["neighbours"] = [list(p) for p in self.neighbours[j]]
            if k > self.k_min:
                entry["duplex"] = self.duplex[j - 1].tolist()
            out["levels"].append(entry)
        return out


@dataclass
class SelectionOutcome:
    labeled: LabeledHierarchy
    rule: dict
    chosen: list = field(default_factory=list)  # per parent level: child index

    @property
    def hierarchy(self):
        return self.labeled.hierarchy

    def chosen_child(self, k: int, index: int) -> int:
        return int(self.chosen[k - self.labeled.k_min][index])

    def new_points(self, k: int) -> np.ndarray:
        """Point ids of the selected centers, aligned with level k indices."""
        h = self.hierarchy
        if k == self.labeled.k_max:
            return h.level(k).copy()
        return h.level(k + 1)[self.chosen[k - self.labeled.k_min]]

    def new_levels(self):
        """Selected center ids for every level; the finest level passes
        through unchanged (deeper selection has nothing left to move)."""
        return [self.new_points(k) for k in self.hierarchy.level_ks()]

    def to_json(self):
        return {"rule": self.rule,
                "chosen": [c.tolist() for c in self.chosen],
                "levels": [lv.tolist() for lv in self.new_levels()]}


def aux_sep_const(tri_const: float) -> float:
    return 1.0 / (4.0 * tri_const ** 2)


def aux_cover_const(tri_const: float) -> float:
    return 2.0 * tri_const


def build_labels(hierarchy: NetHierarchy) -> LabeledHierarchy:
    """Reference parent order, conflict/neighbour relations, and labels.

    Strict mode insists on 96 * tri_const**8 * ratio <= 1, the headroom the
    selection guarantees below are proved under.

    The parent order is the reference one (unit constants): a center that is
    not someone's child sits at least ratio**k / (2 * tri_const) away from
    that parent, and every child sits within ratio**k of its parent. Both
    facts carry the separation and covering bounds of the selected points,
    so the order must not be rebuilt with the selected-point constants.
    """
    space = hierarchy.space
    tri = space.profile.tri_const
    delta = hierarchy.delta
    if hierarchy.mode == "strict":
        product = LABEL_PRODUCT_LIMIT * tri ** 8 * delta
        if product > 1.0 + _TOL:
            raise ModeViolation(product, 1.0, "labeling scale headroom")
    sep = aux_sep_const(tri)
    order = build_partial_order(space, hierarchy.levels, delta=delta,
                                sep_const=1.0, cover_const=1.0,
                                tri_const=tri, k_top=hierarchy.k_min,
                                mode=hierarchy.mode)
    out = LabeledHierarchy(hierarchy=hierarchy, order=order)

    conflicts = []
    for k in hierarchy.level_ks():
        pts = hierarchy.level(k)
        thr = sep * delta ** (k - 1)
        pairs = []
        for i in range(len(pts)):
            row = space.dist_row(int(pts[i]))[pts[i + 1:]]
            for off in np.where(row < thr)[0]:
                pairs.append((i, i + 1 + int(off)))
        conflicts.append(pairs)
    out.conflicts = conflicts

    max_label = 0
    max_children = 1 if hierarchy.n_levels == 1 else 0
    for k in range(hierarchy.k_min, hierarchy.k_max):
        j = k - hierarchy.k_min
        pmap = order.maps[j]
        # neighbours: parent pairs with children in conflict one level down
        neigh = sorted({tuple(sorted((int(pmap[a]), int(pmap[b]))))
                        for a, b in conflicts[j + 1]
                        if pmap[a] != pmap[b]})
        out.neighbours.append(neigh)
        n_here = len(hierarchy.level(k))
        out.primary.append(_greedy_labels(n_here, neigh))
        max_label = max(max_label, int(out.primary[-1].max(initial=0)))

        # duplex labels and near-child designation
        n_child = len(hierarchy.level(k + 1))
        duplex = np.zeros((n_child, 2), dtype=int)
        near = np.full(n_here, -1, dtype=int)
        parent_pts = hierarchy.level(k)
        child_pts = hierarchy.level(k + 1)
        near_thr = delta ** (k + 1)
        for alpha in range(n_here):
            kids = np.where(pmap == alpha)[0]
            duplex[kids, 0] = out.primary[j][alpha]
            duplex[kids, 1] = np.arange(1, len(kids) + 1)
            max_children = max(max_children, len(kids))
            if len(kids):
                row = space.dist_row(int(parent_pts[alpha]))[child_pts[kids]]
                best = int(np.argmin(row))  # argmin ties to smallest index
                if row[best] < near_thr:
                    near[alpha] = kids[best]
        out.duplex.append(duplex)
        out.near.append(near)
    out.max_label = max_label
    out.max_children = max_children
    return out


def _greedy_labels(n: int, neighbour_pairs) -> np.ndarray:
    adj = [[] for _ in range(n)]
    for a, b in neighbour_pairs:
        adj[a].append(b)
        adj[b].append(a)
    labels = np.full(n, -1, dtype=int)
    for v in range(n):
        used = {int(labels[u]) for u in adj[v] if labels[u] >= 0}
        c = 0
        while c in used:
            c += 1
        labels[v] = c
    return labels


def select_points(labeled: LabeledHierarchy, rule: dict,
                  chooser: Optional[Callable[[int, int], int]] = None
                  ) -> SelectionOutcome:
    """Pick one child per center according to `rule`.

    rule kinds:
      {"kind": "general", "master": {k: label}} with an optional chooser
        callback (k, alpha) -> child index used when the center's primary
        label matches the master label; the designated near child otherwise
        (and as the default chooser).
      {"kind": "specific", "label": [l, m]}: the child with pair label (l, m)
        when it exists, else the designated near child.
      {"kind": "specific_distinguished", "label": [l, m], "distinguished": x0}:
        as specific, but the center sitting at the distinguished point keeps
        it forever (index 0 of every level by construction).
    """
    kind = rule.get("kind")
    if kind not in ("general", "specific", "specific_distinguished"):
        raise ConfigError(f"unknown selection rule kind: {kind!r}")
    h = labeled.hierarchy
    if kind == "specific_distinguished":
        x0 = rule.get("distinguished")
        if h.distinguished is None or x0 != h.distinguished:
            raise ConfigError(
                f"rule pins {x0!r} but the hierarchy distinguishes "
                f"{h.distinguished!r}")
    if kind == "general":
        master = {int(k): int(v) for k, v in rule.get("master", {}).items()}
        missing = [k for k in labeled.parent_ks() if k not in master]
        if missing:
            raise ConfigError(f"master labels missing for levels {missing}")

    chosen = []
    for k in labeled.parent_ks():
        j = k - labeled.k_min
        n_here = len(h.level(k))
        pick = np.empty(n_here, dtype=int)
        for alpha in range(n_here):
            kids = labeled.children_of(k, alpha)
            if kind == "general":
                if labeled.label1(k, alpha) == master[k]:
                    if chooser is None:
                        pick[alpha] = _near_or_raise(labeled, k, alpha)
                    else:
                        beta = int(chooser(k, alpha))
                        if beta not in kids:
                            raise NotAChild(k, alpha, beta)
                        pick[alpha] = beta
                else:
                    pick[alpha] = _near_or_raise(labeled, k, alpha)
            else:
                if kind == "specific_distinguished" and alpha == 0 \
                        and int(h.level(k)[0]) == h.distinguished:
                    # the distinguished point heads every level, and it is
                    # its own child there by the same construction
                    pick[alpha] = 0
                    continue
                l, m = rule["label"]
                if labeled.label1(k, alpha) == l and m <= len(kids):
                    pick[alpha] = kids[m - 1]
                else:
                    pick[alpha] = _near_or_raise(labeled, k, alpha)
        chosen.append(pick)
    json_rule = dict(rule)
    if kind == "general":
        json_rule["master"] = {str(k): v for k, v in sorted(master.items())}
    return SelectionOutcome(labeled=labeled, rule=json_rule, chosen=chosen)


def _near_or_raise(labeled, k, alpha):
    beta = labeled.designated_near(k, alpha)
    if beta < 0:
        parent_pt = int(labeled.hierarchy.level(k)[alpha])
        raise NoNearChild(k, alpha, parent_pt,
                          labeled.hierarchy.delta ** (k + 1))
    return beta


def verify_new_point_axioms(outcome: SelectionOutcome) -> VerificationReport:
    """Exhaustive separation/covering sweep over the selected centers."""
    labeled = outcome.labeled
    space = labeled.space
    tri = space.profile.tri_const
    delta = labeled.hierarchy.delta
    sep = aux_sep_const(tri)
    cover = aux_cover_const(tri)
    rep = VerificationReport("selected point axioms")
    sep_bad, sep_n, cov_bad, cov_n = [], 0, [], 0
    for k in labeled.hierarchy.level_ks():
        pts = outcome.new_points(k)
        sep_thr = sep * delta ** k
        cov_thr = cover * delta ** k
        m = len(pts)
        for i in range(m):
            row = space.dist_row(int(pts[i]))
            sep_n += m - 1 - i
            close = np.where(row[pts[i + 1:]] < sep_thr)[0]
            if close.size:
                jj = i + 1 + int(close[0])
                sep_bad.append((k, i, jj, float(row[pts[jj]])))
        best = np.full(space.n, np.inf)
        for p in pts:
            best = np.minimum(best, space.dist_row(int(p)))
        cov_n += space.n
        if (best >= cov_thr).any():
            x = int(np.argmax(best >= cov_thr))
            cov_bad.append((k, x, float(best[x])))
    rep.add("new_point_separation", not sep_bad, sep_n, sep_bad,
            note="witness: (level, i, j, dist)")
    rep.add("new_point_covering", not cov_bad, cov_n, cov_bad,
            note="witness: (level, point, nearest center dist)")
    return rep
