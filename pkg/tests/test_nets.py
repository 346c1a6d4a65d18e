import numpy as np
import pytest

from cubeforge.errors import ModeViolation
from cubeforge.nets import (NetHierarchy, build_reference_hierarchy, level_window,
                            verify_net_axioms)
from cubeforge.space import QuasiMetricSpace, generate_space

from bruteforce import greedy_net_scan


def line4():
    return QuasiMetricSpace.from_line([0.0, 1.0, 3.0, 7.0])


def test_window_line4():
    assert level_window(line4(), 0.25) == (-2, 1)


def test_window_geometric_line_144():
    space = generate_space({"kind": "geometric_line", "levels": 3, "delta": 1 / 144})
    assert level_window(space, 1 / 144) == (-3, 1)


def test_levels_line4_frozen():
    h = build_reference_hierarchy(line4(), 0.25, mode="exploratory")
    assert [lv.tolist() for lv in h.levels] == [
        [0],            # threshold 16 > diam
        [0, 3],         # threshold 4: positions 0 and 7
        [0, 1, 2, 3],   # threshold 1: every gap is >= 1
        [0, 1, 2, 3],
    ]


def test_levels_match_greedy_oracle():
    space = line4()
    h = build_reference_hierarchy(space, 0.25, mode="exploratory")
    d = space.table.tolist()
    for k in h.level_ks():
        expect = greedy_net_scan(d, range(4), 0.25 ** k)
        assert h.level(k).tolist() == expect


def test_strict_line_144_levels():
    space = generate_space({"kind": "geometric_line", "levels": 3, "delta": 1 / 144})
    h = build_reference_hierarchy(space, 1 / 144, mode="strict")
    assert h.level(-3).tolist() == [0]
    assert h.level(-2).tolist() == [0, 3]
    assert h.level(-1).tolist() == [0, 2, 3]
    assert h.level(0).tolist() == [0, 1, 2, 3]
    assert h.level(1).tolist() == [0, 1, 2, 3]
    assert verify_net_axioms(h).passed


def test_strict_mode_rejects_coarse_delta():
    with pytest.raises(ModeViolation):
        build_reference_hierarchy(line4(), 0.25, mode="strict")


def test_mode_rejects_bad_ratio():
    with pytest.raises(ModeViolation):
        build_reference_hierarchy(line4(), 1.5, mode="exploratory")
    with pytest.raises(ValueError):
        build_reference_hierarchy(line4(), 0.25, mode="casual")


def test_distinguished_sits_first_everywhere():
    h = build_reference_hierarchy(line4(), 0.25, mode="exploratory", distinguished=2)
    assert all(int(lv[0]) == 2 for lv in h.levels)
    assert h.level(-1).tolist() == [2, 3]  # position 3, then 7 at distance 4
    assert verify_net_axioms(h).passed


def test_single_point_space_one_level():
    space = QuasiMetricSpace.from_table(np.zeros((1, 1)))
    h = build_reference_hierarchy(space, 0.25, mode="exploratory")
    assert (h.k_min, h.k_max) == (0, 0)
    assert h.levels[0].tolist() == [0]
    assert verify_net_axioms(h).passed


def test_axioms_on_cloud():
    space = generate_space({"kind": "euclidean_cloud", "n": 100, "dim": 2, "seed": 9})
    h = build_reference_hierarchy(space, 1 / 144, mode="strict")
    rep = verify_net_axioms(h)
    assert rep.passed, rep.summary()
    # nets shrink (weakly) toward coarse levels
    sizes = [len(lv) for lv in h.levels]
    assert sizes == sorted(sizes)
    assert sizes[0] == 1 and sizes[-1] == space.n


def test_corrupted_net_is_flagged():
    space = line4()
    h = build_reference_hierarchy(space, 0.25, mode="exploratory")
    # dropping a finest-level point breaks covering
    broken = NetHierarchy(space, h.delta, h.k_min, h.k_max, h.mode,
                          [lv.copy() for lv in h.levels])
    broken.levels[-1] = np.array([0, 1, 2])
    rep = verify_net_axioms(broken)
    assert not rep.check("covering").passed
    assert rep.check("covering").witnesses
    assert not rep.check("finest_is_everything").passed
    # doubling a point breaks separation
    crowded = NetHierarchy(space, h.delta, h.k_min, h.k_max, h.mode,
                           [lv.copy() for lv in h.levels])
    crowded.levels[1] = np.array([0, 1, 3])  # positions 0 and 1 at distance 1 < 4
    rep2 = verify_net_axioms(crowded)
    assert not rep2.check("separation").passed


def test_hierarchy_json_roundtrip():
    space = line4()
    h = build_reference_hierarchy(space, 0.25, mode="exploratory", distinguished=1)
    back = NetHierarchy.from_json(h.to_json(), space)
    assert back.k_min == h.k_min and back.k_max == h.k_max
    assert all(np.array_equal(a, b) for a, b in zip(back.levels, h.levels))
    assert back.distinguished == 1
