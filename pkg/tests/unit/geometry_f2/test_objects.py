import pytest
from sp4monodromy.errors import UsageError
from sp4monodromy.geometry_f2 import (
    LINE_PENTAD,
    PENTAD,
    SYNTHEME,
    F2Point,
    LinePentad,
    Pentad,
    Syntheme,
    all_points,
    enumerate_line_pentads,
    enumerate_objects,
    enumerate_pentads,
    enumerate_synthemes,
    is_lagrangian_line,
    lagrangian_lines,
    pairing,
)


def test_point_labels_follow_binary_order():
    """Test letters a..o as the binary numbers 1..15."""
    assert F2Point.from_label("a").vector == (0, 0, 0, 1)
    assert F2Point.from_label("o").vector == (1, 1, 1, 1)
    assert F2Point.from_vector((0, 1, 0, 0)).label == "d"
    assert str(F2Point(12)) == "l"
    assert F2Point.from_label("a") + F2Point.from_label("b") == F2Point.from_label("c")
    assert len(all_points()) == 15


def test_points_are_validated():
    """Test the zero vector and unknown letters."""
    with pytest.raises(UsageError):
        F2Point(0)
    with pytest.raises(UsageError):
        F2Point.from_label("z")


def test_pairing():
    """Test the symplectic pairing on points."""
    a, c, d = (F2Point.from_label(x) for x in "acd")
    b = F2Point.from_label("b")
    assert pairing(a, a) == 0
    assert pairing(a, c) == 0
    assert pairing(a, d) == 1
    assert pairing(b, c) == 0
    assert pairing(b, F2Point.from_label("h")) == 1


def test_object_counts():
    """Test 6 pentads, 10 synthemes, 15 lines and 6 line pentads."""
    assert len(enumerate_pentads()) == 6
    assert len(enumerate_synthemes()) == 10
    assert len(lagrangian_lines()) == 15
    assert len(enumerate_line_pentads()) == 6
    assert [len(enumerate_objects(kind)) for kind in (PENTAD, SYNTHEME, LINE_PENTAD)] == [6, 10, 6]


def test_enumeration_follows_labels():
    """Test that enumerations come back in label order."""
    assert [p.label for p in enumerate_pentads()] == ["1", "2", "3", "4", "5", "6"]
    assert [s.label for s in enumerate_synthemes()][:3] == ["I", "II", "III"]
    assert enumerate_line_pentads()[0].label == "1'"


def test_pentad_points_pair_nontrivially():
    """Test that the points of each pentad pairwise pair to 1."""
    for pentad in enumerate_pentads():
        points = sorted(pentad.points)
        assert len(points) == 5
        assert all(pairing(u, v) == 1 for u in points for v in points if u != v)


def test_object_text():
    """Test the printed forms of objects."""
    assert str(enumerate_pentads()[1]) == "{a,e,f,l,n}"
    assert str(Pentad.from_labels("aefln")) == "{a,e,f,l,n}"
    assert str(enumerate_synthemes()[0]) == "{{a,d,e},{b,h,j}}"
    assert Syntheme.from_labels("bln", "cdg").label == "V"


def test_lagrangian_lines():
    """Test isotropic lines."""
    line = frozenset(F2Point.from_label(x) for x in "abc")
    assert is_lagrangian_line(line)
    assert not is_lagrangian_line(frozenset(F2Point.from_label(x) for x in "ade"))
    assert line in lagrangian_lines()
    assert LinePentad.from_labels(["abc", "dhl", "ejo", "fkm", "gin"]).label == "1'"


def test_objects_are_validated():
    """Test malformed pentads and synthemes."""
    with pytest.raises(UsageError):
        Pentad.from_labels("abcd")
    with pytest.raises(UsageError):
        Syntheme.from_labels("abc", "abc")
