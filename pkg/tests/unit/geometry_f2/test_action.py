import random

import pytest
from sp4monodromy.catalog import integral_generators
from sp4monodromy.errors import UsageError
from sp4monodromy.geometry_f2 import (
    LINE_PENTAD,
    PENTAD,
    SYNTHEME,
    F2Point,
    act,
    all_points,
    cycle_notation,
    enumerate_pentads,
    fixed_objects,
    is_isomorphism_onto_s6,
    line_pentad_permutation,
    permutation_image,
    permutation_is_homomorphism,
    point_map,
    sp4_mod2_elements,
    syntheme_permutation,
    transvection,
)
from sp4monodromy.linalg import ModMatrix4, mod_reduce


def _mod2(d, k):
    m, n = integral_generators(d, k)
    return mod_reduce(m, 2), mod_reduce(n, 2)


def test_point_map_of_identity():
    """Test that the identity fixes every point value."""
    assert point_map(ModMatrix4.identity(2)) == tuple(range(16))


def test_point_map_requires_symplectic_mod_two():
    """Test wrong moduli and non-symplectic matrices."""
    with pytest.raises(UsageError):
        point_map(ModMatrix4.identity(3))
    with pytest.raises(UsageError):
        point_map(ModMatrix4([[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], 2))


def test_transvection_of_a_swaps_two_pentads():
    """Test T_a on the pentads."""
    t = transvection(F2Point.from_label("a"))
    assert t.is_symplectic()
    assert cycle_notation(permutation_image(t)) == "(1,2)"


def test_every_transvection_is_a_transposition():
    """Test that all 15 transvections act as transpositions of pentads."""
    images = {cycle_notation(permutation_image(transvection(p))) for p in all_points()}
    assert len(images) == 15
    assert all(text.count(",") == 1 for text in images)


def test_monodromy_of_one_three_on_pentads():
    """Test M(1,3) and N mod 2 on pentads."""
    m, n = _mod2(1, 3)
    assert cycle_notation(permutation_image(m)) == "(3,6,4,5)"
    assert cycle_notation(permutation_image(n)) == "(1,5)"
    assert act(n, enumerate_pentads()[0]) == enumerate_pentads()[4]


def test_syntheme_permutations_of_one_two():
    """Test M(1,2) and N mod 2 on synthemes."""
    m, n = _mod2(1, 2)
    assert cycle_notation(syntheme_permutation(m), SYNTHEME) == "(I,IV,II,III)(VII,X,IX,VIII)"
    assert cycle_notation(syntheme_permutation(n), SYNTHEME) == "(II,VI)(III,IX)(IV,X)"


def test_identity_notation():
    """Test the empty cycle notation."""
    assert cycle_notation(permutation_image(ModMatrix4.identity(2))) == "()"


def test_fixed_objects():
    """Test the unique fixed pentad and syntheme."""
    assert [p.label for p in fixed_objects(_mod2(1, 3), PENTAD)] == ["2"]
    assert [s.label for s in fixed_objects(_mod2(1, 2), SYNTHEME)] == ["V"]
    _, n = _mod2(1, 2)
    assert [s.label for s in fixed_objects([n], SYNTHEME)] == ["I", "V", "VII", "VIII"]
    assert len(fixed_objects([ModMatrix4.identity(2)], LINE_PENTAD)) == 6


def test_pointwise_fixing_is_stronger():
    """Test that pointwise fixed objects are fixed setwise."""
    identity = ModMatrix4.identity(2)
    assert len(fixed_objects([identity], PENTAD, pointwise=True)) == 6
    _, n = _mod2(1, 3)
    pointwise = fixed_objects([n], SYNTHEME, pointwise=True)
    setwise = fixed_objects([n], SYNTHEME)
    assert set(pointwise) <= set(setwise)


def test_sp4_mod2_has_720_elements():
    """Test the generated group."""
    elements = sp4_mod2_elements()
    assert len(elements) == 720
    assert all(g.is_symplectic() for g in elements[:50])


def test_isomorphism_onto_s6():
    """Test that the pentad action is faithful on all 720 elements."""
    assert is_isomorphism_onto_s6()


def test_pentad_action_is_a_homomorphism():
    """Test image(g h) = image(h) * image(g) on random pairs."""
    rng = random.Random(3)
    elements = sp4_mod2_elements()
    pairs = [(rng.choice(elements), rng.choice(elements)) for _ in range(100)]
    assert permutation_is_homomorphism(pairs)


def test_line_pentads_see_transvections_as_triple_transpositions():
    """Test that transvections move all six line pentads."""
    t = transvection(F2Point.from_label("a"))
    perm = line_pentad_permutation(t)
    assert perm.order() == 2
    assert len(perm.support()) == 6
