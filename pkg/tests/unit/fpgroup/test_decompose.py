import random

import pytest
from sp4monodromy.catalog import bundled_catalog, integral_generators
from sp4monodromy.errors import NotSymplecticError
from sp4monodromy.fpgroup import IDENTITY_WORD, behr_matrices, decompose, evaluate, random_word
from sp4monodromy.linalg import ExactMatrix4, frobenius_monodromy, standard_form


def test_identity_decomposes_to_empty_word():
    """Test the identity matrix."""
    assert decompose(ExactMatrix4.identity()) == IDENTITY_WORD


def test_generators_and_their_inverses():
    """Test each generator image and its inverse."""
    for m in behr_matrices().values():
        assert evaluate(decompose(m)) == m
        assert evaluate(decompose(m.inverse())) == m.inverse()


def test_minus_identity_and_standard_form():
    """Test central and Weyl-type elements."""
    for m in (-ExactMatrix4.identity(), standard_form()):
        assert evaluate(decompose(m)) == m


def test_catalog_matrices():
    """Test monodromy and extra generators of every record."""
    for record in bundled_catalog():
        for m in record.generators():
            assert evaluate(decompose(m)) == m
    m, _ = integral_generators(16, 8)
    assert evaluate(decompose(m**5)) == m**5


def test_random_words_round_trip():
    """Test decomposition of random products."""
    rng = random.Random(20240601)
    for _ in range(50):
        m = evaluate(random_word(rng, 12))
        assert evaluate(decompose(m)) == m


@pytest.mark.slow
def test_random_words_round_trip_many():
    """Test a thousand random products of up to 30 letters."""
    rng = random.Random(7)
    for _ in range(1000):
        m = evaluate(random_word(rng, rng.randint(1, 30)))
        assert evaluate(decompose(m)) == m


def test_rejects_non_symplectic_input():
    """Test rational and non-symplectic matrices."""
    with pytest.raises(NotSymplecticError):
        decompose(frobenius_monodromy())
    with pytest.raises(NotSymplecticError):
        decompose(ExactMatrix4([[2, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]))


def test_random_word_shape():
    """Test that random words respect the exponent bound."""
    w = random_word(random.Random(1), 40, max_exponent=2)
    assert w.length <= 80
    assert all(1 <= abs(exponent) <= 2 for _, exponent in w.letters)
