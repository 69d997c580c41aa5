import json
import tempfile
from pathlib import Path

import pytest
from sp4monodromy.catalog import bundled_catalog, integral_generators
from sp4monodromy.errors import PresentationError
from sp4monodromy.fpgroup import (
    PRESENTATION_PATH,
    GeneratorSymbol,
    behr_matrices,
    bundled_presentation,
    evaluate,
    load_presentation,
    monodromy_words,
)
from sp4monodromy.linalg import ExactMatrix4, is_symplectic, standard_form


def _write(data):
    handle = tempfile.NamedTemporaryFile("w", suffix=".json", delete=False, encoding="utf-8")
    with handle:
        json.dump(data, handle)
    return Path(handle.name)


def test_generators_are_symplectic():
    """Test that all six generator images lie in Sp4(Z)."""
    s = standard_form()
    for m in behr_matrices().values():
        assert m.is_integral()
        assert is_symplectic(m, s)


def test_weyl_elements_have_order_four():
    """Test that both Weyl elements have order four."""
    images = behr_matrices()
    for symbol in (GeneratorSymbol.WA, GeneratorSymbol.WB):
        assert (images[symbol] ** 4).is_identity()
        assert not (images[symbol] ** 2).is_identity()


def test_bundled_relators_evaluate_to_identity():
    """Test every shipped relator."""
    presentation = bundled_presentation()
    assert len(presentation.relators) == 18
    assert sorted(presentation.generators) == sorted(GeneratorSymbol)
    for relator in presentation.relators:
        assert evaluate(relator).is_identity()


def test_broken_relator_is_reported_by_number():
    """Test that a relator that is not the identity fails the load."""
    with open(PRESENTATION_PATH, encoding="utf-8") as f:
        data = json.load(f)
    data["relators"].append([["xa", 1]])
    path = _write(data)
    try:
        with pytest.raises(PresentationError, match="relator 19"):
            load_presentation(path)
    finally:
        path.unlink()


def test_presentation_file_errors():
    """Test missing files and wrong generator sets."""
    with pytest.raises(PresentationError):
        load_presentation(Path("/nonexistent/presentation.json"))
    path = _write({"generators": ["xa", "xb"], "relators": []})
    try:
        with pytest.raises(PresentationError, match="six generators"):
            load_presentation(path)
    finally:
        path.unlink()


def test_monodromy_words_evaluate_to_generators():
    """Test g1 -> N and g2 -> M(d,k) for every catalog record."""
    for record in bundled_catalog():
        m, n = integral_generators(record.d, record.k)
        g1, g2 = monodromy_words(record.d, record.k)
        assert evaluate(g1) == n
        assert evaluate(g2) == m


def test_evaluate_with_custom_images():
    """Test evaluation against other generator images."""
    identity = ExactMatrix4.identity()
    images = {symbol: identity for symbol in GeneratorSymbol}
    g1, g2 = monodromy_words(5, 5)
    assert evaluate(g2, images).is_identity()
