import math

import pytest
from sp4monodromy.catalog import bundled_catalog, find_record, hypergeometric_records
from sp4monodromy.errors import UsageError
from sp4monodromy.modgroup import (
    ModIndexCell,
    auto_lower_bound,
    crt_lower_bound,
    load_reference_table,
    mod_index,
    mod_index_cell,
    mod_table,
    prime_power_moduli,
    reference_index,
    reference_misprints,
    table_rows,
)


def _record(d, k):
    return find_record(bundled_catalog(), dk=(d, k))


def test_reference_table_shape():
    """Test the shipped mod-N table."""
    table = load_reference_table()
    assert sorted(table) == list(range(2, 28))
    assert len(table[2]) == 14
    assert table[5]["5-5"] == 14976
    assert table[27]["9-6"] == 113374080


def test_reference_index_lookup():
    """Test lookups for hypergeometric and conifold records."""
    assert reference_index(_record(3, 4), 3) == 720
    assert reference_index(find_record(bundled_catalog(), aesz=289), 3) is None


def test_reference_misprints():
    """Test the three cells that break coprime multiplicativity."""
    problems = reference_misprints()
    assert problems == [
        {"N": 15, "column": "9-6", "printed": 1, "implied": 640},
        {"N": 15, "column": "12-7", "printed": 640, "implied": 720},
        {"N": 15, "column": "16-8", "printed": 720, "implied": 1},
    ]


def test_misprints_of_a_consistent_table():
    """Test that a multiplicative table has no misprints."""
    table = {2: {"x": 6}, 3: {"x": 5}, 6: {"x": 30}}
    assert reference_misprints(table) == []


@pytest.mark.parametrize(
    "d, k, n, expected",
    [(1, 3, 2, 6), (1, 2, 2, 10), (3, 4, 3, 720), (5, 5, 5, 14976), (2, 4, 2, 90), (9, 6, 3, 640)],
)
def test_mod_index_cells(d, k, n, expected):
    """Test single cells against the reference table."""
    assert mod_index(_record(d, k), n) == expected


def test_mod_index_cell_provenance():
    """Test the fields of a computed cell."""
    cell = mod_index_cell(_record(1, 3), 2)
    assert isinstance(cell, ModIndexCell)
    assert cell.case == "(1,3)"
    assert cell.modulus == 2
    assert cell.index * cell.order == 720
    assert cell.to_dict()["index"] == 6


def _misprinted_cells():
    return {(p["N"], p["column"]) for p in reference_misprints()}


def test_reference_coprime_products():
    """Test index mod ab = index mod a * index mod b over every printed coprime pair."""
    table = load_reference_table()
    skip = _misprinted_cells()
    checked = 0
    for a in table:
        for b in table:
            if a < b and math.gcd(a, b) == 1 and a * b in table:
                for column, value in table[a * b].items():
                    if (a * b, column) not in skip:
                        assert value == table[a][column] * table[b][column], (a, b, column)
                        checked += 1
    assert checked > 0


def test_reference_divisibility():
    """Test that the index mod m divides the index mod N whenever m divides N."""
    table = load_reference_table()
    skip = _misprinted_cells()
    for n, row in table.items():
        for m in table:
            if m < n and n % m == 0:
                for column, value in row.items():
                    if (n, column) not in skip:
                        assert value % table[m][column] == 0, (m, n, column)


def test_computed_divisibility_mod_four():
    """Test that the index mod 2 divides the index mod 4 for every catalog record."""
    for record in bundled_catalog():
        assert mod_index(record, 4) % mod_index(record, 2) == 0, record.case_name


@pytest.mark.slow
def test_computed_multiplicativity_and_prime_powers():
    """Test 6 = 2 * 3, 4 | 8 and 3 | 9 on every catalog record."""
    for record in bundled_catalog():
        index = {n: mod_index(record, n) for n in (2, 3, 4, 6, 8, 9)}
        assert index[6] == index[2] * index[3], record.case_name
        assert index[8] % index[4] == 0, record.case_name
        assert index[9] % index[3] == 0, record.case_name



def test_extra_generators_shrink_the_index():
    """Test a conifold record with and without its extra matrix."""
    record = find_record(bundled_catalog(), aesz=292)
    with_extra = mod_index(record, 3)
    without = mod_index(record, 3, include_extra=False)
    assert without % with_extra == 0


def test_crt_lower_bound():
    """Test products over coprime moduli."""
    record = _record(9, 6)
    assert crt_lower_bound(record, {}) == 1
    assert crt_lower_bound(record, {2: 10, 27: 113374080}) == 1133740800
    assert crt_lower_bound(_record(6, 5), {8: 960, 9: 19440, 5: 1, 7: 1}) == 18662400
    with pytest.raises(UsageError):
        crt_lower_bound(record, {2: 10, 4: 10})


def test_prime_power_moduli():
    """Test the default prime powers."""
    assert prime_power_moduli(9) == [8, 9, 5, 7]
    assert prime_power_moduli(3) == [2, 3]


def test_auto_lower_bound_keeps_largest_power():
    """Test that only the largest power of each prime is used."""
    bound, indices = auto_lower_bound(_record(1, 3), moduli=[2, 3, 4])
    assert indices == {3: 1, 4: 6}
    assert bound == 6
    with pytest.raises(UsageError):
        auto_lower_bound(_record(1, 3), moduli=[6])


def test_mod_table_and_pivot():
    """Test cell order, parallel agreement and the pivoted layout."""
    records = [_record(1, 3), _record(3, 4)]
    cells = mod_table(records, [2, 3])
    assert [(c.modulus, c.case) for c in cells] == [(2, "(1,3)"), (2, "(3,4)"), (3, "(1,3)"), (3, "(3,4)")]
    parallel = mod_table(records, [2, 3], workers=2)
    assert [c.index for c in parallel] == [c.index for c in cells]
    assert table_rows(cells) == [
        {"N": 2, "(1,3)": 6, "(3,4)": 10},
        {"N": 3, "(1,3)": 1, "(3,4)": 720},
    ]


def _column(record):
    return f"{record.d}-{record.k}"


@pytest.mark.parametrize("n", [2, 3, 4])
def test_reference_rows_small(n):
    """Test every hypergeometric column for small N."""
    reference = load_reference_table()[n]
    for record in hypergeometric_records(bundled_catalog()):
        assert mod_index(record, n) == reference[_column(record)]


@pytest.mark.slow
@pytest.mark.parametrize("n", [5, 6, 7, 8, 9])
def test_reference_rows_up_to_nine(n):
    """Test every hypergeometric column for N from 5 to 9."""
    reference = load_reference_table()[n]
    for record in hypergeometric_records(bundled_catalog()):
        assert mod_index(record, n) == reference[_column(record)]


@pytest.mark.long
@pytest.mark.parametrize("d, k, n, expected", [(5, 5, 25, 46800000), (9, 6, 27, 113374080), (16, 8, 16, 23592960)])
def test_large_modulus_cells(d, k, n, expected):
    """Test the spot cells that need prime powers above nine."""
    assert mod_index(_record(d, k), n) == expected
