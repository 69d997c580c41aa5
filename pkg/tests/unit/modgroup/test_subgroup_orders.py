import numpy as np
import pytest
from sp4monodromy.catalog import bundled_catalog, find_record, integral_generators
from sp4monodromy.errors import InvariantViolation, OrderCapExceeded, UsageError
from sp4monodromy.fpgroup import behr_matrices
from sp4monodromy.linalg import ModMatrix4, mod_reduce
from sp4monodromy.modgroup import (
    BFS,
    SCHREIER_SIMS,
    ModGroupContext,
    SubgroupHandle,
    _hashed_closure,
    _packed_closure,
    group_elements,
    pack_keys,
    sp4_order,
    subgroup,
    subgroup_order_bfs,
    subgroup_order_sims,
    unpack_keys,
    vector_permutation,
)


def _behr_mod(n):
    return [mod_reduce(m, n) for m in behr_matrices().values()]


@pytest.mark.parametrize("n, expected", [(2, 720), (3, 51840), (4, 737280), (5, 9360000), (6, 720 * 51840)])
def test_sp4_order(n, expected):
    """Test the order formula of Sp4(Z/n)."""
    assert sp4_order(n) == expected


def test_sp4_order_rejects_small_moduli():
    """Test n < 2."""
    with pytest.raises(UsageError):
        sp4_order(1)


def test_context():
    """Test the ambient group record."""
    context = ModGroupContext.for_modulus(3)
    assert context.modulus == 3
    assert context.order == 51840


def test_bfs_orders():
    """Test BFS closure on small groups."""
    assert subgroup_order_bfs([ModMatrix4.identity(5)]) == 1
    assert subgroup_order_bfs(_behr_mod(2)) == 720
    assert subgroup_order_bfs(_behr_mod(3)) == 51840
    m, n = integral_generators(1, 3)
    assert subgroup_order_bfs([mod_reduce(m, 2), mod_reduce(n, 2)]) == 120


def test_bfs_cap():
    """Test that the cap stops the closure."""
    with pytest.raises(OrderCapExceeded):
        subgroup_order_bfs(_behr_mod(3), cap=100)


def test_generators_must_share_a_modulus():
    """Test empty and mixed generator lists."""
    with pytest.raises(UsageError):
        subgroup_order_bfs([])
    with pytest.raises(UsageError):
        subgroup_order_bfs([ModMatrix4.identity(2), ModMatrix4.identity(3)])


def test_group_elements_start_with_identity():
    """Test the element listing."""
    elements = group_elements(_behr_mod(2))
    assert len(elements) == 720
    assert elements[0] == ModMatrix4.identity(2)
    assert len(set(elements)) == 720


def test_vector_permutation_is_faithful():
    """Test the action on (Z/N)^4 as a permutation."""
    _, n = integral_generators(1, 1)
    perm = vector_permutation(mod_reduce(n, 3))
    assert perm.size == 81
    assert perm.order() == 3
    assert vector_permutation(ModMatrix4.identity(3)).is_Identity


@pytest.mark.parametrize(
    "n",
    [2, 3] + [pytest.param(n, marks=pytest.mark.slow) for n in range(4, 9)],
)
def test_sims_matches_bfs(n):
    """Test that both methods agree on every catalog image small enough to list."""
    records = bundled_catalog()
    compared = 0
    for record in records:
        gens = [mod_reduce(g, n) for g in record.generators()]
        try:
            order = subgroup_order_bfs(gens, cap=1 << 21)
        except OrderCapExceeded:
            continue
        assert subgroup_order_sims(gens) == order, record.case_name
        compared += 1
    if sp4_order(n) <= 1 << 21:
        assert compared == len(records)


def test_subgroup_method_selection():
    """Test auto, forced and fallback method choices."""
    gens = _behr_mod(3)
    assert subgroup(gens).method == BFS
    assert subgroup(gens, method=SCHREIER_SIMS).order == 51840
    fallback = subgroup(gens, method=BFS, cap=100)
    assert fallback.method == SCHREIER_SIMS
    assert fallback.index == 1
    with pytest.raises(UsageError):
        subgroup(gens, method="guess")


def test_subgroup_handle_checks_lagrange():
    """Test that an order not dividing |Sp4(Z/N)| is rejected."""
    with pytest.raises(InvariantViolation):
        SubgroupHandle(generators=(ModMatrix4.identity(2),), order=7, method=BFS)


def test_auto_uses_the_expected_index():
    """Test that a large expected index keeps BFS for a big modulus."""
    record = find_record(bundled_catalog(), dk=(5, 5))
    gens = [mod_reduce(g, 5) for g in record.generators()]
    handle = subgroup(gens, expected_index=14976)
    assert handle.method == BFS
    assert handle.index == 14976


def test_packed_keys_recover_matrices():
    """Test that packing is lossless for every entry up to 15."""
    mats = np.arange(2 * 16, dtype=np.int64).reshape(2, 4, 4) % 16
    assert np.array_equal(unpack_keys(pack_keys(mats, 16), 16), mats)
    binary = np.eye(4, dtype=np.int64)[None]
    assert pack_keys(binary, 2)[0] == (1 << 0) | (1 << 5) | (1 << 10) | (1 << 15)


def _element_set(blocks):
    return {x.tobytes() for block in blocks for x in block.astype(np.int64)}


@pytest.mark.parametrize("n", [2, 3, 4])
def test_packed_and_hashed_closures_agree(n):
    """Test both visited-set representations on the same generators."""
    m, g = integral_generators(1, 3)
    for gens in ([mod_reduce(m, n), mod_reduce(g, n)], _behr_mod(n)[:2]):
        packed_order, packed = _packed_closure(gens, n, 1 << 21, keep=True)
        hashed_order, hashed = _hashed_closure(gens, n, 1 << 21, keep=True)
        assert packed_order == hashed_order
        assert _element_set(packed) == _element_set(hashed)
        assert len(_element_set(packed)) == packed_order


def test_large_modulus_uses_hashed_keys():
    """Test a modulus above the packing limit."""
    _, g = integral_generators(1, 1)
    assert subgroup_order_bfs([mod_reduce(g, 17)]) == 17
