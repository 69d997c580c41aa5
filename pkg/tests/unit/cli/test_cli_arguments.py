import pytest
from unittest.mock import patch

from sp4monodromy.cli import _worst, parse_arguments, select_record
from sp4monodromy.catalog import bundled_catalog
from sp4monodromy.errors import UnknownCaseError, UsageError


def test_subcommand_is_required():
    """Test that running without a subcommand is a usage error."""
    with patch("sys.argv", ["sp4monodromy"]):
        with pytest.raises(SystemExit) as excinfo:
            parse_arguments()
    assert excinfo.value.code == 2


def test_global_options():
    """Test options shared by every subcommand."""
    args = parse_arguments(["-vv", "--format", "json", "--workers", "3", "--long", "classify"])
    assert args.verbose == 2
    assert args.output_format == "json"
    assert args.workers == 3
    assert args.long is True
    assert args.command == "classify"


def test_index_options():
    """Test index selectors and limits."""
    args = parse_arguments(["index", "--dk", "1,3", "--strategy", "felsch", "--budget", "500"])
    assert args.dk == "1,3"
    assert args.strategy == "felsch"
    assert args.budget == 500
    assert args.no_extra is False


def test_case_selectors_are_exclusive():
    """Test that --aesz and --dk cannot be combined."""
    with pytest.raises(SystemExit):
        parse_arguments(["index", "--aesz", "2", "--dk", "1,3"])


def test_modn_options():
    """Test modulus options."""
    args = parse_arguments(["modn", "--range", "2-5", "--check", "--method", "bfs"])
    assert args.moduli == "2-5"
    assert args.check is True
    assert args.method == "bfs"
    assert parse_arguments(["modn", "--aesz", "1", "--n", "5"]).n == 5


def test_invalid_choices():
    """Test bad formats and methods."""
    with pytest.raises(SystemExit):
        parse_arguments(["--format", "xml", "classify"])
    with pytest.raises(SystemExit):
        parse_arguments(["modn", "--method", "guess"])
    with pytest.raises(SystemExit):
        parse_arguments(["gamma", "--d1", "4"])


def test_select_record():
    """Test selection by id, by pair and the missing case."""
    records = bundled_catalog()
    assert select_record(records, parse_arguments(["index", "--aesz", "1"])).dk == (5, 5)
    assert select_record(records, parse_arguments(["index", "--dk", "1,2"])).aesz == 13
    assert select_record(records, parse_arguments(["index"]), required=False) is None
    with pytest.raises(UsageError):
        select_record(records, parse_arguments(["index"]))
    with pytest.raises(UnknownCaseError):
        select_record(records, parse_arguments(["index", "--dk", "7,7"]))


def test_worst_exit_code():
    """Test that invariant violations outrank budget signals."""
    assert _worst([]) == 0
    assert _worst([0, 3, 0]) == 3
    assert _worst([3, 1, 0]) == 1
