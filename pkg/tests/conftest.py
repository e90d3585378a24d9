import sys
from pathlib import Path

import pytest
from click.testing import CliRunner

from tiebreak.config import make_config
from tiebreak.engine import dump_mock_table
from tiebreak.engine import EngineConfig

from .mocks import game12_mock_table


FIXTURES = Path(__file__).parent / 'fixtures'
FAKE_ENGINE = Path(__file__).parent / 'test_apps' / 'fake_uci_engine.py'


@pytest.fixture
def config():
    return make_config()


@pytest.fixture
def cli_runner():
    return CliRunner()


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def game12_pgn():
    return (FIXTURES / 'game12_situation.pgn').read_text(encoding='utf-8')


@pytest.fixture
def game12_table(game12_pgn):
    return game12_mock_table(game12_pgn)


@pytest.fixture
def game12_table_path(tmp_path, game12_table):
    path = tmp_path / 'game12.table'
    path.write_text(dump_mock_table(game12_table), encoding='utf-8')
    return path


@pytest.fixture
def fake_engine():
    """Engine settings that run the fake UCI engine with the given flags."""

    def make(*flags, **kwargs):
        kwargs.setdefault('depth', 2)
        kwargs.setdefault('handshake_timeout', 10.0)
        kwargs.setdefault('search_timeout', 10.0)
        return EngineConfig(executable=sys.executable, args=(str(FAKE_ENGINE), *flags), **kwargs)

    return make
