import json

import pytest

from tiebreak import settings
from tiebreak.config import make_config
from tiebreak.config import setting_name
from tiebreak.exceptions import ConfigError


def test_defaults(config):
    for name in dir(settings):
        if name.isupper():
            assert config[name] == getattr(settings, name)
    assert config['DEPTH'] == 18
    assert config['RULE'] == 'def4'
    assert config['THRESHOLD_MODE'] == 'exact'
    assert config['TOURNAMENT_POINTS'] == 'classical'


@pytest.mark.parametrize(
    'key, expected',
    [
        ('depth', 'DEPTH'),
        ('--mate-cap', 'MATE_CAP'),
        ('engine', 'ENGINE_PATH'),
        ('mock', 'MOCK_TABLE'),
        ('option', 'ENGINE_OPTIONS'),
        ('format', 'REPORT_FORMAT'),
        ('points', 'TOURNAMENT_POINTS'),
        ('noise', 'DEMO_NOISE'),
        ('max-plays', 'MAX_PLAY_COUNT'),
        ('tplv-basis', 'TPLV_BASIS'),
    ],
)
def test_setting_name(key, expected):
    assert setting_name(key) == expected


def test_overrides():
    config = make_config(depth=12, rule='norway', engine='stockfish', movetime=None)
    assert config['DEPTH'] == 12
    assert config['RULE'] == 'norway'
    assert config['ENGINE_PATH'] == 'stockfish'
    # unset flags keep the default
    assert config['MOVETIME'] is None


def test_environment(monkeypatch):
    monkeypatch.setenv('TIEBREAK_DEPTH', '12')
    monkeypatch.setenv('TIEBREAK_RULE', 'norway')
    config = make_config()
    assert config['DEPTH'] == 12
    assert config['RULE'] == 'norway'
    assert make_config(depth=20)['DEPTH'] == 20


def test_json_file(tmp_path, monkeypatch):
    monkeypatch.setenv('TIEBREAK_DEPTH', '12')
    path = tmp_path / 'tiebreak.json'
    path.write_text(json.dumps({'depth': 14, 'mate-cap': 8, 'option': {'Hash': '64'}}))
    config = make_config(path)
    assert config['DEPTH'] == 14
    assert config['MATE_CAP'] == 8.0
    assert config['ENGINE_OPTIONS'] == {'Hash': '64'}
    assert make_config(path, depth=16)['DEPTH'] == 16


def test_yaml_file(tmp_path):
    pytest.importorskip('yaml')
    path = tmp_path / 'tiebreak.yaml'
    path.write_text('rule: norway\nthreshold: 0.05\nthreshold-mode: relative\n')
    config = make_config(path)
    assert (config['RULE'], config['THRESHOLD'], config['THRESHOLD_MODE']) == (
        'norway',
        0.05,
        'relative',
    )


def test_empty_yaml_file(tmp_path):
    pytest.importorskip('yaml')
    path = tmp_path / 'empty.yml'
    path.write_text('')
    assert make_config(path)['DEPTH'] == 18


@pytest.mark.parametrize(
    'overrides, match',
    [
        ({'depth': 0}, 'DEPTH'),
        ({'rule': 'fide'}, 'RULE'),
        ({'threshold': 1.0}, 'THRESHOLD'),
        ({'jobs': 0}, 'JOBS'),
        ({'colour': 'white'}, 'COLOUR'),
        ({'engine': 'stockfish', 'mock': 'game.table'}, 'not both'),
    ],
)
def test_invalid_config(overrides, match):
    with pytest.raises(ConfigError, match=match) as exc_info:
        make_config(**overrides)
    assert exc_info.value.exit_code == 2


@pytest.mark.parametrize(
    'text, match',
    [('{"depth": ', 'malformed'), ('[1, 2]', 'mapping')],
)
def test_malformed_file(tmp_path, text, match):
    path = tmp_path / 'broken.json'
    path.write_text(text)
    with pytest.raises(ConfigError, match=match):
        make_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match='Cannot read'):
        make_config(tmp_path / 'missing.json')
