from __future__ import annotations

import json
import os
import typing as t

from flask import Config
from marshmallow import ValidationError

from .exceptions import ConfigError
from .schemas import SettingsSchema

try:
    import yaml
except ImportError:  # pragma: no cover
    yaml = None  # type: ignore[assignment]


#: Config file keys that do not follow the `flag-name` -> `FLAG_NAME` rule.
FLAG_ALIASES = {
    'ENGINE': 'ENGINE_PATH',
    'MOCK': 'MOCK_TABLE',
    'OPTION': 'ENGINE_OPTIONS',
    'OPTIONS': 'ENGINE_OPTIONS',
    'FORMAT': 'REPORT_FORMAT',
    'POINTS': 'TOURNAMENT_POINTS',
    'NOISE': 'DEMO_NOISE',
    'MAX_PLAYS': 'MAX_PLAY_COUNT',
}


def setting_name(key: str) -> str:
    """Map a flag-like key (`mate-cap`, `--engine`) to its setting name."""
    name = key.lstrip('-').replace('-', '_').upper()
    return FLAG_ALIASES.get(name, name)


def _read_file(filename: t.Union[str, os.PathLike]) -> t.Mapping[str, t.Any]:
    path = os.fspath(filename)
    try:
        with open(path, encoding='utf-8') as f:
            if path.endswith(('.yaml', '.yml')):
                if yaml is None:
                    raise ConfigError(
                        message=f'Reading {path} needs PyYAML, install "tiebreak[yaml]".'
                    )
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
    except OSError as e:
        raise ConfigError(message=f'Cannot read config file {path}: {e}') from e
    except ValueError as e:
        raise ConfigError(message=f'Config file {path} is malformed: {e}') from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(message=f'Config file {path} must hold a mapping.')
    return data


def make_config(filename: t.Union[str, os.PathLike, None] = None, **overrides: t.Any) -> Config:
    """Build the run configuration.

    Sources, later ones winning:

    1. the defaults in `tiebreak.settings`;
    2. `TIEBREAK_*` environment variables, e.g. `TIEBREAK_MATE_CAP=8`;
    3. the config file `filename` (JSON, or YAML with the `yaml` extra),
       whose keys mirror the command line flags;
    4. `overrides`, keyword arguments named like settings or flags. `None`
       values are ignored so unset flags do not mask the sources above.

    Examples:

    ```python
    from tiebreak.config import make_config

    config = make_config(depth=12, rule='norway')
    assert config['DEPTH'] == 12
    ```

    Raises `ConfigError` when a value is out of range or a key is unknown.
    """
    config = Config(os.getcwd())
    config.from_object('tiebreak.settings')
    config.from_prefixed_env('TIEBREAK')
    if filename is not None:
        config.from_mapping({setting_name(k): v for k, v in _read_file(filename).items()})
    config.from_mapping({setting_name(k): v for k, v in overrides.items() if v is not None})
    try:
        config.update(SettingsSchema().load(dict(config)))
    except ValidationError as e:
        problems = '; '.join(
            f'{key}: {" ".join(map(str, msgs)) if isinstance(msgs, list) else msgs}'
            for key, msgs in sorted(t.cast(t.Dict[str, t.Any], e.messages).items())
        )
        raise ConfigError(
            message=f'Invalid configuration ({problems}).', detail=e.messages
        ) from None
    return config
