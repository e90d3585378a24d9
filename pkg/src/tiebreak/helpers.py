from __future__ import annotations

import hashlib
import json
import typing as t
from decimal import Decimal
from decimal import ROUND_DOWN

from .types import Color


def other(color: Color) -> Color:
    """Return the opponent of `color`."""
    return 'black' if color == 'white' else 'white'


def mover_of_ply(ply: int, first_mover: Color = 'white') -> Color:
    """Return the side that makes the 1-based `ply` when `first_mover` makes ply 1."""
    return first_mover if ply % 2 == 1 else other(first_mover)


def format_pawns(value: float) -> str:
    """Render a pawn value rounded to two decimals, the way TPLV tables print it.

    ```python
    >>> format_pawns(159.21000000000004)
    '159.21'
    ```
    """
    return f'{value + 0.0:.2f}'


def truncate_pawns(value: float) -> str:
    """Render a pawn value cut (not rounded) to two decimals.

    Per-game averages are published truncated, so `159.21 / 13` is shown as
    `12.24` although it rounds to `12.25`.
    """
    quantized = Decimal(repr(value)).quantize(Decimal('0.01'), rounding=ROUND_DOWN)
    return f'{quantized + 0:.2f}'


def settings_fingerprint(settings: t.Mapping[str, t.Any]) -> str:
    """A short stable digest of the analysis settings.

    Two reports with the same fingerprint were produced by the same engine
    identity and search settings.
    """
    payload = json.dumps(settings, sort_keys=True, default=str, separators=(',', ':'))
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:12]
