import pytest

from tiebreak.helpers import format_pawns
from tiebreak.helpers import mover_of_ply
from tiebreak.helpers import other
from tiebreak.helpers import settings_fingerprint
from tiebreak.helpers import truncate_pawns


def test_other():
    assert other('white') == 'black'
    assert other('black') == 'white'


@pytest.mark.parametrize(
    'ply, first_mover, expected',
    [
        (1, 'white', 'white'),
        (2, 'white', 'black'),
        (24, 'white', 'black'),
        (1, 'black', 'black'),
        (2, 'black', 'white'),
    ],
)
def test_mover_of_ply(ply, first_mover, expected):
    assert mover_of_ply(ply, first_mover) == expected


@pytest.mark.parametrize(
    'value, expected',
    [
        (159.21000000000004, '159.21'),
        (188.62, '188.62'),
        (5.9, '5.90'),
        (0.0, '0.00'),
        (-0.0, '0.00'),
        (1.005, '1.00'),
        (12.2469, '12.25'),
    ],
)
def test_format_pawns(value, expected):
    assert format_pawns(value) == expected


@pytest.mark.parametrize(
    'value, expected',
    [
        (159.21 / 13, '12.24'),
        (188.62 / 13, '14.50'),
        (1.575, '1.57'),
        (3.0, '3.00'),
        (0.0, '0.00'),
        (0.999, '0.99'),
    ],
)
def test_truncate_pawns(value, expected):
    assert truncate_pawns(value) == expected


def test_settings_fingerprint():
    a = settings_fingerprint({'engine': 'Stockfish 16', 'depth': 18})
    assert a == settings_fingerprint({'depth': 18, 'engine': 'Stockfish 16'})
    assert a != settings_fingerprint({'engine': 'Stockfish 16', 'depth': 19})
    assert len(a) == 12
    int(a, 16)
