import pytest

from tiebreak.exceptions import DomainError
from tiebreak.exceptions import IllegalMoveError
from tiebreak.exceptions import PGNSyntaxError
from tiebreak.pgn import DrawOffer
from tiebreak.pgn import GameRecord
from tiebreak.pgn import parse_pgn


def test_parse_game12(game12_pgn):
    games = parse_pgn(game12_pgn)
    assert len(games) == 1
    game = games[0]
    assert game.white == 'Caruana, Fabiano'
    assert game.black == 'Carlsen, Magnus'
    assert game.result == 'draw'
    assert game.termination == 'normal'
    assert game.ply_count == 124
    assert game.moves[0].uci == 'e2e4'
    assert game.moves[10].san == 'Ndb5'
    assert game.moves[19].san == game.moves[20].san == 'O-O'
    assert game.moves[-1].uci == 'f8f7'
    assert game.draw_offers == (DrawOffer(124, 'black'),)
    assert game.label == 'Caruana, Fabiano - Carlsen, Magnus (round 12)'


def test_parse_checkmate(fixtures_dir):
    game = parse_pgn((fixtures_dir / 'minimal.pgn').read_text())[0]
    assert game.result == 'white-win'
    assert game.ply_count == 7
    assert game.position(7).board().is_checkmate()


def test_parse_setup_fen(fixtures_dir):
    game = parse_pgn((fixtures_dir / 'setup_fen.pgn').read_text())[0]
    assert game.first_mover == 'black'
    assert game.result == 'unfinished'
    assert [m.san for m in game.moves] == ['Kd7', 'e4', 'Kc6']
    assert game.position(0).command.startswith('position fen 4k3/')


def test_parse_multiple_games(fixtures_dir):
    first, second = parse_pgn((fixtures_dir / 'multi.pgn').read_text())
    # variations, NAGs, annotations and comments do not become moves
    assert [m.san for m in first.moves] == ['e4', 'e5', 'Nf3', 'Nc6', 'Bb5', 'a6']
    assert (3, 'developing') in first.comments
    assert second.result == 'black-win'
    assert second.termination == 'time-forfeit'
    assert second.white == 'Beta'


@pytest.mark.parametrize('text', ['', '   \n\n', '\ufeff\n'])
def test_parse_empty(text):
    assert parse_pgn(text) == []


def test_parse_bare_movetext():
    game = parse_pgn('1. e4 e5 1/2-1/2')[0]
    assert game.headers['Result'] == '1/2-1/2'
    assert game.white == '?'


@pytest.mark.parametrize('capture', ['exd6 e.p.', 'exd6e.p.', 'exd6 e.p.!', 'exd6'])
def test_en_passant_suffix(capture):
    game = parse_pgn(f'1. e4 Nf6 2. e5 d5 3. {capture} exd6 1/2-1/2')[0]
    assert [m.san for m in game.moves] == ['e4', 'Nf6', 'e5', 'd5', 'exd6', 'exd6']
    assert game.moves[4].uci == 'e5d6'
    assert game.ply_count == 6


def test_syntax_error_reports_line(fixtures_dir):
    with pytest.raises(PGNSyntaxError) as exc_info:
        parse_pgn((fixtures_dir / 'corrupt.pgn').read_text())
    assert exc_info.value.lineno == 6
    assert exc_info.value.message.startswith('line 6, column')
    assert exc_info.value.exit_code == 2


def test_illegal_move_reports_ply(fixtures_dir):
    with pytest.raises(IllegalMoveError) as exc_info:
        parse_pgn((fixtures_dir / 'illegal.pgn').read_text())
    error = exc_info.value
    assert error.ply == 3
    assert error.san == 'Ke3'
    assert error.lineno == 6
    assert error.detail['ply'] == 3
    assert "illegal move 'Ke3' at ply 3" in error.message


def test_result_tag_mismatch():
    with pytest.raises(PGNSyntaxError, match='does not match'):
        parse_pgn('[Result "1-0"]\n\n1. e4 e5 0-1')


def test_unsupported_variant():
    with pytest.raises(PGNSyntaxError, match='unsupported variant'):
        parse_pgn('[Variant "Chess960"]\n\n1. e4 *')


def test_draw_offer_before_first_move_is_ignored():
    game = parse_pgn('{draw offered} 1. e4 e5 *')[0]
    assert game.draw_offers == ()


def test_draw_offer_comment_is_case_insensitive():
    game = parse_pgn('1. e4 { Draw Offered } e5 *')[0]
    assert game.draw_offers == (DrawOffer(1, 'white'),)


def test_with_draw_offers(game12_pgn):
    game = parse_pgn(game12_pgn)[0]
    marked = game.with_draw_offers([5, 124])
    assert marked.draw_offers == (DrawOffer(5, 'white'), DrawOffer(124, 'black'))
    assert marked.moves == game.moves


@pytest.mark.parametrize(
    'offers',
    [
        [DrawOffer(3, 'white')],
        [DrawOffer(2, 'white')],
        [DrawOffer(2, 'black'), DrawOffer(2, 'black')],
    ],
)
def test_invalid_draw_offers(offers):
    game = parse_pgn('1. e4 e5 *')[0]
    with pytest.raises(DomainError):
        GameRecord(game.headers, game.moves, game.result, draw_offers=offers)
