from __future__ import annotations

import logging
import typing as t
from dataclasses import dataclass
from dataclasses import field

import chess
from pyparsing import FollowedBy
from pyparsing import Forward
from pyparsing import Group
from pyparsing import Literal
from pyparsing import ParseBaseException
from pyparsing import ParserElement
from pyparsing import ParseResults
from pyparsing import QuotedString
from pyparsing import Regex
from pyparsing import StringEnd
from pyparsing import Suppress
from pyparsing import Word
from pyparsing import ZeroOrMore
from pyparsing import alphanums
from pyparsing import col as column_of
from pyparsing import lineno as line_of

from .engine import PositionRef
from .exceptions import DomainError
from .exceptions import IllegalMoveError
from .exceptions import PGNSyntaxError
from .helpers import mover_of_ply
from .types import Color
from .types import GameResult
from .types import TerminationType


logger = logging.getLogger(__name__)

DRAW_OFFER_COMMENT = 'draw offered'

RESULTS: t.Dict[str, GameResult] = {
    '1-0': 'white-win',
    '0-1': 'black-win',
    '1/2-1/2': 'draw',
    '*': 'unfinished',
}
RESULT_TOKENS: t.Dict[GameResult, str] = {v: k for k, v in RESULTS.items()}

TERMINATIONS: t.Dict[str, TerminationType] = {
    'normal': 'normal',
    'time forfeit': 'time-forfeit',
}


class MoveRecord(t.NamedTuple):
    san: str
    uci: str


class DrawOffer(t.NamedTuple):
    ply: int
    player: Color


@dataclass(frozen=True)
class GameRecord:
    """A parsed game: tags, legal moves, result and draw offers.

    `draw_offers` holds `(ply, player)` pairs with 1-based plies; the player
    is the one who made that ply.
    """

    headers: t.Mapping[str, str]
    moves: t.Tuple[MoveRecord, ...]
    result: GameResult
    termination: TerminationType = 'normal'
    draw_offers: t.Tuple[DrawOffer, ...] = ()
    start_fen: t.Optional[str] = None
    comments: t.Tuple[t.Tuple[int, str], ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'headers', dict(self.headers))
        object.__setattr__(self, 'moves', tuple(MoveRecord(*m) for m in self.moves))
        object.__setattr__(self, 'draw_offers', tuple(DrawOffer(*o) for o in self.draw_offers))
        object.__setattr__(self, 'comments', tuple((int(p), str(c)) for p, c in self.comments))
        if self.result not in RESULT_TOKENS:
            raise DomainError(message=f'Unknown result {self.result!r}.')
        last = 0
        for offer in self.draw_offers:
            if not 1 <= offer.ply <= len(self.moves):
                raise DomainError(
                    message=f'Draw offer at ply {offer.ply} is outside the game '
                    f'({len(self.moves)} plies).'
                )
            if offer.ply <= last:
                raise DomainError(message='Draw offers must be in increasing ply order.')
            if offer.player != mover_of_ply(offer.ply, self.first_mover):
                raise DomainError(
                    message=f'Draw offer at ply {offer.ply} is attributed to {offer.player}, '
                    'who did not make that move.'
                )
            last = offer.ply

    @property
    def white(self) -> str:
        return self.headers.get('White', '?')

    @property
    def black(self) -> str:
        return self.headers.get('Black', '?')

    @property
    def label(self) -> str:
        round_ = self.headers.get('Round')
        tail = f' (round {round_})' if round_ and round_ not in ('?', '-') else ''
        return f'{self.white} - {self.black}{tail}'

    @property
    def first_mover(self) -> Color:
        if self.start_fen and self.start_fen.split()[1:2] == ['b']:
            return 'black'
        return 'white'

    @property
    def ply_count(self) -> int:
        return len(self.moves)

    def color_of(self, player: str) -> t.Optional[Color]:
        if self.white == player:
            return 'white'
        if self.black == player:
            return 'black'
        return None

    def position(self, ply: int) -> PositionRef:
        """The position after `ply` plies (0 is the start position)."""
        return PositionRef(self.start_fen, tuple(m.uci for m in self.moves[:ply]))

    def with_draw_offers(self, plies: t.Iterable[int]) -> GameRecord:
        """Return a copy with extra draw offers at the given plies."""
        merged = {o.ply for o in self.draw_offers} | set(plies)
        offers = tuple(DrawOffer(p, mover_of_ply(p, self.first_mover)) for p in sorted(merged))
        return GameRecord(
            self.headers,
            self.moves,
            self.result,
            self.termination,
            offers,
            self.start_fen,
            self.comments,
        )


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    loc: int


def _token(kind: str) -> t.Callable[[str, int, ParseResults], _Token]:
    def action(s: str, loc: int, toks: ParseResults) -> _Token:
        return _Token(kind, toks[0], loc)

    return action


def _build_grammar() -> ParserElement:
    tag = Group(
        Suppress('[') - Word(alphanums + '_') + QuotedString('"', esc_char='\\') + Suppress(']')
    )
    comment = QuotedString('{', end_quote_char='}', multiline=True).set_parse_action(
        _token('comment')
    )
    line_comment = Suppress(Regex(r';[^\n]*'))
    escape_line = Suppress(Regex(r'(?m)^%[^\n]*'))
    nag = Suppress(Regex(r'\$\d+'))
    move_number = Suppress(Regex(r'\d+\.+'))
    san = Regex(
        r'(?:O-O-O|O-O|0-0-0|0-0'
        r'|[KQRBN][a-h]?[1-8]?x?[a-h][1-8]'
        r'|[a-h](?:x[a-h])?[1-8](?:=?[QRBN])?)'
        r'(?:\s*e\.p\.)?'
        r'[+#]?[!?]{0,2}'
    ).set_parse_action(_token('san'))
    result = Regex(r'1-0|0-1|1/2-1/2|\*').set_parse_action(_token('result'))

    variation = Forward()
    # sidelines are matched and dropped, nested ones included
    variation <<= (
        Literal('(')
        + ZeroOrMore(comment | line_comment | nag | move_number | variation | san)
        + Literal(')')
    )
    element = comment | line_comment | escape_line | nag | move_number | Suppress(variation) | san
    game = Group(
        Suppress(FollowedBy(Regex(r'\S')))
        + Group(ZeroOrMore(escape_line | tag))('tags')
        + Group(ZeroOrMore(element))('movetext')
        - result('result')
    )
    return ZeroOrMore(game) + StringEnd()


_GRAMMAR = _build_grammar()


def _start_board(
    headers: t.Mapping[str, str], text: str, loc: int
) -> t.Tuple[chess.Board, t.Optional[str]]:
    variant = headers.get('Variant', 'Standard').strip().lower()
    if variant not in ('standard', 'chess', ''):
        raise PGNSyntaxError(
            f'unsupported variant {headers["Variant"]!r}', line_of(loc, text), column_of(loc, text)
        )
    fen = headers.get('FEN')
    if fen is None:
        return chess.Board(), None
    try:
        return chess.Board(fen), fen
    except ValueError as e:
        raise PGNSyntaxError(
            f'invalid FEN tag {fen!r} ({e})', line_of(loc, text), column_of(loc, text)
        ) from None


def _termination(headers: t.Mapping[str, str]) -> TerminationType:
    value = headers.get('Termination')
    if value is None:
        return 'normal'
    return TERMINATIONS.get(value.strip().lower(), 'other')


def _build_record(parsed: ParseResults, text: str) -> GameRecord:
    headers = {str(name): str(value) for name, value in parsed['tags']}
    tokens: t.List[_Token] = list(parsed['movetext'])
    result_token: _Token = parsed['result']
    start_loc = tokens[0].loc if tokens else result_token.loc

    board, start_fen = _start_board(headers, text, start_loc)
    first_mover: Color = 'white' if board.turn == chess.WHITE else 'black'
    moves: t.List[MoveRecord] = []
    offers: t.Set[int] = set()
    comments: t.List[t.Tuple[int, str]] = []
    for token in tokens:
        ply = len(moves)
        if token.kind == 'comment':
            text_ = token.text.strip()
            comments.append((ply, text_))
            if text_.lower() == DRAW_OFFER_COMMENT:
                if ply == 0:
                    logger.warning('Ignoring a draw offer before the first move of %s', headers)
                else:
                    offers.add(ply)
            continue
        # an en passant capture may carry an ` e.p.` suffix
        san = ''.join(token.text.replace('e.p.', '').split()).rstrip('!?')
        try:
            move = board.parse_san(san)
        except ValueError:
            raise IllegalMoveError(
                token.text, ply + 1, line_of(token.loc, text), column_of(token.loc, text)
            ) from None
        moves.append(MoveRecord(board.san(move), move.uci()))
        board.push(move)

    result = RESULTS[result_token.text]
    declared = headers.get('Result')
    if declared is None:
        headers['Result'] = result_token.text
    elif declared != result_token.text:
        raise PGNSyntaxError(
            f'Result tag {declared!r} does not match the game terminator {result_token.text!r}',
            line_of(result_token.loc, text),
            column_of(result_token.loc, text),
        )
    return GameRecord(
        headers=headers,
        moves=tuple(moves),
        result=result,
        termination=_termination(headers),
        draw_offers=tuple(DrawOffer(p, mover_of_ply(p, first_mover)) for p in sorted(offers)),
        start_fen=start_fen,
        comments=tuple(comments),
    )


def parse_pgn(text: str) -> t.List[GameRecord]:
    """Parse every game in a PGN text.

    Tags, comments, NAGs and move numbers follow the PGN import format;
    variations are skipped. A comment reading exactly `{draw offered}`
    marks a draw offer made with the move before it. Syntax errors carry
    the line and column, illegal moves the ply as well.

    Examples:

    ```python
    from tiebreak.pgn import parse_pgn

    games = parse_pgn('1. e4 e5 1/2-1/2')
    assert games[0].result == 'draw'
    ```
    """
    text = text.lstrip('\ufeff')
    if not text.strip():
        return []
    try:
        parsed = _GRAMMAR.parse_string(text, parse_all=True)
    except ParseBaseException as e:
        raise PGNSyntaxError(e.msg, e.lineno, e.col) from None
    games = [_build_record(game, text) for game in parsed]
    logger.info('Parsed %d game(s)', len(games))
    return games
