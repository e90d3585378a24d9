from __future__ import annotations

import logging
import math
import typing as t
from dataclasses import dataclass

import chess

from .engine import EngineConfig
from .engine import EngineIdentity
from .engine import EngineSessionPool
from .engine import Evaluation
from .engine import normalize_eval
from .exceptions import AnnotationError
from .exceptions import DomainError
from .exceptions import EngineError
from .helpers import format_pawns
from .helpers import mover_of_ply
from .helpers import other
from .pgn import GameRecord
from .types import AnnotationKind
from .types import Color
from .types import EngineSession


logger = logging.getLogger(__name__)

TOLERANCE = 1e-9
_KIND_ORDER = {'move': 0, 'draw-offer': 1, 'draw-acceptance': 2}


@dataclass(frozen=True)
class MoveAnnotation:
    """The pawn loss of one move, or of a draw offer or acceptance.

    Values are in pawn units from the mover's point of view.
    """

    ply: int
    mover: Color
    value_best: float
    value_played: float
    pawn_loss: float
    kind: AnnotationKind = 'move'
    played: t.Optional[str] = None
    best_move: t.Optional[str] = None
    raw_best: t.Optional[str] = None
    raw_played: t.Optional[str] = None
    reeval: t.Optional[t.Tuple[float, float]] = None

    def __post_init__(self) -> None:
        expected = max(0.0, self.value_best - self.value_played)
        if abs(self.pawn_loss - expected) > TOLERANCE:
            raise DomainError(
                message=f'Pawn loss {self.pawn_loss} at ply {self.ply} should be {expected}.'
            )
        if self.reeval is not None:
            object.__setattr__(self, 'reeval', tuple(self.reeval))

    @classmethod
    def charge(
        cls, ply: int, mover: Color, value_best: float, value_played: float, **kwargs: t.Any
    ) -> MoveAnnotation:
        raw = value_best - value_played
        if raw < 0:
            logger.info(
                'Ply %d (%s): played value %.2f exceeds best value %.2f, loss clamped to 0',
                ply,
                mover,
                value_played,
                value_best,
            )
        return cls(ply, mover, value_best, value_played, max(0.0, raw), **kwargs)


@dataclass(frozen=True)
class AnnotatedGame:
    """A game with one annotation per analysed move and the TPLV of both sides.

    A game whose analysis stopped early carries the reason in `error`; its
    TPLVs cover the annotated prefix only.
    """

    record: GameRecord
    annotations: t.Tuple[MoveAnnotation, ...]
    tplv_white: float
    tplv_black: float
    fingerprint: str = ''
    error: t.Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, 'annotations', tuple(self.annotations))
        for color, stored in (('white', self.tplv_white), ('black', self.tplv_black)):
            total = self.loss_sum(t.cast(Color, color))
            if abs(total - stored) > TOLERANCE:
                raise DomainError(
                    message=f'Stored {color} TPLV {stored} differs from the '
                    f'annotation sum {total}.'
                )

    @classmethod
    def from_annotations(
        cls,
        record: GameRecord,
        annotations: t.Iterable[MoveAnnotation],
        fingerprint: str = '',
        error: t.Optional[str] = None,
    ) -> AnnotatedGame:
        ordered = tuple(sorted(annotations, key=lambda a: (a.ply, _KIND_ORDER[a.kind])))
        white = math.fsum(a.pawn_loss for a in ordered if a.mover == 'white')
        black = math.fsum(a.pawn_loss for a in ordered if a.mover == 'black')
        return cls(record, ordered, white, black, fingerprint, error)

    @property
    def complete(self) -> bool:
        return self.error is None

    def loss_sum(self, color: Color) -> float:
        return math.fsum(a.pawn_loss for a in self.annotations if a.mover == color)

    def stored_tplv(self, color: Color) -> float:
        return self.tplv_white if color == 'white' else self.tplv_black

    def move_count(self, color: Color) -> int:
        return sum(1 for a in self.annotations if a.mover == color)

    def color_of(self, player: str) -> t.Optional[Color]:
        return self.record.color_of(player)


@dataclass(frozen=True)
class AnalysisOptions:
    """Annotation policy switches.

    Arguments:
        skip_plies: Leave the first N plies (book moves) unannotated.
        charge_acceptance: Also charge the player who accepted a draw offer.
        charge_declined_offers: Charge every draw offer, not only the one
            that ended the game.
        reeval_plies: Plies to evaluate a second time, bypassing the cache.
    """

    skip_plies: int = 0
    charge_acceptance: bool = False
    charge_declined_offers: bool = False
    reeval_plies: t.FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        if self.skip_plies < 0:
            raise DomainError(message=f'skip_plies must not be negative, got {self.skip_plies}.')
        object.__setattr__(self, 'reeval_plies', frozenset(self.reeval_plies))

    @classmethod
    def from_config(
        cls, config: t.Mapping[str, t.Any], reeval_plies: t.Iterable[int] = ()
    ) -> AnalysisOptions:
        return cls(
            skip_plies=config.get('SKIP_PLIES', 0),
            charge_acceptance=config.get('CHARGE_ACCEPTANCE', False),
            charge_declined_offers=config.get('CHARGE_DECLINED_OFFERS', False),
            reeval_plies=frozenset(reeval_plies),
        )


def accepted_offer(game: GameRecord) -> t.Optional[t.Tuple[int, Color]]:
    """Return `(ply, offerer)` when the game ended by an accepted draw offer.

    That is a drawn game whose last draw offer came with its final move,
    unless the game was decided on time.
    """
    if game.result != 'draw' or not game.draw_offers or game.termination == 'time-forfeit':
        return None
    last = game.draw_offers[-1]
    if last.ply != game.ply_count:
        return None
    return last.ply, last.player


class _Evaluator:
    """Per-game evaluation cache keyed by FEN."""

    def __init__(self, session: EngineSession, config: EngineConfig) -> None:
        self.session = session
        self.config = config
        self.cache: t.Dict[str, Evaluation] = {}

    def value(
        self, game: GameRecord, ply: int, player: Color, fresh: bool = False
    ) -> t.Tuple[float, t.Optional[Evaluation]]:
        """The value of the position after `ply` plies for `player`, with the
        evaluation it came from (`None` for finished positions)."""
        pos = game.position(ply)
        board = pos.board()
        side_to_move: Color = 'white' if board.turn == chess.WHITE else 'black'
        if not any(board.legal_moves):
            if board.is_checkmate():
                mated = side_to_move
                cap = self.config.mate_cap
                return (cap if player != mated else -cap), None
            return 0.0, None
        key = board.fen()
        if fresh or key not in self.cache:
            evaluation = self.session.evaluate(pos)
            if not fresh:
                self.cache[key] = evaluation
        else:
            evaluation = self.cache[key]
        value = normalize_eval(evaluation.score, player, side_to_move, self.config.mate_cap)
        return value, evaluation

    def best(self, game: GameRecord, ply: int, player: Color, fresh: bool = False) -> Evaluation:
        _, evaluation = self.value(game, ply, player, fresh)
        if evaluation is None:
            raise DomainError(message=f'The position after ply {ply} has no legal moves.')
        return evaluation


def _raw(evaluation: t.Optional[Evaluation]) -> t.Optional[str]:
    return None if evaluation is None else str(evaluation.score)


def annotate_game(
    game: GameRecord,
    session: EngineSession,
    config: EngineConfig,
    options: t.Optional[AnalysisOptions] = None,
) -> AnnotatedGame:
    """Compute the pawn loss of every move of `game` and the TPLV of both sides.

    For ply k the position before the move gives the best move and its
    value, the position after the move gives the value of the move played,
    both from the mover's point of view. A game that ended by an accepted
    draw offer gets one more annotation charging the offerer the value of
    the final position, since a draw is worth 0.0.

    If the engine fails midway the annotated prefix is returned with
    `error` set.

    Arguments:
        game: A parsed game.
        session: An open engine session (live or mock).
        config: The engine settings, for the mate cap and the report fingerprint.
        options: Annotation policy, see `AnalysisOptions`.
    """
    options = options or AnalysisOptions()
    fingerprint = EngineIdentity(session.name, config.settings).fingerprint
    evaluator = _Evaluator(session, config)
    first = game.first_mover
    annotations: t.List[MoveAnnotation] = []
    accepted = accepted_offer(game)
    offers = {o.ply: o.player for o in game.draw_offers}
    try:
        for ply in range(options.skip_plies + 1, game.ply_count + 1):
            mover = mover_of_ply(ply, first)
            before = evaluator.best(game, ply - 1, mover)
            value_best = normalize_eval(before.score, mover, mover, config.mate_cap)
            value_played, after = evaluator.value(game, ply, mover)
            reeval = None
            if ply in options.reeval_plies:
                again = evaluator.best(game, ply - 1, mover, fresh=True)
                again_played, _ = evaluator.value(game, ply, mover, fresh=True)
                reeval = (normalize_eval(again.score, mover, mover, config.mate_cap), again_played)
                logger.info(
                    'Ply %d re-evaluated: best %.2f -> %.2f, played %.2f -> %.2f',
                    ply,
                    value_best,
                    reeval[0],
                    value_played,
                    reeval[1],
                )
            annotations.append(
                MoveAnnotation.charge(
                    ply,
                    mover,
                    value_best,
                    value_played,
                    played=game.moves[ply - 1].uci,
                    best_move=before.best_move,
                    raw_best=_raw(before),
                    raw_played=_raw(after),
                    reeval=reeval,
                )
            )
            charge_offer = ply in offers and (
                options.charge_declined_offers or (accepted is not None and accepted[0] == ply)
            )
            if charge_offer:
                annotations.extend(_offer_annotations(game, evaluator, ply, offers[ply], options))
    except EngineError as e:
        logger.warning('Analysis of %s stopped at ply %d: %s', game.label, len(annotations), e)
        return AnnotatedGame.from_annotations(game, annotations, fingerprint, error=str(e))
    return AnnotatedGame.from_annotations(game, annotations, fingerprint)


def _offer_annotations(
    game: GameRecord,
    evaluator: _Evaluator,
    ply: int,
    offerer: Color,
    options: AnalysisOptions,
) -> t.List[MoveAnnotation]:
    value, evaluation = evaluator.value(game, ply, offerer)
    charged = [
        MoveAnnotation.charge(
            ply, offerer, value, 0.0, kind='draw-offer', played='draw', raw_best=_raw(evaluation)
        )
    ]
    accepted = accepted_offer(game)
    if options.charge_acceptance and accepted is not None and accepted[0] == ply:
        acceptor = other(offerer)
        charged.append(
            MoveAnnotation.charge(
                ply,
                acceptor,
                -value,
                0.0,
                kind='draw-acceptance',
                played='draw',
                raw_best=_raw(evaluation),
            )
        )
    return charged


def annotate_games(
    games: t.Sequence[GameRecord],
    pool: EngineSessionPool,
    options: t.Optional[AnalysisOptions] = None,
) -> t.List[AnnotatedGame]:
    """Annotate whole games across the sessions of `pool`, keeping input order."""
    return pool.map(
        lambda session, game: annotate_game(game, session, pool.config, options), games
    )


def tplv(annotated: AnnotatedGame, player: Color) -> float:
    """The total pawn loss of `player` ('white' or 'black') in one game."""
    if not annotated.complete:
        prefix = annotated.stored_tplv(player)
        raise AnnotationError(
            message=f'{annotated.record.label}: analysis is incomplete ({annotated.error}); '
            f'{format_pawns(prefix)} pawns were charged to {player} before it stopped.',
            detail={'prefix_sum': prefix, 'annotations': len(annotated.annotations)},
        )
    return annotated.stored_tplv(player)


def _color_in(game: AnnotatedGame, player: str) -> Color:
    color = game.color_of(player)
    if color is None:
        raise DomainError(message=f'{player!r} did not play in {game.record.label}.')
    return color


def cumulative_tplv(games: t.Iterable[AnnotatedGame], player: str) -> float:
    """The sum of `player`'s TPLV over the given games, found by player name."""
    return math.fsum(tplv(game, _color_in(game, player)) for game in games)


def average_tplv(games: t.Sequence[AnnotatedGame], player: str) -> float:
    """Cumulative TPLV per game played."""
    if not games:
        raise DomainError(message=f'{player!r} has no games.')
    return cumulative_tplv(games, player) / len(games)


def average_centipawn_loss(games: t.Sequence[AnnotatedGame], player: str) -> float:
    """100 times the cumulative TPLV divided by the number of annotated moves,
    draw offers included."""
    moves = sum(game.move_count(_color_in(game, player)) for game in games)
    if moves == 0:
        raise DomainError(message=f'{player!r} has no annotated moves.')
    return 100 * cumulative_tplv(games, player) / moves
