from __future__ import annotations

import typing as t
import warnings
from dataclasses import dataclass

from .analysis import AnnotatedGame
from .analysis import tplv
from .exceptions import DomainError
from .exceptions import ThresholdTieWarning
from .helpers import format_pawns
from .helpers import other
from .types import Color
from .types import CompareResult
from .types import GameResult
from .types import ScoreBasis
from .types import TerminationType
from .types import ThresholdModeType
from .types import VariantType


@dataclass(frozen=True)
class ScoringRule:
    """How a game is scored.

    Arguments:
        variant: `'def4'` pays 2/1/0 for the result plus 1 point for the lower
            TPLV; `'norway'` pays 3 for a win and splits 2.5 in a draw
            (1.5 for the lower TPLV, 1 for the higher).
        threshold_mode: `'exact'` decides any TPLV gap above
            `absolute_epsilon`; `'relative'` also calls a tie when the gap is
            within `threshold_value` of the larger TPLV.
        threshold_value: Fraction in [0, 1).
        absolute_epsilon: TPLV gaps up to this many pawns are ties.
    """

    variant: VariantType = 'def4'
    threshold_mode: ThresholdModeType = 'exact'
    threshold_value: float = 0.0
    absolute_epsilon: float = 1e-9

    def __post_init__(self) -> None:
        if self.variant not in ('def4', 'norway'):
            raise DomainError(message=f'Unknown scoring variant {self.variant!r}.')
        if self.threshold_mode not in ('exact', 'relative'):
            raise DomainError(message=f'Unknown threshold mode {self.threshold_mode!r}.')
        if not 0 <= self.threshold_value < 1:
            raise DomainError(
                message=f'The threshold must be in [0, 1), got {self.threshold_value}.'
            )
        if self.absolute_epsilon < 0:
            raise DomainError(message='absolute_epsilon must not be negative.')

    @classmethod
    def from_config(cls, config: t.Mapping[str, t.Any]) -> ScoringRule:
        return cls(
            variant=config.get('RULE', 'def4'),
            threshold_mode=config.get('THRESHOLD_MODE', 'exact'),
            threshold_value=config.get('THRESHOLD', 0.0),
            absolute_epsilon=config.get('ABSOLUTE_EPSILON', 1e-9),
        )


@dataclass(frozen=True)
class GameScore:
    score_white: float
    score_black: float
    tiebreak_winner: t.Optional[Color]
    basis: ScoreBasis

    def score_of(self, color: Color) -> float:
        return self.score_white if color == 'white' else self.score_black


def tplv_compare(tplv_a: float, tplv_b: float, rule: ScoringRule) -> CompareResult:
    """Tell which of two TPLVs is lower, or `'tie'`.

    A relative threshold that turns a gap into a tie emits a
    `ThresholdTieWarning`, since the exact comparison would have decided it.
    """
    if tplv_a < 0 or tplv_b < 0:
        raise DomainError(message=f'TPLVs cannot be negative, got {tplv_a} and {tplv_b}.')
    gap = abs(tplv_a - tplv_b)
    if gap <= rule.absolute_epsilon:
        return 'tie'
    if rule.threshold_mode == 'relative':
        larger = max(tplv_a, tplv_b, rule.absolute_epsilon)
        if gap <= rule.threshold_value * larger:
            warnings.warn(
                f'TPLVs {format_pawns(tplv_a)} and {format_pawns(tplv_b)} differ by '
                f'{gap / larger:.2%}, within the relative threshold of '
                f'{rule.threshold_value:.0%}: scored as a tie, although the exact '
                'comparison decides it.',
                ThresholdTieWarning,
                stacklevel=2,
            )
            return 'tie'
    return 'a_lower' if tplv_a < tplv_b else 'b_lower'


_WINNERS: t.Dict[str, Color] = {'white-win': 'white', 'black-win': 'black'}


def score_game(
    result: GameResult,
    termination: TerminationType,
    tplv_white: float,
    tplv_black: float,
    rule: t.Optional[ScoringRule] = None,
) -> GameScore:
    """Score a finished game from its result and both TPLVs.

    Under `def4` the winner gets 2, the loser 0 and a draw 1 each, then the
    lower TPLV earns 1 more point (0.5 each on a tie), so every game
    distributes 3 points. When a player loses on time with the lower TPLV
    they keep 1 point. Under `norway` a win pays 3/0; a draw pays 1.5 to
    the lower TPLV and 1 to the other, 1.25 each on a tie.

    Examples:

    ```python
    from tiebreak.scoring import ScoringRule, score_game

    score = score_game('draw', 'normal', 5.9, 6.2, ScoringRule())
    assert (score.score_white, score.score_black) == (2, 1)
    ```
    """
    rule = rule or ScoringRule()
    if result == 'unfinished':
        raise DomainError(message='An unfinished game cannot be scored.')
    if result not in ('white-win', 'black-win', 'draw'):
        raise DomainError(message=f'Unknown result {result!r}.')
    verdict = tplv_compare(tplv_white, tplv_black, rule)
    lower: t.Optional[Color] = None
    if verdict == 'a_lower':
        lower = 'white'
    elif verdict == 'b_lower':
        lower = 'black'
    points: t.Dict[Color, float]

    if result == 'draw':
        if rule.variant == 'def4':
            points = {'white': 1.0, 'black': 1.0}
            _add_bonus(points, lower, 1.0)
        elif lower is None:
            points = {'white': 1.25, 'black': 1.25}
        else:
            points = {lower: 1.5, other(lower): 1.0}
        return GameScore(points['white'], points['black'], lower, 'draw')

    winner = _WINNERS[result]
    loser = other(winner)
    forfeit_exception = termination == 'time-forfeit' and lower == loser
    if rule.variant == 'def4':
        points = {winner: 2.0, loser: 0.0}
        _add_bonus(points, lower, 1.0)
        tiebreak_winner = lower
    else:
        points = {winner: 3.0, loser: 1.0 if forfeit_exception else 0.0}
        tiebreak_winner = loser if forfeit_exception else None
    basis: ScoreBasis = 'time-forfeit-exception' if forfeit_exception else 'win'
    return GameScore(points['white'], points['black'], tiebreak_winner, basis)


def _add_bonus(points: t.Dict[Color, float], lower: t.Optional[Color], bonus: float) -> None:
    if lower is None:
        points['white'] += bonus / 2
        points['black'] += bonus / 2
    else:
        points[lower] += bonus


def score_annotated(annotated: AnnotatedGame, rule: t.Optional[ScoringRule] = None) -> GameScore:
    """Score an annotated game. Terminations other than a time forfeit count
    as normal."""
    record = annotated.record
    termination: TerminationType = (
        'time-forfeit' if record.termination == 'time-forfeit' else 'normal'
    )
    return score_game(
        record.result,
        termination,
        tplv(annotated, 'white'),
        tplv(annotated, 'black'),
        rule,
    )
