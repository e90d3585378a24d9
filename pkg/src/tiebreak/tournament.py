from __future__ import annotations

import logging
import typing as t
from dataclasses import dataclass
from dataclasses import field

from .analysis import AnnotatedGame
from .analysis import average_centipawn_loss
from .analysis import cumulative_tplv
from .exceptions import DomainError
from .scoring import GameScore
from .scoring import ScoringRule
from .scoring import score_annotated
from .types import PointsType
from .types import TiebreakUsed
from .types import TPLVBasis


logger = logging.getLogger(__name__)

TOLERANCE = 1e-9

CLASSICAL_POINTS = {'win': 1.0, 'draw': 0.5, 'loss': 0.0}


@dataclass(frozen=True)
class PlayerRecord:
    raw_score: float
    games: t.Tuple[AnnotatedGame, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'games', tuple(self.games))


@dataclass(frozen=True)
class Standing:
    """One row of the final table."""

    player: str
    raw_score: float
    cumulative_tplv: float
    average_tplv: float
    average_cpl: float
    games: int
    rank: int
    tiebreak_used: TiebreakUsed = 'none'


@dataclass(frozen=True)
class _Keys:
    player: str
    raw_score: float
    tplv: float
    cpl: float


def _same(a: float, b: float) -> bool:
    return abs(a - b) <= TOLERANCE


def _beats(a: _Keys, b: _Keys) -> bool:
    """Whether `a` finishes strictly ahead of `b`."""
    for mine, theirs, higher_wins in (
        (a.raw_score, b.raw_score, True),
        (a.tplv, b.tplv, False),
        (a.cpl, b.cpl, False),
    ):
        if not _same(mine, theirs):
            return (mine > theirs) == higher_wins
    return False


def _tiebreak_used(me: _Keys, everyone: t.Sequence[_Keys], basis: TPLVBasis) -> TiebreakUsed:
    level = [k for k in everyone if k is not me and _same(k.raw_score, me.raw_score)]
    if not level:
        return 'none'
    level = [k for k in level if _same(k.tplv, me.tplv)]
    if not level:
        return 'cumulative-tplv' if basis == 'cumulative' else 'average-tplv'
    level = [k for k in level if _same(k.cpl, me.cpl)]
    if not level:
        return 'avg-cpl'
    return 'unresolved'


def rank_players(
    records: t.Mapping[str, PlayerRecord],
    champion: t.Optional[str] = None,
    basis: TPLVBasis = 'cumulative',
) -> t.List[Standing]:
    """Rank players by raw score, then lower TPLV, then lower average
    centipawn loss.

    Players equal on all three keys share the best rank of the group and
    are flagged `unresolved`; ranks after a shared rank are skipped. When
    `champion` is one of exactly two players tied for first place, the
    champion keeps first place.

    Arguments:
        records: Raw tournament score and annotated games of every player.
        champion: The reigning champion, if the title can be retained.
        basis: `'cumulative'` compares total TPLV, `'average'` compares TPLV
            per game (for events where players played different numbers of
            games).
    """
    if not records:
        raise DomainError(message='No players to rank.')
    if basis not in ('cumulative', 'average'):
        raise DomainError(message=f'Unknown TPLV basis {basis!r}.')
    if champion is not None and champion not in records:
        raise DomainError(message=f'Champion {champion!r} is not among the players.')

    rows: t.Dict[str, t.Tuple[float, float, float]] = {}
    keys: t.List[_Keys] = []
    for player, record in records.items():
        if not record.games:
            raise DomainError(message=f'{player!r} has no games.')
        total = cumulative_tplv(record.games, player)
        per_game = total / len(record.games)
        cpl = average_centipawn_loss(record.games, player)
        rows[player] = (total, per_game, cpl)
        tplv = total if basis == 'cumulative' else per_game
        keys.append(_Keys(player, record.raw_score, tplv, cpl))

    ranks = {k.player: 1 + sum(_beats(o, k) for o in keys) for k in keys}
    used = {k.player: _tiebreak_used(k, keys, basis) for k in keys}

    if champion is not None and used[champion] == 'unresolved' and ranks[champion] == 1:
        tied = [p for p, r in ranks.items() if r == 1]
        if len(tied) == 2:
            challenger = next(p for p in tied if p != champion)
            ranks[challenger] = 2
            used[champion] = used[challenger] = 'champion'
            logger.info('%s keeps the title after an unresolved tie with %s', champion, challenger)

    standings = [
        Standing(
            player=player,
            raw_score=records[player].raw_score,
            cumulative_tplv=rows[player][0],
            average_tplv=rows[player][1],
            average_cpl=rows[player][2],
            games=len(records[player].games),
            rank=ranks[player],
            tiebreak_used=used[player],
        )
        for player in records
    ]
    return sorted(standings, key=lambda s: (s.rank, s.player))


def game_points(
    game: AnnotatedGame,
    player: str,
    points: PointsType = 'classical',
    rule: t.Optional[ScoringRule] = None,
) -> float:
    """The tournament points `player` took from one finished game."""
    color = game.color_of(player)
    if color is None:
        raise DomainError(message=f'{player!r} did not play in {game.record.label}.')
    if points == 'ai':
        return score_annotated(game, rule).score_of(color)
    result = game.record.result
    if result == 'draw':
        return CLASSICAL_POINTS['draw']
    won = (result == 'white-win') == (color == 'white')
    return CLASSICAL_POINTS['win' if won else 'loss']


def build_records(
    games: t.Iterable[AnnotatedGame],
    points: PointsType = 'classical',
    rule: t.Optional[ScoringRule] = None,
) -> t.Dict[str, PlayerRecord]:
    """Group finished games by player and total their tournament points.

    Unfinished games are left out with a warning.
    """
    played: t.Dict[str, t.List[AnnotatedGame]] = {}
    score: t.Dict[str, float] = {}
    for game in games:
        if game.record.result == 'unfinished':
            logger.warning('Skipping unfinished game %s', game.record.label)
            continue
        for player in (game.record.white, game.record.black):
            played.setdefault(player, []).append(game)
            score[player] = score.get(player, 0.0) + game_points(game, player, points, rule)
    return {player: PlayerRecord(score[player], tuple(played[player])) for player in played}


class Pairing(t.NamedTuple):
    white: str
    black: str


@dataclass
class PlayoffPlan:
    """A playoff between two tied players in two-game cycles, one game with
    each colour, repeated until a cycle is won.

    The plan does not simulate games: feed the scores of each cycle to
    `ingest`.
    """

    players: t.Tuple[str, str]
    cycles: t.List[t.Tuple[Pairing, Pairing]] = field(default_factory=list)
    winner: t.Optional[str] = None

    def __post_init__(self) -> None:
        if not self.cycles:
            self.cycles.append(self._cycle())

    def _cycle(self) -> t.Tuple[Pairing, Pairing]:
        first, second = self.players
        return Pairing(first, second), Pairing(second, first)

    @property
    def games(self) -> t.List[Pairing]:
        return [pairing for cycle in self.cycles for pairing in cycle]

    def ingest(self, scores: t.Sequence[GameScore]) -> t.Optional[str]:
        """Record the scores of the current cycle's two games.

        Returns the winner, or `None` after appending another cycle when
        the cycle is tied.
        """
        if self.winner is not None:
            raise DomainError(message=f'The playoff is already won by {self.winner}.')
        if len(scores) != 2:
            raise DomainError(message=f'A cycle has two games, got {len(scores)} scores.')
        totals = dict.fromkeys(self.players, 0.0)
        for pairing, score in zip(self.cycles[-1], scores):
            totals[pairing.white] += score.score_white
            totals[pairing.black] += score.score_black
        first, second = self.players
        if _same(totals[first], totals[second]):
            self.cycles.append(self._cycle())
            return None
        self.winner = first if totals[first] > totals[second] else second
        return self.winner


def playoff_schedule(
    tied_players: t.Sequence[str], standings: t.Optional[t.Sequence[Standing]] = None
) -> PlayoffPlan:
    """Plan a playoff for two players tied after every tiebreak.

    With `standings`, both players must share a rank there and be flagged
    `unresolved`. Without it the caller is responsible for the tie.

    ```python
    >>> playoff_schedule(['A', 'B']).games
    [Pairing(white='A', black='B'), Pairing(white='B', black='A')]
    ```
    """
    players = tuple(tied_players)
    if len(players) != 2:
        raise DomainError(
            message=f'Playoffs are supported between two players, got {len(players)}.'
        )
    if players[0] == players[1]:
        raise DomainError(message='A playoff needs two different players.')
    if standings is not None:
        by_player = {s.player: s for s in standings}
        for player in players:
            standing = by_player.get(player)
            if standing is None or standing.tiebreak_used != 'unresolved':
                raise DomainError(message=f'{player!r} is not in an unresolved tie.')
        if by_player[players[0]].rank != by_player[players[1]].rank:
            raise DomainError(message=f'{players[0]!r} and {players[1]!r} do not share a rank.')
    return PlayoffPlan((players[0], players[1]))
