from __future__ import annotations

import csv
import io
import json
import typing as t
from dataclasses import dataclass

from marshmallow import ValidationError

from .analysis import AnnotatedGame
from .engine import EngineIdentity
from .exceptions import DomainError
from .helpers import format_pawns
from .helpers import truncate_pawns
from .schemas import ReportSchema
from .scoring import GameScore
from .scoring import ScoringRule
from .tournament import Standing
from .types import ReportFormat
from .types import ReportTable


GAME_COLUMNS = (
    'game',
    'event',
    'round',
    'white',
    'black',
    'result',
    'termination',
    'tplv_white',
    'tplv_black',
    'moves_white',
    'moves_black',
    'score_white',
    'score_black',
    'tiebreak_winner',
    'basis',
    'engine_fingerprint',
    'error',
)
MOVE_COLUMNS = (
    'game',
    'ply',
    'mover',
    'kind',
    'played',
    'best_move',
    'value_best',
    'value_played',
    'pawn_loss',
    'raw_best',
    'raw_played',
    'reeval_best',
    'reeval_played',
)
STANDING_COLUMNS = (
    'rank',
    'player',
    'raw_score',
    'cumulative_tplv',
    'average_tplv',
    'average_cpl',
    'games',
    'tiebreak_used',
)


@dataclass(frozen=True)
class Report:
    """Everything a run produced.

    `scores` is either empty or holds one entry per game, `None` for games
    that were not scored.
    """

    engine: t.Optional[EngineIdentity] = None
    rule: t.Optional[ScoringRule] = None
    games: t.Tuple[AnnotatedGame, ...] = ()
    scores: t.Tuple[t.Optional[GameScore], ...] = ()
    standings: t.Tuple[Standing, ...] = ()

    def __post_init__(self) -> None:
        for name in ('games', 'scores', 'standings'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.scores and len(self.scores) != len(self.games):
            raise DomainError(
                message=f'{len(self.scores)} scores for {len(self.games)} games.'
            )


def _points(value: t.Optional[float]) -> str:
    return '' if value is None else f'{value:g}'


def _pawns(value: t.Optional[float]) -> str:
    return '' if value is None else format_pawns(value)


def _game_rows(report: Report) -> t.Iterator[t.Sequence[t.Any]]:
    scores = report.scores or (None,) * len(report.games)
    for index, (game, score) in enumerate(zip(report.games, scores), 1):
        record = game.record
        yield (
            index,
            record.headers.get('Event', ''),
            record.headers.get('Round', ''),
            record.white,
            record.black,
            record.result,
            record.termination,
            format_pawns(game.tplv_white),
            format_pawns(game.tplv_black),
            game.move_count('white'),
            game.move_count('black'),
            _points(score.score_white if score else None),
            _points(score.score_black if score else None),
            (score.tiebreak_winner or 'tie') if score else '',
            score.basis if score else '',
            game.fingerprint,
            game.error or '',
        )


def _move_rows(report: Report) -> t.Iterator[t.Sequence[t.Any]]:
    for index, game in enumerate(report.games, 1):
        for a in game.annotations:
            reeval = a.reeval or (None, None)
            yield (
                index,
                a.ply,
                a.mover,
                a.kind,
                a.played or '',
                a.best_move or '',
                format_pawns(a.value_best),
                format_pawns(a.value_played),
                format_pawns(a.pawn_loss),
                a.raw_best or '',
                a.raw_played or '',
                _pawns(reeval[0]),
                _pawns(reeval[1]),
            )


def _standing_rows(report: Report) -> t.Iterator[t.Sequence[t.Any]]:
    for s in report.standings:
        yield (
            s.rank,
            s.player,
            _points(s.raw_score),
            format_pawns(s.cumulative_tplv),
            truncate_pawns(s.average_tplv),
            format_pawns(s.average_cpl),
            s.games,
            s.tiebreak_used,
        )


_TABLES = {
    'games': (GAME_COLUMNS, _game_rows),
    'moves': (MOVE_COLUMNS, _move_rows),
    'standings': (STANDING_COLUMNS, _standing_rows),
}


def _engine_header(engine: EngineIdentity) -> str:
    settings = json.dumps(engine.settings, sort_keys=True)
    return (
        f'# engine: {engine.name}\n'
        f'# engine settings: {settings}\n'
        f'# engine fingerprint: {engine.fingerprint}\n'
    )


def emit_report(report: Report, format: ReportFormat = 'json', table: ReportTable = 'auto') -> str:
    """Render a report as JSON or as one CSV table.

    JSON holds everything, with full float precision, and `load_report`
    reads it back to an equal report. CSV renders one table: `games`,
    `moves` or `standings` (`auto` picks standings when there are any);
    TPLVs have two decimals and per-game averages are truncated, not
    rounded. When the report names an engine, `#` comment lines with its
    name, settings and fingerprint come before the column row. Output is
    deterministic for a given report.

    Arguments:
        report: The report to render.
        format: `'json'` or `'csv'`.
        table: The CSV table, ignored for JSON.
    """
    if format == 'json':
        return json.dumps(ReportSchema().dump(report), indent=2, sort_keys=True) + '\n'
    if format != 'csv':
        raise DomainError(message=f'Unknown report format {format!r}.')
    if table == 'auto':
        table = 'standings' if report.standings else 'games'
    if table not in _TABLES:
        raise DomainError(message=f'Unknown report table {table!r}.')
    columns, rows = _TABLES[table]
    out = io.StringIO()
    if report.engine is not None:
        out.write(_engine_header(report.engine))
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(columns)
    writer.writerows(rows(report))
    return out.getvalue()


def load_report(text: str) -> Report:
    """Read a JSON report written by `emit_report`."""
    try:
        raw = json.loads(text)
    except ValueError as e:
        raise DomainError(message=f'Report is not valid JSON: {e}') from None
    try:
        data = ReportSchema().load(raw)
    except ValidationError as e:
        raise DomainError(message='Invalid report.', detail=e.messages) from None
    return Report(**data)
