from __future__ import annotations

import logging
import typing as t
import warnings
from dataclasses import dataclass
from dataclasses import field

import click
from flask import Config

from .analysis import AnalysisOptions
from .analysis import annotate_games
from .config import make_config
from .engine import EngineConfig
from .engine import EngineSessionPool
from .exceptions import DomainError
from .exceptions import PGNSyntaxError
from .exceptions import ThresholdTieWarning
from .exceptions import TiebreakError
from .gametree import BLACK
from .gametree import check_tsp_mechanism
from .gametree import game12_toy_tree
from .gametree import GameTree
from .gametree import generate_random_tree
from .gametree import get_mechanism
from .gametree import load_tree
from .gametree import MECHANISMS
from .gametree import TSPVerdict
from .pgn import GameRecord
from .pgn import parse_pgn
from .report import emit_report
from .report import load_report
from .report import Report
from .scoring import GameScore
from .scoring import score_annotated
from .scoring import ScoringRule
from .tournament import build_records
from .tournament import playoff_schedule
from .tournament import rank_players
from .types import ReportFormat
from .types import ReportTable


logger = logging.getLogger(__name__)

#: Exit code of `verify-tsp` and `demo-manipulation` when violations are found.
EXIT_VIOLATIONS = 3


@dataclass(frozen=True)
class RunConfig:
    """The resolved inputs of one command run."""

    subcommand: str
    inputs: t.Tuple[str, ...]
    settings: Config = field(compare=False, repr=False)
    output: t.Optional[str] = None

    @property
    def format(self) -> ReportFormat:
        return t.cast(ReportFormat, self.settings['REPORT_FORMAT'])

    @property
    def seed(self) -> t.Optional[int]:
        return t.cast(t.Optional[int], self.settings['SEED'])

    @property
    def engine(self) -> EngineConfig:
        return EngineConfig.from_config(self.settings)

    @property
    def rule(self) -> ScoringRule:
        return ScoringRule.from_config(self.settings)

    def write(self, text: str) -> None:
        if self.output is None:
            click.echo(text, nl=False)
            return
        with open(self.output, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info('Wrote %s', self.output)


def _run_config(
    ctx: click.Context,
    subcommand: str,
    inputs: t.Iterable[str] = (),
    output: t.Optional[str] = None,
    **overrides: t.Any,
) -> RunConfig:
    settings = make_config(ctx.obj.get('config_file'), **overrides)
    return RunConfig(subcommand, tuple(inputs), settings, output)


def _read(path: str) -> str:
    try:
        with open(path, encoding='utf-8-sig') as f:
            return f.read()
    except OSError as e:
        raise TiebreakError(2, f'Cannot read {path}: {e}') from e


def _warn(message: str) -> None:
    click.echo(f'Warning: {message}', err=True)


class TiebreakGroup(click.Group):
    """Turns every `TiebreakError` into a one-line diagnostic and its exit code."""

    def invoke(self, ctx: click.Context) -> t.Any:
        try:
            return super().invoke(ctx)
        except TiebreakError as e:
            click.echo(f'Error: {e.message}', err=True)
            ctx.exit(e.exit_code)


@click.group(cls=TiebreakGroup)
@click.option(
    '--config',
    'config_file',
    type=click.Path(exists=True, dir_okay=False),
    help='A JSON or YAML file whose keys mirror the command line flags.',
)
@click.option('--verbose', '-v', count=True, help='-v logs progress, -vv engine traffic.')
@click.pass_context
def cli(ctx: click.Context, config_file: t.Optional[str], verbose: int) -> None:
    """Judge chess tiebreaks by move quality.

    Settings come from tiebreak.settings, TIEBREAK_* environment variables,
    the --config file and the command line flags, in that order.
    """
    ctx.ensure_object(dict)
    ctx.obj['config_file'] = config_file
    if verbose:
        level = logging.DEBUG if verbose > 1 else logging.INFO
        # engine sessions switch chess.engine to DEBUG for their transcripts
        handler = logging.StreamHandler()
        handler.setLevel(level)
        handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
        logging.basicConfig(level=level, handlers=[handler])


def _engine_options(values: t.Sequence[str]) -> t.Optional[t.Dict[str, str]]:
    if not values:
        return None
    options = {}
    for value in values:
        name, sep, setting = value.partition('=')
        if not sep or not name.strip():
            raise click.BadParameter(f'{value!r} is not NAME=VALUE.', param_hint='--option')
        options[name.strip()] = setting.strip()
    return options


def _output_options(tables: t.Sequence[str]) -> t.Callable[[t.Callable], t.Callable]:
    def decorator(f: t.Callable) -> t.Callable:
        f = click.option(
            '--table',
            type=click.Choice(['auto', *tables]),
            default='auto',
            show_default=True,
            help='The CSV table to write.',
        )(f)
        f = click.option(
            '--format',
            'report_format',
            type=click.Choice(['json', 'csv']),
            help='Report format, defaults to REPORT_FORMAT config.',
        )(f)
        f = click.option(
            '--out', type=click.Path(dir_okay=False), help='Write the report here, not stdout.'
        )(f)
        return f

    return decorator


@cli.command('analyze', short_help='Annotate games with engine pawn losses.')
@click.argument('pgn_paths', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--engine', type=click.Path(), help='A UCI engine executable.')
@click.option('--engine-arg', 'engine_args', multiple=True, help='An engine command line argument.')
@click.option(
    '--mock', type=click.Path(exists=True, dir_okay=False), help='A mock engine table instead.'
)
@click.option('--depth', type=int, help='Search depth per position.')
@click.option('--movetime', type=int, help='Search time per position in milliseconds.')
@click.option('--mate-cap', type=float, help='Pawn value of a mate score.')
@click.option('--option', 'options', multiple=True, metavar='NAME=VALUE', help='An engine option.')
@click.option('--jobs', type=int, help='Number of engine sessions.')
@click.option('--skip-plies', type=int, help='Leave the first N plies unannotated.')
@click.option(
    '--draw-offer', 'draw_offers', type=int, multiple=True, help='Mark a draw offer at this ply.'
)
@click.option('--charge-acceptance/--no-charge-acceptance', default=None)
@click.option('--charge-declined-offers/--no-charge-declined-offers', default=None)
@click.option('--reeval', type=int, multiple=True, help='Evaluate this ply a second time.')
@_output_options(['games', 'moves'])
@click.pass_context
def analyze_command(
    ctx: click.Context,
    pgn_paths: t.Tuple[str, ...],
    engine: t.Optional[str],
    engine_args: t.Tuple[str, ...],
    mock: t.Optional[str],
    depth: t.Optional[int],
    movetime: t.Optional[int],
    mate_cap: t.Optional[float],
    options: t.Tuple[str, ...],
    jobs: t.Optional[int],
    skip_plies: t.Optional[int],
    draw_offers: t.Tuple[int, ...],
    charge_acceptance: t.Optional[bool],
    charge_declined_offers: t.Optional[bool],
    reeval: t.Tuple[int, ...],
    out: t.Optional[str],
    report_format: t.Optional[str],
    table: ReportTable,
) -> None:
    """Compute the pawn loss of every move and the TPLV of both players.

    Exits with 2 when any game could not be fully annotated; the report
    still holds the annotated prefix of that game.
    """
    run = _run_config(
        ctx,
        'analyze',
        pgn_paths,
        out,
        engine=engine,
        engine_args=list(engine_args) or None,
        mock=mock,
        depth=depth,
        movetime=movetime,
        mate_cap=mate_cap,
        options=_engine_options(options),
        jobs=jobs,
        skip_plies=skip_plies,
        charge_acceptance=charge_acceptance,
        charge_declined_offers=charge_declined_offers,
        format=report_format,
    )
    games: t.List[GameRecord] = []
    for path in pgn_paths:
        try:
            games.extend(parse_pgn(_read(path)))
        except PGNSyntaxError as e:
            e.message = f'{path}: {e.message}'
            raise
    if draw_offers:
        games = [g.with_draw_offers(p for p in draw_offers if p <= g.ply_count) for g in games]

    engine_config = run.engine
    if not games:
        run.write(emit_report(Report(), run.format, table))
        return
    analysis = AnalysisOptions.from_config(run.settings, reeval)
    size = min(run.settings['JOBS'], len(games))
    with EngineSessionPool(engine_config, size) as pool:
        annotated = annotate_games(games, pool, analysis)
        identity = pool.identity
    run.write(emit_report(Report(identity, games=tuple(annotated)), run.format, table))
    failed = [g for g in annotated if not g.complete]
    for game in failed:
        _warn(f'{game.record.label}: annotation incomplete ({game.error}).')
    if failed:
        ctx.exit(2)


def _score(game_label: str, score: t.Callable[[], GameScore]) -> GameScore:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always', ThresholdTieWarning)
        result = score()
    for warning in caught:
        _warn(f'{game_label}: {warning.message}')
    return result


@cli.command('score', short_help='Score annotated games with the AI scoring rule.')
@click.argument('report_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--rule', type=click.Choice(['def4', 'norway']), help='Scoring variant.')
@click.option('--threshold', type=float, help='Relative tie threshold, a fraction in [0, 1).')
@click.option('--threshold-mode', type=click.Choice(['exact', 'relative']))
@_output_options(['games'])
@click.pass_context
def score_command(
    ctx: click.Context,
    report_path: str,
    rule: t.Optional[str],
    threshold: t.Optional[float],
    threshold_mode: t.Optional[str],
    out: t.Optional[str],
    report_format: t.Optional[str],
    table: ReportTable,
) -> None:
    """Add game scores to an analysis report.

    Unfinished or incompletely annotated games are skipped with a warning.
    """
    run = _run_config(
        ctx,
        'score',
        [report_path],
        out,
        rule=rule,
        threshold=threshold,
        threshold_mode=threshold_mode,
        format=report_format,
    )
    scoring_rule = run.rule
    report = load_report(_read(report_path))
    scores: t.List[t.Optional[GameScore]] = []
    for game in report.games:
        label = game.record.label
        if game.record.result == 'unfinished' or not game.complete:
            _warn(f'skipping {label}: the game is unfinished or not fully annotated.')
            scores.append(None)
            continue
        scores.append(_score(label, lambda game=game: score_annotated(game, scoring_rule)))
    scored = Report(report.engine, scoring_rule, report.games, tuple(scores), report.standings)
    run.write(emit_report(scored, run.format, table))


@cli.command('rank', short_help='Rank tournament players with TPLV tiebreaks.')
@click.argument(
    'report_paths', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False)
)
@click.option(
    '--points',
    type=click.Choice(['classical', 'ai']),
    help='Raw score from classical points (1/0.5/0) or AI scoring-rule points.',
)
@click.option('--tplv-basis', type=click.Choice(['cumulative', 'average']))
@click.option('--champion', help='The reigning champion, who keeps an unresolved title tie.')
@click.option('--rule', type=click.Choice(['def4', 'norway']))
@click.option('--threshold', type=float)
@click.option('--threshold-mode', type=click.Choice(['exact', 'relative']))
@_output_options(['games', 'standings'])
@click.pass_context
def rank_command(
    ctx: click.Context,
    report_paths: t.Tuple[str, ...],
    points: t.Optional[str],
    tplv_basis: t.Optional[str],
    champion: t.Optional[str],
    rule: t.Optional[str],
    threshold: t.Optional[float],
    threshold_mode: t.Optional[str],
    out: t.Optional[str],
    report_format: t.Optional[str],
    table: ReportTable,
) -> None:
    """Rank the players of one or more analysis reports.

    Ties on raw score go to the lower TPLV, then the lower average
    centipawn loss. A two-way tie for first that survives both is
    reported with its playoff schedule.
    """
    run = _run_config(
        ctx,
        'rank',
        report_paths,
        out,
        points=points,
        tplv_basis=tplv_basis,
        rule=rule,
        threshold=threshold,
        threshold_mode=threshold_mode,
        format=report_format,
    )
    reports = [load_report(_read(path)) for path in report_paths]
    fingerprints = {g.fingerprint for r in reports for g in r.games}
    if len(fingerprints) > 1:
        _warn('the reports were produced with different engine settings.')
    games = []
    for report in reports:
        for game in report.games:
            if not game.complete:
                _warn(f'skipping {game.record.label}: annotation incomplete.')
                continue
            games.append(game)
    mode = run.settings['TOURNAMENT_POINTS']
    records = build_records(games, mode, run.rule)
    if not records:
        raise DomainError(message='The reports hold no finished games to rank.')
    standings = rank_players(records, champion, run.settings['TPLV_BASIS'])
    leaders = [s for s in standings if s.rank == 1]
    if len(leaders) == 2 and all(s.tiebreak_used == 'unresolved' for s in leaders):
        plan = playoff_schedule([s.player for s in leaders], standings)
        games_text = ', '.join(f'{p.white} (white) - {p.black}' for p in plan.games)
        _warn(f'first place is unresolved; playoff: {games_text}, repeated until decided.')
    engine = reports[0].engine if reports else None
    result = Report(
        engine,
        run.rule if mode == 'ai' else None,
        tuple(games),
        (),
        tuple(standings),
    )
    run.write(emit_report(result, run.format, table))


def _player(tree: GameTree, player: int) -> str:
    if tree.num_players == 2:
        return ('White', 'Black')[player]
    return f'player {player}'


def _echo_verdict(tree: GameTree, verdict: TSPVerdict, mechanism: str) -> None:
    if verdict.is_tsp:
        click.echo(f'{mechanism}: {verdict.plays_checked} plays checked, no violations (TSP).')
        return
    click.echo(
        f'{mechanism}: {verdict.plays_checked} plays checked, '
        f'{len(verdict.violations)} violation(s):'
    )
    for v in verdict.violations:
        click.echo(
            f'  {_player(tree, v.player)} at {tree.label(v.node)} chose {tree.label(v.chosen)}: '
            f'the best response {tree.label(v.best)} would score {v.f_best:.4f} '
            f'instead of {v.f_original:.4f} (lower is better)'
        )


@cli.command('verify-tsp', short_help='Check tiebreak strategyproofness on a game tree.')
@click.argument('tree_path', required=False, type=click.Path(exists=True, dir_okay=False))
@click.option(
    '--random',
    'random_tree',
    type=(int, int, int),
    metavar='DEPTH BRANCHING SEED',
    help='Check a random tree instead of a fixture.',
)
@click.option('--players', type=int, default=2, show_default=True)
@click.option(
    '--mechanism', type=click.Choice(sorted(MECHANISMS)), default='tplv', show_default=True
)
@click.option('--max-plays', type=int, help='Refuse trees with more plays than this.')
@click.pass_context
def verify_tsp_command(
    ctx: click.Context,
    tree_path: t.Optional[str],
    random_tree: t.Optional[t.Tuple[int, int, int]],
    players: int,
    mechanism: str,
    max_plays: t.Optional[int],
) -> None:
    """Check every play of a tree for a profitable sub-optimal move.

    Without a TREE_PATH or --random, the bundled game-12 model is checked.
    Exits with 3 when violations are found and 4 when the tree is too large.
    """
    if tree_path and random_tree:
        raise click.UsageError('Give either TREE_PATH or --random, not both.')
    run = _run_config(
        ctx, 'verify-tsp', [tree_path] if tree_path else [], max_plays=max_plays
    )
    if tree_path:
        tree, ai = load_tree(_read(tree_path))
    elif random_tree:
        depth, branching, seed = random_tree
        tree, ai = generate_random_tree(depth, branching, players, seed)
    else:
        tree, ai = game12_toy_tree()
    verdict = check_tsp_mechanism(
        get_mechanism(mechanism),
        ai,
        tree,
        max_plays=run.settings['MAX_PLAY_COUNT'],
        tolerance=run.settings['TSP_TOLERANCE'],
    )
    _echo_verdict(tree, verdict, mechanism)
    if not verdict.is_tsp:
        ctx.exit(EXIT_VIOLATIONS)


@cli.command('demo-manipulation', short_help='Show why rapid tiebreaks reward a draw offer.')
@click.option('--seed', type=int, help='Perturb the engine values with this seed.')
@click.option('--noise', type=float, help='Size of the perturbation in pawns.')
@click.option(
    '--mechanism',
    type=click.Choice(['all', *sorted(MECHANISMS)]),
    default='all',
    show_default=True,
)
@click.pass_context
def demo_manipulation_command(
    ctx: click.Context, seed: t.Optional[int], noise: t.Optional[float], mechanism: str
) -> None:
    """Replay the 2018 title match situation on a two-move model.

    Black, a pawn up, offers a draw that sends the match to rapid games,
    where Black is the favourite. Under a rapid-games tiebreak the offer
    beats the engine's best move; under the TPLV rule it never does.
    Exits with 0 when the TPLV rule shows no violation and 3 otherwise.
    """
    run = _run_config(ctx, 'demo-manipulation', seed=seed, noise=noise)
    tree, ai = game12_toy_tree()
    if run.seed is not None:
        noise_level = run.settings['DEMO_NOISE']
        ai = ai.perturbed(noise_level, run.seed)
        click.echo(f'Engine values perturbed by up to {noise_level} (seed {run.seed}).')
    best, offer = tree.children[tree.root]
    click.echo(
        f'Black to move: the best move is worth {ai.value(BLACK, best):+.2f}, '
        f'a draw offer {ai.value(BLACK, offer):+.2f} (pawns, Black\'s view).'
    )
    names = sorted(MECHANISMS) if mechanism == 'all' else [mechanism]
    tplv_clean = True
    for name in names:
        verdict = check_tsp_mechanism(
            get_mechanism(name),
            ai,
            tree,
            max_plays=run.settings['MAX_PLAY_COUNT'],
            tolerance=run.settings['TSP_TOLERANCE'],
        )
        _echo_verdict(tree, verdict, name)
        if name == 'tplv' and not verdict.is_tsp:
            tplv_clean = False
    if not tplv_clean:
        ctx.exit(EXIT_VIOLATIONS)

