import json
import sys

import pytest

from tiebreak.commands import cli
from tiebreak.engine import dump_mock_table
from tiebreak.pgn import parse_pgn
from tiebreak.report import emit_report
from tiebreak.report import load_report
from tiebreak.report import Report
from tiebreak.report import STANDING_COLUMNS
from tiebreak.scoring import GameScore

from .conftest import FAKE_ENGINE
from .mocks import make_annotated_game


@pytest.fixture
def game12_path(fixtures_dir):
    return str(fixtures_dir / 'game12_situation.pgn')


@pytest.fixture
def analyzed(cli_runner, tmp_path, game12_path, game12_table_path):
    """The game 12 analysis report, written with the mock engine."""
    out = tmp_path / 'analysis.json'
    result = cli_runner.invoke(
        cli, ['analyze', game12_path, '--mock', str(game12_table_path), '--out', str(out)]
    )
    assert result.exit_code == 0, result.output
    return out


def test_analyze(analyzed):
    report = load_report(analyzed.read_text(encoding='utf-8'))
    assert len(report.games) == 1
    game = report.games[0]
    assert game.complete
    assert game.tplv_white == pytest.approx(5.9)
    assert game.tplv_black == pytest.approx(6.2)
    assert game.fingerprint == report.engine.fingerprint
    assert report.scores == ()


def test_analyze_is_reproducible(cli_runner, tmp_path, analyzed, game12_path, game12_table_path):
    again = tmp_path / 'again.json'
    result = cli_runner.invoke(
        cli, ['analyze', game12_path, '--mock', str(game12_table_path), '--out', str(again)]
    )
    assert result.exit_code == 0
    assert again.read_bytes() == analyzed.read_bytes()


def test_analyze_to_stdout(cli_runner, game12_path, game12_table_path):
    result = cli_runner.invoke(
        cli,
        ['analyze', game12_path, '--mock', str(game12_table_path), '--format', 'csv'],
    )
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == '# engine: mock:game12.table'
    assert lines[3].startswith('game,event,round,white,black,')
    assert '5.90,6.20' in result.output


def test_analyze_moves_table(cli_runner, game12_path, game12_table_path):
    result = cli_runner.invoke(
        cli,
        [
            'analyze',
            game12_path,
            '--mock',
            str(game12_table_path),
            '--format',
            'csv',
            '--table',
            'moves',
            '--skip-plies',
            '4',
        ],
    )
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert [line[0] for line in lines[:3]] == ['#'] * 3
    assert lines[3].startswith('game,ply,mover,kind')
    assert lines[4].startswith('1,5,white,move')


def test_analyze_policy_flags(cli_runner, tmp_path, game12_path, game12_table_path):
    out = tmp_path / 'charged.json'
    result = cli_runner.invoke(
        cli,
        [
            'analyze',
            game12_path,
            '--mock',
            str(game12_table_path),
            '--draw-offer',
            '22',
            '--draw-offer',
            '999',
            '--charge-declined-offers',
            '--charge-acceptance',
            '--out',
            str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    game = load_report(out.read_text(encoding='utf-8')).games[0]
    assert game.tplv_black == pytest.approx(7.8)
    assert game.annotations[-1].kind == 'draw-acceptance'


def test_analyze_with_config_file(cli_runner, tmp_path, game12_path, game12_table_path):
    config = tmp_path / 'tiebreak.json'
    config.write_text(json.dumps({'mock': str(game12_table_path), 'skip-plies': 4}))
    out = tmp_path / 'report.json'
    result = cli_runner.invoke(
        cli, ['--config', str(config), 'analyze', game12_path, '--out', str(out)]
    )
    assert result.exit_code == 0, result.output
    assert load_report(out.read_text(encoding='utf-8')).games[0].tplv_white == pytest.approx(5.4)


def test_analyze_with_invalid_config(cli_runner, tmp_path, game12_path, game12_table_path):
    config = tmp_path / 'tiebreak.json'
    config.write_text(json.dumps({'depth': 0}))
    result = cli_runner.invoke(
        cli,
        ['--config', str(config), 'analyze', game12_path, '--mock', str(game12_table_path)],
    )
    assert result.exit_code == 2
    assert 'Error: Invalid configuration (DEPTH' in result.output


def test_analyze_corrupt_pgn(cli_runner, fixtures_dir, game12_table_path):
    path = str(fixtures_dir / 'corrupt.pgn')
    result = cli_runner.invoke(cli, ['analyze', path, '--mock', str(game12_table_path)])
    assert result.exit_code == 2
    assert f'Error: {path}: line 6' in result.output


def test_analyze_illegal_move(cli_runner, fixtures_dir, game12_table_path):
    path = str(fixtures_dir / 'illegal.pgn')
    result = cli_runner.invoke(cli, ['analyze', path, '--mock', str(game12_table_path)])
    assert result.exit_code == 2
    assert 'ply 3' in result.output


def test_analyze_empty_pgn(cli_runner, tmp_path, game12_table_path):
    path = tmp_path / 'empty.pgn'
    path.write_text('\n')
    out = tmp_path / 'empty.json'
    result = cli_runner.invoke(
        cli, ['analyze', str(path), '--mock', str(game12_table_path), '--out', str(out)]
    )
    assert result.exit_code == 0
    assert load_report(out.read_text(encoding='utf-8')).games == ()


def test_analyze_partial_annotation(cli_runner, tmp_path, game12_path, game12_pgn, game12_table):
    table = dict(game12_table)
    del table[parse_pgn(game12_pgn)[0].position(10).board().fen()]
    table_path = tmp_path / 'partial.table'
    table_path.write_text(dump_mock_table(table), encoding='utf-8')
    out = tmp_path / 'partial.json'
    result = cli_runner.invoke(
        cli, ['analyze', game12_path, '--mock', str(table_path), '--out', str(out)]
    )
    assert result.exit_code == 2
    assert 'Warning: Caruana, Fabiano - Carlsen, Magnus (round 12)' in result.output
    game = load_report(out.read_text(encoding='utf-8')).games[0]
    assert not game.complete
    assert [a.ply for a in game.annotations] == list(range(1, 10))


@pytest.mark.parametrize('option', ['Hash', '=32'])
def test_analyze_invalid_engine_option(cli_runner, game12_path, game12_table_path, option):
    result = cli_runner.invoke(
        cli, ['analyze', game12_path, '--mock', str(game12_table_path), '--option', option]
    )
    assert result.exit_code == 2
    assert 'is not NAME=VALUE' in result.output


def test_analyze_needs_an_engine(cli_runner, game12_path):
    result = cli_runner.invoke(cli, ['analyze', game12_path])
    assert result.exit_code == 2
    assert result.output.startswith('Error: ')


def test_analyze_with_engine_process(cli_runner, tmp_path):
    pgn = tmp_path / 'short.pgn'
    pgn.write_text('1. e4 e5 1/2-1/2\n')
    out = tmp_path / 'short.json'
    result = cli_runner.invoke(
        cli,
        [
            'analyze',
            str(pgn),
            '--engine',
            sys.executable,
            '--engine-arg',
            str(FAKE_ENGINE),
            '--depth',
            '2',
            '--option',
            'Hash=32',
            '--out',
            str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    report = load_report(out.read_text(encoding='utf-8'))
    assert report.engine.name == 'FakeFish 1.0'
    assert report.games[0].tplv_white == pytest.approx(0.44)


def test_score(cli_runner, tmp_path, analyzed):
    out = tmp_path / 'scored.json'
    result = cli_runner.invoke(cli, ['score', str(analyzed), '--out', str(out)])
    assert result.exit_code == 0, result.output
    report = load_report(out.read_text(encoding='utf-8'))
    assert report.scores == (GameScore(2, 1, 'white', 'draw'),)
    assert report.rule.variant == 'def4'


def test_score_norway_csv(cli_runner, analyzed):
    result = cli_runner.invoke(
        cli, ['score', str(analyzed), '--rule', 'norway', '--format', 'csv']
    )
    assert result.exit_code == 0
    assert ',1.5,1,white,draw,' in result.output


def test_score_relative_threshold_warns(cli_runner, tmp_path, analyzed):
    out = tmp_path / 'scored.json'
    result = cli_runner.invoke(
        cli,
        [
            'score',
            str(analyzed),
            '--threshold-mode',
            'relative',
            '--threshold',
            '0.05',
            '--out',
            str(out),
        ],
    )
    assert result.exit_code == 0
    assert 'Warning: Caruana, Fabiano - Carlsen, Magnus (round 12)' in result.output
    report = load_report(out.read_text(encoding='utf-8'))
    assert report.scores == (GameScore(1.5, 1.5, None, 'draw'),)


def test_score_skips_incomplete_games(cli_runner, tmp_path, game12_path, game12_pgn, game12_table):
    table = dict(game12_table)
    del table[parse_pgn(game12_pgn)[0].position(4).board().fen()]
    table_path = tmp_path / 'partial.table'
    table_path.write_text(dump_mock_table(table), encoding='utf-8')
    analysis = tmp_path / 'partial.json'
    cli_runner.invoke(
        cli, ['analyze', game12_path, '--mock', str(table_path), '--out', str(analysis)]
    )
    out = tmp_path / 'scored.json'
    result = cli_runner.invoke(cli, ['score', str(analysis), '--out', str(out)])
    assert result.exit_code == 0
    assert 'Warning: skipping' in result.output
    assert load_report(out.read_text(encoding='utf-8')).scores == (None,)


def test_score_invalid_report(cli_runner, tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text('[')
    result = cli_runner.invoke(cli, ['score', str(path)])
    assert result.exit_code == 2
    assert 'Error: Report is not valid JSON' in result.output


def test_rank(cli_runner, tmp_path, analyzed):
    out = tmp_path / 'standings.csv'
    result = cli_runner.invoke(
        cli, ['rank', str(analyzed), '--format', 'csv', '--out', str(out)]
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding='utf-8').splitlines()
    assert lines[0] == '# engine: mock:game12.table'
    assert lines[3] == ','.join(STANDING_COLUMNS)
    assert lines[4].startswith('1,"Caruana, Fabiano",0.5,5.90,5.90,')
    assert lines[4].endswith(',1,cumulative-tplv')
    assert lines[5].startswith('2,"Carlsen, Magnus",0.5,6.20,')


def test_rank_with_ai_points(cli_runner, tmp_path, analyzed):
    out = tmp_path / 'standings.json'
    result = cli_runner.invoke(cli, ['rank', str(analyzed), '--points', 'ai', '--out', str(out)])
    assert result.exit_code == 0, result.output
    report = load_report(out.read_text(encoding='utf-8'))
    assert [(s.player, s.raw_score, s.tiebreak_used) for s in report.standings] == [
        ('Caruana, Fabiano', 2, 'none'),
        ('Carlsen, Magnus', 1, 'none'),
    ]
    assert report.rule is not None


def test_rank_unresolved_title_tie(cli_runner, tmp_path, analyzed):
    out = tmp_path / 'standings.json'
    result = cli_runner.invoke(
        cli, ['rank', str(analyzed), str(analyzed), '--tplv-basis', 'average', '--out', str(out)]
    )
    # the same game twice: both players on 1 point, averages differ
    assert result.exit_code == 0, result.output
    standings = load_report(out.read_text(encoding='utf-8')).standings
    assert [s.rank for s in standings] == [1, 2]
    assert standings[0].tiebreak_used == 'average-tplv'


def test_rank_champion(cli_runner, tmp_path):
    game = make_annotated_game('Champion', 'Challenger', 'draw', [1.0], [1.0])
    path = tmp_path / 'match.json'
    path.write_text(emit_report(Report(games=(game,))), encoding='utf-8')
    result = cli_runner.invoke(cli, ['rank', str(path), '--format', 'csv', '--table', 'standings'])
    assert result.exit_code == 0
    assert 'Warning: first place is unresolved; playoff: Challenger (white) - Champion' in (
        result.output
    )
    result = cli_runner.invoke(
        cli, ['rank', str(path), '--champion', 'Champion', '--format', 'csv']
    )
    assert result.exit_code == 0
    assert '1,Champion,0.5,1.00,1.00,100.00,1,champion' in result.output


def test_rank_nothing_to_rank(cli_runner, tmp_path):
    path = tmp_path / 'empty.json'
    path.write_text('{}')
    result = cli_runner.invoke(cli, ['rank', str(path)])
    assert result.exit_code == 2
    assert 'Error: The reports hold no finished games to rank.' in result.output


def test_verify_tsp_default_tree(cli_runner):
    result = cli_runner.invoke(cli, ['verify-tsp'])
    assert result.exit_code == 0
    assert result.output == 'tplv: 4 plays checked, no violations (TSP).\n'


def test_verify_tsp_finds_violations(cli_runner):
    result = cli_runner.invoke(cli, ['verify-tsp', '--mechanism', 'fastchess-demo'])
    assert result.exit_code == 3
    lines = result.output.splitlines()
    assert lines == [
        'fastchess-demo: 4 plays checked, 2 violation(s):',
        '  Black at start chose draw-offer: the best response best-move would score -0.6000 '
        'instead of -0.8000 (lower is better)',
        '  White at draw-offer chose decline: the best response accept would score -0.2000 '
        'instead of -0.4000 (lower is better)',
    ]


def test_verify_tsp_tree_file(cli_runner, fixtures_dir):
    result = cli_runner.invoke(cli, ['verify-tsp', str(fixtures_dir / 'toy_tree.json')])
    assert result.exit_code == 0
    assert 'no violations' in result.output


@pytest.mark.parametrize('players', ['2', '3'])
def test_verify_tsp_random_tree(cli_runner, players):
    result = cli_runner.invoke(
        cli, ['verify-tsp', '--random', '3', '2', '5', '--players', players]
    )
    assert result.exit_code == 0
    assert result.output == 'tplv: 8 plays checked, no violations (TSP).\n'


def test_verify_tsp_play_bound(cli_runner):
    result = cli_runner.invoke(cli, ['verify-tsp', '--max-plays', '1'])
    assert result.exit_code == 4
    assert result.output.startswith('Error: ')


def test_verify_tsp_tree_or_random(cli_runner, fixtures_dir):
    result = cli_runner.invoke(
        cli, ['verify-tsp', str(fixtures_dir / 'toy_tree.json'), '--random', '2', '2', '1']
    )
    assert result.exit_code == 2
    assert 'not both' in result.output


def test_verify_tsp_invalid_tree(cli_runner, tmp_path):
    path = tmp_path / 'tree.json'
    path.write_text('{"nodes": []}')
    result = cli_runner.invoke(cli, ['verify-tsp', str(path)])
    assert result.exit_code == 2
    assert 'Error: Invalid tree fixture.' in result.output


def test_demo_manipulation(cli_runner):
    result = cli_runner.invoke(cli, ['demo-manipulation'])
    assert result.exit_code == 0
    assert 'Black to move: the best move is worth +1.00, a draw offer +0.00' in result.output
    assert 'fastchess-demo: 4 plays checked, 2 violation(s):' in result.output
    assert 'tplv: 4 plays checked, no violations (TSP).' in result.output


def test_demo_manipulation_with_noise(cli_runner):
    result = cli_runner.invoke(
        cli, ['demo-manipulation', '--seed', '3', '--noise', '0.1', '--mechanism', 'tplv']
    )
    assert result.exit_code == 0
    assert 'Engine values perturbed by up to 0.1 (seed 3).' in result.output
    assert 'fastchess-demo' not in result.output


def test_demo_manipulation_is_reproducible(cli_runner):
    args = ['demo-manipulation', '--seed', '7']
    assert cli_runner.invoke(cli, args).output == cli_runner.invoke(cli, args).output


def test_help(cli_runner):
    result = cli_runner.invoke(cli, ['--help'])
    assert result.exit_code == 0
    for name in ('analyze', 'score', 'rank', 'verify-tsp', 'demo-manipulation'):
        assert name in result.output
