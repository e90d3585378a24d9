from __future__ import annotations

import asyncio
import logging
import os
import queue
import subprocess
import threading
import typing as t
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field

import chess
import chess.engine

from .exceptions import ConfigError
from .exceptions import DomainError
from .exceptions import EngineError
from .exceptions import HandshakeTimeout
from .exceptions import OptionRejected
from .helpers import settings_fingerprint
from .types import Color
from .types import EngineSession
from .types import MockTableType
from .types import Perspective
from .types import ScoreKind


logger = logging.getLogger(__name__)

#: Largest centipawn magnitude accepted from an engine.
CP_LIMIT = 100_000

_T = t.TypeVar('_T')
_R = t.TypeVar('_R')


@dataclass(frozen=True)
class EngineScore:
    """A raw engine score.

    `value` is centipawns for `kind='cp'` and moves to mate for `kind='mate'`
    (negative when the side the score belongs to gets mated).
    """

    kind: ScoreKind
    value: int
    perspective: Perspective = 'side-to-move'

    def __post_init__(self) -> None:
        if self.kind not in ('cp', 'mate'):
            raise DomainError(message=f'Unknown score kind {self.kind!r}.')
        if self.perspective not in ('side-to-move', 'white'):
            raise DomainError(message=f'Unknown score perspective {self.perspective!r}.')
        if self.kind == 'mate' and self.value == 0:
            raise DomainError(message='A mate score cannot be mate in 0.')
        if self.kind == 'cp' and abs(self.value) > CP_LIMIT:
            raise DomainError(message=f'Centipawn score {self.value} is out of range.')

    def __str__(self) -> str:
        return f'{self.kind} {self.value}'


def normalize_eval(
    score: EngineScore, player: Color, side_to_move: Color, mate_cap: float
) -> float:
    """Convert an engine score to pawn units from `player`'s point of view.

    Centipawns are divided by 100 and clamped to `±mate_cap`; any mate score
    saturates at `±mate_cap` with the sign of the winning side.

    ```python
    >>> normalize_eval(EngineScore('cp', -100, 'white'), 'black', 'black', 10.0)
    1.0
    ```
    """
    if mate_cap <= 0:
        raise DomainError(message=f'mate_cap must be positive, got {mate_cap}.')
    owner = 'white' if score.perspective == 'white' else side_to_move
    if score.kind == 'mate':
        pawns = mate_cap if score.value > 0 else -mate_cap
    else:
        pawns = max(-mate_cap, min(mate_cap, score.value / 100))
    return (pawns if player == owner else -pawns) + 0.0


@dataclass(frozen=True)
class EngineConfig:
    """Engine settings for one run.

    Exactly one of `executable` and `mock_table` is set, and exactly one of
    `depth` and `movetime` (milliseconds).
    """

    executable: t.Optional[str] = None
    mock_table: t.Union[str, 'os.PathLike[str]', MockTableType, None] = None
    args: t.Tuple[str, ...] = ()
    depth: t.Optional[int] = 18
    movetime: t.Optional[int] = None
    options: t.Mapping[str, str] = field(default_factory=dict)
    mate_cap: float = 10.0
    handshake_timeout: float = 10.0
    search_timeout: t.Optional[float] = 300.0

    def __post_init__(self) -> None:
        if (self.executable is None) == (self.mock_table is None):
            raise ConfigError(message='Set exactly one of an engine executable and a mock table.')
        if (self.depth is None) == (self.movetime is None):
            raise ConfigError(message='Set exactly one search limit: depth or movetime.')
        limit = self.depth if self.depth is not None else self.movetime
        if t.cast(int, limit) <= 0:
            raise ConfigError(message=f'The search limit must be positive, got {limit}.')
        if self.mate_cap <= 0:
            raise ConfigError(message=f'mate_cap must be positive, got {self.mate_cap}.')
        object.__setattr__(self, 'args', tuple(self.args))

    @classmethod
    def from_config(cls, config: t.Mapping[str, t.Any]) -> EngineConfig:
        """Build the engine settings from a `flask.Config` or any mapping of
        upper-case setting names."""
        movetime = config.get('MOVETIME')
        return cls(
            executable=config.get('ENGINE_PATH'),
            mock_table=config.get('MOCK_TABLE'),
            args=tuple(config.get('ENGINE_ARGS') or ()),
            depth=None if movetime is not None else config.get('DEPTH', 18),
            movetime=movetime,
            options=dict(config.get('ENGINE_OPTIONS') or {}),
            mate_cap=config.get('MATE_CAP', 10.0),
            handshake_timeout=config.get('HANDSHAKE_TIMEOUT', 10.0),
            search_timeout=config.get('SEARCH_TIMEOUT', 300.0),
        )

    @property
    def limit(self) -> chess.engine.Limit:
        """The search limit, as `go depth N` or `go movetime MS`."""
        if self.depth is not None:
            return chess.engine.Limit(depth=self.depth)
        return chess.engine.Limit(time=t.cast(int, self.movetime) / 1000)

    @property
    def settings(self) -> t.Dict[str, t.Any]:
        """The settings that influence evaluations, as stamped into reports."""
        return {
            'depth': self.depth,
            'movetime': self.movetime,
            'options': dict(sorted(self.options.items())),
            'mate_cap': self.mate_cap,
        }


@dataclass(frozen=True)
class EngineIdentity:
    name: str
    settings: t.Mapping[str, t.Any] = field(default_factory=dict)

    @property
    def fingerprint(self) -> str:
        return settings_fingerprint({'name': self.name, **self.settings})


@dataclass(frozen=True)
class PositionRef:
    """A position given as a start position plus coordinate moves."""

    start_fen: t.Optional[str] = None
    moves: t.Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, 'moves', tuple(self.moves))

    def board(self) -> chess.Board:
        try:
            board = chess.Board(self.start_fen) if self.start_fen else chess.Board()
        except ValueError as e:
            raise DomainError(message=f'Invalid FEN {self.start_fen!r}: {e}') from e
        for ply, uci in enumerate(self.moves, 1):
            try:
                move = chess.Move.from_uci(uci)
            except ValueError as e:
                raise DomainError(message=f'Malformed move {uci!r} at ply {ply}.') from e
            if not board.is_legal(move):
                raise DomainError(message=f'Illegal move {uci!r} at ply {ply}.')
            board.push(move)
        return board

    @property
    def command(self) -> str:
        head = f'position fen {self.start_fen}' if self.start_fen else 'position startpos'
        return f'{head} moves {" ".join(self.moves)}' if self.moves else head

    def child(self, uci: str) -> PositionRef:
        return PositionRef(self.start_fen, (*self.moves, uci))


@dataclass(frozen=True)
class Evaluation:
    best_move: t.Optional[str]
    score: EngineScore
    depth: t.Optional[int] = None
    lines: t.Tuple[str, ...] = ()


def _no_moves_left(board: chess.Board) -> None:
    if not any(board.legal_moves):
        raise DomainError(message=f'No legal moves in {board.fen()}, the game is over.')


#: python-chess logs every protocol line through this logger.
ENGINE_LOGGER = logging.getLogger('chess.engine')

_TRAFFIC = {'%s: << %s': '>', '%s: >> %s': '<'}
_SEARCH_INFO = chess.engine.INFO_BASIC | chess.engine.INFO_SCORE


class _TranscriptHandler(logging.Handler):
    """Copies the protocol lines of one engine from the `chess.engine` log."""

    def __init__(self, transcript: t.List[str]) -> None:
        super().__init__(logging.DEBUG)
        self.transcript = transcript
        self.protocol: t.Optional[object] = None

    def emit(self, record: logging.LogRecord) -> None:
        direction = _TRAFFIC.get(str(record.msg))
        if direction is None or not isinstance(record.args, tuple) or len(record.args) != 2:
            return
        owner, line = record.args
        if self.protocol is None:
            self.protocol = owner
        if owner is self.protocol:
            self.transcript.append(f'{direction} {line}')


async def _search(
    protocol: chess.engine.Protocol, board: chess.Board, limit: chess.engine.Limit
) -> t.Tuple[chess.engine.BestMove, chess.engine.InfoDict]:
    # leaving the block sends `stop` if the search is cancelled
    with await protocol.analysis(board, limit, info=_SEARCH_INFO) as analysis:
        best = await analysis.wait()
        return best, analysis.info.copy()


def _engine_score(score: chess.engine.Score) -> EngineScore:
    if score.is_mate():
        return EngineScore('mate', t.cast(int, score.mate()))
    return EngineScore('cp', t.cast(int, score.score()))


class UCIEngineSession:
    """A chess engine subprocess driven over UCI by `chess.engine.SimpleEngine`.

    The session is ready to evaluate after construction: the `uci` handshake
    has completed, every configured option is set and the engine answered
    `readyok`. One search runs at a time; a failed or timed-out search is
    stopped and drained up to `bestmove` before the next one starts. The
    protocol lines of this engine are copied from the `chess.engine` debug
    log into `transcript`.

    Examples:

    ```python
    from tiebreak.engine import EngineConfig, PositionRef, UCIEngineSession

    config = EngineConfig(executable='stockfish', depth=18)
    with UCIEngineSession(config) as session:
        evaluation = session.evaluate(PositionRef(moves=('e2e4',)))
    ```
    """

    def __init__(self, config: EngineConfig) -> None:
        if config.executable is None:
            raise ConfigError(message='UCIEngineSession needs an engine executable.')
        self.config = config
        self.name = 'unknown'
        self.author: t.Optional[str] = None
        self.declared_options: t.Dict[str, str] = {}
        self.transcript: t.List[str] = []
        self.healthy = True
        self._engine: t.Optional[chess.engine.SimpleEngine] = None
        self._handler = _TranscriptHandler(self.transcript)
        if not ENGINE_LOGGER.isEnabledFor(logging.DEBUG):
            ENGINE_LOGGER.setLevel(logging.DEBUG)
        ENGINE_LOGGER.addHandler(self._handler)
        try:
            self._start()
        except BaseException:
            self.close()
            raise

    def __enter__(self) -> UCIEngineSession:
        return self

    def __exit__(self, *exc_info: t.Any) -> None:
        self.close()

    def _start(self) -> None:
        config = self.config
        command = [t.cast(str, config.executable), *config.args]
        try:
            self._engine = chess.engine.SimpleEngine.popen_uci(
                command, timeout=config.handshake_timeout, stderr=subprocess.DEVNULL
            )
        except (asyncio.TimeoutError, TimeoutError) as e:
            raise HandshakeTimeout(
                message=f'Engine {config.executable!r} did not finish the handshake in '
                f'{config.handshake_timeout}s.'
            ) from e
        except OSError as e:
            raise EngineError(message=f'Cannot start engine {config.executable!r}: {e}') from e
        except chess.engine.EngineError as e:
            raise EngineError(message=f'Engine {config.executable!r} failed to start: {e}') from e
        self._handler.protocol = self._engine.protocol
        self.name = self._engine.id.get('name', 'unknown')
        self.author = self._engine.id.get('author')
        self.declared_options = {
            name.lower(): option.name for name, option in self._engine.options.items()
        }
        logger.info('Started engine %r (%s)', self.name, config.executable)
        for name in config.options:
            if name.lower() not in self.declared_options:
                raise OptionRejected(
                    message=f'Engine {self.name!r} does not declare option {name!r}.',
                    detail={'option': name},
                )
        try:
            self._engine.configure(
                {self.declared_options[k.lower()]: v for k, v in config.options.items()}
            )
            self._engine.ping()
        except (asyncio.TimeoutError, TimeoutError) as e:
            raise HandshakeTimeout(message=f'Engine {self.name!r} did not answer isready.') from e
        except chess.engine.EngineError as e:
            raise OptionRejected(message=f'Engine {self.name!r} rejected an option: {e}') from e
        logger.info('Engine %r ready', self.name)

    def evaluate(self, pos: PositionRef) -> Evaluation:
        """Search `pos` at the configured limit and return the best move and score."""
        board = pos.board()
        _no_moves_left(board)
        if self._engine is None:
            raise EngineError(message=f'Engine {self.name!r} is closed.')
        start = len(self.transcript)
        coro = asyncio.wait_for(
            _search(self._engine.protocol, board, self.config.limit), self.config.search_timeout
        )
        try:
            best, info = asyncio.run_coroutine_threadsafe(coro, self._engine.protocol.loop).result()
        except (asyncio.TimeoutError, TimeoutError) as e:
            self.healthy = False
            raise EngineError(message=f'Engine {self.name!r} did not answer in time.') from e
        except chess.engine.EngineTerminatedError as e:
            self.healthy = False
            raise EngineError(message=f'Engine {self.name!r} exited unexpectedly: {e}') from e
        except chess.engine.EngineError as e:
            raise EngineError(message=f'Engine {self.name!r} broke the protocol: {e}') from e
        lines = tuple(self.transcript[start:])
        pov = info.get('score')
        if pov is None:
            raise EngineError(
                message=f'Engine {self.name!r} sent bestmove without a score.',
                detail={'lines': list(lines)},
            )
        try:
            score = _engine_score(pov.relative)
        except DomainError as e:
            raise EngineError(message=f'Engine {self.name!r} sent {e.message}') from e
        move = best.move.uci() if best.move else None
        return Evaluation(move, score, info.get('depth'), lines)

    def close(self) -> None:
        if self._engine is not None:
            engine, self._engine = self._engine, None
            if self.healthy:
                try:
                    engine.quit()
                except (chess.engine.EngineError, asyncio.TimeoutError, TimeoutError):
                    pass
            engine.close()
        ENGINE_LOGGER.removeHandler(self._handler)


def _epd(fen: str) -> str:
    return ' '.join(fen.split()[:4])


class MockEngineSession:
    """A table-driven engine: every position is looked up by FEN, falling
    back to the first four FEN fields."""

    healthy = True

    def __init__(
        self, table: MockTableType, name: str = 'mock', depth: t.Optional[int] = None
    ) -> None:
        self.name = name
        self.depth = depth
        self.table = dict(table)
        self.transcript: t.List[str] = []
        self._by_epd: t.Dict[str, t.Tuple[t.Optional[str], EngineScore]] = {}
        for key, entry in self.table.items():
            self._by_epd.setdefault(_epd(key), entry)

    def __enter__(self) -> MockEngineSession:
        return self

    def __exit__(self, *exc_info: t.Any) -> None:
        self.close()

    def evaluate(self, pos: PositionRef) -> Evaluation:
        board = pos.board()
        _no_moves_left(board)
        fen = board.fen()
        entry = self.table.get(fen) or self._by_epd.get(_epd(fen))
        if entry is None:
            raise EngineError(message=f'Mock table has no entry for {fen!r}.')
        best, score = entry
        lines = (
            f'> {pos.command}',
            f'> go depth {self.depth}' if self.depth else '> go',
            f'< info depth {self.depth or 1} score {score}',
            f'< bestmove {best or "(none)"}',
        )
        self.transcript.extend(lines)
        logger.debug('mock %s -> %s %s', fen, best, score)
        return Evaluation(best, score, self.depth, lines)

    def close(self) -> None:
        pass


def load_mock_table(text: str) -> MockTableType:
    """Parse a mock engine table.

    One entry per line, `#` starts a comment:

    ```
    rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1 | e2e4 | cp 30
    ```

    Scores are from the side to move. A best move of `-` or `(none)` means
    the engine has no move to suggest.
    """
    table: MockTableType = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        parts = [part.strip() for part in line.split('|')]
        if len(parts) != 3:
            raise ConfigError(message=f'Mock table line {lineno}: expected "FEN | move | score".')
        fen, best, score_text = parts
        try:
            kind, value = score_text.split()
            score = EngineScore(t.cast(ScoreKind, kind), int(value))
        except (ValueError, DomainError) as e:
            raise ConfigError(message=f'Mock table line {lineno}: bad score {score_text!r}.') from e
        table[fen] = (None if best in ('-', '(none)', '') else best, score)
    return table


def dump_mock_table(table: MockTableType) -> str:
    lines = ['# FEN | bestmove | score (side to move)']
    for fen, (best, score) in table.items():
        lines.append(f'{fen} | {best or "-"} | {score.kind} {score.value}')
    return '\n'.join(lines) + '\n'


def _resolve_mock_table(config: EngineConfig) -> t.Tuple[MockTableType, str]:
    source = config.mock_table
    if isinstance(source, Mapping):
        return source, 'mock'
    path = os.fspath(t.cast(str, source))
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise EngineError(message=f'Cannot read mock table {path!r}: {e}') from e
    return load_mock_table(text), f'mock:{os.path.basename(path)}'


def start_session(config: EngineConfig) -> EngineSession:
    """Open an engine session for `config`: a subprocess client for an
    executable or a `MockEngineSession` for a mock table."""
    if config.mock_table is not None:
        table, name = _resolve_mock_table(config)
        return MockEngineSession(table, name=name, depth=config.depth)
    return UCIEngineSession(config)


def evaluate(session: EngineSession, pos: PositionRef) -> Evaluation:
    return session.evaluate(pos)


def identify(session: EngineSession, config: EngineConfig) -> EngineIdentity:
    return EngineIdentity(session.name, config.settings)


class EngineSessionPool:
    """A fixed set of engine sessions shared by a thread pool.

    Each task borrows one session for its whole duration, so a session never
    serves two requests at once. A session that died or stopped answering is
    closed and replaced by a fresh one before it is lent again.
    """

    def __init__(self, config: EngineConfig, size: int = 1) -> None:
        if size < 1:
            raise ConfigError(message=f'The pool needs at least one session, got {size}.')
        self.config = config
        self.size = size
        self.sessions: t.List[EngineSession] = []
        self._idle: queue.Queue[EngineSession] = queue.Queue()
        self._lock = threading.Lock()
        try:
            for _ in range(size):
                session = start_session(config)
                self.sessions.append(session)
                self._idle.put(session)
        except BaseException:
            self.close()
            raise

    def __enter__(self) -> EngineSessionPool:
        return self

    def __exit__(self, *exc_info: t.Any) -> None:
        self.close()

    @property
    def identity(self) -> EngineIdentity:
        return identify(self.sessions[0], self.config)

    def _replace(self, session: EngineSession) -> EngineSession:
        session.close()
        try:
            fresh = start_session(self.config)
        except EngineError as e:
            logger.error('Cannot restart engine %r: %s', session.name, e.message)
            return session
        with self._lock:
            self.sessions[self.sessions.index(session)] = fresh
        logger.warning('Restarted engine %r after a failure', session.name)
        return fresh

    def _run(self, fn: t.Callable[[EngineSession, _T], _R], item: _T) -> _R:
        session = self._idle.get()
        try:
            return fn(session, item)
        finally:
            if not session.healthy:
                session = self._replace(session)
            self._idle.put(session)

    def map(self, fn: t.Callable[[EngineSession, _T], _R], items: t.Iterable[_T]) -> t.List[_R]:
        """Apply `fn(session, item)` to every item; results keep input order."""
        if self.size == 1:
            return [self._run(fn, item) for item in items]
        with ThreadPoolExecutor(max_workers=self.size) as executor:
            return list(executor.map(lambda item: self._run(fn, item), items))

    def close(self) -> None:
        for session in self.sessions:
            session.close()
        self.sessions = []
