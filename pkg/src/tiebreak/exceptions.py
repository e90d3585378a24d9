from __future__ import annotations

import typing as t


class TiebreakError(Exception):
    """The base exception of the toolkit. It ends the current command with a
    one-line diagnostic and a non-zero exit code.

    Examples:

    ```python
    from tiebreak.exceptions import TiebreakError

    raise TiebreakError(2, 'The report has no games.')
    ```

    Subclasses set `exit_code` and `message` as class attributes, so they
    can be raised without arguments.
    """

    exit_code: int = 1
    message: str | None = None
    detail: t.Any = {}

    def __init__(
        self,
        exit_code: int | None = None,
        message: str | None = None,
        detail: t.Any | None = None,
    ) -> None:
        """Initialize the error.

        Arguments:
            exit_code: The process exit code used by the command line
                interface, defaults to the class attribute (1 for the base class).
            message: The simple description of the error.
            detail: Additional structured information, for example the line
                and column of a syntax error or a partial result.
        """
        if exit_code is not None:
            if exit_code <= 0 or exit_code > 255:
                raise LookupError(f'Invalid exit code {exit_code!r}, must be in 1..255.')
            self.exit_code = exit_code
        if detail is not None:
            self.detail = detail
        if message is not None:
            self.message = message
        if self.message is None:
            self.message = 'Unknown error'
        super().__init__(self.message)

    def __str__(self) -> str:
        return str(self.message)


class DomainError(TiebreakError):
    """A precondition of a domain operation does not hold."""

    exit_code = 2
    message = 'Invalid input'


class ConfigError(TiebreakError):
    exit_code = 2
    message = 'Invalid configuration'


class EngineError(TiebreakError):
    """The engine could not be started, stopped answering, crashed or sent
    something that is not valid protocol output."""

    exit_code = 2
    message = 'Engine failure'


class HandshakeTimeout(EngineError):
    message = 'Engine handshake timed out'


class OptionRejected(EngineError):
    message = 'Engine rejected an option'


class PGNSyntaxError(TiebreakError):
    """The game record text could not be parsed.

    `lineno` and `col` are 1-based positions in the parsed text.
    """

    exit_code = 2
    message = 'Malformed PGN'

    def __init__(self, message: str | None = None, lineno: int = 0, col: int = 0) -> None:
        self.lineno = lineno
        self.col = col
        if message is not None and lineno:
            message = f'line {lineno}, column {col}: {message}'
        super().__init__(message=message, detail={'lineno': lineno, 'col': col})


class IllegalMoveError(PGNSyntaxError):
    message = 'Illegal move'

    def __init__(self, san: str, ply: int, lineno: int = 0, col: int = 0) -> None:
        self.san = san
        self.ply = ply
        super().__init__(f'illegal move {san!r} at ply {ply}', lineno, col)
        self.detail = {'lineno': lineno, 'col': col, 'ply': ply, 'san': san}


class AnnotationError(TiebreakError):
    """An annotation is incomplete. `detail['prefix_sum']` holds the pawn
    loss accumulated before the failure."""

    exit_code = 2
    message = 'Incomplete annotation'


class ResourceError(TiebreakError):
    exit_code = 4
    message = 'Resource bound exceeded'


class ThresholdTieWarning(UserWarning):
    """A relative threshold turned a TPLV difference into a tie that the
    exact comparison would have decided."""


def abort(exit_code: int, message: str | None = None, detail: t.Any | None = None) -> t.NoReturn:
    """A function to raise a `TiebreakError` with the given exit code.

    Arguments:
        exit_code: The process exit code.
        message: The simple description of the error.
        detail: Additional structured information.
    """
    raise TiebreakError(exit_code, message, detail)
