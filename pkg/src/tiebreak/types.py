from __future__ import annotations

import typing as t
from typing import Protocol

if t.TYPE_CHECKING:  # pragma: no cover
    from .engine import EngineScore  # noqa: F401
    from .engine import Evaluation  # noqa: F401
    from .engine import PositionRef  # noqa: F401
    from .gametree import ModifiedPlay  # noqa: F401
    from .gametree import AIEvaluation  # noqa: F401


Color = t.Literal['white', 'black']
GameResult = t.Literal['white-win', 'black-win', 'draw', 'unfinished']
TerminationType = t.Literal['normal', 'time-forfeit', 'other']
ScoreKind = t.Literal['cp', 'mate']
Perspective = t.Literal['side-to-move', 'white']
VariantType = t.Literal['def4', 'norway']
ThresholdModeType = t.Literal['exact', 'relative']
CompareResult = t.Literal['a_lower', 'b_lower', 'tie']
ScoreBasis = t.Literal['win', 'draw', 'time-forfeit-exception']
TiebreakUsed = t.Literal[
    'none', 'cumulative-tplv', 'average-tplv', 'avg-cpl', 'unresolved', 'champion'
]
TPLVBasis = t.Literal['cumulative', 'average']
PointsType = t.Literal['classical', 'ai']
ReportFormat = t.Literal['json', 'csv']
ReportTable = t.Literal['auto', 'games', 'moves', 'standings']
AnnotationKind = t.Literal['move', 'draw-offer', 'draw-acceptance']

NodeId = int
PlayerId = int
Decision = t.Tuple[NodeId, NodeId]
ScoreFnType = t.Callable[['AIEvaluation', 'ModifiedPlay'], t.Tuple[float, ...]]
MockTableType = t.Dict[str, t.Tuple[t.Optional[str], 'EngineScore']]


class EngineSession(Protocol):
    """Anything that answers position queries like a chess engine.

    Both the subprocess client and the table-driven mock satisfy it.
    """

    name: str
    transcript: t.List[str]
    healthy: bool

    def evaluate(self, pos: PositionRef) -> Evaluation:
        ...

    def close(self) -> None:
        ...
