from __future__ import annotations

import typing as t


# Engine
ENGINE_PATH: str | None = None
ENGINE_ARGS: list[str] = []
MOCK_TABLE: str | None = None
DEPTH: int | None = 18
MOVETIME: int | None = None
ENGINE_OPTIONS: dict[str, str] = {}
HANDSHAKE_TIMEOUT: float = 10.0
SEARCH_TIMEOUT: float | None = 300.0
# Pawn units; mate scores saturate here and centipawn scores are clamped to it
MATE_CAP: float = 10.0
# Annotation
SKIP_PLIES: int = 0
CHARGE_ACCEPTANCE: bool = False
CHARGE_DECLINED_OFFERS: bool = False
# Game scoring
RULE: t.Literal['def4', 'norway'] = 'def4'
THRESHOLD: float = 0.0
THRESHOLD_MODE: t.Literal['exact', 'relative'] = 'exact'
ABSOLUTE_EPSILON: float = 1e-9
# Tournament ranking
TOURNAMENT_POINTS: t.Literal['classical', 'ai'] = 'classical'
TPLV_BASIS: t.Literal['cumulative', 'average'] = 'cumulative'
# TSP verification
TSP_TOLERANCE: float = 1e-9
MAX_PLAY_COUNT: int = 1_000_000
DEMO_NOISE: float = 0.05
# Output and execution
REPORT_FORMAT: t.Literal['json', 'csv'] = 'json'
JOBS: int = 1
SEED: int | None = None
