from .analysis import AnnotatedGame as AnnotatedGame
from .analysis import annotate_game as annotate_game
from .analysis import annotate_games as annotate_games
from .analysis import average_centipawn_loss as average_centipawn_loss
from .analysis import average_tplv as average_tplv
from .analysis import cumulative_tplv as cumulative_tplv
from .analysis import MoveAnnotation as MoveAnnotation
from .analysis import tplv as tplv
from .config import make_config as make_config
from .engine import EngineConfig as EngineConfig
from .engine import EngineScore as EngineScore
from .engine import EngineSessionPool as EngineSessionPool
from .engine import normalize_eval as normalize_eval
from .engine import start_session as start_session
from .exceptions import abort as abort
from .exceptions import TiebreakError as TiebreakError
from .gametree import AIEvaluation as AIEvaluation
from .gametree import check_tsp_mechanism as check_tsp_mechanism
from .gametree import check_tsp_play as check_tsp_play
from .gametree import GameTree as GameTree
from .gametree import Play as Play
from .gametree import scoring_rule_f as scoring_rule_f
from .pgn import GameRecord as GameRecord
from .pgn import parse_pgn as parse_pgn
from .report import emit_report as emit_report
from .report import load_report as load_report
from .report import Report as Report
from .scoring import score_annotated as score_annotated
from .scoring import score_game as score_game
from .scoring import ScoringRule as ScoringRule
from .scoring import tplv_compare as tplv_compare
from .tournament import rank_players as rank_players
