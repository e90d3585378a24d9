from __future__ import annotations

import json
import typing as t

from marshmallow import EXCLUDE
from marshmallow import post_load
from marshmallow import RAISE
from marshmallow import Schema as BaseSchema
from marshmallow import validates_schema
from marshmallow import ValidationError
from marshmallow.fields import Boolean
from marshmallow.fields import Dict
from marshmallow.fields import Float
from marshmallow.fields import Integer
from marshmallow.fields import List
from marshmallow.fields import Nested
from marshmallow.fields import Raw
from marshmallow.fields import String
from marshmallow.fields import Tuple
from marshmallow.validate import Length
from marshmallow.validate import OneOf
from marshmallow.validate import Range

from .analysis import AnnotatedGame
from .analysis import MoveAnnotation
from .engine import EngineIdentity
from .exceptions import DomainError
from .gametree import AIEvaluation
from .gametree import GameTree
from .pgn import DrawOffer
from .pgn import GameRecord
from .pgn import MoveRecord
from .pgn import RESULT_TOKENS
from .scoring import GameScore
from .scoring import ScoringRule
from .tournament import Standing


COLORS = ('white', 'black')


class Schema(BaseSchema):
    """A base schema for all schemas. Equivalent to `marshmallow.Schema`
    with unknown fields ignored on load."""

    class Meta:
        unknown = EXCLUDE


class SettingsSchema(BaseSchema):
    """Validates a merged configuration. Unknown keys are rejected so a
    misspelt setting does not pass silently."""

    class Meta:
        unknown = RAISE

    ENGINE_PATH = String(allow_none=True)
    ENGINE_ARGS = List(String())
    MOCK_TABLE = String(allow_none=True)
    DEPTH = Integer(allow_none=True, validate=Range(min=1))
    MOVETIME = Integer(allow_none=True, validate=Range(min=1))
    ENGINE_OPTIONS = Dict(keys=String(), values=String())
    HANDSHAKE_TIMEOUT = Float(validate=Range(min=0, min_inclusive=False))
    SEARCH_TIMEOUT = Float(allow_none=True, validate=Range(min=0, min_inclusive=False))
    MATE_CAP = Float(validate=Range(min=0, min_inclusive=False))
    SKIP_PLIES = Integer(validate=Range(min=0))
    CHARGE_ACCEPTANCE = Boolean()
    CHARGE_DECLINED_OFFERS = Boolean()
    RULE = String(validate=OneOf(['def4', 'norway']))
    THRESHOLD = Float(validate=Range(min=0, max=1, max_inclusive=False))
    THRESHOLD_MODE = String(validate=OneOf(['exact', 'relative']))
    ABSOLUTE_EPSILON = Float(validate=Range(min=0))
    TOURNAMENT_POINTS = String(validate=OneOf(['classical', 'ai']))
    TPLV_BASIS = String(validate=OneOf(['cumulative', 'average']))
    TSP_TOLERANCE = Float(validate=Range(min=0))
    MAX_PLAY_COUNT = Integer(validate=Range(min=1))
    DEMO_NOISE = Float(validate=Range(min=0))
    REPORT_FORMAT = String(validate=OneOf(['json', 'csv']))
    JOBS = Integer(validate=Range(min=1))
    SEED = Integer(allow_none=True)

    @validates_schema
    def validate_limits(self, data: t.Dict[str, t.Any], **kwargs: t.Any) -> None:
        if data.get('ENGINE_PATH') and data.get('MOCK_TABLE'):
            raise ValidationError('Set either ENGINE_PATH or MOCK_TABLE, not both.')


# Tree fixtures
class NodeSchema(Schema):
    id = Integer(required=True, validate=Range(min=0))
    player = Integer(allow_none=True, load_default=None)
    children = List(Integer(), load_default=list)
    payoffs = List(Float(), allow_none=True, load_default=None)
    label = String(allow_none=True, load_default=None)


class TreeFixtureSchema(Schema):
    """The JSON tree fixture format.

    Node ids must be exactly `0 .. len(nodes) - 1`; `evaluations[player][node]`
    gives every player's value of every node.
    """

    num_players = Integer(load_default=2, validate=Range(min=1))
    root = Integer(load_default=0, validate=Range(min=0))
    nodes = List(Nested(NodeSchema), required=True, validate=Length(min=1))
    evaluations = List(List(Float()), required=True)

    @post_load
    def make_tree(
        self, data: t.Dict[str, t.Any], **kwargs: t.Any
    ) -> t.Tuple[GameTree, AIEvaluation]:
        nodes = sorted(data['nodes'], key=lambda n: n['id'])
        if [n['id'] for n in nodes] != list(range(len(nodes))):
            raise ValidationError('Node ids must be 0 .. n-1 without gaps.', 'nodes')
        tree = GameTree(
            children=tuple(tuple(n['children']) for n in nodes),
            active_player=tuple(n['player'] if n['children'] else None for n in nodes),
            payoffs=tuple(None if n['payoffs'] is None else tuple(n['payoffs']) for n in nodes),
            num_players=data['num_players'],
            root=data['root'],
            labels=tuple(n['label'] for n in nodes),
        )
        ai = AIEvaluation(tuple(tuple(row) for row in data['evaluations']))
        ai.check_tree(tree)
        return tree, ai


def load_tree_fixture(text: str) -> t.Tuple[GameTree, AIEvaluation]:
    try:
        raw = json.loads(text)
    except ValueError as e:
        raise DomainError(message=f'Tree fixture is not valid JSON: {e}') from None
    try:
        return t.cast(t.Tuple[GameTree, AIEvaluation], TreeFixtureSchema().load(raw))
    except ValidationError as e:
        raise DomainError(message='Invalid tree fixture.', detail=e.messages) from None


def _listed(values: t.Optional[t.Sequence[float]]) -> t.Optional[t.List[float]]:
    return None if values is None else list(values)


def dump_tree_fixture(tree: GameTree, ai: AIEvaluation) -> str:
    data = {
        'num_players': tree.num_players,
        'root': tree.root,
        'nodes': [
            {
                'id': node,
                'player': tree.active_player[node],
                'children': list(tree.children[node]),
                'payoffs': _listed(tree.payoffs[node]),
                'label': tree.labels[node] if tree.labels is not None else None,
            }
            for node in range(len(tree))
        ],
        'evaluations': [list(row) for row in ai.values],
    }
    return json.dumps(TreeFixtureSchema().dump(data), indent=2, sort_keys=True) + '\n'


# Reports
class EngineIdentitySchema(Schema):
    name = String(required=True)
    settings = Dict(keys=String(), values=Raw(allow_none=True))
    fingerprint = String(dump_only=True)

    @post_load
    def make_identity(self, data: t.Dict[str, t.Any], **kwargs: t.Any) -> EngineIdentity:
        return EngineIdentity(**data)


class MoveSchema(Schema):
    san = String(required=True)
    uci = String(required=True)

    @post_load
    def make_move(self, data: t.Dict[str, t.Any], **kwargs: t.Any) -> MoveRecord:
        return MoveRecord(**data)


class DrawOfferSchema(Schema):
    ply = Integer(required=True, validate=Range(min=1))
    player = String(required=True, validate=OneOf(COLORS))

    @post_load
    def make_offer(self, data: t.Dict[str, t.Any], **kwargs: t.Any) -> DrawOffer:
        return DrawOffer(**data)


class GameRecordSchema(Schema):
    headers = Dict(keys=String(), values=String())
    moves = List(Nested(MoveSchema))
    result = String(required=True, validate=OneOf(list(RESULT_TOKENS)))
    termination = String(validate=OneOf(['normal', 'time-forfeit', 'other']))
    draw_offers = List(Nested(DrawOfferSchema))
    start_fen = String(allow_none=True)
    comments = List(Tuple((Integer(), String())))

    @post_load
    def make_record(self, data: t.Dict[str, t.Any], **kwargs: t.Any) -> GameRecord:
        return GameRecord(**data)


class MoveAnnotationSchema(Schema):
    ply = Integer(required=True)
    mover = String(required=True, validate=OneOf(COLORS))
    kind = String(validate=OneOf(['move', 'draw-offer', 'draw-acceptance']))
    played = String(allow_none=True)
    best_move = String(allow_none=True)
    value_best = Float(required=True)
    value_played = Float(required=True)
    pawn_loss = Float(required=True, validate=Range(min=0))
    raw_best = String(allow_none=True)
    raw_played = String(allow_none=True)
    reeval = Tuple((Float(), Float()), allow_none=True)

    @post_load
    def make_annotation(self, data: t.Dict[str, t.Any], **kwargs: t.Any) -> MoveAnnotation:
        return MoveAnnotation(**data)


class AnnotatedGameSchema(Schema):
    record = Nested(GameRecordSchema, required=True)
    annotations = List(Nested(MoveAnnotationSchema))
    tplv_white = Float(required=True)
    tplv_black = Float(required=True)
    fingerprint = String()
    error = String(allow_none=True)

    @post_load
    def make_game(self, data: t.Dict[str, t.Any], **kwargs: t.Any) -> AnnotatedGame:
        return AnnotatedGame(**data)


class ScoringRuleSchema(Schema):
    variant = String(validate=OneOf(['def4', 'norway']))
    threshold_mode = String(validate=OneOf(['exact', 'relative']))
    threshold_value = Float()
    absolute_epsilon = Float()

    @post_load
    def make_rule(self, data: t.Dict[str, t.Any], **kwargs: t.Any) -> ScoringRule:
        return ScoringRule(**data)


class GameScoreSchema(Schema):
    score_white = Float(required=True)
    score_black = Float(required=True)
    tiebreak_winner = String(allow_none=True, validate=OneOf(COLORS))
    basis = String(required=True, validate=OneOf(['win', 'draw', 'time-forfeit-exception']))

    @post_load
    def make_score(self, data: t.Dict[str, t.Any], **kwargs: t.Any) -> GameScore:
        return GameScore(**data)


class StandingSchema(Schema):
    player = String(required=True)
    raw_score = Float(required=True)
    cumulative_tplv = Float(required=True)
    average_tplv = Float(required=True)
    average_cpl = Float(required=True)
    games = Integer(required=True)
    rank = Integer(required=True, validate=Range(min=1))
    tiebreak_used = String(
        validate=OneOf(
            ['none', 'cumulative-tplv', 'average-tplv', 'avg-cpl', 'unresolved', 'champion']
        )
    )

    @post_load
    def make_standing(self, data: t.Dict[str, t.Any], **kwargs: t.Any) -> Standing:
        return Standing(**data)


class ReportSchema(Schema):
    """The JSON report. Every section may be empty."""

    engine = Nested(EngineIdentitySchema, allow_none=True, load_default=None)
    rule = Nested(ScoringRuleSchema, allow_none=True, load_default=None)
    games = List(Nested(AnnotatedGameSchema), load_default=list)
    scores = List(Nested(GameScoreSchema, allow_none=True), load_default=list)
    standings = List(Nested(StandingSchema), load_default=list)
