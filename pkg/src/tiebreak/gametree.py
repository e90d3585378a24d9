from __future__ import annotations

import logging
import random
import typing as t
from dataclasses import dataclass
from dataclasses import field
from functools import cached_property

from .exceptions import DomainError
from .exceptions import ResourceError
from .types import Decision
from .types import NodeId
from .types import PlayerId
from .types import ScoreFnType


logger = logging.getLogger(__name__)

#: Absolute tolerance for the zero-sum check and for TSP comparisons.
TOLERANCE = 1e-9
DEFAULT_MAX_PLAYS = 1_000_000


@dataclass(frozen=True)
class GameTree:
    """A finite extensive-form game of perfect information.

    Nodes are the integers `0 .. len(children) - 1`. A node without children
    is terminal and carries one payoff per player; every other node has an
    active player.

    Examples:

    ```python
    from tiebreak.gametree import GameTree

    tree = GameTree(
        children=((1, 2), (), ()),
        active_player=(0, None, None),
        payoffs=(None, (1.0, -1.0), (-1.0, 1.0)),
    )
    ```

    Arguments:
        children: Ordered successors of every node.
        active_player: The player who moves at every node, `None` for terminals.
        payoffs: Per-player payoffs of every terminal, `None` for decision nodes.
        num_players: Number of players, defaults to 2.
        root: The root node, defaults to 0.
        labels: Optional human readable node names, used in diagnostics only.
    """

    children: t.Tuple[t.Tuple[NodeId, ...], ...]
    active_player: t.Tuple[t.Optional[PlayerId], ...]
    payoffs: t.Tuple[t.Optional[t.Tuple[float, ...]], ...]
    num_players: int = 2
    root: NodeId = 0
    labels: t.Optional[t.Tuple[t.Optional[str], ...]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'children', tuple(tuple(c) for c in self.children))
        object.__setattr__(self, 'active_player', tuple(self.active_player))
        object.__setattr__(
            self, 'payoffs', tuple(None if p is None else tuple(p) for p in self.payoffs)
        )
        if self.labels is not None:
            object.__setattr__(self, 'labels', tuple(self.labels))
        self._validate()

    def _validate(self) -> None:
        size = len(self.children)
        if size == 0:
            raise DomainError(message='A game tree needs at least one node.')
        if self.num_players < 1:
            raise DomainError(message='A game tree needs at least one player.')
        if len(self.active_player) != size or len(self.payoffs) != size:
            raise DomainError(
                message='children, active_player and payoffs must have one entry per node.'
            )
        if self.labels is not None and len(self.labels) != size:
            raise DomainError(message='labels must have one entry per node.')
        if not 0 <= self.root < size:
            raise DomainError(message=f'Root {self.root} is not a node.')

        parents: t.Dict[NodeId, NodeId] = {}
        for node, successors in enumerate(self.children):
            for child in successors:
                if not 0 <= child < size:
                    raise DomainError(message=f'Node {node} has unknown child {child}.')
                if child == self.root:
                    raise DomainError(message=f'The root {child} cannot have a parent.')
                if child in parents:
                    raise DomainError(
                        message=f'Node {child} has two parents ({parents[child]} and {node}).'
                    )
                parents[child] = node

        seen = {self.root}
        stack = [self.root]
        while stack:
            for child in self.children[stack.pop()]:
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        if len(seen) != size:
            missing = sorted(set(range(size)) - seen)
            raise DomainError(message=f'Nodes {missing} are not reachable from the root.')

        constant: t.Optional[float] = None
        for node in range(size):
            player = self.active_player[node]
            payoff = self.payoffs[node]
            if self.children[node]:
                if player is None or not 0 <= player < self.num_players:
                    raise DomainError(message=f'Decision node {node} needs a valid player.')
                if payoff is not None:
                    raise DomainError(message=f'Decision node {node} cannot carry payoffs.')
                continue
            if payoff is None or len(payoff) != self.num_players:
                raise DomainError(
                    message=f'Terminal node {node} needs {self.num_players} payoffs.'
                )
            total = sum(payoff)
            if constant is None:
                constant = total
            elif abs(total - constant) > TOLERANCE:
                raise DomainError(
                    message=f'Terminal node {node} breaks the zero-sum property '
                    f'({total} != {constant}).'
                )

    def __len__(self) -> int:
        return len(self.children)

    def is_terminal(self, node: NodeId) -> bool:
        return not self.children[node]

    def label(self, node: NodeId) -> str:
        if self.labels is not None and self.labels[node]:
            return t.cast(str, self.labels[node])
        return f'n{node}'

    @cached_property
    def parent(self) -> t.Dict[NodeId, NodeId]:
        return {child: node for node, succ in enumerate(self.children) for child in succ}

    @cached_property
    def terminals(self) -> t.Tuple[NodeId, ...]:
        """Terminal nodes in depth-first, child-order."""
        found = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if self.is_terminal(node):
                found.append(node)
            else:
                stack.extend(reversed(self.children[node]))
        return tuple(found)

    @property
    def terminal_payoffs(self) -> t.Dict[NodeId, t.Tuple[float, ...]]:
        return {node: t.cast(t.Tuple[float, ...], self.payoffs[node]) for node in self.terminals}

    @cached_property
    def constant_sum(self) -> float:
        return sum(t.cast(t.Tuple[float, ...], self.payoffs[self.terminals[0]]))

    def path_to(self, node: NodeId) -> t.Tuple[NodeId, ...]:
        path = [node]
        while path[-1] != self.root:
            path.append(self.parent[path[-1]])
        return tuple(reversed(path))


@dataclass(frozen=True)
class AIEvaluation:
    """The node valuation of every player, `values[player][node]`, in pawn units."""

    values: t.Tuple[t.Tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'values', tuple(tuple(map(float, v)) for v in self.values))

    @classmethod
    def antisymmetric(cls, first_player_values: t.Sequence[float]) -> AIEvaluation:
        """Build a two-player evaluation where the second player's value is the
        negation of the first player's, the way a chess engine reports it."""
        values = tuple(float(v) for v in first_player_values)
        return cls((values, tuple(0.0 - v for v in values)))

    def value(self, player: PlayerId, node: NodeId) -> float:
        return self.values[player][node]

    def scaled(self, factor: float) -> AIEvaluation:
        """Return the evaluation with every value multiplied by `factor` (> 0)."""
        if factor <= 0:
            raise DomainError(message=f'Scale factor must be positive, got {factor}.')
        return AIEvaluation(tuple(tuple(v * factor for v in row) for row in self.values))

    def perturbed(self, noise: float, seed: t.Optional[int] = None) -> AIEvaluation:
        """Return the evaluation with uniform noise in [-noise, noise] added to
        every value. Two-player evaluations stay antisymmetric."""
        if noise < 0:
            raise DomainError(message=f'Noise must not be negative, got {noise}.')
        rng = random.Random(seed)
        if len(self.values) == 2:
            return AIEvaluation.antisymmetric(
                [v + rng.uniform(-noise, noise) for v in self.values[0]]
            )
        return AIEvaluation(
            tuple(tuple(v + rng.uniform(-noise, noise) for v in row) for row in self.values)
        )

    def check_tree(self, tree: GameTree) -> None:
        """Raise `DomainError` unless the evaluation is total on `tree`."""
        if len(self.values) != tree.num_players:
            raise DomainError(
                message=f'Evaluation covers {len(self.values)} players, '
                f'the tree has {tree.num_players}.'
            )
        for player, row in enumerate(self.values):
            if len(row) != len(tree):
                raise DomainError(
                    message=f'Evaluation of player {player} covers {len(row)} nodes, '
                    f'the tree has {len(tree)}.'
                )


@dataclass(frozen=True)
class Play:
    """A root-to-terminal path through a game tree."""

    tree: GameTree = field(compare=False, repr=False)
    path: t.Tuple[NodeId, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'path', tuple(self.path))
        tree = self.tree
        if not self.path or self.path[0] != tree.root:
            raise DomainError(message='A play starts at the root.')
        for node, child in zip(self.path, self.path[1:]):
            if not 0 <= node < len(tree) or child not in tree.children[node]:
                raise DomainError(message=f'{child} is not a child of {node}.')
        if not tree.is_terminal(self.path[-1]):
            raise DomainError(message=f'A play ends at a terminal, {self.path[-1]} is not one.')

    @classmethod
    def to_terminal(cls, tree: GameTree, terminal: NodeId) -> Play:
        return cls(tree, tree.path_to(terminal))

    @property
    def terminal(self) -> NodeId:
        return self.path[-1]

    @property
    def decisions(self) -> t.Tuple[Decision, ...]:
        return tuple(zip(self.path, self.path[1:]))

    @property
    def actions_by_player(self) -> t.Dict[PlayerId, t.List[Decision]]:
        """The path split by the player active at each decision node.

        Every player of the tree has an entry, possibly empty.
        """
        actions: t.Dict[PlayerId, t.List[Decision]] = {
            p: [] for p in range(self.tree.num_players)
        }
        for node, child in self.decisions:
            actions[t.cast(PlayerId, self.tree.active_player[node])].append((node, child))
        return actions

    def choice_at(self, node: NodeId) -> t.Optional[NodeId]:
        for decided, child in self.decisions:
            if decided == node:
                return child
        return None


@dataclass(frozen=True, eq=False)
class ModifiedPlay:
    """A play with at most one action replaced.

    A modified play without a deviation compares equal to its base play.
    Substituting the action the base play already took is no deviation.
    """

    base: Play
    deviation_node: t.Optional[NodeId] = None
    deviation_action: t.Optional[NodeId] = None

    def __post_init__(self) -> None:
        if (self.deviation_node is None) != (self.deviation_action is None):
            raise DomainError(message='A deviation needs both a node and an action.')
        if self.deviation_node is None:
            return
        original = self.base.choice_at(self.deviation_node)
        if original is None:
            raise DomainError(
                message=f'Node {self.deviation_node} is not a decision node of the play.'
            )
        if self.deviation_action not in self.base.tree.children[self.deviation_node]:
            raise DomainError(
                message=f'{self.deviation_action} is not an action at node {self.deviation_node}.'
            )
        if self.deviation_action == original:
            object.__setattr__(self, 'deviation_node', None)
            object.__setattr__(self, 'deviation_action', None)

    @property
    def tree(self) -> GameTree:
        return self.base.tree

    @property
    def is_deviation(self) -> bool:
        return self.deviation_node is not None

    def choice_at(self, node: NodeId) -> t.Optional[NodeId]:
        if node == self.deviation_node:
            return self.deviation_action
        return self.base.choice_at(node)

    @property
    def decisions(self) -> t.Tuple[Decision, ...]:
        """The base decisions with the deviation substituted, everything else fixed."""
        return tuple(
            (node, t.cast(NodeId, self.choice_at(node))) for node, _ in self.base.decisions
        )

    def realized_path(self, ai: AIEvaluation) -> t.Tuple[NodeId, ...]:
        """The path actually reached: the base path up to the deviation, the
        deviation action, then AI best responses down to a terminal."""
        if self.deviation_node is None:
            return self.base.path
        cut = self.base.path.index(self.deviation_node)
        path = list(self.base.path[: cut + 1])
        path.append(t.cast(NodeId, self.deviation_action))
        while not self.tree.is_terminal(path[-1]):
            path.append(ai_best_response(self.tree, ai, path[-1]))
        return tuple(path)

    def realized_terminal(self, ai: AIEvaluation) -> NodeId:
        return self.realized_path(ai)[-1]

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Play):
            return not self.is_deviation and self.base == other
        if isinstance(other, ModifiedPlay):
            return (self.base, self.deviation_node, self.deviation_action) == (
                other.base,
                other.deviation_node,
                other.deviation_action,
            )
        return NotImplemented

    def __hash__(self) -> int:
        if not self.is_deviation:
            return hash(self.base)
        return hash((self.base, self.deviation_node, self.deviation_action))


def _as_modified(play: t.Union[Play, ModifiedPlay]) -> ModifiedPlay:
    return play if isinstance(play, ModifiedPlay) else ModifiedPlay(play)


def ai_best_response(tree: GameTree, ai: AIEvaluation, node: NodeId) -> NodeId:
    """Return the child of `node` the active player values most.

    Ties go to the child listed first.

    Arguments:
        tree: The game tree.
        ai: The evaluation of every player.
        node: A decision node of `tree`.
    """
    if tree.is_terminal(node):
        raise DomainError(message=f'Node {tree.label(node)} is terminal and has no actions.')
    player = t.cast(PlayerId, tree.active_player[node])
    return max(tree.children[node], key=lambda child: ai.value(player, child))


def scoring_rule_f(ai: AIEvaluation, play: t.Union[Play, ModifiedPlay]) -> t.Tuple[float, ...]:
    """The TPLV scoring rule: for every player, the summed evaluation gap
    between the AI best response and the chosen action over that player's
    decision nodes. Lower is better."""
    modified = _as_modified(play)
    tree = modified.tree
    scores = [0.0] * tree.num_players
    for node, chosen in modified.decisions:
        player = t.cast(PlayerId, tree.active_player[node])
        best = ai_best_response(tree, ai, node)
        scores[player] += ai.value(player, best) - ai.value(player, chosen)
    return tuple(scores)


def outcome_score(ai: AIEvaluation, play: t.Union[Play, ModifiedPlay]) -> t.Tuple[float, ...]:
    """Score a play by the negated payoffs of the terminal it reaches.

    This models tiebreak formats decided by what happens after the game,
    such as rapid games or Armageddon, rather than by move quality.
    """
    modified = _as_modified(play)
    payoff = modified.tree.payoffs[modified.realized_terminal(ai)]
    return tuple(-p for p in t.cast(t.Tuple[float, ...], payoff))


@dataclass(frozen=True)
class ScoringMechanism:
    """A named map from (evaluation, play) to per-player scores; lower wins
    the tiebreak."""

    name: str
    score_fn: ScoreFnType

    def __call__(self, ai: AIEvaluation, play: t.Union[Play, ModifiedPlay]) -> t.Tuple[float, ...]:
        return self.score_fn(ai, _as_modified(play))


TPLV_MECHANISM = ScoringMechanism('tplv', scoring_rule_f)
FASTCHESS_DEMO_MECHANISM = ScoringMechanism('fastchess-demo', outcome_score)

MECHANISMS: t.Dict[str, ScoringMechanism] = {
    m.name: m for m in (TPLV_MECHANISM, FASTCHESS_DEMO_MECHANISM)
}


def outcome_mechanism(name: str = 'outcome') -> ScoringMechanism:
    return ScoringMechanism(name, outcome_score)


def get_mechanism(name: str) -> ScoringMechanism:
    try:
        return MECHANISMS[name]
    except KeyError:
        raise DomainError(
            message=f'Unknown mechanism {name!r}, choose from {", ".join(sorted(MECHANISMS))}.'
        ) from None


def modify_play(play: Play, node: NodeId, action: NodeId) -> ModifiedPlay:
    """Replace the action taken at `node` by `action`, holding everything else fixed.

    Arguments:
        play: The base play.
        node: A decision node on the path of `play`.
        action: A child of `node`.
    """
    return ModifiedPlay(play, node, action)


@dataclass(frozen=True)
class Violation:
    """A decision where the AI best response would have scored the player worse
    than the action actually taken."""

    player: PlayerId
    node: NodeId
    f_best: float
    f_original: float
    chosen: NodeId
    best: NodeId


@dataclass(frozen=True)
class TSPVerdict:
    violations: t.Tuple[Violation, ...]
    plays_checked: int

    @property
    def is_tsp(self) -> bool:
        return not self.violations


def check_tsp_play(
    mechanism: ScoringMechanism,
    ai: AIEvaluation,
    play: Play,
    tolerance: float = TOLERANCE,
) -> t.List[Violation]:
    """Check that swapping any single action of `play` for the AI best response
    never gives the deviating player a higher (worse) score.

    Returns the violations found, an empty list means the play is
    tiebreak strategyproof under `mechanism`.
    """
    tree = play.tree
    original = mechanism(ai, play)
    violations = []
    for node, chosen in play.decisions:
        best = ai_best_response(tree, ai, node)
        if best == chosen:
            continue
        player = t.cast(PlayerId, tree.active_player[node])
        f_best = mechanism(ai, modify_play(play, node, best))[player]
        if f_best > original[player] + tolerance:
            violations.append(
                Violation(player, node, f_best, original[player], chosen, best)
            )
    return violations


def enumerate_plays(tree: GameTree) -> t.Iterator[Play]:
    """Yield every play of `tree`, one per terminal, in depth-first order."""
    for terminal in tree.terminals:
        yield Play.to_terminal(tree, terminal)


def check_tsp_mechanism(
    mechanism: ScoringMechanism,
    ai: AIEvaluation,
    tree: GameTree,
    max_plays: int = DEFAULT_MAX_PLAYS,
    tolerance: float = TOLERANCE,
) -> TSPVerdict:
    """Run `check_tsp_play` on every play of `tree`.

    Arguments:
        mechanism: The scoring mechanism under test.
        ai: The evaluation, total on `tree`.
        tree: The game tree to enumerate.
        max_plays: Refuse trees with more plays than this, defaults to 10**6.
        tolerance: Absolute tolerance on score comparisons.
    """
    ai.check_tree(tree)
    count = len(tree.terminals)
    if count > max_plays:
        raise ResourceError(
            message=f'The tree has {count} plays, more than the bound of {max_plays}.',
            detail={'plays': count, 'max_plays': max_plays},
        )
    violations: t.List[Violation] = []
    checked = 0
    for play in enumerate_plays(tree):
        violations.extend(check_tsp_play(mechanism, ai, play, tolerance))
        checked += 1
    logger.info(
        'Checked %d plays under %r: %d violation(s)', checked, mechanism.name, len(violations)
    )
    return TSPVerdict(tuple(violations), checked)


def generate_random_tree(
    depth: int,
    branching: int,
    num_players: int = 2,
    seed: t.Optional[int] = None,
) -> t.Tuple[GameTree, AIEvaluation]:
    """Build a complete `branching`-ary tree of the given depth with random
    zero-sum payoffs and evaluations.

    Players move in turn by depth. Two-player evaluations are antisymmetric,
    all values are drawn from [-5, 5] and rounded to centipawns. The same
    seed always yields the same tree.
    """
    if depth < 1 or branching < 1 or num_players < 1:
        raise DomainError(
            message='depth, branching and num_players must be positive, got '
            f'{depth}, {branching}, {num_players}.'
        )
    rng = random.Random(seed)
    children: t.List[t.Tuple[int, ...]] = []
    players: t.List[t.Optional[int]] = []
    payoffs: t.List[t.Optional[t.Tuple[float, ...]]] = []
    level = [0]
    next_id = 1
    for d in range(depth + 1):
        next_level = []
        for _node in level:
            if d == depth:
                children.append(())
                players.append(None)
                head = [round(rng.uniform(-1.0, 1.0), 2) for _ in range(num_players - 1)]
                payoffs.append((*head, -sum(head)))
                continue
            succ = tuple(range(next_id, next_id + branching))
            next_id += branching
            children.append(succ)
            players.append(d % num_players)
            payoffs.append(None)
            next_level.extend(succ)
        level = next_level
    tree = GameTree(tuple(children), tuple(players), tuple(payoffs), num_players=num_players)
    if num_players == 2:
        ai = AIEvaluation.antisymmetric([round(rng.uniform(-5.0, 5.0), 2) for _ in children])
    else:
        ai = AIEvaluation(
            tuple(
                tuple(round(rng.uniform(-5.0, 5.0), 2) for _ in children)
                for _ in range(num_players)
            )
        )
    return tree, ai


WHITE, BLACK = 0, 1


def game12_toy_tree() -> t.Tuple[GameTree, AIEvaluation]:
    """A two-move model of a world championship tiebreak situation.

    Black, a pawn up, either plays the engine's best move or offers a draw.
    After the best move the game goes on at a disadvantage for White; after
    the offer White accepts or declines. An accepted draw sends the match to
    rapid tiebreaks where Black is the favourite, so the payoffs (expected
    match share) reward the offer although the engine rates it a pawn worse.
    """
    tree = GameTree(
        children=((1, 2), (3, 4), (5, 6), (), (), (), ()),
        active_player=(BLACK, WHITE, WHITE, None, None, None, None),
        payoffs=(None, None, None, (0.4, 0.6), (0.1, 0.9), (0.2, 0.8), (0.4, 0.6)),
        labels=(
            'start',
            'best-move',
            'draw-offer',
            'play-on',
            'blunder',
            'accept',
            'decline',
        ),
    )
    ai = AIEvaluation.antisymmetric([0.0, -1.0, 0.0, -1.0, -3.0, 0.0, -1.0])
    return tree, ai


def game12_offer_play() -> Play:
    """The play where Black offers the draw and White accepts."""
    tree, _ = game12_toy_tree()
    return Play(tree, (0, 2, 5))


def load_tree(text: str) -> t.Tuple[GameTree, AIEvaluation]:
    """Load a tree fixture from its JSON text. See `dump_tree` for the format."""
    from .schemas import load_tree_fixture

    return load_tree_fixture(text)


def dump_tree(tree: GameTree, ai: AIEvaluation) -> str:
    """Serialize a tree and its evaluation as a JSON tree fixture.

    ```json
    {
      "evaluations": [[0.0, -1.0, 0.0], [0.0, 1.0, 0.0]],
      "nodes": [
        {"children": [1, 2], "id": 0, "label": null, "payoffs": null, "player": 0},
        {"children": [], "id": 1, "label": null, "payoffs": [1.0, -1.0], "player": null},
        {"children": [], "id": 2, "label": null, "payoffs": [-1.0, 1.0], "player": null}
      ],
      "num_players": 2,
      "root": 0
    }
    ```
    """
    from .schemas import dump_tree_fixture

    return dump_tree_fixture(tree, ai)
