import pytest

from efpe.game import Chance, Decision, GameTree, StructuralError, Terminal, check_structure, validate_game
from efpe.zoo import GameSpec

from conftest import GAMES_UP_TO_LEDUC3


def _coin_game(p_heads=0.5, payoff=1.0):
    return GameTree((
        Chance((p_heads, 1 - p_heads), (1, 2)),
        Decision(1, "A", ("l", "r"), (3, 4)),
        Decision(1, "A", ("l", "r"), (5, 6)),
        Terminal(payoff), Terminal(-1.0), Terminal(0.0), Terminal(0.5),
    ))


@pytest.mark.parametrize("name", GAMES_UP_TO_LEDUC3 + ("leduc5",))
def test_zoo_games_are_valid(name):
    assert validate_game(GameSpec.parse(name).build()) == []


def test_valid_small_game():
    assert validate_game(_coin_game()) == []


def test_bad_chance_distribution_reported():
    problems = validate_game(_coin_game(p_heads=0.7000001).__class__(
        (Chance((0.7, 0.4), (1, 2)),) + _coin_game().nodes[1:]))
    assert any("sum to" in p for p in problems)


def test_payoff_out_of_range():
    problems = validate_game(_coin_game(payoff=1.5))
    assert problems == ["node 3: payoff 1.5 outside [-1, 1]"]


def test_mismatched_actions_in_infoset():
    nodes = list(_coin_game().nodes)
    nodes[2] = Decision(1, "A", ("l", "x"), (5, 6))
    problems = validate_game(GameTree(tuple(nodes)))
    assert len(problems) == 1 and "perfect recall" in problems[0]


def test_forgetting_own_action_breaks_recall():
    # player 1 moves, then cannot tell which of its own actions it took
    tree = GameTree((
        Decision(1, "A", ("l", "r"), (1, 2)),
        Decision(1, "B", ("u", "d"), (3, 4)),
        Decision(1, "B", ("u", "d"), (5, 6)),
        Terminal(1.0), Terminal(0.0), Terminal(0.0), Terminal(1.0),
    ))
    problems = validate_game(tree)
    assert any("different own action sequence" in p for p in problems)


def test_infoset_shared_between_players():
    nodes = list(_coin_game().nodes)
    nodes[2] = Decision(2, "A", ("l", "r"), (5, 6))
    assert any("belongs to player" in p for p in validate_game(GameTree(tuple(nodes))))


def test_unreachable_node():
    tree = GameTree(_coin_game().nodes + (Terminal(0.0),))
    assert validate_game(tree) == ["node 7: unreachable from the root"]


@pytest.mark.parametrize("nodes, message", [
    ((Decision(1, "A", ("l",), (5,)), Terminal(0.0)), "does not exist"),
    ((Decision(1, "A", ("l", "r"), (1, 1)), Terminal(0.0)), "two parents"),
    ((Decision(1, "A", ("l", "r"), (1,)), Terminal(0.0)), "actions but"),
    ((Decision(1, "A", ("l",), (0,)),), "back at the root"),
])
def test_structural_errors_raise(nodes, message):
    with pytest.raises(StructuralError, match=message):
        check_structure(GameTree(nodes))
