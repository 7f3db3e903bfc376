import functools

import numpy as np
import pytest

from efpe.sequence_form import SequenceFormGame, behavioral_to_sequence
from efpe.zoo import GameSpec

SMALL_GAMES = ("kuhn", "goofspiel3", "drps", "matrix")
GAMES_UP_TO_LEDUC3 = SMALL_GAMES + ("leduc3",)


@functools.lru_cache(maxsize=None)
def load_game(name: str) -> SequenceFormGame:
    return SequenceFormGame.from_tree(GameSpec.parse(name).build())


@pytest.fixture(scope="session")
def kuhn():
    return load_game("kuhn")


@pytest.fixture(scope="session")
def matrix_game():
    return load_game("matrix")


def interior_strategy(idx, rng, eps=0.0, concentration=3.0):
    """Sequence-form strategy with every behavioral probability in ``(eps, 1)``.

    Dirichlet draws with concentration above 1 keep points away from the
    boundary, where finite differences of the entropy break down.
    """
    b = np.ones(idx.n_sequences)
    for j in range(idx.n_infosets):
        sl = idx.infoset_slice(j)
        n = sl.stop - sl.start
        b[sl] = eps + (1.0 - n * eps) * rng.dirichlet(np.full(n, concentration))
    return behavioral_to_sequence(b, idx)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
