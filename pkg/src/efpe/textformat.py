"""Line-oriented text format for game trees.

::

    # comment
    root 0
    0 chance 0.5:1:heads 0.5:2:tails
    1 decision 1 P1|h stay:3 quit:4
    2 terminal 0.25
    ...

Labels are percent-encoded so they never contain whitespace or ``:``.
Probabilities and payoffs are written with ``repr`` so the round trip is
exact.
"""

from __future__ import annotations

from urllib.parse import quote, unquote

from .game import Chance, Decision, GameTree, Terminal

_SAFE = "|/._-~+=,()[]<>!?*@^'"


class GameParseError(ValueError):
    """Malformed game text; ``errors`` holds ``(line_number, reason)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        msg = "; ".join(f"line {n}: {why}" if n else why for n, why in self.errors)
        super().__init__(msg)


def _enc(label: str) -> str:
    return quote(label, safe=_SAFE) if label else "%"


def _dec(token: str) -> str:
    return "" if token == "%" else unquote(token)


def serialize(tree: GameTree) -> str:
    lines = [f"# {tree.name}" if tree.name else "# game", f"root {tree.root}"]
    for i, node in enumerate(tree.nodes):
        if isinstance(node, Terminal):
            lines.append(f"{i} terminal {node.payoff!r}")
        elif isinstance(node, Chance):
            parts = []
            for k, (p, c) in enumerate(zip(node.probs, node.children)):
                tok = f"{float(p)!r}:{c}"
                if node.labels:
                    tok += ":" + _enc(node.labels[k])
                parts.append(tok)
            lines.append(f"{i} chance " + " ".join(parts))
        else:
            acts = " ".join(f"{_enc(a)}:{c}" for a, c in zip(node.actions, node.children))
            lines.append(f"{i} decision {node.player} {_enc(node.infoset)} {acts}")
    return "\n".join(lines) + "\n"


def _int(tok, what):
    try:
        return int(tok)
    except ValueError:
        raise ValueError(f"{what} {tok!r} is not an integer") from None


def _float(tok, what):
    try:
        return float(tok)
    except ValueError:
        raise ValueError(f"{what} {tok!r} is not a number") from None


def _parse_node(toks):
    kind = toks[1]
    if kind == "terminal":
        if len(toks) != 3:
            raise ValueError("terminal takes exactly one payoff")
        return Terminal(_float(toks[2], "payoff"))
    if kind == "chance":
        if len(toks) < 3:
            raise ValueError("chance node without outcomes")
        probs, kids, labels = [], [], []
        for tok in toks[2:]:
            bits = tok.split(":")
            if len(bits) not in (2, 3):
                raise ValueError(f"bad chance outcome {tok!r}")
            probs.append(_float(bits[0], "probability"))
            kids.append(_int(bits[1], "child id"))
            if len(bits) == 3:
                labels.append(_dec(bits[2]))
        if labels and len(labels) != len(kids):
            raise ValueError("either all or no chance outcomes carry labels")
        return Chance(tuple(probs), tuple(kids), tuple(labels))
    if kind == "decision":
        if len(toks) < 5:
            raise ValueError("decision needs player, infoset and at least one action")
        player = _int(toks[2], "player")
        acts, kids = [], []
        for tok in toks[4:]:
            a, sep, c = tok.rpartition(":")
            if not sep or not a:
                raise ValueError(f"bad action {tok!r}")
            acts.append(_dec(a))
            kids.append(_int(c, "child id"))
        return Decision(player, _dec(toks[3]), tuple(acts), tuple(kids))
    raise ValueError(f"unknown node kind {kind!r}")


def parse(text: str, name: str = "") -> GameTree:
    """Parse game text; every malformed line is reported, not only the first."""
    errors = []
    root = None
    nodes: dict[int, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if toks[0] == "root":
            if len(toks) != 2:
                errors.append((lineno, "root line takes one node id"))
            elif root is not None:
                errors.append((lineno, "duplicate root line"))
            else:
                try:
                    root = _int(toks[1], "root id")
                except ValueError as e:
                    errors.append((lineno, str(e)))
            continue
        if len(toks) < 2:
            errors.append((lineno, "expected '<id> <kind> ...'"))
            continue
        try:
            i = _int(toks[0], "node id")
            if i in nodes:
                raise ValueError(f"duplicate node id {i}")
            nodes[i] = _parse_node(toks)
        except ValueError as e:
            errors.append((lineno, str(e)))
    if root is None:
        errors.append((0, "no root"))
    if errors:
        raise GameParseError(errors)
    missing = sorted(set(range(len(nodes))) - set(nodes))
    if missing:
        raise GameParseError([(0, f"node ids must be 0..{len(nodes) - 1}; missing {missing[:5]}")])
    return GameTree(tuple(nodes[i] for i in range(len(nodes))), root, name)


def load(path) -> GameTree:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def dump(tree: GameTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(tree))
