"""Last-iterate solvers and baselines.

:func:`compute_efpe` runs optimistic mirror descent on a sequence of
regularized and perturbed games whose regularization ``1/lam_k`` and
perturbation ``eps_k`` vanish phase after phase, warm-starting every phase
from the previous one.  :func:`oomd_baseline` is the same inner loop with a
fixed perturbation and no regularization; :func:`cfr` is vanilla
counterfactual regret minimization with time-averaged strategies.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .metrics import avg_infoset_regret, l2_distance, nash_gap
from .regularizer import (DomainError, PerturbedDGF, ProxParams, _conjugate_pass, composite_prox,
                          compute_weights, conjugate_gradient, dgf_gradient, max_perturbation)
from .sequence_form import SequenceFormGame, is_sequence_strategy, operator_norm, validate_perturbed

LAMBDA_MARGIN = 1e-9
DENSE_LIMIT = 4096  # payoff matrices up to this many cells are applied densely
ALL_METRICS = ("nash_gap", "avg_infoset_regret", "l2_ref")


class ScheduleError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


# -- schedules -------------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Phase ``k`` uses ``eps_k = eps0 * rho**k``, ``lam_k = eps_k**-d`` and ``ceil(beta**k)`` rounds."""

    beta: float
    eta: float
    eps0: float
    rho: float
    d: float = 2.0
    theorem_mode: bool = False
    heuristic: bool = True
    report: tuple[str, ...] = ()

    def epsilon(self, k: int) -> float:
        return self.eps0 * self.rho ** k

    def lam(self, k: int) -> float:
        # strictly above eps_k**-d so that 1/lam_k < eps_k**d
        return self.epsilon(k) ** (-self.d) * (1.0 + LAMBDA_MARGIN)

    def length(self, k: int) -> int:
        return max(1, math.ceil(self.beta ** k))

    @property
    def label(self) -> str:
        return "heuristic schedule" if self.heuristic else "theorem schedule"


def _first(mask: np.ndarray):
    hits = np.flatnonzero(mask)
    return int(hits[0]) if hits.size else None


def make_schedule(beta: float = 1.001, eta: float = 2.0, eps0: float = 0.1, rho: float = 0.9999,
                  d: float = 2.0, theorem_mode: bool = False, game: SequenceFormGame | None = None,
                  horizon: int = 20_000) -> Schedule:
    """Validate the parameters and check the step-size conditions.

    The step window ``eta <= lam_k**2 <= eta * beta**k / 2`` is checked over
    the first ``horizon`` phases and the first violating phase of each side
    is reported; a schedule that violates it is labelled heuristic.  In
    theorem mode ``eta <= 1 / (sqrt(2) ||U||_2)`` is required as well and a
    violation is an error.
    """
    if not beta > 1:
        raise ScheduleError(f"beta must exceed 1, got {beta!r}")
    if not (np.isfinite(eta) and eta > 0):
        raise ScheduleError(f"eta must be positive, got {eta!r}")
    if not 0 < rho < 1:
        raise ScheduleError(f"rho must lie in (0, 1), got {rho!r}")
    if not d > 0:
        raise ScheduleError(f"d must be positive, got {d!r}")
    if not eps0 > 0:
        raise ScheduleError(f"eps0 must be positive, got {eps0!r}")
    report = []
    if game is not None:
        cap = min(max_perturbation(game.idx1), max_perturbation(game.idx2))
        if eps0 > cap:
            raise ScheduleError(f"eps0={eps0!r} exceeds the largest admissible perturbation {cap!r} "
                                f"(1 / (2 max n_I)) of this game")
    elif theorem_mode:
        raise ScheduleError("theorem mode needs the game to measure ||U||_2")
    if theorem_mode:
        norm = operator_norm(game.payoff)
        limit = 1.0 / (math.sqrt(2.0) * norm) if norm > 0 else math.inf
        if eta > limit:
            raise ScheduleError(f"eta={eta!r} violates eta <= 1/(sqrt(2) ||U||_2) = {limit!r} "
                                f"(||U||_2 = {norm!r})")
        report.append(f"step size eta={eta!r} <= 1/(sqrt(2) ||U||_2) = {limit!r}")
    k = np.arange(horizon, dtype=float)
    log_lam2 = -2.0 * d * (math.log(eps0) + k * math.log(rho))
    low = log_lam2 < math.log(eta)
    high = log_lam2 > math.log(eta / 2.0) + k * math.log(beta)
    k_low, k_high = _first(low), _first(high)
    if k_low is not None:
        report.append(f"eta <= lam_k^2 first fails at phase {k_low}")
    if k_high is not None:
        last = int(np.flatnonzero(high)[-1])
        tail = "and through the whole horizon" if last == horizon - 1 else f"last at phase {last}"
        report.append(f"lam_k^2 <= eta beta^k / 2 first fails at phase {k_high} {tail}")
    heuristic = k_low is not None or k_high is not None
    return Schedule(beta, eta, eps0, rho, d, theorem_mode, heuristic, tuple(report))


def phases_for_budget(beta: float, iterations: int) -> int:
    """Number of phases started by a run of ``iterations`` cumulative rounds."""
    k, total = 0, 0
    while total < iterations:
        total += max(1, math.ceil(beta ** k))
        k += 1
    return k


def rho_for_budget(beta: float, eps0: float, eps_final: float, iterations: int) -> float:
    """Decay factor that brings ``eps0`` down to ``eps_final`` in the last phase of the budget."""
    if not 0 < eps_final < eps0:
        raise ScheduleError("eps_final must lie strictly between 0 and eps0")
    k_last = max(1, phases_for_budget(beta, iterations) - 1)
    return (eps_final / eps0) ** (1.0 / k_last)


# -- traces ----------------------------------------------------------------------

CSV_HEADER = ("iter", "phase", "lambda", "epsilon", "nash_gap", "avg_infoset_regret", "l2_ref", "elapsed_s")


@dataclass
class TraceRecord:
    iter: int
    phase: int
    lam: float
    epsilon: float
    nash_gap: float
    avg_infoset_regret: float
    l2_ref: float
    elapsed_s: float

    def row(self, timing: bool = True) -> list[str]:
        vals = [self.iter, self.phase, self.lam, self.epsilon, self.nash_gap,
                self.avg_infoset_regret, self.l2_ref, self.elapsed_s if timing else 0.0]
        return [str(v) if isinstance(v, int) else repr(float(v)) for v in vals]


@dataclass
class Trace:
    records: list = field(default_factory=list)
    strategies: list = field(default_factory=list)  # (x, y) per record when kept
    label: str = ""

    def append(self, rec: TraceRecord, z=None) -> None:
        if self.records and rec.iter <= self.records[-1].iter:
            raise ValueError("trace iterations must be strictly increasing")
        self.records.append(rec)
        if z is not None:
            self.strategies.append(z)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        key = "lam" if name == "lambda" else name
        return np.array([getattr(r, key) for r in self.records], dtype=float)

    @property
    def last(self) -> TraceRecord:
        return self.records[-1]


@dataclass(frozen=True)
class Cadence:
    """When to evaluate metrics.

    ``phase``: every ``max(1, T_k // value)`` rounds of a phase and at its end.
    ``log``: ``value`` points per decade of cumulative iterations.
    ``stride``: every ``value`` cumulative iterations.
    The first and the last iteration are always recorded.
    """

    kind: str = "phase"
    value: float = 100

    def __post_init__(self):
        if self.kind not in ("phase", "log", "stride"):
            raise ValueError(f"unknown cadence {self.kind!r}")
        if not self.value > 0:
            raise ValueError("cadence value must be positive")


class _Recorder:
    def __init__(self, game, cadence, reference, metrics, keep_strategies, clock, check_feasible=True):
        self.game = game
        self.cadence = cadence
        self.reference = reference
        self.metrics = tuple(metrics)
        bad = set(self.metrics) - set(ALL_METRICS)
        if bad:
            raise ValueError(f"unknown metrics {sorted(bad)}")
        self.keep = keep_strategies
        self.clock = clock
        self.t0 = clock()
        self.trace = Trace()
        self.check_feasible = check_feasible
        self._next_log = 1.0

    def elapsed(self) -> float:
        return self.clock() - self.t0

    def due(self, cum: int, t: int, T: int, phase_end: bool) -> bool:
        c = self.cadence
        if c.kind == "phase":
            return phase_end or t % max(1, int(T // c.value)) == 0
        if c.kind == "stride":
            return cum % int(c.value) == 0
        if cum >= self._next_log:
            while self._next_log <= cum:
                self._next_log *= 10.0 ** (1.0 / c.value)
            return True
        return False

    def record(self, cum, phase, lam, eps, x, y):
        if self.trace.records and self.trace.records[-1].iter >= cum:
            return
        if self.check_feasible:
            for v, idx in ((x, self.game.idx1), (y, self.game.idx2)):
                if not is_sequence_strategy(v, idx):
                    raise SolverError(f"iteration {cum}: player {idx.player} strategy breaks flow conservation")
                if eps > 0 and not validate_perturbed(v, eps, idx):
                    raise SolverError(f"iteration {cum}: player {idx.player} strategy is not {eps!r}-feasible")
        gap = nash_gap(self.game, x, y) if "nash_gap" in self.metrics else math.nan
        reg = avg_infoset_regret(self.game, x, y).mean if "avg_infoset_regret" in self.metrics else math.nan
        l2 = math.nan
        if self.reference is not None and "l2_ref" in self.metrics:
            l2 = l2_distance((x, y), self.reference)
        rec = TraceRecord(int(cum), int(phase), float(lam), float(eps), gap, reg, l2, self.elapsed())
        self.trace.append(rec, (x.copy(), y.copy()) if self.keep else None)


# -- the optimistic phase solver -------------------------------------------------

@dataclass
class PhaseState:
    """Full iterates ``x, y`` and half iterates ``x_half, y_half`` (the prox anchors)."""

    x: np.ndarray
    y: np.ndarray
    x_half: np.ndarray
    y_half: np.ndarray


def solve_phase(game: SequenceFormGame, dgf1: PerturbedDGF, dgf2: PerturbedDGF, lam: float, eta: float,
                T: int, z_init: PhaseState, *, dual_cache: bool = True, on_round=None,
                context: str = "") -> PhaseState:
    """Run ``T`` optimistic rounds on the game regularized by ``d/lam``.

    Each round, with ``g = U y_t`` for the maximizer and ``-U^T x_t`` for the
    minimizer::

        x_{t+1/2} = prox(g, anchor x_{t-1/2})
        x_{t+1}   = prox(g, anchor x_{t+1/2})

    where ``prox`` is :func:`~efpe.regularizer.composite_prox`.  With
    ``dual_cache`` the anchors are carried as dual vectors, which skips the
    gradient evaluation of every prox and gives the same iterates.
    ``on_round(t, x, y)`` is called after each round; returning True stops
    the phase early.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    x, y = z_init.x.copy(), z_init.y.copy()
    xh, yh = z_init.x_half.copy(), z_init.y_half.copy()
    if T == 0:
        return PhaseState(x, y, xh, yh)
    params = ProxParams(lam, eta)
    U, Ut = game.payoff.matrix, game.payoff.matrix_t
    if U.shape[0] * U.shape[1] <= DENSE_LIMIT:
        U, Ut = U.toarray(), Ut.toarray()
    t = 0
    try:
        if dual_cache:
            gam = params.gamma
            c = gam / eta
            th_x = dgf_gradient(dgf1, xh)
            th_y = dgf_gradient(dgf2, yh)
            with np.errstate(over="raise", invalid="raise"):
                for t in range(1, T + 1):
                    gx = gam * (U @ y)
                    gy = -gam * (Ut @ x)
                    th_x = gx + c * th_x
                    th_y = gy + c * th_y
                    x = _conjugate_pass(dgf1, gx + c * th_x, check=False)[0]
                    y = _conjugate_pass(dgf2, gy + c * th_y, check=False)[0]
                    if on_round is not None and on_round(t, x, y):
                        break
            xh = conjugate_gradient(dgf1, th_x)
            yh = conjugate_gradient(dgf2, th_y)
        else:
            for t in range(1, T + 1):
                gx = U @ y
                gy = -(Ut @ x)
                xh = composite_prox(dgf1, params, gx, xh)
                yh = composite_prox(dgf2, params, gy, yh)
                x = composite_prox(dgf1, params, gx, xh)
                y = composite_prox(dgf2, params, gy, yh)
                if on_round is not None and on_round(t, x, y):
                    break
    except (DomainError, FloatingPointError, ValueError) as exc:
        where = f"{context}, round {t}" if context else f"round {t}"
        raise SolverError(f"{where}: {exc}") from exc
    return PhaseState(x, y, xh, yh)


@dataclass
class SolveResult:
    trace: Trace
    x: np.ndarray
    y: np.ndarray
    x_half: np.ndarray | None = None
    y_half: np.ndarray | None = None
    iterations: int = 0
    phases: int = 0


def _uniform_state(game) -> PhaseState:
    x, y = game.idx1.uniform(), game.idx2.uniform()
    return PhaseState(x, y, x.copy(), y.copy())


class _Budget:
    def __init__(self, max_iters, max_seconds, recorder):
        if max_iters is None and max_seconds is None:
            raise ValueError("a budget (iterations and/or seconds) is required")
        if max_iters is not None and max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        self.max_iters = math.inf if max_iters is None else int(max_iters)
        self.max_seconds = math.inf if max_seconds is None else float(max_seconds)
        self.rec = recorder

    def remaining(self, cum) -> float:
        return self.max_iters - cum

    def out_of_time(self) -> bool:
        return self.max_seconds < math.inf and self.rec.elapsed() >= self.max_seconds


def _run_phases(game, phases, eta, max_iters, max_seconds, cadence, reference, metrics, keep_strategies,
                dual_cache, clock, label="") -> SolveResult:
    """Shared driver; ``phases`` yields ``(k, lam, eps, T_k)``."""
    rec = _Recorder(game, cadence, reference, metrics, keep_strategies, clock)
    budget = _Budget(max_iters, max_seconds, rec)
    w1, w2 = compute_weights(game.idx1), compute_weights(game.idx2)
    state = _uniform_state(game)
    final = state
    phases = iter(phases)
    k, lam, eps, T = next(phases)
    rec.record(0, k, lam, eps, state.x, state.y)
    cum = 0
    n_done = 0
    while budget.remaining(cum) > 0 and not budget.out_of_time():
        dgf1 = PerturbedDGF(game.idx1, eps, w1)
        dgf2 = PerturbedDGF(game.idx2, eps, w2)
        T_run = int(min(T, budget.remaining(cum)))
        progress = {"t": 0, "stopped": False}

        def on_round(t, x, y, k=k, lam=lam, eps=eps, T=T, base=cum):
            progress["t"] = t
            if rec.due(base + t, t, T, t == T):
                rec.record(base + t, k, lam, eps, x, y)
            if budget.out_of_time():
                progress["stopped"] = True
                return True
            return False

        final = solve_phase(game, dgf1, dgf2, lam, eta, T_run, state, dual_cache=dual_cache,
                            on_round=on_round, context=f"phase {k}")
        cum += progress["t"]
        if progress["stopped"] or T_run < T:
            state = final
            break
        n_done += 1
        # warm start: the finished phase's last full iterate is both z_0 and z_{-1/2}
        state = PhaseState(final.x, final.y, final.x.copy(), final.y.copy())
        try:
            k, lam, eps, T = next(phases)
        except StopIteration:
            break
    rec.record(cum, k, lam, eps, state.x, state.y)
    rec.trace.label = label
    return SolveResult(rec.trace, state.x, state.y, final.x_half, final.y_half, cum, n_done)


def _metric_names(metrics, reference):
    if metrics is None:
        metrics = ALL_METRICS if reference is not None else ALL_METRICS[:2]
    return tuple(metrics)


def compute_efpe(game: SequenceFormGame, schedule: Schedule, max_iters: int | None = None,
                 max_seconds: float | None = None, cadence: Cadence = Cadence(), reference=None,
                 metrics=None, keep_strategies: bool = False, dual_cache: bool = True,
                 clock=time.perf_counter) -> SolveResult:
    """Track the equilibria of the regularized, perturbed games of ``schedule``.

    Phase ``k`` runs :func:`solve_phase` for ``schedule.length(k)`` rounds;
    the run stops when either budget is spent.  ``reference`` is an optional
    ``(x, y)`` pair for the distance metric.
    """
    cap = min(max_perturbation(game.idx1), max_perturbation(game.idx2))
    if schedule.eps0 > cap:
        raise ScheduleError(f"eps0={schedule.eps0!r} exceeds the largest admissible perturbation {cap!r}")
    phases = ((k, schedule.lam(k), schedule.epsilon(k), schedule.length(k)) for k in _count())
    return _run_phases(game, phases, schedule.eta, max_iters, max_seconds, cadence, reference,
                       _metric_names(metrics, reference), keep_strategies, dual_cache, clock,
                       label=schedule.label)


def _count():
    k = 0
    while True:
        yield k
        k += 1


def oomd_baseline(game: SequenceFormGame, eps_fixed: float = 0.0, eta: float = 2.0, T: int = 1000,
                  max_seconds: float | None = None, cadence: Cadence = Cadence(), reference=None,
                  metrics=None, keep_strategies: bool = False, dual_cache: bool = True,
                  clock=time.perf_counter) -> SolveResult:
    """Optimistic mirror descent on the ``eps_fixed``-perturbed game, no regularization."""
    cap = min(max_perturbation(game.idx1), max_perturbation(game.idx2))
    if not 0 <= eps_fixed <= cap:
        raise ValueError(f"eps_fixed must lie in [0, {cap!r}]")
    phases = [(0, math.inf, float(eps_fixed), int(T))]
    return _run_phases(game, phases, eta, T, max_seconds, cadence, reference,
                       _metric_names(metrics, reference), keep_strategies, dual_cache, clock,
                       label=f"oomd(eps={eps_fixed!r})")


# -- counterfactual regret minimization ------------------------------------------

class _RegretMatcher:
    def __init__(self, idx):
        self.idx = idx
        self.regret = np.zeros(idx.n_sequences)

    def behavioral(self) -> np.ndarray:
        idx = self.idx
        pos = np.maximum(self.regret, 0.0)
        b = np.ones(idx.n_sequences)
        for lv in idx.levels:
            p = pos[lv.seqs]
            tot = np.add.reduceat(p, lv.offsets)
            n = idx.n_actions[lv.infosets]
            safe = np.where(tot > 0, tot, 1.0)
            b[lv.seqs] = np.where(tot[lv.seg] > 0, p / safe[lv.seg], 1.0 / n[lv.seg])
        return b

    def update(self, b: np.ndarray, g: np.ndarray) -> None:
        """Add instantaneous counterfactual regrets for payoff vector ``g``."""
        val = np.array(g, dtype=float)
        for lv in reversed(self.idx.levels):
            v = np.add.reduceat(b[lv.seqs] * val[lv.seqs], lv.offsets)
            self.regret[lv.seqs] += val[lv.seqs] - v[lv.seg]
            np.add.at(val, lv.parents, v)


def _seq(b, idx):
    x = b.copy()
    x[0] = 1.0
    for lv in idx.levels:
        x[lv.seqs] *= x[idx.seq_parent[lv.seqs]]
    return x


def cfr(game: SequenceFormGame, T: int = 1000, max_seconds: float | None = None,
        cadence: Cadence = Cadence("log", 10), reference=None, metrics=None,
        keep_strategies: bool = False, clock=time.perf_counter) -> SolveResult:
    """Vanilla CFR with simultaneous updates; reports the time-averaged strategies.

    The average is the uniform mean of the sequence-form iterates, i.e. the
    reach-weighted average of the behavioral strategies.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    rec = _Recorder(game, cadence, reference, _metric_names(metrics, reference), keep_strategies, clock,
                    check_feasible=True)
    U, Ut = game.payoff.matrix, game.payoff.matrix_t
    m1, m2 = _RegretMatcher(game.idx1), _RegretMatcher(game.idx2)
    sx = np.zeros(game.idx1.n_sequences)
    sy = np.zeros(game.idx2.n_sequences)
    x_avg, y_avg = game.idx1.uniform(), game.idx2.uniform()
    rec.record(0, 0, math.nan, math.nan, x_avg, y_avg)
    t = 0
    for t in range(1, T + 1):
        b1, b2 = m1.behavioral(), m2.behavioral()
        x, y = _seq(b1, game.idx1), _seq(b2, game.idx2)
        m1.update(b1, U @ y)
        m2.update(b2, -(Ut @ x))
        sx += x
        sy += y
        if rec.due(t, t, T, t == T):
            x_avg, y_avg = sx / t, sy / t
            rec.record(t, 0, math.nan, math.nan, x_avg, y_avg)
        if max_seconds is not None and rec.elapsed() >= max_seconds:
            break
    x_avg, y_avg = sx / t, sy / t
    rec.record(t, 0, math.nan, math.nan, x_avg, y_avg)
    rec.trace.label = "cfr"
    return SolveResult(rec.trace, x_avg, y_avg, None, None, t, 0)
