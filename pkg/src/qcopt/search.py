"""Randomized transformation scheduling under a global error budget.

The loop keeps one candidate circuit and repeatedly applies a randomly chosen
epsilon-bounded transformation to it. Non-worsening moves are always kept;
worsening moves survive with probability exp(-t * cost_new / cost_cur).
A transformation whose epsilon no longer fits in the remaining budget is
skipped, so the accumulated approximation never exceeds the configured limit.
"""
from __future__ import annotations

import math
import queue
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .circuit import Circuit, count_gates, is_two_qubit
from .gateset import NOISELESS, NoiseModel
from .unitary import fidelity_score


@dataclass(frozen=True)
class Transformation:
    """An epsilon-bounded circuit move.

    ``action(circuit, rng, context)`` returns a transformed circuit or None
    when it has nothing to do. Whatever it returns must be epsilon-equivalent
    to its input; rules guarantee this exactly, synthesis results are
    re-verified before they get here.
    """

    epsilon: float
    kind: str  # "rewrite" | "resynthesis"
    action: Callable[[Circuit, np.random.Generator, Optional[object]], Optional[Circuit]]
    name: str = ""


@dataclass(frozen=True)
class CostFunction:
    """Gate-cost objective: ``two-qubit-count``, ``weighted-t-cx``
    (2 * #T + #CX, counting the adjoint T the same as T), or
    ``neg-log-fidelity`` against a noise model.
    """

    id: str = "two-qubit-count"
    noise_model: NoiseModel = NOISELESS

    def __call__(self, circuit: Circuit) -> float:
        return cost_eval(self, circuit)


def cost_eval(cost: CostFunction, circuit: Circuit) -> float:
    if cost.id == "two-qubit-count":
        return float(count_gates(circuit, is_two_qubit))
    if cost.id == "weighted-t-cx":
        n_t = count_gates(circuit, lambda g: g.name in ("t", "tdg"))
        n_cx = count_gates(circuit, lambda g: g.name == "cx")
        return float(2 * n_t + n_cx)
    if cost.id == "neg-log-fidelity":
        return -math.log(fidelity_score(circuit, cost.noise_model))
    raise ValueError(f"unknown cost function id {cost.id!r}")


@dataclass
class ErrorBudget:
    limit: float
    spent: float = 0.0


@dataclass(frozen=True)
class SearchConfig:
    epsilon_f: float = 1e-8
    temperature: float = 10.0
    resynth_probability: float = 0.015
    max_subcircuit_qubits: int = 3
    time_limit: Optional[float] = 60.0
    seed: int = 0
    async_resynthesis: bool = False
    max_iterations: Optional[int] = None
    resynth_epsilon: Optional[float] = None  # per-call tolerance; default epsilon_f
    resynth_budget_ms: Optional[float] = 10_000.0  # None: deterministic caps only
    trace_stride: int = 100

    def __post_init__(self):
        if not 0.0 <= self.resynth_probability <= 1.0:
            raise ValueError("resynth_probability must lie in [0, 1]")
        if self.epsilon_f < 0.0:
            raise ValueError("epsilon_f must be nonnegative")
        if self.temperature < 0.0:
            raise ValueError("temperature must be nonnegative")
        if self.max_subcircuit_qubits < 1:
            raise ValueError("max_subcircuit_qubits must be at least 1")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    cost_curr: float
    cost_best: float
    error_curr: float
    event: str = ""  # "", "accept", "best", "skip-budget"
    epsilon: float = 0.0

    def as_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "cost_curr": self.cost_curr,
            "cost_best": self.cost_best,
            "error_curr": self.error_curr,
            "event": self.event,
            "epsilon": self.epsilon,
        }


@dataclass
class SearchResult:
    circuit: Circuit
    budget: ErrorBudget
    trace: list[TraceRecord]
    iterations: int
    wall_time: float
    cost_best: float


def accept(cost_new: float, cost_cur: float, t: float, rng: np.random.Generator) -> bool:
    """Always keep non-worsening moves; otherwise keep with probability
    exp(-t * cost_new / cost_cur) (continuously extended with the bare
    cost_new in the exponent when the current cost is already 0).
    """
    if cost_new <= cost_cur:
        return True
    ratio = cost_new / cost_cur if cost_cur > 0 else cost_new
    return float(rng.random()) < math.exp(-t * ratio)


def sample_transformation(
    transformations: list[Transformation], config: SearchConfig, rng: np.random.Generator
) -> Transformation:
    if not transformations:
        raise ValueError("empty transformation set")
    rewrites = [t for t in transformations if t.kind == "rewrite"]
    resynths = [t for t in transformations if t.kind == "resynthesis"]
    if resynths and (not rewrites or float(rng.random()) < config.resynth_probability):
        return resynths[int(rng.integers(len(resynths)))]
    return rewrites[int(rng.integers(len(rewrites)))]


@dataclass(frozen=True)
class SynthesisHandoff:
    """One completed asynchronous synthesis: the snapshot it started from,
    the full replaced circuit (or None), and the epsilon to charge.
    """

    snapshot: Circuit
    snapshot_cost: float
    replaced: Optional[Circuit]
    epsilon: float
    generation: int


class _AsyncWorker:
    """At most one synthesis in flight; result delivered via a 1-slot queue."""

    def __init__(self):
        self._queue: queue.Queue = queue.Queue(maxsize=1)
        self.busy = False

    def launch(self, fn: Callable[[], SynthesisHandoff]) -> None:
        assert not self.busy
        self.busy = True

        def run():
            handoff = fn()
            self._queue.put(handoff)

        threading.Thread(target=run, daemon=True).start()

    def poll(self) -> Optional[SynthesisHandoff]:
        try:
            handoff = self._queue.get_nowait()
        except queue.Empty:
            return None
        self.busy = False
        return handoff


class _Loop:
    def __init__(self, circuit, transformations, cost, config):
        self.config = config
        self.cost = cost
        self.transformations = list(transformations)
        ss = np.random.SeedSequence(config.seed)
        kids = ss.spawn(4)
        self.rng_sample = np.random.default_rng(kids[0])
        self.rng_accept = np.random.default_rng(kids[1])
        self.rng_action = np.random.default_rng(kids[2])
        self._synth_seeds = kids[3]
        self.c_curr = self.c_best = circuit
        self.cost_curr = self.cost_best = cost(circuit)
        self.err_curr = self.err_best = 0.0
        self.generation = 0
        self.trace: list[TraceRecord] = []
        self.iteration = 0
        self.worker = _AsyncWorker() if config.async_resynthesis else None

    def record(self, event: str = "", epsilon: float = 0.0, force: bool = False) -> None:
        if force or event or self.iteration % self.config.trace_stride == 0:
            self.trace.append(
                TraceRecord(
                    self.iteration,
                    self.cost_curr,
                    self.cost_best,
                    self.err_curr,
                    event,
                    epsilon,
                )
            )

    def note_best(self) -> str:
        if self.cost_curr < self.cost_best:
            self.c_best = self.c_curr
            self.cost_best = self.cost_curr
            self.err_best = self.err_curr
            return "best"
        return "accept"

    def apply_accepted(self, candidate: Circuit, cost_new: float, epsilon: float) -> None:
        self.c_curr = candidate
        self.cost_curr = cost_new
        self.err_curr += epsilon
        self.record(self.note_best(), epsilon)

    def integrate(self, handoff: SynthesisHandoff) -> bool:
        """Fold an asynchronous synthesis result into the loop state.

        Accepting replaces the candidate with the snapshot-plus-replacement,
        discarding whatever the rewrite moves did in the interim. Hand-offs
        from before a prior async acceptance are dropped as stale.
        """
        if handoff.generation != self.generation:
            return False
        if handoff.replaced is None:
            return False
        if self.err_curr + handoff.epsilon > self.config.epsilon_f:
            return False
        cost_new = self.cost(handoff.replaced)
        if not accept(cost_new, handoff.snapshot_cost, self.config.temperature, self.rng_accept):
            return False
        self.generation += 1
        self.apply_accepted(handoff.replaced, cost_new, handoff.epsilon)
        return True

    def launch_async(self, tau: Transformation) -> None:
        snapshot = self.c_curr
        snapshot_cost = self.cost_curr
        generation = self.generation
        rng = np.random.default_rng(self._synth_seeds.spawn(1)[0])

        def job() -> SynthesisHandoff:
            replaced = tau.action(snapshot, rng, None)
            return SynthesisHandoff(snapshot, snapshot_cost, replaced, tau.epsilon, generation)

        self.worker.launch(job)


def optimize(
    circuit: Circuit,
    transformations: list[Transformation],
    cost: CostFunction,
    config: SearchConfig,
) -> SearchResult:
    """Minimize ``cost`` over epsilon-bounded transformations.

    Returns the best circuit seen; the reported budget is the epsilon sum
    along the accepted chain that produced it, never above the configured
    limit. With ``async_resynthesis`` off and a fixed seed the run is fully
    deterministic.
    """
    if config.time_limit is None and config.max_iterations is None:
        raise ValueError("set a time limit or an iteration cap; refusing to run forever")
    loop = _Loop(circuit, transformations, cost, config)
    start = time.monotonic()
    deadline = None if config.time_limit is None else start + config.time_limit
    loop.record(force=True)
    while True:
        if config.max_iterations is not None and loop.iteration >= config.max_iterations:
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
        loop.iteration += 1
        if loop.worker is not None:
            handoff = loop.worker.poll()
            if handoff is not None:
                loop.integrate(handoff)
        tau = sample_transformation(loop.transformations, config, loop.rng_sample)
        if loop.err_curr + tau.epsilon > config.epsilon_f:
            loop.record("skip-budget")
            continue
        if tau.kind == "resynthesis" and loop.worker is not None:
            if not loop.worker.busy:
                loop.launch_async(tau)
            loop.record()
            continue
        candidate = tau.action(loop.c_curr, loop.rng_action, None)
        if candidate is None:
            loop.record()
            continue
        cost_new = cost(candidate)
        if accept(cost_new, loop.cost_curr, config.temperature, loop.rng_accept):
            loop.apply_accepted(candidate, cost_new, tau.epsilon)
        else:
            loop.record()
    # A synthesis still in flight at the deadline is abandoned unseen.
    loop.record(force=True)
    return SearchResult(
        circuit=loop.c_best,
        budget=ErrorBudget(limit=config.epsilon_f, spent=loop.err_best),
        trace=loop.trace,
        iterations=loop.iteration,
        wall_time=time.monotonic() - start,
        cost_best=loop.cost_best,
    )
