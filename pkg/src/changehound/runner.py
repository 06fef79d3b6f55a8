"""Run loop shared by every strategy."""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .catgen import CatStrategy, EventDescriptor, GuidanceMismatch, TargetMonitor
from .impact import TargetSet
from .model import AppModel
from .simulator import ExecutionTrace, GuiState, InputEvent, Simulator, find_enabled, state_key
from .strategies import (
    DfsStrategy,
    ExplorationModel,
    RandomStrategy,
    StartBiasedStrategy,
    Strategy,
    StrategyConfig,
    StrategyKind,
)


@dataclass
class RunResult:
    model_name: str
    config: StrategyConfig
    trace: ExecutionTrace
    targets: TargetSet
    exploration: ExplorationModel
    # state key -> (activity, visible elements)
    states: dict[str, tuple[str, tuple[str, ...]]]
    sequences: list = field(default_factory=list)
    wall_time_ms: float = 0.0

    @property
    def target_keys(self) -> set[str]:
        te = self.targets.target_elements
        return {k for k, (_, visible) in self.states.items() if any(e in te for e in visible)}

    def sequences_json(self) -> str:
        return json.dumps([s.to_dict() for s in self.sequences], indent=2, sort_keys=True) + "\n"


def make_strategy(kind: StrategyKind, model: AppModel, exploration: ExplorationModel,
                  monitor: TargetMonitor, config: StrategyConfig) -> Strategy:
    rng = random.Random(f"{config.seed}/{kind.value}")
    if kind is StrategyKind.RANDOM:
        return RandomStrategy(exploration, rng)
    if kind is StrategyKind.DFS:
        return DfsStrategy(exploration)
    if kind is StrategyKind.START_BIASED:
        return StartBiasedStrategy(exploration, rng, model.start_activity.activity_id)
    if kind is StrategyKind.CAT:
        return CatStrategy(exploration, monitor, config.max_sequences, config.seed)
    raise ValueError(kind)


def run_strategy(
    model: AppModel,
    targets: TargetSet,
    config: StrategyConfig,
    guidance: Sequence[EventDescriptor] = (),
) -> RunResult:
    """Execute ``config.budget`` events, guidance first, then the configured strategy."""
    t0 = time.perf_counter()
    sim = Simulator(model, config.seed)
    state = sim.start()
    key = state_key(state)
    enabled = sim.enabled_events(state)
    exploration = ExplorationModel(key)
    exploration.register(key, enabled)
    monitor = TargetMonitor(targets.copy())
    strategy = make_strategy(config.kind, model, exploration, monitor, config)
    trace = ExecutionTrace()
    states = {key: (state.activity_id, state.visible_elements)}
    guidance = list(guidance or config.guidance)

    # events since the last restart; replays to the current state unless a
    # once-only fault was suppressed on the way (a fresh app would fire it)
    history: list[InputEvent] = []
    replayable = True

    def execute(event: InputEvent) -> tuple[GuiState, str, list[InputEvent], str, bool]:
        nonlocal replayable
        outcome = sim.step(state, event)
        rec = trace.append(event, key, outcome)
        new_key = rec.state_after
        new_state = outcome.new_state
        if outcome.crashed:
            history.clear()
            replayable = True
        else:
            history.append(event)
            replayable = replayable and not outcome.suppressed
        exploration.record_transition(key, event, new_key, history, offer_path=replayable)
        new_enabled = sim.enabled_events(new_state)
        exploration.register(new_key, new_enabled)
        states.setdefault(new_key, (new_state.activity_id, new_state.visible_elements))
        if not outcome.crashed:
            monitor.check(new_state, event.element_id, state.activity_id)
        return new_state, new_key, new_enabled, key, outcome.crashed

    for i, desc in enumerate(guidance, start=1):
        if len(trace) >= config.budget:
            break
        event = find_enabled(enabled, desc.element_id, desc.action)
        if event is None:
            raise GuidanceMismatch(i, desc, state, enabled)
        if desc.payload is not None:
            event = InputEvent(event.event_id, event.action, event.element_id, desc.payload)
        exploration.mark_visit(key, event.event_id)
        state, key, enabled, _, _ = execute(event)

    while len(trace) < config.budget:
        event = strategy.next_event(state, key, enabled)
        state, key, enabled, before, crashed = execute(event)
        if isinstance(strategy, CatStrategy):
            strategy.observe(before, event, key, crashed, index=len(trace))

    return RunResult(
        model_name=model.name,
        config=config,
        trace=trace,
        targets=monitor.targets,
        exploration=exploration,
        states=states,
        sequences=strategy.sequences if isinstance(strategy, CatStrategy) else [],
        wall_time_ms=(time.perf_counter() - t0) * 1000.0,
    )


def write_run(result: RunResult, out_dir: Union[str, Path], report: Optional[dict] = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.trace.write(out / "trace.ndjson")
    (out / "sequences.json").write_text(result.sequences_json(), encoding="utf-8")
    if report is not None:
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out
