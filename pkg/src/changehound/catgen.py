"""Change-focused event generation with length-3 sequences.

Exploration is delegated to the depth-first strategy until a state showing a
target element is entered. From then on the generator works through length-3
sequences that each touch a target element at least once. Sequences that get
knocked out of the target state are paused and resumed, suffix only, once the
target state has been re-entered along known transitions.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

from .impact import NotPending, TargetSet, resolve_dynamic_target
from .model import ActionKind, AppModel
from .simulator import BACK, GuiState, InputEvent, event_id_for, find_enabled
from .strategies import DfsStrategy, ExplorationModel, Navigator, Strategy, StrategyConfig, StrategyKind

# insertion positions of the target event, in emission order; the middle
# slot comes first so a target interaction follows entry within two events
INSERTION_ORDER = (1, 2, 0)


class NoTargets(ValueError):
    pass


class GuidanceMismatch(RuntimeError):
    def __init__(self, index: int, descriptor: "EventDescriptor", state: GuiState, enabled: Sequence[InputEvent]):
        self.index = index
        self.descriptor = descriptor
        self.state = state
        dump = {
            "activity": state.activity_id,
            "layouts": list(state.active_layouts),
            "visible": list(state.visible_elements),
            "enabled": [e.event_id for e in enabled],
        }
        super().__init__(f"guidance step {index} ({descriptor.event_id}) is not enabled; state: {json.dumps(dump)}")


class EventDescriptor(NamedTuple):
    element_id: Optional[str]
    action: ActionKind
    payload: Optional[str] = None

    @property
    def event_id(self) -> str:
        return event_id_for(self.element_id, self.action)

    @classmethod
    def of(cls, event: InputEvent) -> "EventDescriptor":
        return cls(event.element_id, event.action)

    @classmethod
    def from_dict(cls, data: dict) -> "EventDescriptor":
        return cls(data.get("element_id"), ActionKind(data["action"]), data.get("payload"))


class SequenceStatus(str, Enum):
    PENDING = "pending"
    IN_PROGRESS = "in_progress"
    PAUSED = "paused"
    COMPLETE = "complete"


@dataclass
class EventSequence:
    sequence_id: str
    events: tuple[EventDescriptor, ...]
    target_positions: frozenset[int]
    status: SequenceStatus = SequenceStatus.PENDING
    executed_prefix: int = 0
    target_key: str = ""
    # 1-based trace indices of the executed events
    event_indices: list[int] = field(default_factory=list)

    @property
    def remaining(self) -> tuple[EventDescriptor, ...]:
        return self.events[self.executed_prefix:]

    def to_dict(self) -> dict:
        return {
            "sequence_id": self.sequence_id,
            "target_state": self.target_key,
            "events": [d.event_id for d in self.events],
            "target_positions": sorted(self.target_positions),
            "status": self.status.value,
            "executed_prefix": self.executed_prefix,
            "event_indices": list(self.event_indices),
        }


def sequence_digest(descriptors: Sequence[EventDescriptor], context: str = "") -> str:
    text = context + "|" + "|".join(d.event_id for d in descriptors)
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]


def enumerate_length3(
    enabled: Sequence[InputEvent],
    targets_in_state: Sequence[InputEvent],
    max_sequences: int = 500,
    seed: int = 0,
    context: str = "",
) -> list[EventSequence]:
    """All length-3 sequences placing each target event among two other events.

    For every target event ``t`` and ordered pair ``(a, b)`` of distinct
    non-target events, ``t`` is inserted before, between and after the pair.
    With a single non-target event the pair is ``(a, a)``; with none the only
    sequence is ``(t, t, t)``. Above ``max_sequences`` a seeded uniform sample
    is kept, in enumeration order.
    """
    if not targets_in_state:
        raise NoTargets("no target events in state")
    enabled_ids = [e.event_id for e in enabled]
    target_ids = {t.event_id for t in targets_in_state}
    if not target_ids <= set(enabled_ids):
        raise NoTargets("target events must be enabled")

    others = [EventDescriptor.of(e) for e in enabled if e.event_id not in target_ids]
    if len(others) >= 2:
        pairs = list(permutations(others, 2))
    elif len(others) == 1:
        pairs = [(others[0], others[0])]
    else:
        pairs = []

    out: list[EventSequence] = []
    seen: set[str] = set()

    def add(events: tuple[EventDescriptor, ...], positions: frozenset[int]) -> None:
        sid = sequence_digest(events, context)
        if sid not in seen:
            seen.add(sid)
            out.append(EventSequence(sid, events, positions, target_key=context))

    for t_event in targets_in_state:
        t = EventDescriptor.of(t_event)
        if not pairs:
            add((t, t, t), frozenset({0, 1, 2}))
            continue
        for a, b in pairs:
            for pos in INSERTION_ORDER:
                events = [a, b]
                events.insert(pos, t)
                add(tuple(events), frozenset({pos}))

    if len(out) > max_sequences:
        rng = random.Random(f"{seed}/{context}/sample")
        keep = sorted(rng.sample(range(len(out)), max_sequences))
        out = [out[i] for i in keep]
    return out


def is_target_state(state: GuiState, targets: TargetSet) -> bool:
    """A state is a target state when it shows a target element or sits in a pending dynamic activity."""
    if state.activity_id in targets.pending_dynamic_activities:
        return True
    return any(e in targets.target_elements for e in state.visible_elements)


class TargetMonitor:
    """Owns the run's TargetSet and resolves dynamic activities as they are entered."""

    def __init__(self, targets: TargetSet):
        self.targets = targets

    def check(self, state: GuiState, causing_element: Optional[str] = None,
              source_activity: Optional[str] = None) -> bool:
        hit = is_target_state(state, self.targets)
        if (causing_element is not None and source_activity is not None
                and state.activity_id != source_activity
                and state.activity_id in self.targets.pending_dynamic_activities):
            try:
                self.targets = resolve_dynamic_target(self.targets, state.activity_id, causing_element, source_activity)
            except NotPending:
                pass
        return hit


class Mode(str, Enum):
    EXPLORING = "exploring"
    FOCUSED = "focused"


@dataclass
class TargetQueue:
    key: str
    sequences: list[EventSequence]
    pending: deque = field(default_factory=deque)
    paused: deque = field(default_factory=deque)

    def has_work(self) -> bool:
        return bool(self.pending or self.paused)


class CatStrategy(Strategy):
    kind = StrategyKind.CAT

    def __init__(self, exploration: ExplorationModel, monitor: TargetMonitor,
                 max_sequences: int = 500, seed: int = 0):
        super().__init__(exploration)
        self.monitor = monitor
        self.max_sequences = max_sequences
        self.seed = seed
        self.dfs = DfsStrategy(exploration)
        self.nav = Navigator(exploration)
        self.mode = Mode.EXPLORING
        self.queues: dict[str, TargetQueue] = {}
        self.current: Optional[str] = None
        self.in_progress: Optional[EventSequence] = None
        self.completed: set[str] = set()
        self._emitted: Optional[EventSequence] = None

    @property
    def sequences(self) -> list[EventSequence]:
        return [s for q in self.queues.values() for s in q.sequences]

    def _discover(self, key: str, enabled: Sequence[InputEvent]) -> None:
        if key in self.queues:
            return
        target_elements = self.monitor.targets.target_elements
        t_events = [e for e in enabled if e.element_id in target_elements]
        if not t_events:
            return
        seqs = enumerate_length3(enabled, t_events, self.max_sequences, self.seed, context=key)
        self.queues[key] = TargetQueue(key, seqs, pending=deque(seqs))

    def _next_queue(self) -> Optional[TargetQueue]:
        for q in self.queues.values():
            if q.has_work():
                return q
        return None

    def next_event(self, state: GuiState, key: str, enabled: Sequence[InputEvent]) -> InputEvent:
        self._emitted = None
        self._discover(key, enabled)

        if self.in_progress is None:
            q = self.queues.get(self.current) if self.current else None
            if q is None or not q.has_work():
                q = self._next_queue()
                if q is None:
                    self.mode = Mode.EXPLORING
                    self.current = None
                    return self.dfs.next_event(state, key, enabled)
                self.current = q.key
                self.nav.reset()
            self.mode = Mode.FOCUSED

        if key == self.current:
            q = self.queues[key]
            seq = self.in_progress
            if seq is None:
                seq = q.paused.popleft() if q.paused else q.pending.popleft()
                seq.status = SequenceStatus.IN_PROGRESS
                self.in_progress = seq
            desc = seq.events[seq.executed_prefix]
            event = find_enabled(enabled, desc.element_id, desc.action)
            if event is None:
                raise RuntimeError(f"sequence {seq.sequence_id}: {desc.event_id} not enabled in its target state")
            self.exploration.mark_visit(key, event.event_id)
            self._emitted = seq
            return event

        target = self.current
        event = self.nav.toward(key, lambda k: k == target, goal_key=target)
        if event is None:
            # no known way back yet: back is the likeliest route to where we came from
            if (key, BACK.event_id) not in self.exploration.transitions:
                event = BACK
            else:
                return self.dfs.next_event(state, key, enabled)
        self.exploration.mark_visit(key, event.event_id)
        return event

    def observe(self, key_before: str, event: InputEvent, key_after: str, crashed: bool,
                index: int = 0) -> None:
        seq = self._emitted
        if seq is None:
            return
        seq.executed_prefix += 1
        seq.event_indices.append(index)
        if seq.executed_prefix == 3:
            seq.status = SequenceStatus.COMPLETE
            self.completed.add(seq.sequence_id)
            self.in_progress = None
        elif key_after != seq.target_key:
            seq.status = SequenceStatus.PAUSED
            self.queues[seq.target_key].paused.append(seq)
            self.in_progress = None


def next_event_cat(run: CatStrategy, state: GuiState, key: str, enabled: Sequence[InputEvent]) -> InputEvent:
    return run.next_event(state, key, enabled)


def load_guidance(path: Union[str, Path]) -> list[EventDescriptor]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data.get("events", [])
    return [EventDescriptor.from_dict(d) for d in data]


def run_with_guidance(model: AppModel, targets: TargetSet, guidance: Sequence[EventDescriptor],
                      config: StrategyConfig):
    """Execute ``guidance`` verbatim from the start state, then hand over to the cat strategy."""
    from .runner import run_strategy

    if config.kind is not StrategyKind.CAT:
        config = StrategyConfig(StrategyKind.CAT, config.budget, config.seed, (), config.max_sequences)
    return run_strategy(model, targets, config, guidance=guidance)
