"""Deterministic executable semantics for app models."""

from __future__ import annotations

import hashlib
import json
import operator
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

from .model import (
    ActionKind,
    AppModel,
    ClearValue,
    Crash,
    FaultKind,
    FlagIs,
    GotoActivity,
    Guard,
    Inflate,
    InteractionCount,
    PopBack,
    RevealFault,
    SetFlag,
    SetValue,
    TransitionRule,
    ValueEmpty,
    ValueEquals,
    flatten_layout,
)

# edit_text payload vocabulary; a payload is word + 4 digits, so two
# independent draws collide with probability ~1/(len(WORDS) * 10000)
WORDS = (
    "alpha", "amber", "apple", "arrow", "basil", "birch", "blaze", "cedar",
    "chalk", "cider", "cloud", "coral", "delta", "dune", "ember", "fable",
    "fern", "flint", "frost", "gale", "grape", "harbor", "hazel", "iris",
    "ivory", "jade", "juniper", "kelp", "lemon", "lilac", "lotus", "maple",
    "marble", "meadow", "mint", "nectar", "north", "oak", "olive", "onyx",
    "opal", "orbit", "pearl", "pepper", "pine", "plum", "quartz", "quill",
    "raven", "reed", "river", "sage", "slate", "spruce", "storm", "thyme",
    "tulip", "umber", "velvet", "willow", "wren", "yarrow", "zephyr", "zinc",
)

_OPS = {
    "==": operator.eq, "!=": operator.ne, "<": operator.lt,
    "<=": operator.le, ">": operator.gt, ">=": operator.ge,
}


class IllegalEvent(ValueError):
    pass


@dataclass(frozen=True)
class InputEvent:
    event_id: str
    action: ActionKind
    element_id: Optional[str] = None
    payload: Optional[str] = None

    def __post_init__(self):
        if (self.payload is not None) != (self.action is ActionKind.EDIT_TEXT):
            raise ValueError(f"payload must be present exactly for edit_text: {self.event_id}")
        if (self.element_id is None) != (self.action is ActionKind.BACK):
            raise ValueError(f"only back events have no element: {self.event_id}")

    @property
    def descriptor(self) -> tuple[Optional[str], ActionKind]:
        return (self.element_id, self.action)

    @classmethod
    def make(cls, element_id: Optional[str], action: ActionKind, payload: Optional[str] = None) -> "InputEvent":
        return cls(event_id=event_id_for(element_id, action), action=action, element_id=element_id, payload=payload)

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "element_id": self.element_id,
            "action": self.action.value,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InputEvent":
        action = ActionKind(data["action"])
        element = data.get("element_id")
        return cls(
            event_id=data.get("event_id") or event_id_for(element, action),
            action=action,
            element_id=element,
            payload=data.get("payload"),
        )


def event_id_for(element_id: Optional[str], action: ActionKind) -> str:
    return "back" if element_id is None else f"{element_id}.{action.value}"


BACK = InputEvent.make(None, ActionKind.BACK)


@dataclass
class GuiState:
    activity_id: str
    active_layouts: tuple[str, ...]
    visible_elements: tuple[str, ...]
    flags: dict[str, bool] = field(default_factory=dict)
    values: dict[str, str] = field(default_factory=dict)
    interaction_counts: dict[str, int] = field(default_factory=dict)
    back_stack: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def copy(self) -> "GuiState":
        return GuiState(
            self.activity_id,
            self.active_layouts,
            self.visible_elements,
            dict(self.flags),
            dict(self.values),
            dict(self.interaction_counts),
            self.back_stack,
        )

    @property
    def true_flags(self) -> list[str]:
        return sorted(f for f, v in self.flags.items() if v)


def state_key(state: GuiState) -> str:
    """Digest of the structural part of a state: activity, visible elements, set flags.

    Text values and interaction counts do not contribute.
    """
    blob = json.dumps([state.activity_id, sorted(state.visible_elements), state.true_flags], separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def payload_for(seed: int, element_id: str, n: int) -> str:
    """Deterministic edit_text payload for the ``n``-th edit of an element."""
    rng = random.Random(f"{seed}/{element_id}/{n}")
    return f"{rng.choice(WORDS)}{rng.randrange(10000):04d}"


@dataclass
class StepOutcome:
    new_state: GuiState
    invoked_functions: frozenset[str]
    revealed_faults: frozenset[str]
    crashed: bool
    state_changed: bool
    # a once-only fault stayed quiet because of earlier lifetime interactions
    suppressed: bool = False


@dataclass(frozen=True)
class TraceRecord:
    index: int
    event: InputEvent
    state_before: str
    state_after: str
    invoked_functions: tuple[str, ...]
    revealed_faults: tuple[str, ...]
    crashed: bool

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "event": self.event.to_dict(),
            "state_before": self.state_before,
            "state_after": self.state_after,
            "invoked_functions": list(self.invoked_functions),
            "revealed_faults": list(self.revealed_faults),
            "crashed": self.crashed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TraceRecord":
        return cls(
            index=data["index"],
            event=InputEvent.from_dict(data["event"]),
            state_before=data["state_before"],
            state_after=data["state_after"],
            invoked_functions=tuple(data["invoked_functions"]),
            revealed_faults=tuple(data["revealed_faults"]),
            crashed=data["crashed"],
        )


@dataclass
class ExecutionTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, event: InputEvent, before: str, outcome: StepOutcome) -> TraceRecord:
        rec = TraceRecord(
            index=len(self.records) + 1,
            event=event,
            state_before=before,
            state_after=state_key(outcome.new_state),
            invoked_functions=tuple(sorted(outcome.invoked_functions)),
            revealed_faults=tuple(sorted(outcome.revealed_faults)),
            crashed=outcome.crashed,
        )
        self.records.append(rec)
        return rec

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def to_ndjson(self) -> str:
        return "".join(
            json.dumps(r.to_dict(), sort_keys=True, separators=(",", ":")) + "\n" for r in self.records
        )

    def write(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_ndjson(), encoding="utf-8")

    @classmethod
    def from_ndjson(cls, text: str) -> "ExecutionTrace":
        return cls([TraceRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()])

    @classmethod
    def read(cls, path: Union[str, Path]) -> "ExecutionTrace":
        return cls.from_ndjson(Path(path).read_text(encoding="utf-8"))


class Simulator:
    """One app instance under test.

    GuiState carries everything that a crash resets. The simulator itself only
    remembers per-element interaction totals over its whole lifetime, which is
    what decides whether a once-only crash fault still fires after restarts.
    """

    def __init__(self, model: AppModel, seed: int = 0):
        self.model = model
        self.seed = seed
        self.lifetime_counts: Counter[str] = Counter()
        self._visible_cache: dict[tuple[str, ...], tuple[str, ...]] = {}
        self._closure_cache: dict[str, frozenset[str]] = {}

    def visible(self, layouts: tuple[str, ...]) -> tuple[str, ...]:
        cached = self._visible_cache.get(layouts)
        if cached is None:
            elems: set[str] = set()
            for lid in layouts:
                elems.update(flatten_layout(self.model, lid))
            order = self.model.element_order
            cached = tuple(sorted(elems, key=order.__getitem__))
            self._visible_cache[layouts] = cached
        return cached

    def start(self) -> GuiState:
        act = self.model.start_activity
        layouts = (act.initial_layout,)
        return GuiState(
            activity_id=act.activity_id,
            active_layouts=layouts,
            visible_elements=self.visible(layouts),
            flags={f: False for f in self.model.flags},
            values={},
            interaction_counts={},
            back_stack=(),
        )

    def enabled_events(self, state: GuiState) -> list[InputEvent]:
        """Every (visible element, supported action) pair plus back, in declaration order."""
        out: list[InputEvent] = []
        for eid in state.visible_elements:
            el = self.model.element_by_id[eid]
            for action in el.ordered_actions():
                payload = None
                if action is ActionKind.EDIT_TEXT:
                    payload = payload_for(self.seed, eid, state.interaction_counts.get(eid, 0))
                out.append(InputEvent.make(eid, action, payload))
        out.append(BACK)
        return out

    def invoked_by(self, listener: Optional[str]) -> frozenset[str]:
        if listener is None:
            return frozenset()
        cached = self._closure_cache.get(listener)
        if cached is None:
            cached = self.model.call_graph.descendants(listener)
            self._closure_cache[listener] = cached
        return cached

    def _check_enabled(self, state: GuiState, event: InputEvent) -> None:
        if event.action is ActionKind.BACK:
            return
        if event.element_id not in state.visible_elements:
            raise IllegalEvent(f"{event.event_id}: element not visible in {state.activity_id}")
        if event.action not in self.model.element_by_id[event.element_id].supported_actions:
            raise IllegalEvent(f"{event.event_id}: action not supported")

    def _guard_holds(self, guard: Optional[Guard], state: GuiState) -> bool:
        if guard is None:
            return True
        if isinstance(guard, FlagIs):
            return state.flags.get(guard.flag, False) == guard.value
        if isinstance(guard, ValueEquals):
            return state.values.get(guard.a, "") == state.values.get(guard.b, "")
        if isinstance(guard, ValueEmpty):
            return not state.values.get(guard.key, "")
        if isinstance(guard, InteractionCount):
            return _OPS[guard.op](state.interaction_counts.get(guard.element, 0), guard.n)
        raise TypeError(guard)

    def _match(self, state: GuiState, element_id: str, action: ActionKind) -> Optional[TransitionRule]:
        for rule in self.model.rules_by_trigger.get((element_id, action), ()):
            if self._guard_holds(rule.guard, state):
                return rule
        return None

    def _back(self, state: GuiState) -> None:
        # an inflated layout is dismissed before the activity frame is popped
        if len(state.active_layouts) > 1:
            state.active_layouts = state.active_layouts[:-1]
            state.visible_elements = self.visible(state.active_layouts)
        else:
            self._pop(state)

    def _pop(self, state: GuiState) -> None:
        if state.back_stack:
            (activity, layouts), state.back_stack = state.back_stack[-1], state.back_stack[:-1]
            state.activity_id = activity
            state.active_layouts = layouts
            state.visible_elements = self.visible(layouts)

    def step(self, state: GuiState, event: InputEvent) -> StepOutcome:
        self._check_enabled(state, event)
        before = state_key(state)
        new = state.copy()
        if event.action is ActionKind.BACK:
            self._back(new)
            return StepOutcome(new, frozenset(), frozenset(), False, state_key(new) != before)

        eid = event.element_id
        el = self.model.element_by_id[eid]
        new.interaction_counts[eid] = new.interaction_counts.get(eid, 0) + 1
        self.lifetime_counts[eid] += 1
        if event.action is ActionKind.EDIT_TEXT:
            for key in el.persistent_fields:
                new.values[key] = event.payload or ""

        invoked = self.invoked_by(el.listeners.get(event.action))
        revealed: set[str] = set()
        rule = self._match(new, eid, event.action)
        if rule is None:
            return StepOutcome(new, invoked, frozenset(), False, state_key(new) != before)

        faults = self.model.fault_by_id
        suppressed = any(
            isinstance(eff, RevealFault)
            and faults[eff.fault].kind is FaultKind.CRASH
            and faults[eff.fault].once_only
            for eff in rule.effects
        ) and self.lifetime_counts[eid] != 1

        for eff in rule.effects:
            if isinstance(eff, GotoActivity):
                new.back_stack = new.back_stack + ((new.activity_id, new.active_layouts),)
                new.activity_id = eff.activity
                new.active_layouts = (self.model.activity_by_id[eff.activity].initial_layout,)
                new.visible_elements = self.visible(new.active_layouts)
            elif isinstance(eff, Inflate):
                if eff.layout not in new.active_layouts:
                    new.active_layouts = new.active_layouts + (eff.layout,)
                    new.visible_elements = self.visible(new.active_layouts)
            elif isinstance(eff, PopBack):
                self._pop(new)
            elif isinstance(eff, SetFlag):
                new.flags[eff.flag] = eff.value
            elif isinstance(eff, SetValue):
                new.values[eff.key] = eff.text
            elif isinstance(eff, ClearValue):
                new.values.pop(eff.key, None)
            elif isinstance(eff, RevealFault):
                if faults[eff.fault].kind is FaultKind.CRASH and suppressed:
                    continue
                revealed.add(eff.fault)
            elif isinstance(eff, Crash):
                if suppressed:
                    continue
                return StepOutcome(self.start(), invoked, frozenset(revealed), True, self._start_key() != before)
        return StepOutcome(new, invoked, frozenset(revealed), False, state_key(new) != before, suppressed)

    def _start_key(self) -> str:
        return state_key(self.start())


def start(model: AppModel) -> GuiState:
    return Simulator(model).start()


def enabled_events(model: AppModel, state: GuiState, seed: int = 0) -> list[InputEvent]:
    return Simulator(model, seed).enabled_events(state)


def find_enabled(events: Sequence[InputEvent], element_id: Optional[str], action: ActionKind) -> Optional[InputEvent]:
    for ev in events:
        if ev.element_id == element_id and ev.action is action:
            return ev
    return None


def replay(model: AppModel, events: Iterable[InputEvent], seed: int = 0) -> tuple[GuiState, ExecutionTrace]:
    """Run ``events`` verbatim from a fresh start; returns the final state and trace."""
    sim = Simulator(model, seed)
    state = sim.start()
    trace = ExecutionTrace()
    for ev in events:
        before = state_key(state)
        outcome = sim.step(state, ev)
        trace.append(ev, before, outcome)
        state = outcome.new_state
    return state, trace
