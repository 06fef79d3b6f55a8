"""Declarative app model: types, loading, validation and layout flattening.

An app model stands in for what would otherwise be extracted from a compiled
package: the layout list, the activity manifest and the call graph, plus the
transition rules and injected faults the simulator needs to execute it.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, NamedTuple, Optional, Union

import jsonschema


class ActionKind(str, Enum):
    CLICK = "click"
    LONG_CLICK = "long_click"
    EDIT_TEXT = "edit_text"
    SCROLL = "scroll"
    BACK = "back"


ACTION_ORDER = {kind: i for i, kind in enumerate(ActionKind)}


class ElementKind(str, Enum):
    BUTTON = "button"
    TEXT = "text"
    EDIT_FIELD = "edit_field"
    LIST_ITEM = "list_item"
    MENU_ITEM = "menu_item"
    CONTAINER = "container"


class FaultKind(str, Enum):
    CRASH = "crash_fault"
    STATE_LOSS = "state_loss_fault"


COMPARATORS = ("==", "!=", "<", "<=", ">", ">=")


class ModelError(Exception):
    """Base class for app-model errors."""


class ParseError(ModelError):
    def __init__(self, message: str, *, path: str = "", line: Optional[int] = None):
        self.path = path
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if path:
            where.append(f"at {path}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ValidationError(ModelError):
    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        lines = "; ".join(str(v) for v in violations)
        super().__init__(f"{len(violations)} violation(s): {lines}")


class UnknownLayout(ModelError, KeyError):
    pass


# -- function signatures -------------------------------------------------------

_SIGNATURE_RE = re.compile(
    r"^(?:(?P<package>[\w$]+(?:\.[\w$]+)*)\.)?"
    r"(?P<cls>[\w$]+)\.(?P<method>[\w$<>]+)"
    r"\((?P<params>[^()]*)\)$"
)


class Signature(NamedTuple):
    package: str
    cls: str
    method: str
    params: tuple[str, ...]


def parse_signature(signature: str) -> Signature:
    """Split ``package.Class.method(A, B)`` into its parts.

    The package path may be empty; class and method are required.
    """
    m = _SIGNATURE_RE.match(signature.strip()) if signature else None
    if m is None:
        raise ValueError(f"malformed function signature: {signature!r}")
    params = tuple(p.strip() for p in m["params"].split(",") if p.strip())
    return Signature(m["package"] or "", m["cls"], m["method"], params)


def is_signature(text: str) -> bool:
    try:
        parse_signature(text)
    except ValueError:
        return False
    return True


# -- guards and effects --------------------------------------------------------

@dataclass(frozen=True)
class FlagIs:
    flag: str
    value: bool


@dataclass(frozen=True)
class ValueEquals:
    a: str
    b: str


@dataclass(frozen=True)
class ValueEmpty:
    key: str


@dataclass(frozen=True)
class InteractionCount:
    element: str
    op: str
    n: int


Guard = Union[FlagIs, ValueEquals, ValueEmpty, InteractionCount]


@dataclass(frozen=True)
class GotoActivity:
    activity: str


@dataclass(frozen=True)
class Inflate:
    layout: str


@dataclass(frozen=True)
class PopBack:
    pass


@dataclass(frozen=True)
class SetFlag:
    flag: str
    value: bool


@dataclass(frozen=True)
class SetValue:
    key: str
    text: str


@dataclass(frozen=True)
class ClearValue:
    key: str


@dataclass(frozen=True)
class RevealFault:
    fault: str


@dataclass(frozen=True)
class Crash:
    pass


Effect = Union[GotoActivity, Inflate, PopBack, SetFlag, SetValue, ClearValue, RevealFault, Crash]

_GUARD_TYPES = {
    "flag_is": FlagIs,
    "value_equals": ValueEquals,
    "value_empty": ValueEmpty,
    "interaction_count": InteractionCount,
}
_EFFECT_TYPES = {
    "goto_activity": GotoActivity,
    "inflate": Inflate,
    "pop_back": PopBack,
    "set_flag": SetFlag,
    "set_value": SetValue,
    "clear_value": ClearValue,
    "reveal_fault": RevealFault,
    "crash": Crash,
}
_TYPE_NAMES = {cls: name for name, cls in {**_GUARD_TYPES, **_EFFECT_TYPES}.items()}


# -- model types ---------------------------------------------------------------

@dataclass(frozen=True)
class GuiElement:
    element_id: str
    kind: ElementKind
    supported_actions: frozenset[ActionKind]
    listeners: Mapping[ActionKind, str] = field(default_factory=dict)
    dynamic_target_of: Optional[str] = None
    persistent_fields: frozenset[str] = frozenset()

    @property
    def is_dynamic(self) -> bool:
        return self.dynamic_target_of is not None

    def ordered_actions(self) -> list[ActionKind]:
        return sorted(self.supported_actions, key=ACTION_ORDER.__getitem__)


@dataclass(frozen=True)
class Layout:
    layout_id: str
    elements: tuple[str, ...] = ()
    embedded_layouts: tuple[str, ...] = ()


@dataclass(frozen=True)
class Activity:
    activity_id: str
    initial_layout: str
    inflatable_layouts: frozenset[str] = frozenset()
    is_start: bool = False


@dataclass(frozen=True)
class CallGraph:
    nodes: tuple[str, ...] = ()
    edges: tuple[tuple[str, str], ...] = ()

    @cached_property
    def successors(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {n: [] for n in self.nodes}
        for caller, callee in self.edges:
            out.setdefault(caller, []).append(callee)
        return {k: tuple(v) for k, v in out.items()}

    def descendants(self, root: str) -> frozenset[str]:
        """Directed transitive closure from ``root``, ``root`` included."""
        seen = {root}
        stack = [root]
        succ = self.successors
        while stack:
            for nxt in succ.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return frozenset(seen)


@dataclass(frozen=True)
class TransitionRule:
    rule_id: str
    element: str
    action: ActionKind
    effects: tuple[Effect, ...]
    guard: Optional[Guard] = None

    @property
    def trigger(self) -> tuple[str, ActionKind]:
        return (self.element, self.action)


@dataclass(frozen=True)
class FaultSpec:
    fault_id: str
    description: str
    kind: FaultKind
    once_only: bool = False


@dataclass(frozen=True)
class AppModel:
    name: str
    activities: tuple[Activity, ...]
    layouts: tuple[Layout, ...]
    elements: tuple[GuiElement, ...]
    call_graph: CallGraph
    transitions: tuple[TransitionRule, ...] = ()
    faults: tuple[FaultSpec, ...] = ()
    flags: tuple[str, ...] = ()
    values: tuple[str, ...] = ()

    @cached_property
    def activity_by_id(self) -> dict[str, Activity]:
        return {a.activity_id: a for a in self.activities}

    @cached_property
    def layout_by_id(self) -> dict[str, Layout]:
        return {lay.layout_id: lay for lay in self.layouts}

    @cached_property
    def element_by_id(self) -> dict[str, GuiElement]:
        return {e.element_id: e for e in self.elements}

    @cached_property
    def fault_by_id(self) -> dict[str, FaultSpec]:
        return {f.fault_id: f for f in self.faults}

    @cached_property
    def element_order(self) -> dict[str, int]:
        return {e.element_id: i for i, e in enumerate(self.elements)}

    @cached_property
    def rules_by_trigger(self) -> dict[tuple[str, ActionKind], tuple[TransitionRule, ...]]:
        out: dict[tuple[str, ActionKind], list[TransitionRule]] = {}
        for rule in self.transitions:
            out.setdefault(rule.trigger, []).append(rule)
        return {k: tuple(v) for k, v in out.items()}

    @property
    def start_activity(self) -> Activity:
        starts = [a for a in self.activities if a.is_start]
        if len(starts) != 1:
            raise ModelError(f"model {self.name!r} has {len(starts)} start activities")
        return starts[0]

    def listener(self, element_id: str, action: ActionKind) -> Optional[str]:
        return self.element_by_id[element_id].listeners.get(action)


def flatten_layout(model: AppModel, layout_id: str) -> list[str]:
    """Elements of a layout followed by those of its embedded layouts, depth first.

    Duplicates keep their first occurrence.
    """
    if layout_id not in model.layout_by_id:
        raise UnknownLayout(layout_id)
    out: list[str] = []
    seen: set[str] = set()
    on_stack: set[str] = set()

    def visit(lid: str) -> None:
        layout = model.layout_by_id.get(lid)
        if layout is None or lid in on_stack:
            return
        on_stack.add(lid)
        for eid in layout.elements:
            if eid not in seen:
                seen.add(eid)
                out.append(eid)
        for child in layout.embedded_layouts:
            visit(child)
        on_stack.discard(lid)

    visit(layout_id)
    return out


# -- validation ----------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    invariant: str
    offending_id: str
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.invariant}: {self.offending_id}"
        return f"{text} ({self.detail})" if self.detail else text


def _duplicates(ids: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    dups: list[str] = []
    for i in ids:
        if i in seen and i not in dups:
            dups.append(i)
        seen.add(i)
    return dups


def _embedding_cycles(model: AppModel) -> list[list[str]]:
    cycles: list[list[str]] = []
    color: dict[str, int] = {}
    reported: set[frozenset[str]] = set()

    def dfs(lid: str, path: list[str]) -> None:
        color[lid] = 1
        path.append(lid)
        layout = model.layout_by_id.get(lid)
        for child in layout.embedded_layouts if layout else ():
            if child not in model.layout_by_id:
                continue
            if color.get(child) == 1:
                cyc = path[path.index(child):] + [child]
                key = frozenset(cyc)
                if key not in reported:
                    reported.add(key)
                    cycles.append(cyc)
            elif child not in color:
                dfs(child, path)
        path.pop()
        color[lid] = 2

    for layout in model.layouts:
        if layout.layout_id not in color:
            dfs(layout.layout_id, [])
    return cycles


def _check_guard(model: AppModel, rule: TransitionRule, out: list[Violation]) -> None:
    g = rule.guard
    flags, values = set(model.flags), set(model.values)
    if isinstance(g, FlagIs) and g.flag not in flags:
        out.append(Violation("undeclared flag", g.flag, f"guard of rule {rule.rule_id}"))
    elif isinstance(g, ValueEquals):
        for key in (g.a, g.b):
            if key not in values:
                out.append(Violation("undeclared value key", key, f"guard of rule {rule.rule_id}"))
    elif isinstance(g, ValueEmpty) and g.key not in values:
        out.append(Violation("undeclared value key", g.key, f"guard of rule {rule.rule_id}"))
    elif isinstance(g, InteractionCount):
        if g.element not in model.element_by_id:
            out.append(Violation("unknown element", g.element, f"guard of rule {rule.rule_id}"))
        if g.op not in COMPARATORS:
            out.append(Violation("unknown comparator", rule.rule_id, g.op))


def _check_effect(model: AppModel, rule: TransitionRule, eff: Effect, out: list[Violation]) -> None:
    where = f"effect of rule {rule.rule_id}"
    if isinstance(eff, GotoActivity) and eff.activity not in model.activity_by_id:
        out.append(Violation("unknown activity", eff.activity, where))
    elif isinstance(eff, Inflate) and eff.layout not in model.layout_by_id:
        out.append(Violation("unknown layout", eff.layout, where))
    elif isinstance(eff, SetFlag) and eff.flag not in model.flags:
        out.append(Violation("undeclared flag", eff.flag, where))
    elif isinstance(eff, (SetValue, ClearValue)) and eff.key not in model.values:
        out.append(Violation("undeclared value key", eff.key, where))
    elif isinstance(eff, RevealFault) and eff.fault not in model.fault_by_id:
        out.append(Violation("reveal_fault references undeclared fault", eff.fault, where))


def validate_app_model(model: AppModel) -> list[Violation]:
    """Check every structural invariant; an empty list means the model is valid."""
    out: list[Violation] = []

    for kind, ids in (
        ("activity", [a.activity_id for a in model.activities]),
        ("layout", [lay.layout_id for lay in model.layouts]),
        ("element", [e.element_id for e in model.elements]),
        ("transition rule", [r.rule_id for r in model.transitions]),
        ("fault", [f.fault_id for f in model.faults]),
        ("function", list(model.call_graph.nodes)),
        ("flag", list(model.flags)),
        ("value key", list(model.values)),
    ):
        for dup in _duplicates(ids):
            out.append(Violation(f"duplicate {kind} id", dup))

    starts = [a.activity_id for a in model.activities if a.is_start]
    if len(starts) != 1:
        out.append(Violation("exactly one start activity", ",".join(starts) or model.name,
                             f"found {len(starts)}"))

    for act in model.activities:
        if act.initial_layout not in model.layout_by_id:
            out.append(Violation("unknown layout", act.initial_layout, f"initial layout of {act.activity_id}"))
        for lid in sorted(act.inflatable_layouts):
            if lid not in model.layout_by_id:
                out.append(Violation("unknown layout", lid, f"inflatable layout of {act.activity_id}"))
        if act.initial_layout in act.inflatable_layouts:
            out.append(Violation("initial layout is also inflatable", act.activity_id, act.initial_layout))

    for layout in model.layouts:
        for eid in layout.elements:
            if eid not in model.element_by_id:
                out.append(Violation("unknown element", eid, f"in layout {layout.layout_id}"))
        for lid in layout.embedded_layouts:
            if lid not in model.layout_by_id:
                out.append(Violation("unknown layout", lid, f"embedded in {layout.layout_id}"))
    for cyc in _embedding_cycles(model):
        out.append(Violation("embedding cycle", cyc[0], " -> ".join(cyc)))

    nodes = set(model.call_graph.nodes)
    for sig in model.call_graph.nodes:
        if not is_signature(sig):
            out.append(Violation("malformed function signature", sig))
    for caller, callee in model.call_graph.edges:
        for end in (caller, callee):
            if end not in nodes:
                out.append(Violation("call edge endpoint not in call graph", end, f"{caller} -> {callee}"))

    for el in model.elements:
        if ActionKind.BACK in el.supported_actions:
            out.append(Violation("back is bound to no element", el.element_id))
        if el.element_id in nodes:
            out.append(Violation("element id collides with function", el.element_id))
        for action, sig in el.listeners.items():
            if action not in el.supported_actions:
                out.append(Violation("listener action not supported by element", el.element_id, action.value))
            if sig not in nodes:
                out.append(Violation("listener function not in call graph", el.element_id, sig))
        if el.kind is not ElementKind.EDIT_FIELD and el.persistent_fields:
            out.append(Violation("persistent fields on non edit_field", el.element_id))
        for key in sorted(el.persistent_fields):
            if key not in model.values:
                out.append(Violation("undeclared value key", key, f"persistent field of {el.element_id}"))
        if el.dynamic_target_of is not None and el.dynamic_target_of not in model.activity_by_id:
            out.append(Violation("unknown activity", el.dynamic_target_of, f"dynamic target of {el.element_id}"))

    for rule in model.transitions:
        el = model.element_by_id.get(rule.element)
        if el is None:
            out.append(Violation("unknown element", rule.element, f"trigger of rule {rule.rule_id}"))
        elif rule.action not in el.supported_actions:
            out.append(Violation("trigger action not supported by element", rule.rule_id,
                                 f"{rule.element}.{rule.action.value}"))
        if not rule.effects:
            out.append(Violation("transition rule has no effects", rule.rule_id))
        if rule.guard is not None:
            _check_guard(model, rule, out)
        for eff in rule.effects:
            _check_effect(model, rule, eff, out)

    # reachability: activity -> layouts (initial, inflatable, embedded) -> elements
    reachable_layouts: set[str] = set()
    stack = [lid for a in model.activities for lid in (a.initial_layout, *sorted(a.inflatable_layouts))]
    while stack:
        lid = stack.pop()
        if lid in reachable_layouts or lid not in model.layout_by_id:
            continue
        reachable_layouts.add(lid)
        stack.extend(model.layout_by_id[lid].embedded_layouts)
    for layout in model.layouts:
        if layout.layout_id not in reachable_layouts:
            out.append(Violation("layout unreachable from any activity", layout.layout_id))
    placed = {eid for layout in model.layouts for eid in layout.elements}
    for el in model.elements:
        if el.element_id not in placed:
            out.append(Violation("element in no layout", el.element_id))

    return out


# -- (de)serialization ---------------------------------------------------------

def _schema() -> dict:
    text = resources.files("changehound.schema").joinpath("app-model.schema.json").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=1)
def _validator() -> jsonschema.protocols.Validator:
    schema = _schema()
    cls = jsonschema.validators.validator_for(schema)
    cls.check_schema(schema)
    return cls(schema)


def _json_path(parts: Iterable[Any]) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _tagged(data: dict, table: dict, path: str):
    cls = table[data["type"]]
    kwargs = {k: v for k, v in data.items() if k != "type"}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ParseError(str(exc), path=path) from None


def app_model_from_dict(data: Mapping[str, Any], *, check_schema: bool = True) -> AppModel:
    """Build an AppModel from an already decoded document.

    The document's structure is checked against the JSON schema unless
    ``check_schema`` is false; semantic validation is left to the caller.
    """
    if check_schema:
        error = jsonschema.exceptions.best_match(_validator().iter_errors(data))
        if error is not None:
            raise ParseError(error.message, path=_json_path(error.absolute_path))

    elements = tuple(
        GuiElement(
            element_id=e["id"],
            kind=ElementKind(e["kind"]),
            supported_actions=frozenset(ActionKind(a) for a in e.get("actions", [])),
            listeners={ActionKind(a): sig for a, sig in e.get("listeners", {}).items()},
            dynamic_target_of=e.get("dynamic_target_of"),
            persistent_fields=frozenset(e.get("persistent_fields", [])),
        )
        for e in data["elements"]
    )
    rules = tuple(
        TransitionRule(
            rule_id=r["id"],
            element=r["trigger"]["element"],
            action=ActionKind(r["trigger"]["action"]),
            guard=_tagged(r["guard"], _GUARD_TYPES, f"$.transitions[{i}].guard") if r.get("guard") else None,
            effects=tuple(
                _tagged(eff, _EFFECT_TYPES, f"$.transitions[{i}].effects[{j}]")
                for j, eff in enumerate(r["effects"])
            ),
        )
        for i, r in enumerate(data.get("transitions", []))
    )
    cg = data.get("call_graph", {})
    return AppModel(
        name=data["name"],
        activities=tuple(
            Activity(
                activity_id=a["id"],
                initial_layout=a["initial_layout"],
                inflatable_layouts=frozenset(a.get("inflatable_layouts", [])),
                is_start=a.get("is_start", False),
            )
            for a in data["activities"]
        ),
        layouts=tuple(
            Layout(lay["id"], tuple(lay.get("elements", [])), tuple(lay.get("embedded_layouts", [])))
            for lay in data["layouts"]
        ),
        elements=elements,
        call_graph=CallGraph(tuple(cg.get("nodes", [])), tuple(tuple(e) for e in cg.get("edges", []))),
        transitions=rules,
        faults=tuple(
            FaultSpec(f["id"], f.get("description", ""), FaultKind(f["kind"]), f.get("once_only", False))
            for f in data.get("faults", [])
        ),
        flags=tuple(data.get("flags", [])),
        values=tuple(data.get("values", [])),
    )


def load_app_model(path: Union[str, Path]) -> AppModel:
    """Read, parse and validate an ``.app.json`` document.

    Raises ParseError for malformed documents and ValidationError when an
    invariant is violated. A missing file propagates as FileNotFoundError.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    model = app_model_from_dict(data)
    violations = validate_app_model(model)
    if violations:
        raise ValidationError(violations)
    return model


def _encode_tagged(obj) -> dict:
    out = {"type": _TYPE_NAMES[type(obj)]}
    out.update(obj.__dict__)
    return out


def serialize(model: AppModel) -> dict:
    """Inverse of :func:`app_model_from_dict`."""
    return {
        "name": model.name,
        "activities": [
            {
                "id": a.activity_id,
                "initial_layout": a.initial_layout,
                "inflatable_layouts": sorted(a.inflatable_layouts),
                "is_start": a.is_start,
            }
            for a in model.activities
        ],
        "layouts": [
            {"id": lay.layout_id, "elements": list(lay.elements), "embedded_layouts": list(lay.embedded_layouts)}
            for lay in model.layouts
        ],
        "elements": [
            {
                "id": e.element_id,
                "kind": e.kind.value,
                "actions": [a.value for a in e.ordered_actions()],
                "listeners": {a.value: e.listeners[a] for a in sorted(e.listeners, key=ACTION_ORDER.__getitem__)},
                "dynamic_target_of": e.dynamic_target_of,
                "persistent_fields": sorted(e.persistent_fields),
            }
            for e in model.elements
        ],
        "call_graph": {
            "nodes": list(model.call_graph.nodes),
            "edges": [list(e) for e in model.call_graph.edges],
        },
        "transitions": [
            {
                "id": r.rule_id,
                "trigger": {"element": r.element, "action": r.action.value},
                "guard": _encode_tagged(r.guard) if r.guard is not None else None,
                "effects": [_encode_tagged(eff) for eff in r.effects],
            }
            for r in model.transitions
        ],
        "faults": [
            {"id": f.fault_id, "description": f.description, "kind": f.kind.value, "once_only": f.once_only}
            for f in model.faults
        ],
        "flags": list(model.flags),
        "values": list(model.values),
    }


def dump_app_model(model: AppModel, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(serialize(model), indent=2) + "\n", encoding="utf-8")
