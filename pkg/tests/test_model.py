import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from changehound.model import (
    ActionKind,
    ParseError,
    UnknownLayout,
    ValidationError,
    app_model_from_dict,
    dump_app_model,
    flatten_layout,
    load_app_model,
    parse_signature,
    serialize,
    validate_app_model,
)

from conftest import REPO, clone, minimal_doc


def write(tmp_path, doc, name="m.app.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_amaze_compress_listener(amaze):
    el = amaze.model.element_by_id["compress"]
    assert el.kind.value == "menu_item"
    assert el.listeners[ActionKind.CLICK] == "filemanager.MainFragment.onCompress()"
    assert "filemanager.MainActivityHelper.compressFiles(List)" in amaze.model.call_graph.descendants(
        el.listeners[ActionKind.CLICK])


def test_minimal_document_loads(tmp_path):
    model = load_app_model(write(tmp_path, minimal_doc()))
    assert model.elements == ()
    assert model.start_activity.activity_id == "Main"


def test_self_embedding_is_a_cycle(tmp_path):
    doc = minimal_doc()
    doc["layouts"][0]["embedded_layouts"] = ["root"]
    with pytest.raises(ValidationError) as err:
        load_app_model(write(tmp_path, doc))
    assert [v.invariant for v in err.value.violations] == ["embedding cycle"]


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "bad.app.json"
    path.write_text('{\n  "name": "x",\n  "activities": [,]\n}')
    with pytest.raises(ParseError) as err:
        load_app_model(path)
    assert err.value.line == 3


def test_schema_error_reports_field_path(tmp_path):
    doc = minimal_doc()
    doc["activities"][0]["is_start"] = "yes"
    with pytest.raises(ParseError) as err:
        load_app_model(write(tmp_path, doc))
    assert err.value.path == "$.activities[0].is_start"


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_app_model("/nonexistent/x.app.json")


def _with_button(listeners, actions=("click",)):
    doc = minimal_doc()
    doc["elements"] = [{"id": "b", "kind": "button", "actions": list(actions), "listeners": listeners,
                        "dynamic_target_of": None, "persistent_fields": []}]
    doc["layouts"][0]["elements"] = ["b"]
    return doc


def test_listener_outside_call_graph():
    model = app_model_from_dict(_with_button({"click": "app.Main.onClick()"}))
    assert [v.invariant for v in validate_app_model(model)] == ["listener function not in call graph"]


def test_listener_on_unsupported_action():
    doc = _with_button({"edit_text": "app.Main.onEdit()"})
    doc["call_graph"]["nodes"] = ["app.Main.onEdit()"]
    violations = validate_app_model(app_model_from_dict(doc))
    assert len(violations) == 1
    assert violations[0].invariant == "listener action not supported by element"
    assert violations[0].offending_id == "b"


def test_corpus_models_are_valid(entries):
    for e in entries:
        assert validate_app_model(e.model) == [], e.name


def test_round_trip_is_identity(entries, tmp_path):
    for e in entries:
        original = json.loads(e.model_path.read_text())
        assert serialize(e.model) == original, e.name
        out = tmp_path / f"{e.name}.app.json"
        dump_app_model(e.model, out)
        assert load_app_model(out) == e.model


def test_shipped_schema_matches_docs():
    packaged = (REPO / "src" / "changehound" / "schema" / "app-model.schema.json").read_text()
    assert (REPO / "docs" / "schema" / "app-model.schema.json").read_text() == packaged


@pytest.mark.parametrize("sig,expected", [
    ("a.b.C.m(int, String)", ("a.b", "C", "m", ("int", "String"))),
    ("C.m()", ("", "C", "m", ())),
])
def test_parse_signature(sig, expected):
    assert tuple(parse_signature(sig)) == expected


@pytest.mark.parametrize("bad", ["", "m()", "a.b.C.m", "a..C.m()"])
def test_parse_signature_rejects(bad):
    with pytest.raises(ValueError):
        parse_signature(bad)


# -- flatten_layout -----------------------------------------------------------------

def _layout_doc(layouts):
    doc = minimal_doc()
    names = sorted({e for elems, _ in layouts.values() for e in elems})
    doc["elements"] = [{"id": n, "kind": "text", "actions": ["scroll"], "listeners": {},
                        "dynamic_target_of": None, "persistent_fields": []} for n in names]
    doc["layouts"] = [{"id": lid, "elements": elems, "embedded_layouts": emb}
                      for lid, (elems, emb) in layouts.items()]
    doc["activities"][0]["initial_layout"] = next(iter(layouts))
    return app_model_from_dict(doc)


def test_flatten_simple():
    model = _layout_doc({"L1": (["a", "b"], ["L2"]), "L2": (["c"], [])})
    assert flatten_layout(model, "L1") == ["a", "b", "c"]
    assert flatten_layout(model, "L2") == ["c"]


def test_flatten_shared_embedding():
    model = _layout_doc({
        "L1": (["a"], ["L2", "L3"]),
        "L2": (["b", "c"], []),
        "L3": (["c", "d"], ["L2"]),
    })
    assert flatten_layout(model, "L1") == ["a", "b", "c", "d"]


def test_flatten_unknown_layout(amaze):
    with pytest.raises(UnknownLayout):
        flatten_layout(amaze.model, "nope")


def _naive_reachable_elements(doc, root):
    by_id = {lay["id"]: lay for lay in doc["layouts"]}
    seen_layouts, frontier = set(), [root]
    while frontier:
        lid = frontier.pop()
        if lid not in seen_layouts:
            seen_layouts.add(lid)
            frontier.extend(by_id[lid]["embedded_layouts"])
    return {e for lid in seen_layouts for e in by_id[lid]["elements"]}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_flatten_matches_reachability_oracle(seed):
    from modelgen import random_app

    doc = random_app(random.Random(seed), n_functions=10, n_elements=25, n_activities=4)
    model = app_model_from_dict(doc)
    for lay in doc["layouts"]:
        flat = flatten_layout(model, lay["id"])
        assert len(flat) == len(set(flat))
        assert set(flat) == _naive_reachable_elements(doc, lay["id"])
        # first-occurrence order: own elements lead
        own = [e for e in dict.fromkeys(lay["elements"])]
        assert flat[:len(own)] == own


# -- single-field corruptions -----------------------------------------------------

def _set(path, value):
    def apply(doc):
        target = doc
        for key in path[:-1]:
            target = target[key]
        target[path[-1]] = value
    return apply


def _corruptions(doc):
    """(label, mutator) pairs; each mutator changes exactly one field."""
    out = []
    for i, lay in enumerate(doc["layouts"]):
        if lay["elements"]:
            out.append((f"layout {lay['id']} element", _set(["layouts", i, "elements", 0], "ghost_element")))
        out.append((f"layout {lay['id']} embeds itself", _set(["layouts", i, "embedded_layouts"], [lay["id"]])))
    for i, act in enumerate(doc["activities"]):
        out.append((f"activity {act['id']} layout", _set(["activities", i, "initial_layout"], "ghost_layout")))
        out.append((f"activity {act['id']} start flag", _set(["activities", i, "is_start"], not act["is_start"])))
    for i, el in enumerate(doc["elements"]):
        other = doc["elements"][(i + 1) % len(doc["elements"])]["id"]
        out.append((f"element {el['id']} duplicated id", _set(["elements", i, "id"], other)))
        if el["listeners"]:
            action = next(iter(el["listeners"]))
            out.append((f"element {el['id']} listener",
                        _set(["elements", i, "listeners", action], "ghost.Cls.fn()")))
            kept = [a for a in el["actions"] if a != action] or ["scroll"]
            out.append((f"element {el['id']} actions", _set(["elements", i, "actions"], kept)))
        if el["kind"] != "edit_field":
            out.append((f"element {el['id']} persistent", _set(["elements", i, "persistent_fields"], ["ghost_key"])))
    for i, rule in enumerate(doc["transitions"]):
        out.append((f"rule {rule['id']} trigger", _set(["transitions", i, "trigger", "element"], "ghost_element")))
        out.append((f"rule {rule['id']} effects", _set(["transitions", i, "effects"], [])))
    for i, _ in enumerate(doc["call_graph"]["edges"]):
        out.append((f"call edge {i}", _set(["call_graph", "edges", i, 1], "ghost.Cls.fn()")))
    return out


def _still_caught(doc, mutate) -> bool:
    bad = clone(doc)
    mutate(bad)
    # corruptions keep the document schema-valid; only semantic checks apply
    return bool(validate_app_model(app_model_from_dict(bad, check_schema=False)))


def test_sampled_corruptions_are_caught(entries):
    rng = random.Random(7)
    checked = 0
    for e in entries:
        doc = json.loads(e.model_path.read_text())
        corruptions = _corruptions(doc)
        for label, mutate in rng.sample(corruptions, min(60, len(corruptions))):
            assert _still_caught(doc, mutate), f"{e.name}: {label}"
            checked += 1
    assert checked >= 600


def test_every_corruption_is_caught_on_small_model(by_name):
    doc = json.loads(by_name["beecount_like"].model_path.read_text())
    for label, mutate in _corruptions(doc):
        assert _still_caught(doc, mutate), label
