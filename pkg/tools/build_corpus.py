"""Generate the bundled corpus under src/changehound/corpus/.

Each app is written through the package's own loader and serializer, so the
files on disk are in canonical form. Expected targets are declared by hand
next to each app and checked against the impact analysis before writing.

    python3 tools/build_corpus.py [--out DIR]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from changehound.impact import ChangeSet, analyze
from changehound.model import app_model_from_dict, serialize, validate_app_model

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "changehound" / "corpus"


# -- effect / guard shorthands --------------------------------------------------

def goto(activity):
    return {"type": "goto_activity", "activity": activity}


def inflate(layout):
    return {"type": "inflate", "layout": layout}


POP = {"type": "pop_back"}
CRASH = {"type": "crash"}


def set_flag(flag, value):
    return {"type": "set_flag", "flag": flag, "value": value}


def set_value(key, text):
    return {"type": "set_value", "key": key, "text": text}


def clear(key):
    return {"type": "clear_value", "key": key}


def reveal(fault):
    return {"type": "reveal_fault", "fault": fault}


def flag_is(flag, value):
    return {"type": "flag_is", "flag": flag, "value": value}


def equal(a, b):
    return {"type": "value_equals", "a": a, "b": b}


def empty(key):
    return {"type": "value_empty", "key": key}


def camel(text: str) -> str:
    return "".join(part[:1].upper() + part[1:] for part in text.split("_"))


class AppBuilder:
    def __init__(self, name: str, package: str):
        self.name = name
        self.package = package
        self.activities: list[dict] = []
        self.layouts: list[dict] = []
        self.elements: list[dict] = []
        self.nodes: list[str] = []
        self.edges: list[list[str]] = []
        self.rules: list[dict] = []
        self.faults: list[dict] = []
        self.flags: list[str] = []
        self.values: list[str] = []

    def fn(self, sig: str, *callees: str) -> str:
        if sig not in self.nodes:
            self.nodes.append(sig)
        for c in callees:
            if c not in self.nodes:
                self.nodes.append(c)
            self.edges.append([sig, c])
        return sig

    def element(self, eid, kind="button", actions=("click",), listeners=None, dynamic=None, persistent=()):
        listeners = dict(listeners or {})
        for sig in listeners.values():
            self.fn(sig)
        self.elements.append({
            "id": eid,
            "kind": kind,
            "actions": list(actions),
            "listeners": listeners,
            "dynamic_target_of": dynamic,
            "persistent_fields": list(persistent),
        })
        return eid

    def layout(self, lid, elements, embeds=()):
        self.layouts.append({"id": lid, "elements": list(elements), "embedded_layouts": list(embeds)})
        return lid

    def activity(self, aid, layout, inflatable=(), start=False):
        self.activities.append({
            "id": aid, "initial_layout": layout, "inflatable_layouts": list(inflatable), "is_start": start,
        })
        return aid

    def rule(self, element, action, effects, guard=None):
        rid = f"r{len(self.rules) + 1}_{element}_{action}"
        self.rules.append({
            "id": rid, "trigger": {"element": element, "action": action}, "guard": guard, "effects": list(effects),
        })

    def fault(self, fid, description, kind, once_only=False):
        self.faults.append({"id": fid, "description": description, "kind": kind, "once_only": once_only})

    def nav_button(self, eid, target_activity, owner: str, kind="button"):
        """Button whose click opens ``target_activity``."""
        sig = f"{self.package}.{owner}.open{camel(eid)}()"
        self.element(eid, kind, ("click",), {"click": sig})
        self.rule(eid, "click", [goto(target_activity)])
        return eid

    def filler(self, prefix: str, depth: int, fanout: int, extras: int = 1) -> str:
        """Tree of screens ``depth`` levels deep; returns the root activity id.

        Every screen holds ``fanout`` buttons opening its children and
        ``extras`` inert widgets.
        """
        aid = camel(prefix) + "Activity"
        children = []
        if depth > 0:
            children = [self.filler(f"{prefix}_{i}", depth - 1, fanout, extras) for i in range(fanout)]
        items = []
        for i, child in enumerate(children):
            items.append(self.nav_button(f"{prefix}_open{i}", child, camel(prefix) + "Activity"))
        for i in range(extras):
            kind, action = (("list_item", "click") if i % 2 else ("text", "scroll"))
            items.append(self.element(f"{prefix}_w{i}", kind, (action,)))
        self.layout(f"{prefix}_layout", items)
        self.activity(aid, f"{prefix}_layout")
        return aid

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "activities": self.activities,
            "layouts": self.layouts,
            "elements": self.elements,
            "call_graph": {"nodes": self.nodes, "edges": self.edges},
            "transitions": self.rules,
            "faults": self.faults,
            "flags": self.flags,
            "values": self.values,
        }


class Entry:
    def __init__(self, app: AppBuilder, change_type: str, changes: dict, expected: dict, guidance=None):
        self.app = app
        self.change_type = change_type
        self.changes = changes
        self.expected = expected
        self.guidance = guidance


# -- apps -------------------------------------------------------------------------

def amaze_like() -> Entry:
    """File manager: the changed function sits behind long-click, overflow, compress."""
    b = AppBuilder("amaze_like", "filemanager")
    p = "filemanager"
    viewer = b.filler("viewer", 1, 2)
    drawer = b.filler("drawer", 2, 3)
    search = b.filler("search", 1, 3)
    rename = b.filler("rename", 2, 2)
    props = b.filler("props", 2, 2)
    share = b.filler("share", 1, 2)

    b.element("file_list", "container", ("scroll",))
    b.element("file_row", "list_item", ("click", "long_click"),
              {"click": f"{p}.MainFragment.onFileClick(View)", "long_click": f"{p}.MainFragment.onFileLongClick(View)"})
    b.rule("file_row", "click", [goto(viewer)])
    b.rule("file_row", "long_click", [inflate("ctx_toolbar")])
    b.element("ctx_select_all", "button")
    b.element("ctx_overflow", "button", ("click",), {"click": f"{p}.MainFragment.onOverflow()"})
    b.rule("ctx_overflow", "click", [inflate("ctx_menu")])
    b.nav_button("ctx_share", share, "MainFragment")
    b.nav_button("nav_drawer", drawer, "MainActivity")
    b.nav_button("search_btn", search, "MainActivity")
    b.nav_button("menu_rename", rename, "MainFragment", "menu_item")
    b.nav_button("menu_properties", props, "MainFragment", "menu_item")

    compress_sig = f"{p}.MainActivityHelper.compressFiles(List)"
    b.fn(f"{p}.MainFragment.onCompress()", compress_sig)
    b.fn(compress_sig, f"{p}.ZipService.compressFiles(List)")
    b.fn(f"{p}.ZipService.compressFiles(List)", f"{p}.ZipService.writeEntry(ZipEntry)")
    b.element("compress", "menu_item", ("click",), {"click": f"{p}.MainFragment.onCompress()"})
    b.rule("compress", "click", [goto("CompressDialog")])
    b.element("archive_name", "edit_field", ("click", "edit_text"), persistent=("archive_name",))
    b.element("compress_ok", "button")
    b.rule("compress_ok", "click", [POP])
    b.values.append("archive_name")

    b.layout("main_layout", ["file_list", "file_row", "nav_drawer", "search_btn"])
    b.layout("ctx_toolbar", ["ctx_select_all", "ctx_overflow", "ctx_share"])
    b.layout("ctx_menu", ["menu_rename", "menu_properties", "compress"])
    b.layout("compress_layout", ["archive_name", "compress_ok"])
    b.activity("MainFragment", "main_layout", ("ctx_toolbar", "ctx_menu"), start=True)
    b.activity("CompressDialog", "compress_layout")
    return Entry(
        b, "function",
        {"changed_functions": [compress_sig]},
        {
            "target_elements": ["compress"],
            "target_activities": ["MainFragment"],
            "affected_functions": sorted([
                compress_sig, f"{p}.MainFragment.onCompress()", f"{p}.ZipService.compressFiles(List)",
                f"{p}.ZipService.writeEntry(ZipEntry)",
            ]),
        },
    )


def beecount_like() -> Entry:
    """Counter app: menu after editing the project name drops the edit."""
    b = AppBuilder("beecount_like", "beecount")
    p = "beecount"
    b.values.append("project_name")
    b.fault("bc_state_loss", "opening the menu in New Project discards the typed project name", "state_loss_fault")
    counting = b.filler("counting", 2, 3)
    settings = b.filler("bc_settings", 2, 2)
    help_ = b.filler("bc_help", 1, 3)

    b.element("new_project", "button", ("click",), {"click": f"{p}.WelcomeActivity.newProject()"})
    b.rule("new_project", "click", [clear("project_name"), goto("NewProjectActivity")])
    b.nav_button("list_projects", counting, "WelcomeActivity")
    b.nav_button("welcome_settings", settings, "WelcomeActivity")
    b.nav_button("welcome_help", help_, "WelcomeActivity")

    b.element("project_name", "edit_field", ("click", "edit_text"), persistent=("project_name",))
    b.element("add_count", "button", ("click",), {"click": f"{p}.NewProjectActivity.addCountRow()"})
    b.element("remove_count", "button", ("click",), {"click": f"{p}.NewProjectActivity.removeCountRow()"})
    save_sig = f"{p}.NewProjectActivity.saveProject()"
    b.fn(save_sig, f"{p}.DatabaseHelper.insertProject(Project)")
    b.element("save_project", "button", ("click",), {"click": save_sig})
    b.rule("save_project", "click", [clear("project_name"), POP])
    b.element("menu", "button", ("click",), {"click": f"{p}.NewProjectActivity.onMenu()"})
    b.rule("menu", "click", [inflate("bc_popup")], guard=empty("project_name"))
    b.rule("menu", "click", [clear("project_name"), reveal("bc_state_loss"), inflate("bc_popup")])
    b.nav_button("popup_settings", settings, "NewProjectActivity", "menu_item")
    b.element("popup_about", "menu_item")

    b.layout("welcome_layout", ["new_project", "list_projects", "welcome_settings", "welcome_help"])
    b.layout("new_project_layout", ["project_name", "add_count", "remove_count", "save_project", "menu"])
    b.layout("bc_popup", ["popup_settings", "popup_about"])
    b.activity("WelcomeActivity", "welcome_layout", start=True)
    b.activity("NewProjectActivity", "new_project_layout", ("bc_popup",))
    return Entry(
        b, "function",
        {"changed_functions": [save_sig]},
        {
            "target_elements": ["save_project"],
            "target_activities": ["NewProjectActivity"],
            "affected_functions": sorted([save_sig, f"{p}.DatabaseHelper.insertProject(Project)"]),
        },
    )


def worldweather_like() -> Entry:
    """Weather app: the changed settings button crashes on its first click only."""
    b = AppBuilder("worldweather_like", "worldweather")
    p = "worldweather"
    b.fault("ww_crash", "first click on Change API key crashes the app", "crash_fault", once_only=True)
    forecast = b.filler("forecast", 4, 3)
    cities = b.filler("cities", 4, 3)
    units = b.filler("units", 2, 3)
    about = b.filler("ww_about", 2, 3)

    b.element("city_list", "container", ("scroll",))
    b.nav_button("settings_btn", "SettingsActivity", "MainActivity")
    b.nav_button("forecast_btn", forecast, "MainActivity")
    b.nav_button("cities_btn", cities, "MainActivity")

    b.nav_button("units_btn", units, "SettingsActivity")
    b.nav_button("about_btn", about, "SettingsActivity")
    b.element("settings_header", "text", ("scroll",))
    b.element("notify_pref", "list_item")
    key_sig = f"{p}.SettingsActivity.onChangeApiKey()"
    b.fn(key_sig, f"{p}.ApiKeyDialog.show(Context)")
    b.element("change_api_key", "button", ("click",), {"click": key_sig})
    b.rule("change_api_key", "click", [reveal("ww_crash"), CRASH])

    b.layout("ww_main_layout", ["city_list", "settings_btn", "forecast_btn", "cities_btn"])
    b.layout("ww_settings_layout", ["units_btn", "about_btn", "settings_header", "notify_pref", "change_api_key"])
    b.activity("MainActivity", "ww_main_layout", start=True)
    b.activity("SettingsActivity", "ww_settings_layout")
    return Entry(
        b, "function",
        {"changed_functions": [key_sig]},
        {
            "target_elements": ["change_api_key"],
            "target_activities": ["SettingsActivity"],
            "affected_functions": sorted([key_sig, f"{p}.ApiKeyDialog.show(Context)"]),
        },
    )


def simplefm_like() -> Entry:
    """File manager whose changed screen hides behind a password confirmation."""
    b = AppBuilder("simplefm_like", "simplefm")
    p = "simplefm"
    b.values += ["password", "confirm"]
    storage = b.filler("storage", 2, 3)
    fm_settings = b.filler("fm_settings", 2, 3)
    vault_extra = b.filler("vault_extra", 1, 2)

    b.element("fm_file_list", "container", ("scroll",))
    b.element("fm_menu", "button")
    b.rule("fm_menu", "click", [inflate("fm_menu_layout")])
    b.nav_button("fm_storage", storage, "MainActivity")
    b.nav_button("fm_settings_btn", fm_settings, "MainActivity")
    b.element("create_protected", "menu_item", ("click",), {"click": f"{p}.MainActivity.createProtectedFolder()"})
    b.rule("create_protected", "click", [clear("password"), clear("confirm"), goto("PasswordActivity")])

    b.element("password_field", "edit_field", ("click", "edit_text"), persistent=("password",))
    b.element("confirm_field", "edit_field", ("click", "edit_text"), persistent=("confirm",))
    b.element("password_ok", "button", ("click",), {"click": f"{p}.PasswordActivity.onConfirm()"})
    b.rule("password_ok", "click", [clear("confirm")], guard=empty("password"))
    b.rule("password_ok", "click", [clear("confirm")], guard=empty("confirm"))
    b.rule("password_ok", "click", [goto("VaultActivity")], guard=equal("password", "confirm"))
    b.rule("password_ok", "click", [clear("confirm")])
    b.element("password_cancel", "button")
    b.rule("password_cancel", "click", [POP])

    b.nav_button("vault_more", vault_extra, "VaultActivity")
    encrypt_sig = f"{p}.VaultActivity.encryptFile(File)"
    b.fn(encrypt_sig, f"{p}.CryptoUtils.cipher(byte[])")
    b.element("encrypt_btn", "button", ("click",), {"click": encrypt_sig})

    b.layout("fm_main_layout", ["fm_file_list", "fm_menu", "fm_storage", "fm_settings_btn"])
    b.layout("fm_menu_layout", ["create_protected"])
    b.layout("password_layout", ["password_field", "confirm_field", "password_ok", "password_cancel"])
    b.layout("vault_layout", ["vault_more", "encrypt_btn"])
    b.activity("MainActivity", "fm_main_layout", ("fm_menu_layout",), start=True)
    b.activity("PasswordActivity", "password_layout")
    b.activity("VaultActivity", "vault_layout")
    guidance = {"events": [
        {"element_id": "fm_menu", "action": "click"},
        {"element_id": "create_protected", "action": "click"},
        {"element_id": "password_field", "action": "edit_text", "payload": "s3cret-pass"},
        {"element_id": "confirm_field", "action": "edit_text", "payload": "s3cret-pass"},
        {"element_id": "password_ok", "action": "click"},
    ]}
    return Entry(
        b, "function",
        {"changed_functions": [encrypt_sig]},
        {
            "target_elements": ["encrypt_btn"],
            "target_activities": ["VaultActivity"],
            "affected_functions": sorted([encrypt_sig, f"{p}.CryptoUtils.cipher(byte[])"]),
        },
        guidance=guidance,
    )


def hibi_like() -> Entry:
    """Journal app: the modified screens are only reachable through runtime-built drawer entries."""
    b = AppBuilder("hibi_like", "hibi")
    p = "hibi"
    calendar = b.filler("calendar", 2, 3)
    entries = b.filler("entries", 2, 2)
    tag_more = b.filler("tag_more", 1, 2)

    b.element("hibi_drawer", "button", ("click",), {"click": f"{p}.MainActivity.openDrawer()"})
    b.rule("hibi_drawer", "click", [inflate("drawer_layout")])
    b.nav_button("calendar_btn", calendar, "MainActivity")
    b.nav_button("entries_btn", entries, "MainActivity")
    for i, target in enumerate(["TagActivity", "TagActivity", "BookActivity"]):
        eid = f"drawer_dyn{i}"
        b.element(eid, "list_item", ("click",), {"click": f"{p}.DrawerAdapter.onItem{i}()"}, dynamic=target)
        b.rule(eid, "click", [goto(target)])
    b.element("tag_list", "container", ("scroll",))
    b.nav_button("tag_detail", tag_more, "TagActivity")
    b.element("book_list", "container", ("scroll",))

    b.layout("hibi_main_layout", ["hibi_drawer", "calendar_btn", "entries_btn"])
    b.layout("drawer_layout", ["drawer_dyn0", "drawer_dyn1", "drawer_dyn2"])
    b.layout("tag_layout", ["tag_list", "tag_detail"])
    b.layout("book_layout", ["book_list"])
    b.activity("MainActivity", "hibi_main_layout", ("drawer_layout",), start=True)
    b.activity("TagActivity", "tag_layout")
    b.activity("BookActivity", "book_layout")
    return Entry(
        b, "modified_activity",
        {"modified_activities": ["TagActivity", "BookActivity"]},
        {
            "target_elements": [],
            "target_activities": ["BookActivity", "TagActivity"],
            "affected_functions": [],
            "pending_dynamic_activities": ["BookActivity", "TagActivity"],
        },
    )


def simpledraw_like() -> Entry:
    """Drawing app: a new eraser tool appears in the tools palette."""
    b = AppBuilder("simpledraw_like", "simpledraw")
    p = "simpledraw"
    b.flags.append("grid")
    gallery = b.filler("gallery", 2, 3)
    colors = b.filler("colors", 2, 2)
    brushes = b.filler("brushes", 1, 3)

    b.element("canvas", "container", ("scroll",))
    b.element("tools_btn", "button", ("click",), {"click": f"{p}.DrawActivity.showTools()"})
    b.rule("tools_btn", "click", [inflate("tools_layout")])
    b.nav_button("gallery_btn", gallery, "DrawActivity")
    b.nav_button("tool_colors", colors, "DrawActivity")
    b.nav_button("tool_brushes", brushes, "DrawActivity")
    b.element("tool_grid", "button")
    b.rule("tool_grid", "click", [set_flag("grid", True)], guard=flag_is("grid", False))
    b.rule("tool_grid", "click", [set_flag("grid", False)])
    b.element("eraser_tool", "button", ("click", "long_click"),
              {"click": f"{p}.DrawActivity.selectEraser()", "long_click": f"{p}.DrawActivity.eraserSize()"})

    b.layout("draw_layout", ["canvas", "tools_btn", "gallery_btn"])
    b.layout("tools_layout", ["tool_colors", "tool_brushes", "tool_grid", "eraser_tool"])
    b.activity("DrawActivity", "draw_layout", ("tools_layout",), start=True)
    return Entry(
        b, "new_element",
        {"new_elements": ["eraser_tool"]},
        {"target_elements": ["eraser_tool"], "target_activities": ["DrawActivity"], "affected_functions": []},
    )


def currency_like() -> Entry:
    """Converter app: a new swap button on the converter screen."""
    b = AppBuilder("currency_like", "currency")
    p = "currency"
    b.values += ["amount"]
    rates = b.filler("rates", 2, 3)
    pick_from = b.filler("pick_from", 2, 2)
    pick_to = b.filler("pick_to", 2, 2)

    b.nav_button("convert_btn", "ConverterActivity", "HomeActivity")
    b.nav_button("rates_btn", rates, "HomeActivity")
    b.element("amount_field", "edit_field", ("click", "edit_text"), persistent=("amount",))
    b.nav_button("from_currency", pick_from, "ConverterActivity")
    b.nav_button("to_currency", pick_to, "ConverterActivity")
    b.element("swap_btn", "button", ("click",), {"click": f"{p}.ConverterActivity.swapCurrencies()"})

    b.layout("home_layout", ["convert_btn", "rates_btn"])
    b.layout("converter_layout", ["amount_field", "from_currency", "to_currency", "swap_btn"])
    b.activity("HomeActivity", "home_layout", start=True)
    b.activity("ConverterActivity", "converter_layout")
    return Entry(
        b, "new_element",
        {"new_elements": ["swap_btn"]},
        {"target_elements": ["swap_btn"], "target_activities": ["ConverterActivity"], "affected_functions": []},
    )


def diary_like() -> Entry:
    """Diary: the entry editor was modified and is opened from the home screen."""
    b = AppBuilder("diary_like", "diary")
    p = "diary"
    b.values.append("entry_text")
    archive = b.filler("archive", 2, 3)
    stats = b.filler("stats", 2, 2)
    theme = b.filler("theme", 1, 3)

    b.element("entry_list", "container", ("scroll",))
    b.nav_button("archive_btn", archive, "HomeActivity")
    b.nav_button("stats_btn", stats, "HomeActivity")
    b.nav_button("theme_btn", theme, "HomeActivity")
    b.element("new_entry", "button", ("click",), {"click": f"{p}.HomeActivity.newEntry()"})
    b.rule("new_entry", "click", [goto("EntryEditorActivity")])
    b.element("entry_body", "edit_field", ("click", "edit_text"), persistent=("entry_text",))
    b.element("entry_save", "button")
    b.rule("entry_save", "click", [POP])

    b.layout("diary_home_layout", ["entry_list", "archive_btn", "stats_btn", "theme_btn", "new_entry"])
    b.layout("editor_layout", ["entry_body", "entry_save"])
    b.activity("HomeActivity", "diary_home_layout", start=True)
    b.activity("EntryEditorActivity", "editor_layout")
    return Entry(
        b, "modified_activity",
        {"modified_activities": ["EntryEditorActivity"]},
        {"target_elements": ["new_entry"], "target_activities": ["HomeActivity"], "affected_functions": []},
    )


def trickytripper_like() -> Entry:
    """Travel expenses: the expense editor changed; it opens from a trip's detail screen."""
    b = AppBuilder("trickytripper_like", "tricky")
    p = "tricky"
    b.values.append("expense_amount")
    participants = b.filler("participants", 2, 3)
    report = b.filler("report", 2, 2)
    trips_more = b.filler("trips_more", 1, 3)

    b.element("trip_list", "container", ("scroll",))
    b.element("trip_row", "list_item", ("click",), {"click": f"{p}.TripListActivity.openTrip(Trip)"})
    b.rule("trip_row", "click", [goto("TripDetailActivity")])
    b.nav_button("trips_more_btn", trips_more, "TripListActivity")
    b.element("detail_header", "text", ("scroll",))
    b.nav_button("participants_btn", participants, "TripDetailActivity")
    b.nav_button("report_btn", report, "TripDetailActivity")
    b.element("add_expense", "button", ("click",), {"click": f"{p}.TripDetailActivity.addExpense()"})
    b.rule("add_expense", "click", [goto("ExpenseEditActivity")])
    b.element("expense_amount", "edit_field", ("click", "edit_text"), persistent=("expense_amount",))
    b.element("expense_done", "button")
    b.rule("expense_done", "click", [POP])

    b.layout("trip_list_layout", ["trip_list", "trip_row", "trips_more_btn"])
    b.layout("trip_detail_layout", ["detail_header", "participants_btn", "report_btn", "add_expense"])
    b.layout("expense_layout", ["expense_amount", "expense_done"])
    b.activity("TripListActivity", "trip_list_layout", start=True)
    b.activity("TripDetailActivity", "trip_detail_layout")
    b.activity("ExpenseEditActivity", "expense_layout")
    return Entry(
        b, "modified_activity",
        {"modified_activities": ["ExpenseEditActivity"]},
        {"target_elements": ["add_expense"], "target_activities": ["TripDetailActivity"], "affected_functions": []},
    )


def opentasks_like() -> Entry:
    """Task manager: the changed sort routine is wired to an overflow menu entry."""
    b = AppBuilder("opentasks_like", "opentasks")
    p = "opentasks"
    lists = b.filler("lists", 2, 3)
    task_detail = b.filler("task_detail", 2, 2)
    sync = b.filler("sync", 1, 3)

    b.element("task_pager", "container", ("scroll",))
    b.nav_button("task_item", task_detail, "TaskListFragment", "list_item")
    b.element("tasks_overflow", "button", ("click",), {"click": f"{p}.TaskListFragment.openOverflow()"})
    b.rule("tasks_overflow", "click", [inflate("tasks_menu")])
    b.nav_button("lists_btn", lists, "TaskListActivity")
    b.nav_button("menu_sync", sync, "TaskListFragment", "menu_item")
    sort_sig = f"{p}.TaskListFragment.sortTasks(Comparator)"
    b.fn(f"{p}.TaskListFragment.onSortSelected()", sort_sig)
    b.fn(sort_sig, f"{p}.TaskComparators.byDue()")
    b.element("menu_sort", "menu_item", ("click",), {"click": f"{p}.TaskListFragment.onSortSelected()"})

    b.layout("tasks_layout", ["task_pager", "task_item", "tasks_overflow", "lists_btn"])
    b.layout("tasks_menu", ["menu_sync", "menu_sort"])
    b.activity("TaskListActivity", "tasks_layout", ("tasks_menu",), start=True)
    return Entry(
        b, "function",
        {"changed_functions": [sort_sig]},
        {
            "target_elements": ["menu_sort"],
            "target_activities": ["TaskListActivity"],
            "affected_functions": sorted([
                sort_sig, f"{p}.TaskListFragment.onSortSelected()", f"{p}.TaskComparators.byDue()",
            ]),
        },
    )


def omninotes_like() -> Entry:
    """Notes app: the changed archive helper is reachable from two widgets."""
    b = AppBuilder("omninotes_like", "omninotes")
    p = "omninotes"
    b.values.append("note_title")
    categories = b.filler("categories", 2, 3)
    note_settings = b.filler("note_settings", 2, 2)
    attach = b.filler("attach", 1, 3)

    b.nav_button("note_open", "NoteActivity", "ListActivity", "list_item")
    b.nav_button("categories_btn", categories, "ListActivity")
    b.nav_button("notes_settings", note_settings, "ListActivity")
    b.element("note_title", "edit_field", ("click", "edit_text"), persistent=("note_title",))
    b.nav_button("attach_btn", attach, "NoteActivity")
    archive_sig = f"{p}.NoteProcessor.archive(Note)"
    b.fn(f"{p}.NoteActivity.onArchive()", archive_sig)
    b.fn(archive_sig, f"{p}.DbHelper.updateNote(Note)")
    b.element("note_archive", "button", ("click",), {"click": f"{p}.NoteActivity.onArchive()"})
    b.element("note_archive_menu", "menu_item", ("click",), {"click": f"{p}.NoteActivity.onArchive()"})
    b.rule("note_archive", "click", [POP])

    b.layout("notes_list_layout", ["note_open", "categories_btn", "notes_settings"])
    b.layout("note_layout", ["note_title", "attach_btn", "note_archive", "note_archive_menu"])
    b.activity("ListActivity", "notes_list_layout", start=True)
    b.activity("NoteActivity", "note_layout")
    return Entry(
        b, "function",
        {"changed_functions": [archive_sig]},
        {
            "target_elements": ["note_archive", "note_archive_menu"],
            "target_activities": ["NoteActivity"],
            "affected_functions": sorted([
                archive_sig, f"{p}.NoteActivity.onArchive()", f"{p}.DbHelper.updateNote(Note)",
            ]),
        },
    )


def chain_fixture() -> AppBuilder:
    """Three screens in a row, each with one inert widget; used for strategy golden tests."""
    b = AppBuilder("chain", "chain")
    screens = ["ScreenA", "ScreenB", "ScreenC"]
    for i, name in enumerate(screens):
        items = [b.element(f"{name.lower()}_label", "text", ("scroll",))]
        if i + 1 < len(screens):
            items.append(b.nav_button(f"{name.lower()}_next", screens[i + 1], name))
        b.layout(f"{name.lower()}_layout", items)
        b.activity(name, f"{name.lower()}_layout", start=(i == 0))
    return b


APPS = [
    amaze_like, beecount_like, worldweather_like, simplefm_like, hibi_like,
    simpledraw_like, currency_like, diary_like, trickytripper_like, opentasks_like, omninotes_like,
]


def canonical(builder: AppBuilder) -> dict:
    model = app_model_from_dict(builder.to_dict())
    violations = validate_app_model(model)
    if violations:
        raise SystemExit(f"{builder.name}: " + "; ".join(map(str, violations)))
    return serialize(model)


def check_expected(entry: Entry, data: dict) -> dict:
    model = app_model_from_dict(data)
    _, targets = analyze(model, ChangeSet.from_dict(entry.changes))
    got = targets.to_dict()
    expected = {
        "target_elements": sorted(entry.expected["target_elements"]),
        "target_activities": sorted(entry.expected["target_activities"]),
        "affected_functions": sorted(entry.expected["affected_functions"]),
        "pending_dynamic_activities": sorted(entry.expected.get("pending_dynamic_activities", [])),
    }
    for key, want in expected.items():
        if got[key] != want:
            raise SystemExit(f"{entry.app.name}: {key} is {got[key]}, expected {want}")
    return expected


def dump(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args(argv)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)

    manifest = {"entries": [], "fixtures": {}}
    for make in APPS:
        entry = make()
        name = entry.app.name
        data = canonical(entry.app)
        expected = check_expected(entry, data)
        record = {
            "name": name,
            "model": f"{name}.app.json",
            "changes": f"{name}.changes.json",
            "expected_targets": f"{name}.targets.json",
            "change_type": entry.change_type,
            "faults": {f["id"]: f["description"] for f in data["faults"]},
            "guidance": None,
        }
        dump(out / record["model"], data)
        dump(out / record["changes"], entry.changes)
        dump(out / record["expected_targets"], expected)
        if entry.guidance is not None:
            record["guidance"] = f"{name}.guidance.json"
            dump(out / record["guidance"], entry.guidance)
        manifest["entries"].append(record)
        print(f"{name}: {len(data['activities'])} activities, {len(data['elements'])} elements")

    chain = canonical(chain_fixture())
    dump(out / "chain.app.json", chain)
    manifest["fixtures"]["chain"] = "chain.app.json"
    dump(out / "manifest.json", manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
