"""Tests for the sqlite runs ledger."""

import pandas as pd

from db import delete_run, ensure_schema, find_runs_by_params, get_run, list_runs, runs_count, save_run


def test_empty_ledger(ledger):
    assert runs_count() == 0
    assert list_runs() == []
    assert get_run("missing") == {}


def test_save_and_get(ledger):
    rows = pd.DataFrame({"kind": ["t1g", "t1g"], "z_value": [0.25, -1.5]})
    run_id = save_run("ecdf", {"n": 20, "seed": 3}, [{"kind": "t1g", "ks": 0.04}], rows)
    got = get_run(run_id)
    assert got["kind"] == "ecdf"
    assert got["seed"] == "3"
    assert got["params"] == {"n": 20, "seed": 3}
    assert got["summary"][0]["ks"] == 0.04
    assert got["rows"]["z_value"].tolist() == [0.25, -1.5]
    assert ledger.exists()


def test_list_filters_and_count(ledger):
    save_run("ecdf", {"seed": 1}, [])
    save_run("power", {"seed": 2}, [])
    assert runs_count() == 2
    assert [r["kind"] for r in list_runs(kind="power")] == ["power"]
    assert "rows" not in list_runs()[0]


def test_find_by_params_ignores_key_order(ledger):
    run_id = save_run("roc", {"n": 10, "phi": 5.0}, {"auc": 0.7})
    assert find_runs_by_params({"phi": 5.0, "n": 10}) == [run_id]
    assert find_runs_by_params({"phi": 6.0, "n": 10}) == []


def test_delete(ledger):
    run_id = save_run("ecdf", {}, [])
    delete_run(run_id)
    assert runs_count() == 0
    assert get_run(run_id) == {}


def test_schema_idempotent(ledger):
    ensure_schema()
    ensure_schema()
    assert runs_count() == 0