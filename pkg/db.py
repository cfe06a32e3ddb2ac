# db.py

import hashlib
import io
import json
import os
import sqlite3
import uuid
from datetime import datetime, timezone
from typing import Dict, List, Optional

import pandas as pd

from config import VERSION, db_path

# ---------------- Local DB path / connection ----------------

def _db_path() -> str:
    return db_path()


def _connect_db() -> sqlite3.Connection:
    path = _db_path()
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    conn = sqlite3.connect(path, check_same_thread=False)
    conn.row_factory = sqlite3.Row
    conn.execute("PRAGMA journal_mode=WAL;")
    return conn


def _utc_iso_z() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


def _sha256_text(s: str) -> str:
    h = hashlib.sha256()
    h.update((s or "").encode("utf-8"))
    return h.hexdigest()


def _canonical_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, default=str)


# ---------------- Runs ledger ----------------

def ensure_schema() -> None:
    with _connect_db() as conn:
        conn.execute(
            """
            CREATE TABLE IF NOT EXISTS runs (
                run_id TEXT PRIMARY KEY,
                kind TEXT NOT NULL,
                created_at TEXT NOT NULL,
                params_json TEXT NOT NULL,
                summary_json TEXT NOT NULL,
                rows_csv TEXT
            );
            """
        )
        # Migration: columns added after the first ledger version
        for col in ("version TEXT", "seed TEXT", "params_sha256 TEXT"):
            try:
                conn.execute(f"ALTER TABLE runs ADD COLUMN {col};")
            except sqlite3.OperationalError:
                pass
        conn.execute(
            """
            CREATE INDEX IF NOT EXISTS idx_runs_created
            ON runs(created_at DESC);
            """
        )


def save_run(
    kind: str,
    params: Dict,
    summary: object,
    rows: Optional[pd.DataFrame] = None,
) -> str:
    """Record one experiment; returns the new run id."""
    ensure_schema()
    run_id = uuid.uuid4().hex
    params_json = _canonical_json(params or {})
    rows_csv = None
    if rows is not None:
        buf = io.StringIO()
        rows.to_csv(buf, index=False, float_format="%.17g")
        rows_csv = buf.getvalue()
    seed = (params or {}).get("seed")
    with _connect_db() as conn:
        conn.execute(
            """
            INSERT INTO runs (
                run_id, kind, created_at, params_json, summary_json, rows_csv,
                version, seed, params_sha256
            )
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?);
            """,
            (
                run_id,
                (kind or "").strip(),
                _utc_iso_z(),
                params_json,
                _canonical_json(summary),
                rows_csv,
                VERSION,
                None if seed is None else str(seed),
                _sha256_text(params_json),
            ),
        )
    return run_id


def _row_meta(r: sqlite3.Row) -> Dict[str, object]:
    return {
        "run_id": (r["run_id"] or "").strip(),
        "kind": (r["kind"] or "").strip(),
        "created_at": (r["created_at"] or "").strip(),
        "version": (r["version"] or "").strip() if r["version"] else "",
        "seed": (r["seed"] or "").strip() if r["seed"] else "",
        "params": json.loads(r["params_json"] or "{}"),
        "summary": json.loads(r["summary_json"] or "null"),
    }


def list_runs(limit: int = 200, kind: Optional[str] = None) -> List[Dict[str, object]]:
    """Runs newest first, without their row data."""
    query = """
        SELECT run_id, kind, created_at, params_json, summary_json, version, seed
        FROM runs
    """
    args: List[object] = []
    if kind:
        query += " WHERE kind = ?"
        args.append(kind)
    query += " ORDER BY created_at DESC, run_id DESC LIMIT ?;"
    args.append(int(limit))
    ensure_schema()
    with _connect_db() as conn:
        rows = conn.execute(query, tuple(args)).fetchall()
    return [_row_meta(r) for r in rows]


def get_run(run_id: str) -> Dict[str, object]:
    ensure_schema()
    with _connect_db() as conn:
        row = conn.execute(
            """
            SELECT run_id, kind, created_at, params_json, summary_json, rows_csv, version, seed
            FROM runs
            WHERE run_id = ? LIMIT 1;
            """,
            ((run_id or "").strip(),),
        ).fetchone()
    if not row:
        return {}
    out = _row_meta(row)
    csv_text = row["rows_csv"]
    out["rows"] = pd.read_csv(io.StringIO(csv_text)) if csv_text else None
    return out


def find_runs_by_params(params: Dict) -> List[str]:
    digest = _sha256_text(_canonical_json(params or {}))
    ensure_schema()
    with _connect_db() as conn:
        rows = conn.execute(
            "SELECT run_id FROM runs WHERE params_sha256 = ? ORDER BY created_at DESC;",
            (digest,),
        ).fetchall()
    return [(r["run_id"] or "").strip() for r in rows]


def delete_run(run_id: str) -> None:
    ensure_schema()
    with _connect_db() as conn:
        conn.execute("DELETE FROM runs WHERE run_id = ?;", ((run_id or "").strip(),))


def runs_count() -> int:
    # Safe even before the first run is saved.
    with _connect_db() as conn:
        try:
            row = conn.execute("SELECT COUNT(*) AS c FROM runs;").fetchone()
        except sqlite3.OperationalError:
            return 0
        return int(row["c"]) if row else 0
