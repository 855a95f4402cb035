"""Provenance tracing over trees of run directories.

A run directory is anything holding a config.json. Tracing recomputes the
spec hash from the stored spec, then checks that the recorded hash, every
CSV header, and the summary agree with it. run_log.json is exempt: it holds
the wall-time record, which is deliberately outside the deterministic set.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class TraceEntry:
    path: str
    status: str     # "ok" or "fail"
    detail: str


@dataclass(frozen=True)
class TraceReport:
    entries: tuple

    @property
    def ok(self) -> bool:
        return bool(self.entries) and all(e.status == "ok" for e in self.entries)


def _rehash(spec_dict: dict) -> str:
    canon = json.dumps(spec_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _check_dir(run_dir: Path) -> TraceEntry:
    def fail(detail):
        return TraceEntry(path=str(run_dir), status="fail", detail=detail)

    try:
        cfg = json.loads((run_dir / "config.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        return fail(f"unreadable config.json: {exc}")
    if "spec" not in cfg or "spec_hash" not in cfg:
        return fail("config.json lacks spec or spec_hash")
    h = _rehash(cfg["spec"])
    if cfg["spec_hash"] != h:
        return fail(f"recorded hash {cfg['spec_hash']} != recomputed {h}")

    summary_path = run_dir / "summary.json"
    if not summary_path.exists():
        return fail("incomplete run: no summary.json")
    try:
        summary = json.loads(summary_path.read_text())
    except json.JSONDecodeError as exc:
        return fail(f"unreadable summary.json: {exc}")
    if summary.get("spec_hash") != h:
        return fail(f"summary.json hash {summary.get('spec_hash')} != {h}")

    for csv in sorted(run_dir.glob("*.csv")):
        try:
            with open(csv) as fh:
                header = fh.readline()
        except OSError as exc:
            return fail(f"unreadable {csv.name}: {exc}")
        tag = f"# spec_hash={h} "
        if not header.startswith(tag):
            got = header.split(" ")[1] if " " in header else header.strip()
            return fail(f"{csv.name} header {got!r} does not carry hash {h}")
    return TraceEntry(path=str(run_dir), status="ok",
                      detail=f"{len(list(run_dir.glob('*.csv')))} csv files")


def trace_tree(root) -> TraceReport:
    """Check every run directory under root (root itself included)."""
    root = Path(root)
    if not root.is_dir():
        return TraceReport(entries=(TraceEntry(
            path=str(root), status="fail", detail="not a directory"),))
    run_dirs = sorted({p.parent for p in root.rglob("config.json")})
    if not run_dirs:
        return TraceReport(entries=(TraceEntry(
            path=str(root), status="fail",
            detail="no run directories (no config.json found)"),))
    return TraceReport(entries=tuple(_check_dir(d) for d in run_dirs))
