import csv
import hashlib
import json
import subprocess
from collections.abc import Iterable, Mapping
from datetime import UTC, datetime
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

import structlog

log = structlog.get_logger()


def timestamp() -> str:
    return datetime.now(UTC).strftime("%Y%m%dT%H%M%SZ")


def reserve_path(out_dir: Path, stem: str, suffix: str, stamp: str | None = None) -> Path:
    """Create `<stem>_<stamp><suffix>` exclusively; a numeric tail is added on collision."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = stamp or timestamp()
    attempt = 0
    while True:
        tail = f"-{attempt}" if attempt else ""
        path = out_dir / f"{stem}_{stamp}{tail}{suffix}"
        try:
            path.open("x").close()
        except FileExistsError:
            attempt += 1
            continue
        return path


def write_csv(path: Path, fieldnames: list[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    # csv writes floats with repr, so values round-trip at full precision.
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n"
        )
        writer.writeheader()
        writer.writerows(rows)
    log.info("csv_written", path=str(path))
    return path


def config_digest(payload: Mapping[str, Any]) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def git_describe(cwd: Path | None = None) -> str | None:
    try:
        proc = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=cwd,
            capture_output=True,
            text=True,
            check=False,
        )
    except OSError:
        return None
    if proc.returncode != 0:
        return None
    return proc.stdout.strip() or None


def package_version() -> str:
    try:
        return version("swarm-isac")
    except PackageNotFoundError:
        return "0.0.0+local"


def write_manifest(path: Path, payload: Mapping[str, Any], config_dir: Path | None = None) -> Path:
    """Run manifest with no wall-clock values: one seed always yields the same bytes."""
    document = {
        **payload,
        "config_sha256": config_digest(payload.get("scenario", {})),
        "git_describe": git_describe(config_dir),
        "version": package_version(),
    }
    path.write_text(json.dumps(document, indent=2, sort_keys=True, default=str) + "\n", "utf-8")
    log.info("manifest_written", path=str(path))
    return path
