"""General helper utilities for formatting, run ids and file I/O."""

import hashlib
import json
import os
import shutil
import tempfile
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Optional

import pandas as pd

from ..errors import EmptyTable, InputFileError


def format_duration(seconds: float) -> str:
    """Format duration in seconds to human-readable string.

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted string (e.g., "2m 34s")
    """
    if seconds < 60:
        return f"{seconds:.1f}s"

    minutes = int(seconds // 60)
    remaining_seconds = int(seconds % 60)

    if minutes < 60:
        return f"{minutes}m {remaining_seconds}s"

    hours = minutes // 60
    remaining_minutes = minutes % 60
    return f"{hours}h {remaining_minutes}m"


_last_run_id: Optional[str] = None


def generate_run_id() -> str:
    """
    Generate a run ID based on the current UTC timestamp.

    Format: run_YYYYMMDD_HHMMSS_ffffff. Ids from one process strictly
    increase, so two runs never share a JSONL run log.

    Returns:
        Run ID string
    """
    global _last_run_id
    now = datetime.now(timezone.utc)
    run_id = f"run_{now.strftime('%Y%m%d_%H%M%S_%f')}"
    if _last_run_id is not None and run_id <= _last_run_id:
        last = datetime.strptime(_last_run_id, "run_%Y%m%d_%H%M%S_%f")
        run_id = f"run_{(last + timedelta(microseconds=1)).strftime('%Y%m%d_%H%M%S_%f')}"
    _last_run_id = run_id
    return run_id


def canonical_json(data: Any) -> str:
    """JSON with sorted keys and fixed separators, for files that must be byte-stable."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def sha256_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_text_atomic(path: Path, text: str) -> None:
    """Write a file through a temporary sibling and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def replace_directory(tmp_dir: Path, target: Path) -> None:
    """Move a fully written temporary directory onto `target`."""
    target = Path(target)
    if target.exists():
        backup = target.with_name(f".{target.name}.old")
        if backup.exists():
            shutil.rmtree(backup)
        os.replace(target, backup)
        os.replace(tmp_dir, target)
        shutil.rmtree(backup)
    else:
        target.parent.mkdir(parents=True, exist_ok=True)
        os.replace(tmp_dir, target)


def read_csv_table(path: Path) -> pd.DataFrame:
    """
    Read a CSV as text cells; only empty cells count as missing.

    Raises:
        InputFileError: If the file does not exist or cannot be parsed
        EmptyTable: If the file has no header
    """
    path = Path(path)
    if not path.is_file():
        raise InputFileError(f"input file not found: {path}", path=str(path))
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise EmptyTable(f"{path} is empty", path=str(path)) from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputFileError(f"cannot parse {path}: {e}", path=str(path)) from e


def write_csv_table(df: pd.DataFrame, path: Path) -> None:
    """Write a table as UTF-8 CSV with LF line endings."""
    write_text_atomic(Path(path), df.to_csv(index=False, lineterminator="\n"))


def read_json_file(path: Path) -> Any:
    path = Path(path)
    if not path.is_file():
        raise InputFileError(f"input file not found: {path}", path=str(path))
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputFileError(f"invalid JSON in {path}: {e}", path=str(path)) from e
