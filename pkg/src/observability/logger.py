"""
Structured logging for pipeline runs.

Every event goes through structlog; events carrying a `run_id` are also
appended as JSON lines to `<log_dir>/<run_id>.jsonl`.
"""

import functools
import inspect
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import structlog

_run_files: Dict[str, Path] = {}
_log_dir: Path = Path("logs")


def _tee_to_run_file(logger: Any, method_name: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Append the event to the JSONL file of its run, if one is registered."""
    run_file = _run_files.get(event_dict.get("run_id", ""))
    if run_file is not None:
        try:
            with open(run_file, "a", encoding="utf-8") as f:
                f.write(json.dumps(event_dict, default=str, sort_keys=True) + "\n")
        except OSError as e:
            sys.stderr.write(f"logging error: {e}\n")
    return event_dict


def _drop_console(logger: Any, method_name: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    raise structlog.DropEvent


def configure_logging(level: str = "INFO", log_dir: Path = Path("logs"), console: bool = True) -> None:
    """Configure structlog processors for the whole process."""
    global _log_dir
    _log_dir = Path(log_dir)

    renderer = structlog.dev.ConsoleRenderer(colors=False) if console else _drop_console
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            _tee_to_run_file,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(logging.getLevelName(level.upper())),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


class RunLogger:
    """
    Per-run logger for debugging and auditing pipeline stages.

    Logs:
    - Stage entry/exit and timing
    - Epoch losses and learning-rate changes
    - Warnings and errors with their call site
    """

    def __init__(self, run_id: str, log_dir: Optional[Path] = None):
        """
        Initialize the run logger.

        Args:
            run_id: Current run ID (used for log file naming)
            log_dir: Directory of the JSONL run files (defaults to the configured one)
        """
        self.run_id = run_id
        self.log_dir = Path(log_dir) if log_dir is not None else _log_dir
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.log_file = self.log_dir / f"{run_id}.jsonl"
        _run_files[run_id] = self.log_file
        self._logger = structlog.get_logger("tabsynth").bind(run_id=run_id)

    def log(self, event: str, data: Optional[Dict[str, Any]] = None) -> None:
        """Write a structured log entry."""
        self._logger.info(event, **(data or {}))

    def log_stage_entry(self, stage: str, summary: Dict[str, Any]) -> None:
        self._logger.info("stage_entry", stage=stage, **summary)

    def log_stage_exit(self, stage: str, summary: Dict[str, Any], duration_ms: float) -> None:
        self._logger.info("stage_exit", stage=stage, duration_ms=round(duration_ms, 2), **summary)

    def log_epoch(self, record: Any) -> None:
        """Log one EpochRecord."""
        self._logger.info("epoch", **record.model_dump())

    def log_info(self, message: str, data: Optional[Dict[str, Any]] = None) -> None:
        self._logger.info("info", message=message, **self._caller(), **(data or {}))

    def log_warning(self, message: str, data: Optional[Dict[str, Any]] = None) -> None:
        self._logger.warning("warning", message=message, **self._caller(), **(data or {}))

    def log_error(self, operation: str, error: Exception, context: Optional[Dict[str, Any]] = None) -> None:
        """Log an error with the file/line of the caller."""
        self._logger.error(
            "error",
            operation=operation,
            error_type=type(error).__name__,
            error_message=str(error),
            context=context or {},
            **self._caller(),
        )

    @staticmethod
    def _caller() -> Dict[str, Any]:
        frame = inspect.currentframe()
        caller = frame.f_back.f_back if frame is not None and frame.f_back is not None else None
        if caller is None:
            return {}
        return {"file": Path(caller.f_code.co_filename).name, "line": caller.f_lineno}


def _state_summary(state: Dict[str, Any]) -> Dict[str, Any]:
    """Small snapshot of a pipeline state (no tables or arrays)."""
    keys = ("command", "data_path", "model_dir", "output_path", "n_rows", "seed", "termination_reason")
    return {k: str(state[k]) for k in keys if state.get(k) is not None}


def log_stage_execution(func: Callable) -> Callable:
    """Decorator to log pipeline stage execution.

    Args:
        func: Stage function taking and returning a pipeline state dict

    Returns:
        Wrapped function
    """

    @functools.wraps(func)
    def wrapper(state: Dict[str, Any]) -> Dict[str, Any]:
        logger = RunLogger(state.get("run_id", "unknown"))
        stage = func.__name__

        start = time.perf_counter()
        logger.log_stage_entry(stage, _state_summary(state))
        try:
            result = func(state)
        except Exception as e:
            duration = (time.perf_counter() - start) * 1000
            logger.log_error(stage, e, {"state_keys": sorted(state.keys())})
            logger.log_stage_exit(stage, _state_summary(state), duration)
            raise

        duration = (time.perf_counter() - start) * 1000
        logger.log_stage_exit(stage, _state_summary(result), duration)
        result.setdefault("stage_durations_ms", {})[stage] = round(duration, 2)
        return result

    return wrapper
