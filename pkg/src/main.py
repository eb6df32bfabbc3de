"""
Main entry point for the synthetic data engine.

This module provides the SynthEngine facade and the command-line interface:

    python -m src.main analyze data.csv [--kinds kinds.json] -o schema.json
    python -m src.main train --schema schema.json --data data.csv -o model_dir/
    python -m src.main generate --model model_dir/ -n 1000 -o out.csv
    python -m src.main evaluate --schema schema.json --trn trn.csv --hold hold.csv --syn syn.csv -o report.json
    python -m src.main run --config run.json

Exit codes: 0 ok, 2 input/schema error, 3 non-finite loss, 4 schema/data
mismatch, 5 generation error, 6 evaluation error, 1 anything else.
"""

import argparse
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from .config.settings import DEFAULT_CONFIG_PATH, EngineConfig, settings
from .errors import ConfigError, InputFileError, SynthError
from .models.generation import GenerationRequest
from .models.manifest import DatasetManifest, RunConfig
from .models.report import QAReport
from .models.schema import TableRole, TableSchema
from .models.state import PipelineState
from .models.training import EpochRecord, TrainConfig
from .observability.logger import RunLogger, configure_logging
from .pipeline.graph import create_pipeline
from .pipeline.nodes.analyze import load_schema
from .store.model_store import StoredModel
from .utils.helpers import format_duration, generate_run_id, read_json_file


def print_epoch(record: EpochRecord) -> None:
    note = " *" if record.improved else ""
    halved = " (lr halved)" if record.lr_halved else ""
    print(
        f"epoch {record.epoch:4d}  train {record.train_loss:.5f}  val {record.val_loss:.5f}"
        f"  lr {record.learning_rate:.2e}{note}{halved}"
    )


def _validated(model_cls: Any, data: Dict[str, Any], source: str) -> Any:
    try:
        return model_cls.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration in {source}: {e}") from e


def load_manifest(path: Path) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise InputFileError(f"manifest not found: {path}", path=str(path))
    try:
        return DatasetManifest.from_json_file(path)
    except ValidationError as e:
        raise ConfigError(f"Invalid manifest {path}: {e}") from e


class SynthEngine:
    """
    Facade over the pipeline: analyze, train, generate, evaluate and full runs.

    Every call gets its own run id; stage events go to `<log_dir>/<run_id>.jsonl`.
    """

    def __init__(self, engine: Optional[EngineConfig] = None):
        self.engine = engine or settings.engine()

    def _invoke(self, command: str, state: Dict[str, Any], run_id: Optional[str] = None) -> PipelineState:
        state = dict(state, command=command, engine=self.engine, run_id=run_id or generate_run_id())
        logger = RunLogger(state["run_id"])
        logger.log("run_start", {"command": command})
        start = time.perf_counter()
        try:
            final_state = create_pipeline(command).invoke(state)
        except Exception as e:
            logger.log("run_error", {"command": command, "error_type": type(e).__name__, "error_message": str(e)})
            raise
        logger.log("run_complete", {
            "command": command,
            "duration": format_duration(time.perf_counter() - start),
            "outputs": final_state.get("outputs", []),
            "stage_durations_ms": final_state.get("stage_durations_ms", {}),
        })
        return final_state

    def train_config(self, overrides: Optional[Dict[str, Any]] = None, source: str = "train config") -> TrainConfig:
        merged = dict(self.engine.training.model_dump(), **(overrides or {}))
        return _validated(TrainConfig, merged, source)

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def analyze(
        self,
        data_path: Path,
        schema_path: Optional[Path] = None,
        kinds_path: Optional[Path] = None,
        table_role: TableRole = TableRole.FLAT,
        group_key: Optional[str] = None,
        run_id: Optional[str] = None,
    ) -> TableSchema:
        state = self._invoke(
            "analyze",
            {
                "data_path": Path(data_path),
                "schema_path": schema_path,
                "kinds_path": kinds_path,
                "table_role": table_role,
                "group_key": group_key,
            },
            run_id,
        )
        return state["schema"]

    def train(
        self,
        data_path: Path,
        model_dir: Path,
        schema: Optional[TableSchema] = None,
        config: Optional[TrainConfig] = None,
        manifest: Optional[DatasetManifest] = None,
        cache_dir: Optional[Path] = None,
        on_epoch=None,
        run_id: Optional[str] = None,
    ) -> StoredModel:
        state: Dict[str, Any] = {
            "data_path": Path(data_path),
            "model_dir": Path(model_dir),
            "schema": schema,
            "train_config": config or self.train_config(),
            "cache_dir": cache_dir,
            "on_epoch": on_epoch,
        }
        if manifest is not None:
            state.update(_manifest_inputs(manifest))
            if schema is None and manifest.schema_json is not None:
                state["schema"] = load_schema(manifest.schema_json)
        if state["schema"] is not None:
            state["table_role"] = state["schema"].table_role
            state["group_key"] = state["schema"].group_key
        return self._invoke("train", state, run_id)["stored"]

    def generate(
        self,
        model_dir: Path,
        output_path: Path,
        request: Optional[GenerationRequest] = None,
        seed_data_path: Optional[Path] = None,
        run_id: Optional[str] = None,
    ) -> PipelineState:
        request = request or GenerationRequest(
            temperature=self.engine.generation.temperature, seed=self.engine.generation.seed
        )
        return self._invoke(
            "generate",
            {
                "model_dir": Path(model_dir),
                "output_path": Path(output_path),
                "generation": request,
                "seed_data_path": seed_data_path,
            },
            run_id,
        )

    def evaluate(
        self,
        schema: TableSchema,
        trn_path: Path,
        syn_path: Path,
        hold_path: Optional[Path] = None,
        report_path: Optional[Path] = None,
        run_id: Optional[str] = None,
    ) -> QAReport:
        state = self._invoke(
            "evaluate",
            {
                "schema": schema,
                "trn_path": Path(trn_path),
                "syn_path": Path(syn_path),
                "hold_path": hold_path,
                "report_path": report_path,
            },
            run_id,
        )
        return state["qa_report"]

    def run(self, config: RunConfig, on_epoch=None, run_id: Optional[str] = None) -> PipelineState:
        """analyze -> train -> generate -> evaluate into config.output_dir."""
        manifest = load_manifest(config.manifest)
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        state: Dict[str, Any] = dict(_manifest_inputs(manifest))
        state.update(
            {
                "schema": load_schema(manifest.schema_json) if manifest.schema_json else None,
                "schema_path": None if manifest.schema_json else out / "schema.json",
                "context_schema": load_schema(manifest.context_schema_json) if manifest.context_schema_json else None,
                "context_schema_path": None if manifest.context_schema_json else out / "schema_context.json",
                "train_config": config.training,
                "model_dir": out / "model",
                "on_epoch": on_epoch,
                "generation": config.generation,
                "output_path": out / "synthetic.csv",
                "hold_path": manifest.holdout_csv,
                "context_hold_path": manifest.context_holdout_csv,
                "report_path": out / "report.json",
            }
        )
        return self._invoke("run", state, run_id)


def _manifest_inputs(manifest: DatasetManifest) -> Dict[str, Any]:
    return {
        "data_path": manifest.data_csv,
        "kinds_path": manifest.kinds_json,
        "table_role": manifest.table_role,
        "group_key": manifest.group_key,
        "context_path": manifest.context_csv,
        "context_kinds_path": manifest.context_kinds_json,
        "context_key": manifest.context_key,
    }


# =============================================================================
# CLI
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.main",
        description="Synthetic tabular data engine: analyze, train, generate and evaluate",
    )
    parser.add_argument("--engine-config", type=Path, default=DEFAULT_CONFIG_PATH, help="Engine YAML configuration")
    parser.add_argument("--log-level", default=None, help="Override the configured log level")
    parser.add_argument("--log-dir", type=Path, default=None, help="Directory of the JSONL run logs")
    parser.add_argument("--quiet", action="store_true", help="Do not render log events on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="Derive a schema from a CSV table")
    p.add_argument("data", type=Path, help="Input CSV")
    p.add_argument("--kinds", type=Path, default=None, help="JSON of declared column kinds")
    p.add_argument("--sequential", action="store_true", help="Treat the table as sequential")
    p.add_argument("--group-key", default=None, help="Column grouping the rows of a sequential table")
    p.add_argument("-o", "--output", type=Path, required=True, help="schema.json to write")

    p = sub.add_parser("train", help="Train a model and write a model store")
    p.add_argument("--schema", type=Path, default=None, help="schema.json (analyzed on the fly if omitted)")
    p.add_argument("--data", type=Path, default=None, help="Training CSV")
    p.add_argument("--kinds", type=Path, default=None, help="JSON of declared column kinds")
    p.add_argument("--context", type=Path, default=None, help="Flat context CSV of a two-table dataset")
    p.add_argument("--manifest", type=Path, default=None, help="Dataset manifest JSON")
    p.add_argument("--config", type=Path, default=None, help="TrainConfig JSON overriding engine defaults")
    p.add_argument("--cache-dir", type=Path, default=None, help="Reuse encoded tables across runs")
    p.add_argument("--seed", type=int, default=None, help="Training seed")
    p.add_argument("-o", "--output", type=Path, required=True, help="Model store directory")

    p = sub.add_parser("generate", help="Sample synthetic data from a model store")
    p.add_argument("--model", type=Path, required=True, help="Model store directory")
    p.add_argument("-n", "--n-rows", type=int, default=0, help="Rows (flat) or sequences (sequential)")
    p.add_argument("--temperature", type=float, default=None, help="Sampling temperature")
    p.add_argument("--conditions", type=Path, default=None, help="JSON object of column -> fixed value")
    p.add_argument("--impute", nargs="*", default=[], help="Columns that must never be missing")
    p.add_argument("--seed-data", type=Path, default=None, help="Flat seed CSV; its non-empty cells are kept")
    p.add_argument("--seed", type=int, default=None, help="Sampling seed")
    p.add_argument("-o", "--output", type=Path, required=True, help="Output CSV")

    p = sub.add_parser("evaluate", help="Score synthetic data against training and holdout data")
    p.add_argument("--schema", type=Path, required=True, help="schema.json of the evaluated table")
    p.add_argument("--trn", type=Path, required=True, help="Training CSV")
    p.add_argument("--hold", type=Path, default=None, help="Holdout CSV (enables DCR and the noise floor)")
    p.add_argument("--syn", type=Path, required=True, help="Synthetic CSV")
    p.add_argument("--exhaustive-coherence", action="store_true", help="Use every successive pair")
    p.add_argument("-o", "--output", type=Path, required=True, help="report.json to write")

    p = sub.add_parser("run", help="analyze -> train -> generate -> evaluate from a run config")
    p.add_argument("--config", type=Path, required=True, help="RunConfig JSON")
    return parser


def _cmd_analyze(engine: SynthEngine, args: argparse.Namespace, run_id: str) -> None:
    role = TableRole.SEQUENTIAL if args.sequential or args.group_key else TableRole.FLAT
    schema = engine.analyze(args.data, args.output, args.kinds, role, args.group_key, run_id=run_id)
    print(f"Schema written: {args.output} ({len(schema.specs)} columns, {len(schema.sub_columns())} sub-columns)")


def _cmd_train(engine: SynthEngine, args: argparse.Namespace, run_id: str) -> None:
    overrides = read_json_file(args.config) if args.config else {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    config = engine.train_config(overrides, str(args.config or "--seed"))
    manifest = load_manifest(args.manifest) if args.manifest else None
    if manifest is None and args.context is not None:
        raise ConfigError("--context requires --manifest naming the group and context keys")
    data = args.data or (manifest.data_csv if manifest else None)
    if data is None:
        raise ConfigError("train needs --data or --manifest")
    if manifest is not None:
        updates = {"data_csv": data}
        if args.context is not None:
            updates["context_csv"] = args.context
        if args.kinds is not None:
            updates["kinds_json"] = args.kinds
        manifest = manifest.model_copy(update=updates)
    elif args.kinds is not None:
        manifest = DatasetManifest(data_csv=data, kinds_json=args.kinds)
    schema = load_schema(args.schema) if args.schema else None

    print(f"\n{'=' * 60}\nTraining model -> {args.output}\n{'=' * 60}")
    stored = engine.train(data, args.output, schema, config, manifest, args.cache_dir, print_epoch, run_id)
    report = stored.report
    print(f"{'=' * 60}")
    print(f"Stop: {report.stop_reason.value if report.stop_reason else 'n/a'}")
    if report.best_val_loss is not None:
        print(f"Best epoch: {report.best_epoch}  best val loss: {report.best_val_loss:.5f}")
    print(f"Model store written: {args.output}")
    print(f"{'=' * 60}\n")


def _cmd_generate(engine: SynthEngine, args: argparse.Namespace, run_id: str) -> None:
    defaults = engine.engine.generation
    request = _validated(
        GenerationRequest,
        {
            "n_rows": args.n_rows,
            "temperature": args.temperature if args.temperature is not None else defaults.temperature,
            "conditions": {k: str(v) for k, v in read_json_file(args.conditions).items()} if args.conditions else {},
            "impute": list(args.impute or []),
            "seed": args.seed if args.seed is not None else defaults.seed,
        },
        "generate arguments",
    )
    state = engine.generate(args.model, args.output, request, args.seed_data, run_id)
    for path in state["outputs"]:
        print(f"Written: {path}")


def _cmd_evaluate(engine: SynthEngine, args: argparse.Namespace, run_id: str) -> None:
    if args.exhaustive_coherence:
        engine.engine.metrics = engine.engine.metrics.model_copy(update={"exhaustive_coherence": True})
    report = engine.evaluate(load_schema(args.schema), args.trn, args.syn, args.hold, args.output, run_id)
    print(report.summary_text(), end="")


def _cmd_run(engine: SynthEngine, args: argparse.Namespace, run_id: str) -> None:
    config = _validated(RunConfig, read_json_file(args.config), str(args.config))
    state = engine.run(config, print_epoch, run_id)
    print(state["qa_report"].summary_text(), end="")
    for path in state["outputs"]:
        print(f"Written: {path}")


COMMANDS = {
    "analyze": _cmd_analyze,
    "train": _cmd_train,
    "generate": _cmd_generate,
    "evaluate": _cmd_evaluate,
    "run": _cmd_run,
}


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    run_id = generate_run_id()

    try:
        engine_config = settings.engine(args.engine_config)
        if args.log_level:
            engine_config.logging = engine_config.logging.model_copy(update={"level": args.log_level.upper()})
        if args.log_dir is not None:
            engine_config.logging = engine_config.logging.model_copy(update={"log_dir": args.log_dir})
        configure_logging(
            engine_config.logging.level,
            engine_config.logging.log_dir,
            console=engine_config.logging.console and not args.quiet,
        )
        COMMANDS[args.command](SynthEngine(engine_config), args, run_id)
        return 0
    except SynthError as e:
        try:
            RunLogger(run_id).log_error(args.command, e, {k: str(v) for k, v in e.context.items()})
        except OSError:
            pass
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
