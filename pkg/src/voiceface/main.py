#!/usr/bin/env python3
"""
Command-line entry point for voiceface.
Generates synthetic data, trains embedders, evaluates them and runs segment
detection. Exit codes: 0 success, 1 usage/config error, 2 data error, 3 IO error.
"""

import functools
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import click

from voiceface.config.experiment_config import ExperimentConfig
from voiceface.config.settings import Settings
from voiceface.core.confidence import TestDesign, design_summary, required_triplets, steps_for_target
from voiceface.core.embedder import init_modality_pair
from voiceface.core.errors import ArtifactIOError, InvalidArgs, VoiceFaceError
from voiceface.core.evaluation import split_dataset
from voiceface.core.segment_detection import (
    DetectorConfig,
    ScoredItem,
    detect_segments,
    retain_by_thresholds,
    score_items,
)
from voiceface.core.training import Trainer
from voiceface.services.checkpoint_store import CheckpointStore
from voiceface.services.dataset_loader import DatasetLoader
from voiceface.services.report_writer import ReportWriter
from voiceface.services.synthetic_generator import SyntheticGenerator
from voiceface.tools.task_factory import TaskFactory
from voiceface.utils.logging_utils import setup_logging

# Rich imports for console summaries
try:
    from rich.console import Console
    from rich.panel import Panel
    from rich.table import Table
    console = Console()
except ImportError:
    console = None

logger = logging.getLogger(__name__)


class VoiceFaceApp:
    """Runs the individual commands against files on disk."""

    def __init__(self, settings: Settings):
        self.settings = settings
        self.logger = logging.getLogger(__name__)
        self.dataset_loader = DatasetLoader()
        self.checkpoint_store = CheckpointStore()
        self.report_writer = ReportWriter()

    # -- console output ---------------------------------------------------

    def display_error(self, message: str):
        if console:
            console.print(f"Error: {message}", style="bold red")
        else:
            print(f"Error: {message}")

    def display_summary(self, title: str, rows: Dict[str, Any]):
        """Print a two-column summary table."""
        if console:
            table = Table(show_header=False, box=None)
            table.add_column("key", style="cyan")
            table.add_column("value")
            for key, value in rows.items():
                table.add_row(str(key), str(value))
            console.print(Panel(table, title=title, border_style="green"))
        else:
            print(title)
            for key, value in rows.items():
                print(f"  {key}: {value}")

    # -- helpers -----------------------------------------------------------

    def load_config(self, config_path: Optional[str], seed: Optional[int], **overrides: Dict[str, Any]) -> ExperimentConfig:
        if config_path:
            path = Path(config_path)
            if not path.exists() and not path.suffix:
                path = self.settings.get_config_path(config_path)
            config = ExperimentConfig.from_file(path)
        else:
            config = ExperimentConfig.from_dict({})
        return config.with_overrides(seed=seed, **overrides)

    @staticmethod
    def require_path(value: Optional[Path], what: str) -> Path:
        if value is None:
            raise InvalidArgs(f"No {what} given (flag or config 'paths' section)")
        return Path(value)

    # -- commands ----------------------------------------------------------

    def generate(self, config: ExperimentConfig, out: Optional[str]) -> Path:
        out_path = self.require_path(Path(out) if out else config.path("dataset"), "output dataset path")
        dataset = SyntheticGenerator(config.generator_config()).generate()
        self.dataset_loader.save_dataset(dataset, out_path)
        self.display_summary("Dataset generated", {"file": out_path, **dataset.sample_counts()})
        return out_path

    def split(self, dataset_path: str, mode: str, fraction: float, seed: int, train_out: str, test_out: str):
        dataset = self.dataset_loader.load_dataset(dataset_path)
        train, test = split_dataset(dataset, mode=mode, fraction=fraction, seed=seed)
        self.dataset_loader.save_dataset(train, train_out)
        self.dataset_loader.save_dataset(test, test_out)
        self.display_summary(
            f"Split ({mode})",
            {
                "train": f"{train_out} ({len(train)} identities)",
                "test": f"{test_out} ({len(test)} identities)",
            },
        )

    def train(self, config: ExperimentConfig, dataset_path: Optional[str], out: Optional[str], loss_out: Optional[str]) -> Path:
        dataset_file = self.require_path(Path(dataset_path) if dataset_path else config.path("dataset"), "dataset")
        checkpoint_path = self.require_path(Path(out) if out else config.path("checkpoint"), "checkpoint output path")
        loss_path = Path(loss_out) if loss_out else config.path("loss_history")
        if loss_path is None:
            loss_path = checkpoint_path.with_suffix(".loss.csv")

        dataset = self.dataset_loader.load_dataset(dataset_file)
        pair = init_modality_pair(dataset.voice_dim, dataset.face_dim, **config.embedder_settings())
        result = Trainer(config.training_config(), config.sampler_config()).train(dataset, pair)

        self.checkpoint_store.save(result.pair, checkpoint_path)
        self.report_writer.write_loss_history(result.history, loss_path)
        summary = {"checkpoint": checkpoint_path, "loss history": loss_path, "steps": len(result.history)}
        if result.history:
            summary["first loss"] = f"{result.history[0][1]:.4f}"
            summary["final loss"] = f"{result.history[-1][1]:.4f}"
        self.display_summary("Training complete", summary)
        return checkpoint_path

    def evaluate(
        self,
        config: ExperimentConfig,
        checkpoint_path: Optional[str],
        dataset_path: Optional[str],
        out: Optional[str],
    ):
        settings = config.evaluation_settings()
        task_type = settings["task"]
        factory = TaskFactory(settings)
        is_valid, errors = factory.validate_task_parameters(task_type)
        if not is_valid:
            raise InvalidArgs(f"Invalid {task_type} parameters: {', '.join(errors)}")

        pair = self.checkpoint_store.load(
            self.require_path(Path(checkpoint_path) if checkpoint_path else config.path("checkpoint"), "checkpoint")
        )
        dataset = self.dataset_loader.load_dataset(
            self.require_path(Path(dataset_path) if dataset_path else config.path("dataset"), "dataset")
        )
        report = factory.create_task(task_type).run(dataset, pair)
        is_valid, errors = report.validate()
        if not is_valid:
            self.logger.warning(f"Report failed validation: {', '.join(errors)}")

        if out:
            json_path = Path(out)
        else:
            json_path = config.path("report_json") or self.settings.get_report_file_path("evaluation", f"{task_type}.json")
        csv_path = config.path("report_csv") if not out and config.path("report_csv") else json_path.with_suffix(".csv")
        self.report_writer.write_report(report, json_path, csv_path)

        summary: Dict[str, Any] = {"task": task_type}
        for n, acc in sorted(report.accuracy_1n.items()):
            summary[f"1:{n} accuracy"] = f"{acc:.4f}"
        for gender, acc in report.accuracy_by_gender.items():
            summary[f"{gender}-only 1:2 accuracy"] = f"{acc:.4f}"
        if report.map_score is not None:
            summary["mAP"] = f"{report.map_score:.4f}"
        if report.chance_map is not None:
            summary["chance mAP"] = f"{report.chance_map:.4f}"
        if report.confidence_T is not None:
            summary["confidence T"] = report.confidence_T
        if report.per_identity_accuracy:
            low = report.parameters.get("low_accuracy_identities", [])
            summary["identities"] = len(report.per_identity_accuracy)
            summary["low-accuracy identities"] = len(low)
        summary["report"] = f"{json_path}, {csv_path}"
        self.display_summary("Evaluation", summary)
        return report

    def confidence(
        self,
        num_identities: int,
        num_triplets: Optional[int],
        b: Optional[int],
        q: Optional[int],
        r: Optional[int],
        steps: Optional[int],
        target_T: Optional[float],
        out: Optional[str],
    ) -> Dict[str, Any]:
        batch_params = (b, q, r, steps)
        if all(v is not None for v in batch_params):
            design = TestDesign.identity_batches(num_identities, b, q, r, steps)
        elif num_triplets is not None:
            design = TestDesign.random_tuples(num_identities, num_triplets)
        else:
            raise InvalidArgs("give either -n/--triplets or all of --b, --q, --r, --steps")
        row = design_summary(design)
        if target_T is not None:
            row["target_T"] = target_T
            row["required_triplets"] = required_triplets(num_identities, target_T)
            if None not in (b, q, r):
                row["steps_for_target"] = steps_for_target(num_identities, target_T, b, q, r)
        if out:
            self.report_writer.write_table([row], out)
        self.display_summary("Test confidence", row)
        return row

    def segment(
        self,
        stream_path: str,
        gt_path: str,
        detector: DetectorConfig,
        out: str,
        voice_threshold: Optional[float],
        faces_path: Optional[str],
        face_gt_path: Optional[str],
        face_threshold: float,
    ) -> List:
        stream = self.dataset_loader.load_frames(stream_path)
        ground_truth = self.dataset_loader.load_frames(gt_path)
        segments = detect_segments(stream, ground_truth, detector)

        voice_threshold = detector.threshold if voice_threshold is None else voice_threshold
        items = [ScoredItem(segment, segment.score, "voice") for segment in segments]
        summary: Dict[str, Any] = {"frames": len(stream), "segments detected": len(segments)}

        if faces_path:
            if not face_gt_path:
                raise InvalidArgs("--faces needs --face-ground-truth")
            faces = self.dataset_loader.load_frames(faces_path)
            face_gt = self.dataset_loader.load_frames(face_gt_path)
            items += score_items(list(faces.frames), face_gt, "face")

        retained = retain_by_thresholds(items, face_threshold, voice_threshold)
        kept_segments = [item.payload for item in retained if item.modality == "voice"]
        self.report_writer.write_segments(kept_segments, out)
        summary["segments retained"] = len(kept_segments)

        if faces_path:
            kept_faces = [{"face_index": item.payload, "score": item.score} for item in retained if item.modality == "face"]
            faces_out = Path(out).with_suffix(".faces.csv")
            self.report_writer.write_table(kept_faces, faces_out, columns=["face_index", "score"])
            summary["faces retained"] = f"{len(kept_faces)} of {len(items) - len(segments)}"
        summary["output"] = out
        self.display_summary("Segment detection", summary)
        return kept_segments


def handle_errors(func):
    """Turn engine errors into their exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        app: VoiceFaceApp = ctx.obj
        try:
            return func(*args, **kwargs)
        except VoiceFaceError as e:
            logger.error(f"{type(e).__name__}: {e}")
            app.display_error(str(e))
            ctx.exit(e.exit_code)
        except OSError as e:
            logger.error(f"I/O failure: {e}")
            app.display_error(str(e))
            ctx.exit(ArtifactIOError.exit_code)

    return wrapper


@click.group()
@click.option("--log-level", default=None, help="Override LOG_LEVEL")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str]):
    """Voice-face cross-modal metric learning toolkit."""
    settings = Settings()
    if log_level:
        settings.log_level = log_level.upper()
    is_valid, errors = settings.validate_configuration()
    if not is_valid:
        raise click.UsageError(f"Invalid settings: {'; '.join(errors)}")
    setup_logging(settings.log_level, settings.log_format, settings.log_file)
    ctx.obj = VoiceFaceApp(settings)


@cli.command()
@click.option("--config", "config_path", default=None, help="Experiment config (JSON file or name under configs/)")
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None, help="Dataset file to write")
@click.option("--num-identities", type=int, default=None)
@click.option("--rho", type=float, default=None)
@click.option("--noise-sigma", type=float, default=None)
@click.pass_obj
@handle_errors
def generate(app: VoiceFaceApp, config_path, seed, out, num_identities, rho, noise_sigma):
    """Generate a synthetic voice/face dataset."""
    config = app.load_config(
        config_path, seed, generator={"num_identities": num_identities, "rho": rho, "noise_sigma": noise_sigma}
    )
    app.generate(config, out)


@cli.command()
@click.option("--dataset", "dataset_path", required=True)
@click.option("--mode", type=click.Choice(["unseen_unheard", "seen_heard"]), default="unseen_unheard")
@click.option("--fraction", type=float, default=0.8, show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--train-out", required=True)
@click.option("--test-out", required=True)
@click.pass_obj
@handle_errors
def split(app: VoiceFaceApp, dataset_path, mode, fraction, seed, train_out, test_out):
    """Split a dataset into train and test files."""
    app.split(dataset_path, mode, fraction, seed, train_out, test_out)


@cli.command()
@click.option("--config", "config_path", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--dataset", "dataset_path", default=None)
@click.option("--out", default=None, help="Checkpoint file to write")
@click.option("--loss-out", default=None, help="Loss history CSV (default: next to the checkpoint)")
@click.option("--steps", type=int, default=None, help="Override training.total_steps")
@click.option("--anchoring", type=click.Choice(["voice", "face", "none"]), default=None)
@click.pass_obj
@handle_errors
def train(app: VoiceFaceApp, config_path, seed, dataset_path, out, loss_out, steps, anchoring):
    """Train the embedders with triplet loss."""
    config = app.load_config(
        config_path, seed, training={"total_steps": steps}, embedders={"anchoring": anchoring}
    )
    app.train(config, dataset_path, out, loss_out)


def _parse_task(task: Optional[str]):
    """``match:4`` -> ("match", 4)."""
    if task is None:
        return None, None
    name, _, n = task.partition(":")
    factory = TaskFactory({})
    if not factory.is_task_available(name):
        available = ", ".join(factory.get_available_tasks())
        raise click.BadParameter(f"task must be one of {available} (match may carry :n)")
    if n:
        if name != "match" or not n.isdigit():
            raise click.BadParameter("only match takes a candidate count, e.g. match:4")
        return name, int(n)
    return name, None


@cli.command()
@click.option("--config", "config_path", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--checkpoint", "checkpoint_path", default=None)
@click.option("--dataset", "dataset_path", default=None)
@click.option("--task", default=None, help="match[:n], retrieve, joint or individual")
@click.option("--n", "n", type=int, default=None, help="Candidates per matching instance")
@click.option("--num-instances", type=int, default=None)
@click.option("--mf", "m_f", type=int, default=None)
@click.option("--mv", "m_v", type=int, default=None)
@click.option("--joint-task", type=click.Choice(["match", "retrieve"]), default=None)
@click.option("--direction", type=click.Choice(["voice_to_face", "face_to_voice"]), default=None)
@click.option("--stratify-gender/--no-stratify-gender", default=None)
@click.option("--balance-gender/--no-balance-gender", default=None)
@click.option("--protocol", type=click.Choice(["random_tuples", "identity_batches"]), default=None,
              help="1:2 matching over random tuples or over identity-batch triplets")
@click.option("--batch-steps", type=int, default=None, help="Identity batches scored by the identity_batches protocol")
@click.option("--repeats", type=int, default=None)
@click.option("--out", default=None, help="Report JSON path (CSV written next to it)")
@click.pass_obj
@handle_errors
def evaluate(app: VoiceFaceApp, config_path, seed, checkpoint_path, dataset_path, task, n, num_instances,
             m_f, m_v, joint_task, direction, stratify_gender, balance_gender, protocol, batch_steps, repeats, out):
    """Evaluate a checkpoint on a dataset."""
    task_name, task_n = _parse_task(task)
    config = app.load_config(
        config_path,
        seed,
        evaluation={
            "task": task_name,
            "n": task_n if task_n is not None else n,
            "num_instances": num_instances,
            "m_f": m_f,
            "m_v": m_v,
            "joint_task": joint_task,
            "direction": direction,
            "stratify_gender": stratify_gender,
            "balance_gender": balance_gender,
            "protocol": protocol,
            "batch_steps": batch_steps,
            "repeats": repeats,
        },
    )
    app.evaluate(config, checkpoint_path, dataset_path, out)


@cli.command()
@click.pass_obj
@handle_errors
def tasks(app: VoiceFaceApp):
    """List the evaluation tasks."""
    app.display_summary("Evaluation tasks", TaskFactory({}).get_available_tasks())


@cli.command()
@click.option("-N", "--identities", "num_identities", type=int, required=True, help="Test identities N")
@click.option("-n", "--triplets", "num_triplets", type=int, default=None, help="Test triplets n")
@click.option("--b", "b", type=int, default=None)
@click.option("--q", "q", type=int, default=None)
@click.option("--r", "r", type=int, default=None)
@click.option("--steps", type=int, default=None)
@click.option("--target-T", "target_T", type=float, default=None, help="Also report the triplets needed for this T")
@click.option("--out", default=None, help="Optional CSV output")
@click.pass_obj
@handle_errors
def confidence(app: VoiceFaceApp, num_identities, num_triplets, b, q, r, steps, target_T, out):
    """Print pair coverage K and confidence T of a test design."""
    app.confidence(num_identities, num_triplets, b, q, r, steps, target_T, out)


@cli.command()
@click.option("--stream", "stream_path", required=True, help="Frame stream to search")
@click.option("--ground-truth", "gt_path", required=True, help="Ground-truth frames of the target speaker")
@click.option("-t", "--threshold", type=float, default=0.5, show_default=True)
@click.option("--s-min", type=int, default=50, show_default=True)
@click.option("--s-max", type=int, default=500, show_default=True)
@click.option("--s-step", type=int, default=10, show_default=True)
@click.option("--out", required=True, help="Segments CSV")
@click.option("--voice-threshold", type=float, default=None, help="Retention threshold (default: --threshold)")
@click.option("--faces", "faces_path", default=None, help="Face crop vectors to score and retain")
@click.option("--face-ground-truth", "face_gt_path", default=None)
@click.option("--face-threshold", type=float, default=0.5, show_default=True)
@click.pass_obj
@handle_errors
def segment(app: VoiceFaceApp, stream_path, gt_path, threshold, s_min, s_max, s_step, out,
            voice_threshold, faces_path, face_gt_path, face_threshold):
    """Detect speech segments that match the ground truth."""
    detector = DetectorConfig(threshold=threshold, s_min=s_min, s_max=s_max, s_step=s_step)
    app.segment(stream_path, gt_path, detector, out, voice_threshold, faces_path, face_gt_path, face_threshold)


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line and return its exit code."""
    try:
        result = cli.main(args=argv, prog_name="voiceface", standalone_mode=False)
    except click.exceptions.Abort:
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())
