"""
Writers for run artifacts: evaluation reports, loss histories, segment lists
and confidence tables.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union
import json
import logging

import pandas as pd

from voiceface.core.errors import ArtifactIOError, MalformedFile
from voiceface.core.evaluation import EvaluationReport
from voiceface.core.segment_detection import Segment

REPORT_FORMAT = "voiceface-report"
REPORT_VERSION = 1

LOSS_COLUMNS = ["step", "loss", "learning_rate"]
SEGMENT_COLUMNS = ["start_frame", "end_frame", "score"]
REPORT_COLUMNS = ["metric", "key", "value"]

PathLike = Union[str, Path]


class ReportWriter:
    """Writes JSON and CSV artifacts; output is a pure function of the inputs."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def _write_csv(self, frame: pd.DataFrame, path: Path) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(path, index=False, lineterminator="\n")
        except OSError as e:
            raise ArtifactIOError(f"Cannot write {path}: {e}") from e
        return path

    def _read_csv(self, path: Path, columns: List[str]) -> pd.DataFrame:
        try:
            frame = pd.read_csv(path, keep_default_na=False)
        except OSError as e:
            raise ArtifactIOError(f"Cannot read {path}: {e}") from e
        if list(frame.columns) != columns:
            raise MalformedFile(f"{path}: expected columns {columns}, found {list(frame.columns)}")
        return frame

    def write_report(self, report: EvaluationReport, json_path: PathLike, csv_path: PathLike) -> Tuple[Path, Path]:
        """
        Write an evaluation report as JSON and as flat metric,key,value CSV.

        Args:
            report: Evaluation report
            json_path: JSON output path
            csv_path: CSV output path

        Returns:
            (json path, csv path)
        """
        json_path, csv_path = Path(json_path), Path(csv_path)
        document: Dict[str, Any] = {"format": REPORT_FORMAT, "version": REPORT_VERSION}
        document.update(report.to_dict())
        try:
            json_path.parent.mkdir(parents=True, exist_ok=True)
            json_path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(f"Cannot write {json_path}: {e}") from e
        self._write_csv(pd.DataFrame(report.to_rows(), columns=REPORT_COLUMNS), csv_path)
        self.logger.info(f"Report saved to: {json_path} and {csv_path}")
        return json_path, csv_path

    def read_report(self, json_path: PathLike) -> EvaluationReport:
        json_path = Path(json_path)
        try:
            document = json.loads(json_path.read_text(encoding="utf-8"))
        except OSError as e:
            raise ArtifactIOError(f"Cannot read {json_path}: {e}") from e
        except json.JSONDecodeError as e:
            raise MalformedFile(f"{json_path}: invalid JSON ({e.msg})") from e
        if document.get("format") != REPORT_FORMAT:
            raise MalformedFile(f"{json_path}: not a report file")
        return EvaluationReport.from_dict(document)

    def write_loss_history(self, history: Sequence[Tuple[int, float, float]], path: PathLike) -> Path:
        """Write ``step,loss,learning_rate`` rows."""
        path = self._write_csv(pd.DataFrame(list(history), columns=LOSS_COLUMNS), Path(path))
        self.logger.info(f"Loss history saved to: {path} ({len(history)} steps)")
        return path

    def read_loss_history(self, path: PathLike) -> List[Tuple[int, float, float]]:
        frame = self._read_csv(Path(path), LOSS_COLUMNS)
        return [(int(s), float(l), float(r)) for s, l, r in frame.itertuples(index=False)]

    def write_segments(self, segments: Iterable[Segment], path: PathLike) -> Path:
        """Write ``start_frame,end_frame,score`` rows."""
        rows = [(s.start, s.end, s.score) for s in segments]
        path = self._write_csv(pd.DataFrame(rows, columns=SEGMENT_COLUMNS), Path(path))
        self.logger.info(f"Segments saved to: {path} ({len(rows)} segments)")
        return path

    def read_segments(self, path: PathLike) -> List[Segment]:
        frame = self._read_csv(Path(path), SEGMENT_COLUMNS)
        return [Segment(int(a), int(b), float(c)) for a, b, c in frame.itertuples(index=False)]

    def write_table(self, rows: List[Dict[str, Any]], path: PathLike, columns: Optional[List[str]] = None) -> Path:
        """Write a list of dict rows (e.g. confidence summaries) as CSV."""
        path = self._write_csv(pd.DataFrame(rows, columns=columns), Path(path))
        self.logger.info(f"Table saved to: {path}")
        return path
