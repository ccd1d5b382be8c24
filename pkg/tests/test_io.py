import json

import numpy as np
import pandas as pd
import pytest

from voiceface.core.dataset import IdentityRecord, VoiceFaceDataset
from voiceface.core.embedder import init_modality_pair
from voiceface.core.errors import ArtifactIOError, MalformedFile
from voiceface.core.evaluation import EvaluationReport
from voiceface.core.metric_space import MetricSpaceConfig
from voiceface.core.segment_detection import FrameStream, Segment
from voiceface.services.checkpoint_store import CheckpointStore
from voiceface.services.dataset_loader import DatasetLoader
from voiceface.services.report_writer import ReportWriter

from conftest import make_dataset


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


HEADER = json.dumps({"format": "voiceface-dataset", "version": 1, "voice_dim": 2, "face_dim": 2})


class TestDatasetLoader:
    def test_round_trip_is_exact(self, tmp_path, small_dataset):
        loader = DatasetLoader()
        path = loader.save_dataset(small_dataset, tmp_path / "data" / "set.jsonl")
        loaded = loader.load_dataset(path)
        assert loaded.ids == small_dataset.ids
        for original, restored in zip(small_dataset, loaded):
            assert (restored.gender, restored.population) == (original.gender, original.population)
            np.testing.assert_array_equal(restored.voices, original.voices)
            np.testing.assert_array_equal(restored.faces, original.faces)

    def test_identity_without_faces(self, tmp_path):
        records = list(make_dataset(2))
        records.append(IdentityRecord("mute", "female", "en", np.ones((2, 3)), np.zeros((0, 3))))
        loader = DatasetLoader()
        loaded = loader.load_dataset(loader.save_dataset(VoiceFaceDataset(records), tmp_path / "d.jsonl"))
        assert loaded.get("mute").faces.shape == (0, 3)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactIOError):
            DatasetLoader().load_dataset(tmp_path / "absent.jsonl")

    @pytest.mark.parametrize(
        "lines",
        [
            [],
            ['{"format": "something-else", "version": 1}'],
            ['{"format": "voiceface-dataset", "version": 7}'],
            [HEADER, "{not json"],
            [HEADER, '{"id": "a", "gender": "m", "modality": "voice"}'],
            [HEADER, '{"id": "a", "gender": "x", "modality": "voice", "features": [1, 2]}'],
            [HEADER, '{"id": "a", "gender": "m", "modality": "smell", "features": [1, 2]}'],
            [
                HEADER,
                '{"id": "a", "gender": "m", "modality": "voice", "features": [1, 2]}',
                '{"id": "a", "gender": "f", "modality": "face", "features": [1, 2]}',
            ],
            [
                HEADER,
                '{"id": "a", "gender": "m", "modality": "voice", "features": [1, 2]}',
                '{"id": "a", "gender": "m", "modality": "voice", "features": [1, 2, 3]}',
            ],
        ],
    )
    def test_malformed(self, tmp_path, lines):
        path = tmp_path / "bad.jsonl"
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        with pytest.raises(MalformedFile):
            DatasetLoader().load_dataset(path)

    def test_blank_lines_are_ignored(self, tmp_path):
        path = write_lines(tmp_path / "d.jsonl", [
            HEADER,
            "",
            '{"id": "a", "gender": "m", "population": "en", "modality": "voice", "features": [1, 2]}',
            '{"id": "a", "gender": "m", "population": "en", "modality": "face", "features": [0.5, 0.25]}',
        ])
        dataset = DatasetLoader().load_dataset(path)
        assert dataset.ids == ["a"]
        np.testing.assert_array_equal(dataset.get("a").faces, [[0.5, 0.25]])

    def test_frames_round_trip(self, tmp_path):
        stream = FrameStream(np.random.default_rng(0).standard_normal((7, 3)), frame_rate=25.0)
        loader = DatasetLoader()
        loaded = loader.load_frames(loader.save_frames(stream, tmp_path / "frames.jsonl"))
        np.testing.assert_array_equal(loaded.frames, stream.frames)
        assert loaded.frame_rate == 25.0

    def test_frames_wrong_dimension(self, tmp_path):
        path = write_lines(tmp_path / "frames.jsonl", [
            json.dumps({"format": "voiceface-frames", "version": 1, "frame_rate": 100.0, "dim": 2}),
            "[1.0, 2.0]",
            "[1.0]",
        ])
        with pytest.raises(MalformedFile):
            DatasetLoader().load_frames(path)

    @pytest.mark.parametrize(
        "header,frame",
        [
            ({"dim": 2}, '["a", "b"]'),
            ({"dim": 2}, "[1.0, null]"),
            ({"dim": 2}, "[1.0, [2.0]]"),
            ({"dim": 2}, '[1.0, "2.0"]'),
            ({"dim": "two"}, "[1.0, 2.0]"),
            ({"dim": 2, "frame_rate": 0}, "[1.0, 2.0]"),
        ],
    )
    def test_frames_malformed_values(self, tmp_path, header, frame):
        path = write_lines(tmp_path / "frames.jsonl", [
            json.dumps({"format": "voiceface-frames", "version": 1, **header}),
            frame,
        ])
        with pytest.raises(MalformedFile):
            DatasetLoader().load_frames(path)


class TestCheckpointStore:
    def test_round_trip(self, tmp_path, small_pair):
        store = CheckpointStore()
        small_pair.set_anchoring("voice")
        loaded = store.load(store.save(small_pair, tmp_path / "ckpt.json"))
        assert loaded.space == small_pair.space
        for modality in ("voice", "face"):
            original, restored = small_pair.embedder(modality), loaded.embedder(modality)
            assert restored.frozen == original.frozen
            for a, b in zip(original.arrays(), restored.arrays()):
                np.testing.assert_array_equal(a, b)

    def test_identical_pairs_identical_bytes(self, tmp_path):
        space = MetricSpaceConfig(dim=3, scale=2.0)
        store = CheckpointStore()
        first = store.save(init_modality_pair(4, 5, space, seed=7), tmp_path / "a.json")
        second = store.save(init_modality_pair(4, 5, space, seed=7), tmp_path / "b.json")
        assert first.read_bytes() == second.read_bytes()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactIOError):
            CheckpointStore().load(tmp_path / "absent.json")

    @pytest.mark.parametrize(
        "content",
        [
            "{broken",
            '{"format": "voiceface-dataset", "version": 1}',
            '{"format": "voiceface-checkpoint", "version": 2}',
            '{"format": "voiceface-checkpoint", "version": 1, "space": {"dim": 3}}',
        ],
    )
    def test_malformed(self, tmp_path, content):
        path = tmp_path / "bad.json"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(MalformedFile):
            CheckpointStore().load(path)


class TestReportWriter:
    def test_report_round_trip(self, tmp_path):
        report = EvaluationReport(
            task="match",
            accuracy_1n={2: 0.75, 4: 0.5},
            accuracy_by_gender={"male": 0.7, "female": 0.8},
            confidence_T=12.5,
            parameters={"num_instances": 100},
        )
        writer = ReportWriter()
        json_path, csv_path = writer.write_report(report, tmp_path / "r.json", tmp_path / "r.csv")
        assert writer.read_report(json_path) == report
        frame = pd.read_csv(csv_path, keep_default_na=False)
        assert list(frame.columns) == ["metric", "key", "value"]
        assert frame.iloc[0].tolist() == ["accuracy_1n", "2", 0.75]
        assert frame.iloc[-1]["metric"] == "confidence_T"

    def test_not_a_report(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"format": "voiceface-checkpoint"}', encoding="utf-8")
        with pytest.raises(MalformedFile):
            ReportWriter().read_report(path)

    def test_loss_history(self, tmp_path):
        history = [(1, 0.9, 1e-3), (2, 0.5, 1e-3), (3, 0.25, 5e-4)]
        writer = ReportWriter()
        path = writer.write_loss_history(history, tmp_path / "loss.csv")
        assert path.read_text().splitlines()[0] == "step,loss,learning_rate"
        restored = writer.read_loss_history(path)
        assert [row[0] for row in restored] == [1, 2, 3]
        assert [row[1] for row in restored] == pytest.approx([0.9, 0.5, 0.25])

    def test_segments(self, tmp_path):
        segments = [Segment(0, 50, 0.81), Segment(60, 140, 0.66)]
        writer = ReportWriter()
        restored = writer.read_segments(writer.write_segments(segments, tmp_path / "seg.csv"))
        assert [(s.start, s.end) for s in restored] == [(0, 50), (60, 140)]
        assert [s.score for s in restored] == pytest.approx([0.81, 0.66])

    def test_no_segments_keeps_header(self, tmp_path):
        writer = ReportWriter()
        path = writer.write_segments([], tmp_path / "seg.csv")
        assert path.read_text() == "start_frame,end_frame,score\n"
        assert writer.read_segments(path) == []

    def test_wrong_columns(self, tmp_path):
        path = tmp_path / "seg.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(MalformedFile):
            ReportWriter().read_segments(path)

    def test_table(self, tmp_path):
        rows = [{"N": 189, "n": 10000, "T": -239.0}, {"N": 1251, "n": 30720000, "T": 3725.0}]
        path = ReportWriter().write_table(rows, tmp_path / "table.csv")
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["N", "n", "T"]
        assert frame["n"].tolist() == [10000, 30720000]

    def test_empty_table_with_columns(self, tmp_path):
        path = ReportWriter().write_table([], tmp_path / "faces.csv", columns=["face_index", "score"])
        assert path.read_text() == "face_index,score\n"
