import math

import numpy as np
import pytest

from conceptrefine import StepRecord
from conceptrefine.io import (load_concepts, load_embeddings, load_matrix,
                              load_trajectory, records_equal, save_concepts,
                              save_embeddings, save_explanation, save_matrix,
                              save_trajectory)


class TestMatrixCsv:
    def test_exact_roundtrip(self, rng, tmp_path):
        a = rng.standard_normal((7, 5)) * np.exp(rng.uniform(-30, 30, (7, 5)))
        path = tmp_path / "m.csv"
        save_matrix(path, a)
        np.testing.assert_array_equal(load_matrix(path), a)

    def test_format_is_plain_csv(self, tmp_path):
        path = tmp_path / "m.csv"
        save_matrix(path, np.array([[1.0, 2.5], [3.0, -4.0]]))
        text = path.read_text()
        assert text == "1,2.5\n3,-4\n"


class TestTrajectoryCsv:
    def test_roundtrip_with_nan_contraction(self, tmp_path):
        records = [
            StepRecord(iter=0, loss=0.125, dev_all=0.02, dev_active=0.01,
                       contraction=math.nan),
            StepRecord(iter=1, loss=0.1, dev_all=0.019, dev_active=0.009,
                       contraction=0.8),
        ]
        path = tmp_path / "t.csv"
        save_trajectory(path, records)
        back = load_trajectory(path)
        assert len(back) == 2
        assert all(records_equal(a, b) for a, b in zip(records, back))

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope\n1,2,3,4,5\n")
        with pytest.raises(ValueError, match="header"):
            load_trajectory(path)


class TestConceptCsv:
    def test_roundtrip(self, rng, tmp_path):
        mat = rng.standard_normal((6, 3))
        names = ["stripes", "fur, thick", "beak"]
        path = tmp_path / "c.csv"
        save_concepts(path, names, mat)
        names2, mat2 = load_concepts(path)
        assert names2 == names
        np.testing.assert_array_equal(mat2, mat)

    def test_header_row(self, tmp_path):
        save_concepts(tmp_path / "c.csv", ["a"], np.ones((2, 1)))
        first = (tmp_path / "c.csv").read_text().splitlines()[0]
        assert first == "name,v0,v1"


class TestEmbeddingCsv:
    def test_roundtrip(self, rng, tmp_path):
        X = rng.standard_normal((4, 3))
        labels = np.array([0, 2, 1, 2])
        path = tmp_path / "e.csv"
        save_embeddings(path, X, labels)
        X2, labels2 = load_embeddings(path)
        np.testing.assert_array_equal(X2, X)
        np.testing.assert_array_equal(labels2, labels)


class TestExplanationCsv:
    def test_rows_and_header(self, tmp_path):
        path = tmp_path / "x.csv"
        save_explanation(path, [("stripes", 0.9, 1.5), ("beak", 0.2, -0.25)])
        lines = path.read_text().splitlines()
        assert lines[0] == "rank,concept,score,weight"
        assert lines[1].startswith("1,stripes,")
        assert lines[2].startswith("2,beak,")
