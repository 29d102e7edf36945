import numpy as np
import pytest

from conceptrefine import cli
from conceptrefine.io import (load_matrix, load_trajectory, records_equal,
                              save_concepts, save_embeddings)
from synthbench import make_benchmark


def _run(argv):
    return cli.main(argv)


def _read_all(outdir):
    return {p.name: p.read_bytes() for p in sorted(outdir.iterdir())}


def _classifier_files(tmp_path, seed=5):
    """Small concept/embedding CSVs for classify and sweep runs."""
    dtrue, bank, train, test = make_benchmark(seed, d=16, n_classes=3,
                                              m_train=150, m_test=60)
    cdir = tmp_path / "inputs"
    cdir.mkdir()
    save_concepts(cdir / "concepts.csv", bank.names, bank.D.mat)
    save_embeddings(cdir / "train.csv", train.X, train.labels)
    save_embeddings(cdir / "test.csv", test.X, test.labels)
    return cdir


class TestDeterminism:
    """Every subcommand re-run with identical flags produces identical bytes."""

    def _twice(self, tmp_path, argv_fn):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            out.mkdir()
            assert _run(argv_fn(out)) == 0
            outs.append(_read_all(out))
        assert outs[0].keys() == outs[1].keys()
        for k in outs[0]:
            assert outs[0][k] == outs[1][k], f"{k} differs between runs"

    def test_gen(self, tmp_path):
        self._twice(tmp_path, lambda o: ["gen", "--m", "20", "--seed", "3",
                                         "--out", str(o)])

    def test_single(self, tmp_path):
        self._twice(tmp_path, lambda o: ["single", "--iters", "50", "--seed",
                                         "1", "--plot", "--out", str(o)])

    def test_multi(self, tmp_path):
        self._twice(tmp_path, lambda o: ["multi", "--m", "150", "--iters",
                                         "30", "--rho", "0.05", "--seed", "2",
                                         "--out", str(o)])

    def test_adversarial(self, tmp_path):
        self._twice(tmp_path, lambda o: ["adversarial", "--k", "2",
                                         "--eps-count", "5", "--trials", "10",
                                         "--seed", "4", "--out", str(o)])

    def test_classify(self, tmp_path):
        cdir = _classifier_files(tmp_path)
        self._twice(tmp_path, lambda o: [
            "classify", "--concepts", str(cdir / "concepts.csv"),
            "--train", str(cdir / "train.csv"), "--test", str(cdir / "test.csv"),
            "--epochs", "3", "--eta-d", "0.1", "--seed", "7",
            "--explain", "2", "--out", str(o)])

    def test_sweep(self, tmp_path):
        cdir = _classifier_files(tmp_path)
        self._twice(tmp_path, lambda o: [
            "sweep", "--concepts", str(cdir / "concepts.csv"),
            "--train", str(cdir / "train.csv"), "--param", "lambda",
            "--grid", "0.05,0.1,0.2", "--epochs", "2", "--eta-d", "0",
            "--seed", "7", "--out", str(o)])


class TestGen:
    def test_output_shapes(self, tmp_path):
        assert _run(["gen", "--d", "10", "--n", "8", "--k", "5", "--m", "25",
                     "--out", str(tmp_path)]) == 0
        assert load_matrix(tmp_path / "dstar.csv").shape == (10, 8)
        assert load_matrix(tmp_path / "dinit.csv").shape == (10, 8)
        samples = load_matrix(tmp_path / "samples.csv")
        assert samples.shape == (25, 18)
        # each row holds the code then the input; nonzeros encode the support
        beta, x = samples[0, :8], samples[0, 8:]
        assert np.count_nonzero(beta) == 5
        dstar = load_matrix(tmp_path / "dstar.csv")
        np.testing.assert_allclose(dstar @ beta, x, atol=1e-12)

    def test_signs_off_is_nonnegative(self, tmp_path):
        assert _run(["gen", "--m", "30", "--signs", "off",
                     "--out", str(tmp_path)]) == 0
        beta = load_matrix(tmp_path / "samples.csv")[:, :8]
        assert np.all(beta >= 0.0)


class TestSingle:
    def test_zero_radius_keeps_loss_zero(self, tmp_path):
        assert _run(["single", "--rho", "0", "--iters", "20",
                     "--out", str(tmp_path)]) == 0
        records = load_trajectory(tmp_path / "trajectory.csv")
        assert len(records) == 21
        # exact-start run: the loss stays at the float64 noise floor
        assert all(r.loss <= 1e-25 for r in records)
        assert all(r.dev_all == 0.0 for r in records)

    def test_loss_monotone_on_defaults(self, tmp_path):
        assert _run(["single", "--seed", "1", "--iters", "200",
                     "--out", str(tmp_path)]) == 0
        losses = [r.loss for r in load_trajectory(tmp_path / "trajectory.csv")]
        assert all(a >= b for a, b in zip(losses, losses[1:]))

    def test_roundtrip_matches_written_records(self, tmp_path):
        assert _run(["single", "--iters", "30", "--seed", "9",
                     "--out", str(tmp_path)]) == 0
        first = load_trajectory(tmp_path / "trajectory.csv")
        # writing the parsed records again is byte-identical
        from conceptrefine.io import save_trajectory
        save_trajectory(tmp_path / "again.csv", first)
        assert (tmp_path / "again.csv").read_bytes() == \
            (tmp_path / "trajectory.csv").read_bytes()
        assert all(records_equal(a, b)
                   for a, b in zip(first, load_trajectory(tmp_path / "again.csv")))

    def test_support_failure_exit_code(self, tmp_path, recwarn):
        # far-off initialization loses the generating support
        assert _run(["single", "--rho", "0.8", "--seed", "2",
                     "--iters", "10", "--out", str(tmp_path)]) == 1


class TestAdversarial:
    def test_all_trials_pass(self, tmp_path):
        assert _run(["adversarial", "--k", "4", "--eps-count", "8",
                     "--trials", "20", "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "adversarial.csv").read_text().splitlines()
        assert lines[0] == "eps,trial,loss,floor,passed"
        body = [l.split(",") for l in lines[1:]]
        assert len(body) == 8 * 20
        assert all(row[4] == "pass" for row in body)

    def test_out_of_range_eps_skipped(self, tmp_path, capsys):
        assert _run(["adversarial", "--k", "2", "--eps", "0.01,0.9",
                     "--trials", "5", "--out", str(tmp_path)]) == 0
        err = capsys.readouterr().err
        assert "skipped" in err
        lines = (tmp_path / "adversarial.csv").read_text().splitlines()[1:]
        skipped = [l for l in lines if l.endswith("skipped")]
        assert len(skipped) == 1 and skipped[0].startswith("0.9")

    def test_plot_writes_chart(self, tmp_path):
        assert _run(["adversarial", "--k", "2", "--eps-count", "4",
                     "--trials", "5", "--plot", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "adversarial.svg").exists()


class TestClassify:
    def test_outputs_exist(self, tmp_path):
        cdir = _classifier_files(tmp_path)
        out = tmp_path / "run"
        assert _run(["classify", "--concepts", str(cdir / "concepts.csv"),
                     "--train", str(cdir / "train.csv"),
                     "--test", str(cdir / "test.csv"), "--epochs", "3",
                     "--explain", "2", "--plot", "--out", str(out)]) == 0
        for name in ("metrics.csv", "test_metrics.csv", "concepts_refined.csv",
                     "head.csv", "explain_000.csv", "explain_001.csv",
                     "accuracy.svg"):
            assert (out / name).exists(), name
        head = load_matrix(out / "head.csv")
        assert head.shape == (3, 4)  # weights plus bias column
        lines = (out / "metrics.csv").read_text().splitlines()
        assert lines[0] == "epoch,accuracy,ael,asr,aced"
        assert len(lines) == 4

    def test_rho_zero_keeps_bank(self, tmp_path):
        cdir = _classifier_files(tmp_path)
        out = tmp_path / "run"
        assert _run(["classify", "--concepts", str(cdir / "concepts.csv"),
                     "--train", str(cdir / "train.csv"), "--rho", "0",
                     "--eta-d", "0.5", "--epochs", "2", "--out", str(out)]) == 0
        text = (out / "test_metrics.csv").read_text().splitlines()[1]
        aced = float(text.split(",")[4])
        assert aced <= 1e-12


class TestSweep:
    def test_lambda_sweep_ael_nonincreasing(self, tmp_path):
        cdir = _classifier_files(tmp_path)
        out = tmp_path / "run"
        assert _run(["sweep", "--concepts", str(cdir / "concepts.csv"),
                     "--train", str(cdir / "train.csv"),
                     "--test", str(cdir / "test.csv"), "--param", "lambda",
                     "--grid", "0.02,0.05,0.1,0.2,0.4", "--eta-d", "0",
                     "--epochs", "2", "--out", str(out)]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "param,value,accuracy,ael,asr,aced"
        ael = [float(l.split(",")[3]) for l in lines[1:]]
        assert all(a >= b for a, b in zip(ael, ael[1:]))

    def test_rho_zero_point_has_zero_aced(self, tmp_path):
        cdir = _classifier_files(tmp_path)
        out = tmp_path / "run"
        assert _run(["sweep", "--concepts", str(cdir / "concepts.csv"),
                     "--train", str(cdir / "train.csv"), "--param", "rho",
                     "--grid", "0,0.1", "--eta-d", "0.2", "--epochs", "2",
                     "--plot", "--out", str(out)]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()[1:]
        aced = [float(l.split(",")[5]) for l in lines]
        assert aced[0] <= 1e-12
        assert (out / "sweep_accuracy.svg").exists()
        assert (out / "sweep_ael.svg").exists()


class TestReductions:
    def test_multi_with_one_sample_matches_single(self, tmp_path):
        common = ["--seed", "6", "--rho", "0.02", "--eta", "0.01",
                  "--iters", "40"]
        a, b = tmp_path / "s", tmp_path / "m"
        a.mkdir(), b.mkdir()
        assert _run(["single", *common, "--out", str(a)]) == 0
        assert _run(["multi", "--m", "1", *common, "--out", str(b)]) == 0
        single = load_trajectory(a / "trajectory.csv")
        multi = load_trajectory(b / "trajectory.csv")
        for ra, rb in zip(single, multi):
            assert rb.loss == pytest.approx(ra.loss, rel=1e-9, abs=1e-18)
            assert rb.dev_all == pytest.approx(ra.dev_all, rel=1e-9)

    def test_one_point_sweep_matches_classify(self, tmp_path):
        cdir = _classifier_files(tmp_path)
        base = ["--concepts", str(cdir / "concepts.csv"),
                "--train", str(cdir / "train.csv"),
                "--test", str(cdir / "test.csv"),
                "--epochs", "3", "--eta-d", "0.1", "--seed", "7"]
        a, b = tmp_path / "c", tmp_path / "w"
        a.mkdir(), b.mkdir()
        assert _run(["classify", *base, "--lambda", "0.1", "--out", str(a)]) == 0
        assert _run(["sweep", *base, "--param", "lambda", "--grid", "0.1",
                     "--out", str(b)]) == 0
        classify_acc = float(
            (a / "test_metrics.csv").read_text().splitlines()[1].split(",")[1])
        sweep_acc = float(
            (b / "sweep.csv").read_text().splitlines()[1].split(",")[2])
        assert sweep_acc == classify_acc


class TestUsageAndConfig:
    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            _run(["frobnicate"])
        assert exc.value.code == 2

    def test_semantic_error_exits_2(self, tmp_path, capsys):
        # k > n violates the generative preconditions
        assert _run(["single", "--k", "9", "--n", "8",
                     "--out", str(tmp_path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_config_file_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("iters = 25\nseed = 3\n")
        out1 = tmp_path / "a"
        out1.mkdir()
        assert _run(["single", "--config", str(cfg), "--out", str(out1)]) == 0
        # config overrides the default iteration count
        assert len(load_trajectory(out1 / "trajectory.csv")) == 26
        out2 = tmp_path / "b"
        out2.mkdir()
        # explicit flag beats the config value
        assert _run(["single", "--config", str(cfg), "--iters", "10",
                     "--out", str(out2)]) == 0
        assert len(load_trajectory(out2 / "trajectory.csv")) == 11

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("frobnicate = 1\n")
        assert _run(["single", "--config", str(cfg),
                     "--out", str(tmp_path)]) == 2

    def test_required_inputs_can_come_from_config(self, tmp_path, capsys):
        # missing --concepts/--train is a usage error ...
        assert _run(["classify", "--out", str(tmp_path)]) == 2
        assert "required" in capsys.readouterr().err
        # ... unless the config file provides them
        cdir = _classifier_files(tmp_path)
        cfg = tmp_path / "cls.cfg"
        cfg.write_text(f"concepts = {cdir / 'concepts.csv'}\n"
                       f"train = {cdir / 'train.csv'}\n"
                       "epochs = 2\n")
        out = tmp_path / "run"
        assert _run(["classify", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "metrics.csv").exists()
