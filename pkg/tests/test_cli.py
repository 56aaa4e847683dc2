import json

import numpy as np
import pytest

from fairramp import cli
from fairramp.core import predict_batch
from fairramp.data import (
    generate_smooth_scores,
    generate_three_atom,
    ingest_scores,
    load_model,
    write_scores,
)
from fairramp.metrics import group_means


@pytest.fixture()
def smooth_file(tmp_path):
    path = tmp_path / "train.csv"
    write_scores(generate_smooth_scores(400, seed=1), path)
    return path


def run(argv):
    return cli.main([str(a) for a in argv])


class TestTrainCommand:
    def test_trains_and_writes_model(self, tmp_path, smooth_file, capsys):
        model_path = tmp_path / "model.txt"
        code = run(["train", "--input", smooth_file, "--rho", "0.5", "--gamma", "0.1",
                    "--epochs", "20", "--out-model", model_path])
        out = capsys.readouterr().out
        assert code == 0
        assert "final dual objective" in out
        assert "nu" in out and "group 1" in out
        model = load_model(model_path)
        assert model.gamma == 0.1

    def test_missing_input_file_is_io_error(self, tmp_path):
        assert run(["train", "--input", tmp_path / "nope.csv", "--rho", "0.5"]) == cli.EXIT_IO

    def test_zero_gamma_is_parameter_error(self, smooth_file):
        assert run(["train", "--input", smooth_file, "--rho", "0.5", "--gamma", "0"]) == cli.EXIT_PARAMETER

    def test_default_rho_needs_labels(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("id,score,group\na,0.5,1\nb,-0.5,1\n")
        assert run(["train", "--input", path]) == cli.EXIT_MISSING_FIELD
        assert run(["train", "--input", path, "--rho", "0.5"]) == 0

    def test_trace_file(self, tmp_path, smooth_file):
        trace_path = tmp_path / "trace.csv"
        code = run(["train", "--input", smooth_file, "--rho", "0.5", "--epochs", "5",
                    "--trace", trace_path])
        assert code == 0
        lines = trace_path.read_text().splitlines()
        assert lines[0] == "epoch,dual_objective,nu_1,nu_2"
        assert len(lines) == 6

    def test_covariance_criterion_end_to_end(self, tmp_path, smooth_file, capsys):
        model_path = tmp_path / "cov.txt"
        code = run(["train", "--input", smooth_file, "--criterion", "covariance",
                    "--gamma", "0.1", "--epochs", "10", "--out-model", model_path])
        assert code == 0
        body = model_path.read_text().splitlines()
        assert "criterion=conditional_covariance" in body
        assert len(body[-1].split()) == 4  # group line carries the frozen rate
        report_path = tmp_path / "report.jsonl"
        assert run(["evaluate", "--model", model_path, "--input", smooth_file,
                    "--out-report", report_path]) == 0
        payload = json.loads(report_path.read_text().splitlines()[0])
        assert payload["covariances"] is not None

    def test_config_file_precedence(self, tmp_path, smooth_file):
        config = tmp_path / "run.conf"
        config.write_text("gamma=0.2\nrho=0.5\nepochs=5\n")
        m1 = tmp_path / "m1.txt"
        assert run(["train", "--input", smooth_file, "--config", config, "--out-model", m1]) == 0
        assert load_model(m1).gamma == 0.2
        m2 = tmp_path / "m2.txt"
        assert run(["train", "--input", smooth_file, "--config", config,
                    "--gamma", "0.05", "--out-model", m2]) == 0
        assert load_model(m2).gamma == 0.05


class TestEvaluateCommand:
    def test_zero_multiplier_model_matches_direct_computation(self, tmp_path, smooth_file, capsys):
        model_path = tmp_path / "model.txt"
        run(["train", "--input", smooth_file, "--rho", "0.5", "--gamma", "0.1",
             "--epochs", "0", "--out-model", model_path])
        report_path = tmp_path / "report.jsonl"
        code = run(["evaluate", "--model", model_path, "--input", smooth_file,
                    "--out-report", report_path])
        assert code == 0
        payload = json.loads(report_path.read_text().splitlines()[0])
        ds = ingest_scores(smooth_file)
        model = load_model(model_path)
        h = predict_batch(model, ds.scores, ds.groups)
        expected = group_means(h, ds.groups, 2)
        assert payload["group_means"] == pytest.approx(list(expected))
        assert payload["parity_gap"] == pytest.approx(float(expected.max() - expected.min()))

    def test_trained_model_is_fair_on_its_training_file(self, tmp_path, capsys):
        train_path = tmp_path / "scored.csv"
        write_scores(generate_smooth_scores(2000, seed=3), train_path)
        model_path = tmp_path / "model.txt"
        run(["train", "--input", train_path, "--rho", "0.5", "--gamma", "0.05",
             "--epochs", "2000", "--schedule", "inv-sqrt:0.3", "--out-model", model_path])
        report_path = tmp_path / "report.jsonl"
        assert run(["evaluate", "--model", model_path, "--input", train_path,
                    "--out-report", report_path]) == 0
        payload = json.loads(report_path.read_text().splitlines()[0])
        assert payload["parity_gap"] <= 0.01

    def test_group_count_mismatch(self, tmp_path, smooth_file):
        model_path = tmp_path / "model.txt"
        run(["train", "--input", smooth_file, "--rho", "0.5", "--epochs", "0",
             "--out-model", model_path])
        three_groups = tmp_path / "three.csv"
        three_groups.write_text("id,score,group\na,0.5,1\nb,0.1,2\nc,-0.2,3\n")
        assert run(["evaluate", "--model", model_path, "--input", three_groups]) == cli.EXIT_MISMATCH


class TestSweepCommand:
    def make_files(self, tmp_path):
        train_path = tmp_path / "train.csv"
        val_path = tmp_path / "val.csv"
        write_scores(generate_smooth_scores(400, seed=11), train_path)
        ds = generate_smooth_scores(400, seed=12)
        renamed = type(ds)(
            examples=tuple(
                type(e)(f"v-{e.id}", e.score, e.group, e.sensitive_bit, e.label)
                for e in ds.examples
            ),
            group_count=2,
        )
        write_scores(renamed, val_path)
        return train_path, val_path

    def test_grid_rows_and_selection(self, tmp_path, capsys):
        train_path, val_path = self.make_files(tmp_path)
        out_path = tmp_path / "sweep.csv"
        code = run(["sweep", "--input-train", train_path, "--input-val", val_path,
                    "--gamma-grid", "0.05,0.1", "--rho-grid", "0.4,0.5,0.6",
                    "--target-epsilon", "0.05", "--epochs", "20", "--out", out_path])
        assert code == 0
        lines = out_path.read_text().splitlines()
        assert lines[0] == "gamma,rho,val_parity_gap,val_accuracy,selected"
        assert len(lines) == 7
        assert sum(line.endswith(",selected") for line in lines[1:]) == 1
        pairs = [(float(l.split(",")[0]), float(l.split(",")[1])) for l in lines[1:]]
        assert pairs == sorted(pairs)

    def test_no_feasible_point_marker(self, tmp_path, capsys):
        train_path, val_path = self.make_files(tmp_path)
        out_path = tmp_path / "sweep.csv"
        code = run(["sweep", "--input-train", train_path, "--input-val", val_path,
                    "--gamma-grid", "0.05", "--rho-grid", "0.5",
                    "--target-epsilon", "1e-12", "--epochs", "2", "--out", out_path])
        assert code == 0
        assert "no feasible point" in capsys.readouterr().out
        assert sum(l.endswith(",min_gap_fallback") for l in out_path.read_text().splitlines()) == 1

    def test_byte_identical_reruns(self, tmp_path):
        train_path, val_path = self.make_files(tmp_path)
        outs = []
        for name in ("a.csv", "b.csv"):
            out_path = tmp_path / name
            run(["sweep", "--input-train", train_path, "--input-val", val_path,
                 "--gamma-grid", "0.05,0.1", "--rho-grid", "0.45,0.55",
                 "--target-epsilon", "0.05", "--epochs", "10", "--seed", "3",
                 "--out", out_path])
            outs.append(out_path.read_bytes())
        assert outs[0] == outs[1]

    def test_overlapping_ids_rejected(self, tmp_path):
        train_path, _ = self.make_files(tmp_path)
        assert run(["sweep", "--input-train", train_path, "--input-val", train_path,
                    "--epochs", "2"]) == cli.EXIT_DISJOINTNESS


class TestOracleCheckCommand:
    def test_three_atom_instance_passes(self, tmp_path, capsys):
        path = tmp_path / "atoms.csv"
        write_scores(generate_three_atom(400, seed=5), path)
        code = run(["oracle-check", "--input", path, "--gamma", "0.05", "--rho", "0.4",
                    "--epsilon", "0", "--seeds", "2"])
        assert code == 0
        assert "PASS" in capsys.readouterr().out

    def test_identical_scores_flat_optimum_passes(self, tmp_path, capsys):
        path = tmp_path / "flat.csv"
        rows = ["id,score,group"] + [f"e{i},0.5,{1 + i % 2}" for i in range(40)]
        path.write_text("\n".join(rows) + "\n")
        code = run(["oracle-check", "--input", path, "--gamma", "0.1", "--rho", "0.5",
                    "--epsilon", "0", "--seeds", "1"])
        assert code == 0

    def test_small_three_group_instance_across_five_seeds(self, tmp_path, capsys):
        rng = np.random.default_rng(33)
        rows = ["id,score,group"]
        for i in range(40):
            rows.append(f"e{i},{rng.uniform(-1, 1):.6f},{1 + i % 3}")
        path = tmp_path / "k3.csv"
        path.write_text("\n".join(rows) + "\n")
        code = run(["oracle-check", "--input", path, "--gamma", "0.1", "--rho", "0.45",
                    "--epsilon", "0.05", "--seeds", "5"])
        assert code == 0
        assert "PASS" in capsys.readouterr().out


class TestTheoryCheckCommand:
    def test_zero_trials_vacuous_pass(self, capsys):
        assert run(["theory-check", "--trials", "0"]) == 0
        out = capsys.readouterr().out
        assert "warning" in out and "PASS" in out

    def test_small_run_passes(self, capsys):
        assert run(["theory-check", "--trials", "25", "--seed", "4"]) == 0
        out = capsys.readouterr().out
        assert "witness inequality: 25/25 passed" in out
        assert "PASS" in out
