import json
import os

import pytest

from hawkes_multiscale import ExponentialKernel, HawkesModel, write_model
from hawkes_multiscale.cli import main

MODEL = HawkesModel(
    mu=(0.8,),
    kernels=((ExponentialKernel(0.4, 2.0),),),
    labels=("u",),
)


@pytest.fixture
def model_path(tmp_path):
    path = tmp_path / "model.txt"
    write_model(MODEL, path)
    return str(path)


class TestStages:
    def test_full_chain_matches_single_shot(self, model_path, tmp_path):
        ev = str(tmp_path / "events.tsv")
        claw = str(tmp_path / "claw.json")
        est = str(tmp_path / "estimate.json")
        rep = str(tmp_path / "rep")
        assert main(["simulate", "--model", model_path, "--horizon", "3000",
                     "--seed", "5", "--out", ev]) == 0
        assert main(["claw", "--events", ev, "--h-min", "0.005", "--h-max", "30",
                     "--h-delta", "0.1", "--out", claw]) == 0
        assert main(["solve", "--claw", claw, "--points", "60", "--t-min", "0.005",
                     "--t-max", "15", "--out", est]) == 0
        assert main(["analyze", "--estimate", est, "--out-dir", rep,
                     "--emit-plots"]) == 0
        assert os.path.isfile(os.path.join(rep, "report.json"))

        out = str(tmp_path / "shot")
        assert main(["pipeline", "--model", model_path, "--horizon", "3000",
                     "--seed", "5", "--h-min", "0.005", "--h-max", "30",
                     "--h-delta", "0.1", "--points", "60", "--t-min", "0.005",
                     "--t-max", "15", "--out-dir", out]) == 0
        # staged artifacts equal the single-shot run byte for byte
        assert open(ev).read() == open(os.path.join(out, "events.tsv")).read()
        assert open(claw).read() == open(os.path.join(out, "claw.json")).read()
        assert open(est).read() == open(os.path.join(out, "estimate.json")).read()

    def test_classify(self, tmp_path):
        book = tmp_path / "book.tsv"
        book.write_text(
            "0.0\tbid\t99.0\t10.0\t\n"
            "0.5\task\t101.0\t5.0\t\n"
            "1.0\task\t101.0\t9.0\tinsert\n"
            "2.0\task\t100.0\t2.0\tinsert\n"
        )
        out = str(tmp_path / "events.tsv")
        assert main(["classify", "--book", str(book), "--out", out]) == 0
        text = open(out).read()
        assert "L_a" in text and "P_b" in text

    def test_thinning_simulator(self, model_path, tmp_path):
        ev = str(tmp_path / "ev.tsv")
        assert main(["simulate", "--model", model_path, "--horizon", "500",
                     "--seed", "2", "--simulator", "thinning", "--out", ev]) == 0
        assert "thinning" in open(ev).readline()


class TestConfigPrecedence:
    def test_config_file_overrides_flags(self, model_path, tmp_path):
        cfg = tmp_path / "cfg.json"
        out = str(tmp_path / "out")
        cfg.write_text(json.dumps({
            "model_path": model_path,
            "out_dir": out,
            "horizon": 2000.0,
            "h_min": 0.005, "h_max": 30.0, "h_delta": 0.1,
            "solver_points": 60, "t_min": 0.005, "t_max": 15.0,
        }))
        # the flag horizon (99999) must lose to the config value
        assert main(["pipeline", "--config", str(cfg), "--model", model_path,
                     "--horizon", "99999", "--out-dir", "ignored"]) == 0
        doc = json.loads(open(os.path.join(out, "manifest.json")).read())
        assert doc["config"]["horizon"] == 2000.0


class TestExitCodes:
    def test_missing_model_file(self, tmp_path):
        code = main(["simulate", "--model", str(tmp_path / "nope.txt"),
                     "--horizon", "10", "--out", str(tmp_path / "o.tsv")])
        assert code != 0

    def test_parameter_error_code(self, model_path, tmp_path):
        code = main(["claw", "--events", str(tmp_path / "missing.tsv"),
                     "--out", str(tmp_path / "c.json")])
        assert code != 0

    def test_unstable_model_exit_code(self, tmp_path):
        bad = HawkesModel(mu=(0.1,), kernels=((ExponentialKernel(1.1, 1.0),),))
        mp = tmp_path / "bad.txt"
        write_model(bad, mp)
        code = main(["simulate", "--model", str(mp), "--horizon", "10",
                     "--out", str(tmp_path / "o.tsv")])
        assert code == 4  # stability errors have their own exit code

    def test_domain_error_exit_code(self, model_path, tmp_path):
        ev = str(tmp_path / "events.tsv")
        main(["simulate", "--model", model_path, "--horizon", "100", "--out", ev])
        code = main(["claw", "--events", ev, "--h-min", "0", "--h-max", "10",
                     "--h-delta", "0.1", "--out", str(tmp_path / "c.json")])
        assert code == 2
