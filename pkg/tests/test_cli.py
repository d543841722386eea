import json
from pathlib import Path

import pytest

from nigt_lab.cli import main
from nigt_lab.reports import CSV_HEADER

GOLDEN = Path(__file__).parent / "golden"


def write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


BASE_RUN = """\
problem.kind = noisy_quadratic
problem.dim = 2
problem.eigs = 1.0,4.0
problem.sigma = 0.0
problem.w1 = 1.0,1.0
optimizer.id = nsgdm
optimizer.eta = 0.1
optimizer.beta = 0.5
run.T = 10
run.seeds = 1
output.formats = csv,json
"""


class TestRunCommand:
    def test_row_count_matches_horizon(self, tmp_path):
        cfg = write(tmp_path / "run.cfg", BASE_RUN)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "seed_1.csv").read_text().strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 11  # header + T rows
        summary = json.loads((out / "summary.json").read_text())
        assert summary["pass"] is True and summary["no_move_count"] == 0

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write(tmp_path / "run.cfg", BASE_RUN)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(cfg), "--out", str(a)]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(b)]) == 0
        assert (a / "seed_1.csv").read_bytes() == (b / "seed_1.csv").read_bytes()
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()

    def test_unknown_key_exits_one(self, tmp_path, capsys):
        cfg = write(tmp_path / "bad.cfg", BASE_RUN + "optimizer.momentun = 0.9\n")
        assert main(["run", "--config", str(cfg)]) == 1
        err = capsys.readouterr().err
        assert "momentun" in err

    def test_missing_config_exits_one(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "absent.cfg")]) == 1

    def test_bad_usage_exits_one(self):
        assert main(["run"]) == 1

    def test_corrupted_g_bound_exits_two_and_names_steps(self, tmp_path):
        # understated gradient bound on a noisy bowl: the accumulator
        # increment cap is violated and the run must fail loudly
        text = (
            "problem.kind = trig_bowl\nproblem.dim = 2\nproblem.a = 1.0\nproblem.b = 1.0\n"
            "problem.sigma = 0.5\noptimizer.id = nigt_adaptive\noptimizer.g_bound = 0.01\n"
            "run.T = 50\nrun.seeds = 3\n"
        )
        cfg = write(tmp_path / "adaptive.cfg", text)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 2
        summary = json.loads((out / "summary.json").read_text())
        assert summary["pass"] is False
        assert summary["invariant_violations"]
        first = summary["invariant_violations"][0]
        assert first["kind"] == "g_increment_above_bound" and first["t"] >= 1

    def test_honest_adaptive_run_exits_zero(self, tmp_path):
        text = (
            "problem.kind = trig_bowl\nproblem.dim = 2\nproblem.a = 1.0\nproblem.b = 1.0\n"
            "problem.sigma = 0.5\noptimizer.id = nigt_adaptive\nrun.T = 50\nrun.seeds = 3\n"
        )
        cfg = write(tmp_path / "adaptive.cfg", text)
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0


class TestOverridesAndJobs:
    def test_seed_count_and_master_overrides(self, tmp_path):
        text = BASE_RUN.replace("run.seeds = 1", "run.n_seeds = 1\nrun.master_seed = 0")
        cfg = write(tmp_path / "run.cfg", text)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out),
                     "--seeds", "3", "--master-seed", "10"]) == 0
        names = sorted(p.name for p in out.glob("seed_*.csv"))
        assert names == ["seed_10.csv", "seed_11.csv", "seed_12.csv"]

    def test_jobs_flag_gives_identical_bytes(self, tmp_path):
        text = BASE_RUN.replace("run.seeds = 1", "run.n_seeds = 3\nrun.master_seed = 1")
        cfg = write(tmp_path / "run.cfg", text)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(cfg), "--out", str(a)]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(b), "--jobs", "2"]) == 0
        for name in ("seed_1.csv", "seed_2.csv", "seed_3.csv", "summary.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_jobs_env_fallback(self, tmp_path, monkeypatch):
        cfg = write(tmp_path / "run.cfg", BASE_RUN)
        monkeypatch.setenv("NIGT_LAB_JOBS", "2")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        monkeypatch.setenv("NIGT_LAB_JOBS", "lots")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "p")]) == 1


class TestCertifyCommand:
    def test_valid_constants_exit_zero(self, tmp_path, capsys):
        text = (
            "problem.kind = noisy_quadratic\nproblem.dim = 2\nproblem.eigs = 1.0,4.0\n"
            "problem.sigma = 1.0\ncertify.n_pairs = 300\n"
        )
        cfg = write(tmp_path / "c.cfg", text)
        assert main(["certify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["passed"] is True
        assert 3.5 <= report["L_hat"] <= 4.0 * 1.001
        assert report["rho_hat"] <= report["fd_slack"]

    def test_sign_noise_l_hat_is_zero(self, tmp_path, capsys):
        cfg = write(tmp_path / "c.cfg",
                    "problem.kind = sign_noise\nproblem.p = 0.25\ncertify.n_pairs = 100\n")
        assert main(["certify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["L_hat"] == 0.0

    def test_underdeclared_l_exits_two(self, tmp_path, capsys):
        text = (
            "problem.kind = noisy_quadratic\nproblem.dim = 2\nproblem.eigs = 1.0,4.0\n"
            "problem.sigma = 1.0\nproblem.L = 2.0\ncertify.n_pairs = 200\n"
        )
        cfg = write(tmp_path / "c.cfg", text)
        assert main(["certify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        report = json.loads(capsys.readouterr().out)
        assert report["passed"] is False and report["failures"]


class TestIgtCheckCommand:
    def test_three_checkpoints_pass(self, tmp_path):
        text = (
            "problem.kind = noisy_quadratic\nproblem.dim = 4\nproblem.eigs = 0.5,1.0,2.0,4.0\n"
            "problem.sigma = 1.0\nigt_check.checkpoints = 1,10,100\nigt_check.n_runs = 2000\n"
            "run.master_seed = 5\n"
        )
        cfg = write(tmp_path / "igt.cfg", text)
        out = tmp_path / "o"
        assert main(["igt-check", "--config", str(cfg), "--out", str(out)]) == 0
        rows = (out / "igt_check.csv").read_text().strip().split("\n")
        assert rows[0] == "k,bias_norm,variance,target_variance,bias_limit,n_runs,passed"
        assert len(rows) == 4
        payload = json.loads((out / "igt_check.json").read_text())
        for cp, k, target in zip(payload["checkpoints"], (1, 10, 100), (1.0, 0.1, 0.01)):
            assert cp["k"] == k
            assert cp["target_variance"] == pytest.approx(target)
            assert 0.9 * target <= cp["variance"] <= 1.1 * target

    def test_requires_constant_hessian_kind(self, tmp_path):
        cfg = write(tmp_path / "igt.cfg",
                    "problem.kind = trig_bowl\nproblem.dim = 2\nproblem.a = 1.0\nproblem.b = 1.0\n")
        assert main(["igt-check", "--config", str(cfg)]) == 1


class TestSweepCommand:
    def test_paper_default_grid_emits_six_rows(self, tmp_path):
        text = (
            "problem.kind = noisy_quadratic\nproblem.dim = 2\nproblem.eigs = 1.0,1.0\n"
            "problem.sigma = 0.0\nproblem.w1 = 2.0,1.0\noptimizer.id = nsgdm\n"
            "optimizer.beta = 0.0\nrun.T = 50\nrun.seeds = 1\n"
        )
        cfg = write(tmp_path / "s.cfg", text)
        out = tmp_path / "o"
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        rows = (out / "sweep.csv").read_text().strip().split("\n")
        assert rows[0] == "eta0,final_grad_norm"
        assert len(rows) == 7
        payload = json.loads((out / "sweep.json").read_text())
        assert sorted(r["eta0"] for r in payload["rows"]) == [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0]

    def test_explicit_grid(self, tmp_path):
        text = (
            "problem.kind = noisy_quadratic\nproblem.dim = 2\nproblem.eigs = 1.0,1.0\n"
            "problem.sigma = 0.0\nproblem.w1 = 2.0,1.0\noptimizer.id = nsgdm\n"
            "optimizer.beta = 0.0\nrun.T = 400\nrun.seeds = 1\nsweep.eta_grid = 0.01,1.0\n"
        )
        cfg = write(tmp_path / "s.cfg", text)
        out = tmp_path / "o"
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        payload = json.loads((out / "sweep.json").read_text())
        assert payload["best_eta0"] == 0.01


class TestBoundsCommand:
    def test_two_row_table_passes(self, tmp_path):
        text = (
            "problem.kind = trig_bowl\nproblem.dim = 2\nproblem.a = 1.0\nproblem.b = 1.0\n"
            "problem.sigma = 0.3\noptimizer.id = nsgdm\nrun.T_grid = 50,100\n"
            "run.n_seeds = 3\nrun.master_seed = 1\n"
        )
        cfg = write(tmp_path / "b.cfg", text)
        out = tmp_path / "o"
        assert main(["bounds", "--config", str(cfg), "--out", str(out)]) == 0
        rows = (out / "bounds.csv").read_text().strip().split("\n")
        assert rows[0] == "T,mean_avg_grad_norm,stderr,bound,passed"
        assert len(rows) == 3
        assert all(r.endswith("true") for r in rows[1:])

    def test_needs_t_grid(self, tmp_path):
        text = (
            "problem.kind = trig_bowl\nproblem.dim = 2\nproblem.a = 1.0\nproblem.b = 1.0\n"
            "optimizer.id = nsgdm\nrun.T = 10\n"
        )
        cfg = write(tmp_path / "b.cfg", text)
        assert main(["bounds", "--config", str(cfg)]) == 1

    def test_underdeclared_smoothness_fails_containment(self, tmp_path, capsys):
        # the post-run certification inside the bound table must catch a
        # fabricated smoothness constant and exit 2
        text = (
            "problem.kind = trig_bowl\nproblem.dim = 2\nproblem.a = 1.0\nproblem.b = 1.0\n"
            "problem.sigma = 0.3\nproblem.L = 0.2\noptimizer.id = nsgdm\n"
            "run.T_grid = 50\nrun.n_seeds = 2\nrun.master_seed = 1\n"
        )
        cfg = write(tmp_path / "b.cfg", text)
        assert main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "certification failed" in capsys.readouterr().err


class TestPlotCommand:
    def _make_results(self, tmp_path, n_seeds):
        text = BASE_RUN.replace("run.seeds = 1", "run.n_seeds = %d\nrun.master_seed = 1" % n_seeds)
        cfg = write(tmp_path / "run.cfg", text)
        out = tmp_path / "res"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        return out

    def test_single_seed_gives_two_polylines(self, tmp_path):
        out = self._make_results(tmp_path, 1)
        assert main(["plot", str(out)]) == 0
        svg = (out / "grad_norm.svg").read_text()
        assert svg.count("<polyline") == 2  # one seed + the mean line

    def test_three_seeds_give_four_polylines(self, tmp_path):
        out = self._make_results(tmp_path, 3)
        assert main(["plot", str(out), "--out", str(tmp_path / "charts")]) == 0
        svg = (tmp_path / "charts" / "f_val.svg").read_text()
        assert svg.count("<polyline") == 4
        for name in ("grad_norm.svg", "f_val.svg", "eta.svg"):
            assert (tmp_path / "charts" / name).exists()

    def test_empty_dir_exits_one(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        assert main(["plot", str(empty)]) == 1


class TestGoldenFiles:
    """Byte-exact format pins: header, number formatting, SVG primitives."""

    def _regen(self, tmp_path):
        out = tmp_path / "out"
        code = main(["run", "--config", str(GOLDEN / "golden_run.cfg"), "--out", str(out)])
        assert code == 0
        return out

    def test_csv_schema_and_bytes(self, tmp_path):
        out = self._regen(tmp_path)
        got = (out / "seed_1.csv").read_bytes()
        assert got == (GOLDEN / "golden_seed_1.csv").read_bytes()
        text = got.decode()
        assert text.startswith(CSV_HEADER + "\n")
        assert "\r" not in text
        # 17 significant digits: 0.1 serializes with its full round-trip tail
        assert "0.10000000000000001" in text

    def test_summary_json_bytes(self, tmp_path):
        out = self._regen(tmp_path)
        assert (out / "summary.json").read_bytes() == (GOLDEN / "golden_summary.json").read_bytes()

    def test_grad_norm_svg_bytes(self, tmp_path):
        out = self._regen(tmp_path)
        assert (out / "grad_norm.svg").read_bytes() == (GOLDEN / "golden_grad_norm.svg").read_bytes()
