import pytest

from nigt_lab.config import (
    ExperimentFile,
    build_problem,
    build_run_config,
    build_schedule,
    parse_experiment,
    resolve_seeds,
    serialize_experiment,
)
from nigt_lab.errors import ConfigError

VALID = """\
# a full experiment
problem.kind = trig_bowl
problem.dim = 4
problem.a = 1.0
problem.b = 1.0
problem.sigma = 0.5
optimizer.id = nsgdm
optimizer.theorem = 1
schedule.kind = constant
run.T = 100
run.n_seeds = 3
run.master_seed = 7
run.record_exact = true
output.dir = results
output.formats = csv,json
"""


class TestParsing:
    def test_valid_file_parses(self):
        exp = parse_experiment(VALID)
        assert exp.problem["kind"] == "trig_bowl"
        assert exp.problem["dim"] == 4
        assert exp.problem["sigma"] == 0.5
        assert exp.optimizer["theorem"] == "1"
        assert exp.run["record_exact"] is True
        assert exp.output["formats"] == ["csv", "json"]

    def test_unknown_key_is_named_with_location(self):
        bad = VALID + "optimizer.moментum = 0.9\n"
        with pytest.raises(ConfigError) as exc:
            parse_experiment(bad)
        msg = str(exc.value)
        assert "moментum" in msg and "line 16" in msg

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError) as exc:
            parse_experiment("solver.id = nsgdm\n")
        assert "solver" in str(exc.value)

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError) as exc:
            parse_experiment("problem.kind trig_bowl\n")
        assert "line 1" in str(exc.value)

    def test_type_errors_are_diagnosed(self):
        with pytest.raises(ConfigError):
            parse_experiment("run.T = soon\n")
        with pytest.raises(ConfigError):
            parse_experiment("run.record_exact = yes\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_experiment("run.T = 5\nrun.T = 6\n")

    def test_comments_and_blanks_ignored(self):
        exp = parse_experiment("\n# hello\n\nproblem.kind = sign_noise\nproblem.p = 0.25\n")
        assert exp.problem == {"kind": "sign_noise", "p": 0.25}


class TestRoundTrip:
    @pytest.mark.parametrize(
        "text",
        [
            VALID,
            "problem.kind = sign_noise\nproblem.p = 0.25\noptimizer.id = nsgdm\n"
            "optimizer.eta = 0.01\noptimizer.beta = 0.0\nrun.T = 100\nrun.seeds = 1,2,3\n",
            "problem.kind = noisy_quadratic\nproblem.dim = 2\nproblem.eigs = 1.0,4.0\n"
            "problem.w1 = 0.5,-1.5\noptimizer.id = sgd\noptimizer.eta = 1e-3\nrun.T = 10\n"
            "schedule.kind = warmup_poly_decay\nschedule.warmup_steps = 2\nschedule.power = 2\n",
        ],
    )
    def test_parse_serialize_parse_identity(self, text):
        once = parse_experiment(text)
        again = parse_experiment(serialize_experiment(once))
        assert once == again

    def test_serialization_is_canonical(self):
        exp = parse_experiment(VALID)
        assert serialize_experiment(exp) == serialize_experiment(parse_experiment(serialize_experiment(exp)))


class TestBuilders:
    def test_build_problem_each_kind(self):
        quad = build_problem(parse_experiment(
            "problem.kind = noisy_quadratic\nproblem.dim = 2\nproblem.eigs = 1.0,4.0\n"))
        assert quad.L == 4.0
        sign = build_problem(parse_experiment("problem.kind = sign_noise\nproblem.p = 0.25\n"))
        assert sign.g_bound == 0.75
        trig = build_problem(parse_experiment(
            "problem.kind = trig_bowl\nproblem.dim = 3\nproblem.a = 1.0\nproblem.b = 2.0\n"))
        assert trig.L == 4.0 and trig.rho == 8.0
        ls = build_problem(parse_experiment(
            "problem.kind = streaming_least_squares\nproblem.dim = 2\n"
            "problem.cov_eigs = 1.0,2.0\nproblem.label_noise = 0.5\n"))
        assert ls.sigma_at_w1_only

    def test_constant_overrides_are_applied(self):
        exp = parse_experiment(
            "problem.kind = noisy_quadratic\nproblem.dim = 2\nproblem.eigs = 1.0,4.0\n"
            "problem.L = 2.0\n")
        pb = build_problem(exp)
        assert pb.L == 2.0  # deliberately under-declared; certification must catch it

    def test_problem_validation_becomes_config_error(self):
        with pytest.raises(ConfigError):
            build_problem(parse_experiment("problem.kind = sign_noise\nproblem.p = 0.9\n"))
        with pytest.raises(ConfigError):
            build_problem(parse_experiment("problem.kind = rosenbrock\n"))

    def test_keys_foreign_to_the_kind_are_rejected(self):
        with pytest.raises(ConfigError) as exc:
            build_problem(parse_experiment(
                "problem.kind = streaming_least_squares\nproblem.dim = 2\n"
                "problem.cov_eigs = 1.0,2.0\nproblem.sigma = 0.5\n"))
        assert "sigma" in str(exc.value)
        with pytest.raises(ConfigError):
            build_problem(parse_experiment(
                "problem.kind = noisy_quadratic\nproblem.dim = 1\n"
                "problem.eigs = 1.0\nproblem.p = 0.25\n"))

    def test_seed_resolution(self):
        exp = parse_experiment(VALID)
        assert resolve_seeds(exp) == (7, 8, 9)
        assert resolve_seeds(exp, n_seeds_override=2) == (7, 8)
        assert resolve_seeds(exp, master_seed_override=100) == (100, 101, 102)
        explicit = parse_experiment("run.seeds = 5,6\n")
        assert resolve_seeds(explicit) == (5, 6)

    def test_build_run_config_with_tuned_params(self):
        cfg, bound = build_run_config(parse_experiment(VALID))
        assert cfg.params is not None and cfg.params.provenance == "nsgdm"
        assert bound is not None and bound > 0
        assert cfg.T == 100 and cfg.seeds == (7, 8, 9)

    def test_manual_run_requires_eta(self):
        text = VALID.replace("optimizer.theorem = 1\n", "")
        with pytest.raises(ConfigError):
            build_run_config(parse_experiment(text))
        cfg, bound = build_run_config(parse_experiment(text), require_eta=False)
        assert cfg.params is None and bound is None

    def test_adaptive_needs_matching_id(self):
        text = VALID.replace("optimizer.theorem = 1", "optimizer.theorem = adaptive")
        with pytest.raises(ConfigError):
            build_run_config(parse_experiment(text))

    def test_layer_partition_built_from_boundaries(self):
        text = (
            "problem.kind = trig_bowl\nproblem.dim = 4\nproblem.a = 1.0\nproblem.b = 1.0\n"
            "optimizer.id = nigt_layerwise\noptimizer.eta = 0.05\n"
            "optimizer.layers = 0,2,4\noptimizer.lr_scale = 1.0,2.0\nrun.T = 5\n"
        )
        cfg, _ = build_run_config(parse_experiment(text))
        assert cfg.partition.ranges == ((0, 2), (2, 4))
        assert cfg.partition.lr_scale == (1.0, 2.0)

    def test_schedule_validation(self):
        with pytest.raises(ConfigError):
            build_schedule(parse_experiment("schedule.kind = cosine\n"))

    def test_empty_experiment_file_type(self):
        assert parse_experiment("") == ExperimentFile()
