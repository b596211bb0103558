import json
import shlex

import numpy as np
import pytest

from mixedsde.cli import main
from mixedsde.harness import (
    ExperimentConfig,
    StudyReport,
    audit_case_spec,
    load_config,
    replay_case,
    run_audit_suite,
    run_bihari_eval,
    run_convergence_study,
    run_moment_study,
    run_study,
    run_uniqueness_probe,
    write_outputs,
)

SMALL = dict(levels=(8, 16, 32), ensemble=4)


class TestConfig:
    @pytest.mark.parametrize("kw", [
        {"kind": "sweep"},
        {"levels": (16, 8, 32)},
        {"levels": (8, 8, 16)},
        {"ensemble": 0},
        {"workers": 0},
        {"levels": (8, 16)},
        {"alpha": 0.2},
        {"kind": "uniqueness", "levels": (5, 10), "family_ratio": 1.5},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(**kw)

    def test_admissibility_override(self):
        cfg = ExperimentConfig(alpha=0.2, allow_inadmissible=True)
        assert cfg.alpha == 0.2

    def test_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            ExperimentConfig.from_mapping({"kind": "convergence", "seeds": 3})

    def test_toml_and_json_agree(self, tmp_path):
        (tmp_path / "c.toml").write_text(
            '[experiment]\nkind = "uniqueness"\npreset = "rho1-lipschitz-free"\n'
            "levels = [8, 16, 32]\nensemble = 7\nmaster_seed = 11\n"
            "[experiment.preset_params]\nscale = 0.4\n"
        )
        (tmp_path / "c.json").write_text(json.dumps({
            "kind": "uniqueness", "preset": "rho1-lipschitz-free", "levels": [8, 16, 32],
            "ensemble": 7, "master_seed": 11, "preset_params": {"scale": 0.4},
        }))
        a, b = load_config(tmp_path / "c.toml"), load_config(tmp_path / "c.json")
        assert a == b
        assert a.levels == (8, 16, 32) and a.coefficients().params["scale"] == 0.4

    def test_to_dict_omits_execution_details(self):
        d = ExperimentConfig(workers=3, output_dir="x").to_dict()
        assert "workers" not in d and "output_dir" not in d and d["levels"] == (64, 128, 256, 512, 1024)


class TestConvergence:
    def test_noise_free_matches_closed_form(self):
        cfg = ExperimentConfig(preset="exponential", preset_params={"lam": 1.0}, **SMALL)
        rep = run_convergence_study(cfg)
        for row in rep.rows:
            for n in cfg.levels:
                want = abs((1 + 1 / (2 * n)) ** (2 * n) - (1 + 1 / n) ** n)
                assert row[f"D_{n}"] == pytest.approx(want, rel=1e-12)

    def test_noise_free_decay_takes_node_maximum(self):
        lam = -2.0
        cfg = ExperimentConfig(preset="exponential", preset_params={"lam": lam}, **SMALL)
        rep = run_convergence_study(cfg)
        for n in cfg.levels:
            k = np.arange(n + 1)
            want = np.max(np.abs((1 + lam / (2 * n)) ** (2 * k) - (1 + lam / n) ** k))
            assert rep.rows[0][f"D_{n}"] == pytest.approx(want, rel=1e-12)

    def test_seed_zero_independent_of_ensemble_size(self):
        one = run_convergence_study(ExperimentConfig(levels=(8, 16, 32), ensemble=1, master_seed=5))
        many = run_convergence_study(ExperimentConfig(levels=(8, 16, 32), ensemble=6, master_seed=5))
        assert one.rows[0] == many.rows[0]

    def test_report_shape_and_verdicts(self):
        rep = run_convergence_study(ExperimentConfig(**SMALL))
        assert set(rep.verdicts) == {"median_strictly_decreasing", "p90_strictly_decreasing",
                                     "censoring_within_limit"}
        assert rep.statistics["fine_grid"] == 64
        assert rep.censoring == {"censored": 0, "total": 4, "rate": 0.0}
        # verdicts are recomputable from the stored statistics
        med = [rep.statistics["per_level"][str(n)]["median"] for n in (8, 16, 32)]
        assert rep.verdicts["median_strictly_decreasing"] == (med[0] > med[1] > med[2])

    def test_censoring(self):
        cfg = ExperimentConfig(preset="exponential", preset_params={"lam": 1e200}, **SMALL)
        rep = run_convergence_study(cfg)
        assert rep.censoring["rate"] == 1.0
        assert not rep.verdicts["censoring_within_limit"] and not rep.passed
        f = rep.failures[0]
        assert {"seed", "grid", "preset", "replay"} <= set(f)
        assert "cell" in f["reason"]

    def test_failure_replays(self):
        cfg = ExperimentConfig(preset="exponential", preset_params={"lam": 1e200}, **SMALL)
        f = run_convergence_study(cfg).failures[0]
        out = replay_case("convergence", f["seed"], 8, "exponential", f["grid"],
                          preset_params={"lam": 1e200})
        assert out["censored"]
        args = shlex.split(f["replay"])[1:]
        assert main(args) == 1

    def test_replay_reproduces_gap(self):
        cfg = ExperimentConfig(**SMALL)
        rep = run_convergence_study(cfg)
        row = rep.rows[2]
        out = replay_case("convergence", row["path_seed"], 8, "linear", rep.statistics["fine_grid"])
        assert out["gap"] == row["D_8"]

    def test_dump_paths(self, tmp_path):
        rep = run_convergence_study(ExperimentConfig(dump_paths=True, levels=(8, 16, 32), ensemble=2))
        write_outputs(rep, tmp_path)
        files = sorted(p.name for p in tmp_path.glob("path_*.csv"))
        assert len(files) == 2 * 4
        assert "path_00000_n8.csv" in files


class TestUniqueness:
    def test_identical_partitions_give_zero(self):
        cfg = ExperimentConfig(kind="uniqueness", family_ratio=1.0, **SMALL)
        rep = run_uniqueness_probe(cfg)
        for row in rep.rows:
            assert all(row[f"dist_{n}_{n}"] == 0.0 for n in cfg.levels)

    def test_rho1_preset_small(self):
        cfg = ExperimentConfig(kind="uniqueness", preset="rho1-lipschitz-free", levels=(8, 16, 32), ensemble=6)
        rep = run_uniqueness_probe(cfg)
        assert rep.statistics["fine_grid"] == 96
        assert 0.0 <= rep.statistics["fraction_below_gap"] <= 1.0

    def test_replay_reproduces_case(self):
        cfg = ExperimentConfig(kind="uniqueness", preset="trig", levels=(8, 16, 32), ensemble=3)
        rep = run_uniqueness_probe(cfg)
        row = rep.rows[1]
        out = replay_case("uniqueness", row["path_seed"], 32, "trig", 96, levels=(8, 16, 32))
        assert out["gap"] == row["gap"]
        assert out["distances"][-1] == row["dist_32_48"]


class TestMomentAndBihari:
    def test_moment_study(self):
        rep = run_moment_study(ExperimentConfig(kind="moment", levels=(32,), ensemble=20))
        assert rep.passed
        means = [rep.statistics["estimates"][str(t)]["mean"] for t in (0.25, 0.5, 0.75, 1.0)]
        assert means == sorted(means)

    def test_bihari_eval(self):
        out = run_bihari_eval({"a": 1.0, "b_coef": 1.0, "alpha": 0.55, "p": 1.6, "t": 0.5,
                               "rho": {"kind": "rho1", "q": 8 / 3, "delta": 0.2}})
        assert out["in_domain"]
        assert out["bound"] == pytest.approx(1.01448176406226701856678e19, rel=1e-9)
        assert {"beta_constant", "f_argument", "start", "increment", "params"} <= set(out)

    def test_bihari_study_kind(self):
        cfg = ExperimentConfig(kind="bihari-eval", bihari={"a": 0.0, "b_coef": 1.0, "alpha": 0.6,
                                                           "p": 1.5, "t": 1.0})
        rep = run_study(cfg)
        assert rep.passed and rep.statistics["bound"] == 0.0


class TestAudit:
    def test_small_suite(self):
        cfg = ExperimentConfig(kind="audit", audit_cases=4, audit_zero_cases=2, audit_nodes=(256, 512),
                               prior_cases=2)
        rep = run_audit_suite(cfg)
        assert rep.verdicts["zero_integrand_ratio_zero"]
        assert rep.verdicts["derivative_sup_bound"]
        assert rep.statistics["cases"] == 4 and rep.statistics["zero_cases"] == 2
        assert len(rep.rows) == 12

    def test_case_spec_range(self):
        cfg = ExperimentConfig(kind="audit")
        for i in range(50):
            spec = audit_case_spec(cfg, i)
            assert 1 - cfg.hurst < spec["alpha"] < 0.5
        assert audit_case_spec(cfg, 100)["family"] == "zero"

    def test_audit_replay(self):
        cfg = ExperimentConfig(kind="audit", audit_cases=3, audit_zero_cases=0, audit_nodes=(512,),
                               prior_cases=1)
        rep = run_audit_suite(cfg)
        out = replay_case("audit", 2, 512, "audit")
        assert out["ratio"] == rep.rows[2]["ratio"]


class TestReports:
    def test_json_excludes_timing_and_is_stable(self):
        rep = run_convergence_study(ExperimentConfig(**SMALL))
        text = rep.to_json()
        assert "wall_seconds" not in text
        assert json.loads(text)["passed"] == rep.passed
        assert text == run_convergence_study(ExperimentConfig(**SMALL)).to_json()

    def test_write_outputs(self, tmp_path):
        rep = run_convergence_study(ExperimentConfig(**SMALL))
        write_outputs(rep, tmp_path / "out")
        names = {p.name for p in (tmp_path / "out").iterdir()}
        assert names == {"report.json", "timing.json", "summary.csv"}
        lines = (tmp_path / "out" / "summary.csv").read_text().splitlines()
        assert lines[0] == "seed_index,path_seed,censored,D_8,D_16,D_32"
        assert len(lines) == 5
        timing = json.loads((tmp_path / "out" / "timing.json").read_text())
        assert timing["paths"] == 4 and timing["paths_per_second"] > 0

    def test_nonfinite_values_serialize(self):
        rep = StudyReport("moment", {}, {"x": float("nan")}, {}, {"ok": True}, [])
        assert json.loads(rep.to_json())["statistics"]["x"] == "nan"


class TestCli:
    def test_run_and_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text('kind = "convergence"\npreset = "exponential"\nlevels = [8, 16, 32]\nensemble = 2\n'
                       "[preset_params]\nlam = 1.0\n")
        code = main(["run", str(cfg), "--out", str(tmp_path / "o")])
        printed = json.loads(capsys.readouterr().out)
        assert code == 0 and printed["passed"]
        assert (tmp_path / "o" / "report.json").exists()

    def test_failing_run_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"preset": "exponential", "preset_params": {"lam": 1e200},
                                   "levels": [8, 16, 32], "ensemble": 2}))
        assert main(["run", str(cfg)]) == 1
        capsys.readouterr()

    def test_workers_flag_gives_identical_report(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text('levels = [8, 16, 32]\nensemble = 6\nmaster_seed = 3\n')
        main(["run", str(cfg), "--out", str(tmp_path / "a"), "--workers", "1"])
        main(["run", str(cfg), "--out", str(tmp_path / "b"), "--workers", "2"])
        capsys.readouterr()
        assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()

    def test_replay(self, capsys):
        code = main(["replay", "--seed", "123", "--level", "16", "--preset", "trig", "--fine", "64"])
        out = json.loads(capsys.readouterr().out)
        assert code == 0 and out["level"] == 16 and "gap" in out

    def test_replay_uniqueness(self, capsys):
        code = main(["replay", "--kind", "uniqueness", "--seed", "9", "--level", "32", "--preset", "trig",
                     "--fine", "96", "--levels", "8,16,32", "--family-ratio", "1.5"])
        out = json.loads(capsys.readouterr().out)
        assert code == 0 and len(out["distances"]) == 3

    @pytest.mark.parametrize("suffix", [".toml", ".json"])
    def test_bihari_eval(self, tmp_path, capsys, suffix):
        p = tmp_path / f"b{suffix}"
        if suffix == ".toml":
            p.write_text("[bihari]\na = 1.0\nb_coef = 0.5\nalpha = 0.6\np = 1.5\nt = 1.0\n"
                         '[bihari.rho]\nkind = "rho2"\nq = 3.0\ndelta = 0.05\n')
        else:
            p.write_text(json.dumps({"a": 1.0, "b_coef": 0.5, "alpha": 0.6, "p": 1.5, "t": 1.0,
                                     "rho": {"kind": "rho2", "q": 3.0, "delta": 0.05}}))
        code = main(["bihari-eval", str(p)])
        out = json.loads(capsys.readouterr().out)
        assert code == 0 and out["in_domain"] and np.isfinite(out["bound"])

    def test_bad_arguments(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])
