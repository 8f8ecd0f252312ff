import csv
import importlib
import json
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path
from unittest import mock

from dope.errors import ConfigurationError, InvalidArgumentError, MissingModelsError, UnsupportedDimensionError
from dope.fle import config_hash, read_run_manifest
from dope.harness import (
    OUT_OF_SCOPE,
    ExperimentConfig,
    Measurement,
    ResultsTable,
    apply_acceptance,
    evaluate_runs,
    generate_data,
    reproduce,
    run_experiment,
    table_config,
)
from dope.mdp_core import read_dataset_csv


def small_config(output_dir: str, **sections) -> dict:
    content = {
        "name": "small",
        "seeds": [1, 2],
        "output_dir": output_dir,
        "environment": {"horizon": 3, "obs_dim": 8},
        "data": {"per_cell": 200},
        "metric": {"kind": ["tv", "w1"], "steps": [1, 2, 3], "samples": 2000},
        "algorithms": [
            {"name": "fle-gmm", "n_components": 2, "iterations": 20},
            {"name": "cate-td", "n_atoms": 31, "iterations": 20, "lr": 0.1},
            {"name": "quantile-td", "n_quantiles": 10, "iterations": 20, "lr": 0.1},
        ],
    }
    content.update(sections)
    return content


class TestExperimentConfig(unittest.TestCase):
    def test_from_dict(self):
        config = ExperimentConfig.from_dict(small_config("out"))
        self.assertEqual(config.environment.horizon, 3)
        self.assertEqual([a.name for a in config.algorithms], ["fle-gmm", "cate-td", "quantile-td"])
        self.assertEqual(config.metric.steps, (1, 2, 3))
        self.assertEqual(config.seeds, (1, 2))

    def test_from_json_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "small.json"
            path.write_text(json.dumps(small_config(tmp)))
            self.assertEqual(ExperimentConfig.from_file(path).name, "small")

    def test_metric_kind_as_string(self):
        config = ExperimentConfig.from_dict(small_config("out", metric={"kind": "w1", "steps": [1]}))
        self.assertEqual(config.metric.kind, ("w1",))

    def test_rejects_bad_content(self):
        bad = [
            small_config("out", colour="blue"),
            small_config("out", data={"per_cell": 200, "size": 3}),
            small_config("out", data={"per_cell": "many"}),
            small_config("out", data={"per_cell": True}),
            small_config("out", environment={"horizon": 3, "epsilon": 2.0}),
            small_config("out", metric={"steps": [0, 4]}),
            small_config("out", metric={"kind": ["kl"], "steps": [1]}),
            small_config("out", algorithms=[{"name": "fle-gmm"}, {"name": "fle-gmm"}]),
            small_config("out", algorithms=[{"name": "fle-custom", "model_import": "resources.import_me:WideGaussian"}]),
            small_config("out", algorithms=[{"name": "fle-gmm", "family": "gmm"}]),
            small_config("out", algorithms=[{"name": "diff-fle"}]),
            small_config("out", algorithms=[]),
            small_config("out", seeds=[]),
        ]
        for content in bad:
            with self.assertRaises(ConfigurationError):
                ExperimentConfig.from_dict(content)

    def test_needs_name(self):
        content = small_config("out")
        del content["name"]
        with self.assertRaises(ConfigurationError):
            ExperimentConfig.from_dict(content)

    def test_bundled_configs(self):
        for table_id in ("table1", "table2", "table_w1"):
            for profile in ("desk", "paper"):
                config = table_config(table_id, profile, "out")
                self.assertEqual(config.name, table_id)
                self.assertTrue(config.output_dir.startswith("out"))
        self.assertEqual(table_config("table2", "desk", "out").environment.reward_mode, "ring-2d")
        with self.assertRaises(InvalidArgumentError):
            table_config("theory", "desk", "out")
        with self.assertRaises(InvalidArgumentError):
            table_config("table1", "laptop", "out")


class TestGenerateData(unittest.TestCase):
    def test_same_seed_same_dataset(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = ExperimentConfig.from_dict(small_config(tmp))
            a = read_dataset_csv(generate_data(config, 1, Path(tmp) / "a.csv"))
            b = read_dataset_csv(generate_data(config, 1, Path(tmp) / "b.csv"))
            self.assertEqual(a.content_hash(), b.content_hash())
            self.assertEqual(len(a), 3 * 2 * 200)

    def test_fixed_data_seed(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = ExperimentConfig.from_dict(small_config(tmp, data={"per_cell": 50, "seed": 7}))
            self.assertEqual(generate_data(config, 1), generate_data(config, 2))


class TestRunAndEvaluate(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.config = ExperimentConfig.from_dict(small_config(cls.tmp.name))
        cls.runs = run_experiment(cls.config, workers=1)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_one_run_per_cell(self):
        self.assertEqual(len(self.runs), 6)
        self.assertEqual(Path(self.runs[0]).relative_to(self.tmp.name), Path("fle-gmm") / "seed-1")

    def test_manifest(self):
        experiment = read_run_manifest(self.runs[0])["experiment"]
        self.assertEqual(experiment["algorithm"], "fle-gmm")
        self.assertEqual(experiment["seed"], 1)
        self.assertEqual(experiment["config_hash"], config_hash(self.config.to_dict()))

    def test_evaluate(self):
        measurements = evaluate_runs(self.runs, [1, 3], ("tv", "w1"), samples=1000)
        self.assertEqual(len(measurements), 6 * 2 * 2)
        for m in measurements:
            self.assertTrue(0.0 <= m.value, m)
            if m.metric == "tv":
                self.assertLessEqual(m.value, 1.0)

    def test_same_run_twice_has_zero_stderr(self):
        measurements = evaluate_runs([self.runs[0], self.runs[0]], [1], samples=1000)
        (row,) = ResultsTable.from_measurements(measurements).rows
        self.assertEqual(row.stderr, 0.0)

    def test_missing_step(self):
        with self.assertRaises(MissingModelsError):
            evaluate_runs(self.runs[:1], [4], samples=100)

    def test_unknown_metric(self):
        with self.assertRaises(InvalidArgumentError):
            evaluate_runs(self.runs[:1], [1], ("kl",), samples=100)

    def test_not_an_experiment_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            (Path(tmp) / "run_manifest.json").write_text(json.dumps({"models": {}}))
            with self.assertRaises(InvalidArgumentError):
                evaluate_runs([tmp], [1], samples=100)


class TestCustomModel(unittest.TestCase):
    def test_fle_custom_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            algorithm = {
                "name": "fle-custom",
                "model_import": "resources.import_me:WideGaussian",
                "family": "wide_gaussian",
                "options": {"sigma": 0.2},
            }
            config = ExperimentConfig.from_dict(small_config(tmp, seeds=[1], algorithms=[algorithm]))
            (run,) = run_experiment(config, workers=1)
            self.assertEqual(read_run_manifest(run)["experiment"]["family"], "wide_gaussian")
            (m,) = evaluate_runs([run], [1], samples=500)
            self.assertEqual(m.algorithm, "fle-custom")

    def test_not_a_model_class(self):
        with tempfile.TemporaryDirectory() as tmp:
            algorithm = {"name": "fle-custom", "model_import": "resources.import_me:not_a_model", "family": "nothing"}
            config = ExperimentConfig.from_dict(small_config(tmp, seeds=[1], algorithms=[algorithm]))
            with self.assertRaises(ConfigurationError):
                run_experiment(config, workers=1)


class TestVectorRewards(unittest.TestCase):
    def test_quantile_td_is_scalar_only(self):
        with tempfile.TemporaryDirectory() as tmp:
            content = small_config(
                tmp,
                seeds=[1],
                environment={"horizon": 3, "obs_dim": 8, "reward_mode": "ring-2d"},
                algorithms=[{"name": "quantile-td", "n_quantiles": 10, "iterations": 5}],
            )
            config = ExperimentConfig.from_dict(content)
            with self.assertRaises(UnsupportedDimensionError):
                run_experiment(config, workers=1)
            (error,) = run_experiment(config, workers=1, raise_errors=False)
            self.assertIsInstance(error, UnsupportedDimensionError)


class TestReport(unittest.TestCase):
    def measurements(self, values: dict, seeds=(1, 2)):
        return [
            Measurement(h, algorithm, "tv", value + 0.001 * seed, seed)
            for (h, algorithm), value in values.items()
            for seed in seeds
        ]

    def test_single_seed_has_no_stderr(self):
        table = ResultsTable.from_measurements([Measurement(1, "fle-gmm", "tv", 0.05, 1)])
        self.assertEqual(table.rows[0].to_row()[4], "n/a")

    def test_rows_sorted_by_step_then_algorithm(self):
        table = ResultsTable.from_measurements(self.measurements({(2, "fle-gmm"): 0.1, (1, "fle-gmm"): 0.1, (1, "cate-td"): 0.1}))
        self.assertEqual([(r.h, r.algorithm) for r in table.rows], [(1, "cate-td"), (1, "fle-gmm"), (2, "fle-gmm")])

    def test_acceptance_passes(self):
        values = {}
        for h in (1, 10, 19):
            values[(h, "fle-gmm")] = 0.04
            values[(h, "cate-td")] = 0.08
        values[(1, "quantile-td")] = 0.6
        table = apply_acceptance(ResultsTable.from_measurements(self.measurements(values)), "table1")
        self.assertEqual(len(table.checked), 7)
        self.assertEqual(table.failed, [])
        diff_fle = [r for r in table.rows if r.algorithm == "diff-fle"]
        self.assertEqual(len(diff_fle), 20)
        self.assertTrue(all(r.tolerance == OUT_OF_SCOPE and r.mean is None for r in diff_fle))
        self.assertAlmostEqual(table.get(1, "fle-gmm", "tv").paper_value, 0.039)

    def test_acceptance_failures(self):
        values = {(h, "fle-gmm"): 0.04 for h in (1, 10, 19)}
        values[(1, "fle-gmm")] = 0.5
        values[(1, "quantile-td")] = 0.6
        table = apply_acceptance(ResultsTable.from_measurements(self.measurements(values)), "table1")
        failed = {(r.h, r.algorithm) for r in table.failed}
        # cate-td never ran; quantile-td is not twice as bad as the failed fle-gmm row
        self.assertEqual(failed, {(1, "fle-gmm"), (1, "cate-td"), (10, "cate-td"), (19, "cate-td"), (1, "quantile-td")})

    def test_csv(self):
        table = apply_acceptance(ResultsTable.from_measurements(self.measurements({(1, "fle-gmm"): 0.04})), "table1")
        with tempfile.TemporaryDirectory() as tmp:
            path = table.to_csv(Path(tmp) / "report" / "table1.csv")
            with open(path, newline="") as f:
                rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["h", "algorithm", "metric", "mean", "stderr", "paper_value", "tolerance", "pass"])
        self.assertEqual(len(rows), len(table.rows) + 1)

    def test_only_table_metric_is_reported(self):
        measurements = self.measurements({(1, "fle-gmm"): 0.04}) + [Measurement(1, "fle-gmm", "w1", 0.1, 1)]
        table = apply_acceptance(ResultsTable.from_measurements(measurements), "table1")
        self.assertEqual({r.metric for r in table.rows}, {"tv"})

    def test_replace_keeps_rows_frozen(self):
        row = ResultsTable.from_measurements([Measurement(1, "fle-gmm", "tv", 0.05, 1)]).rows[0]
        self.assertEqual(replace(row, passed=True).to_row()[-1], "true")


class TestReproduce(unittest.TestCase):
    def test_unknown_profile(self):
        with self.assertRaises(InvalidArgumentError):
            reproduce("theory", profile="laptop")

    def test_small_table_writes_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            content = small_config(tmp, seeds=[1], algorithms=[{"name": "fle-fqe", "sigma": 0.1}])
            small = ExperimentConfig.from_dict(content)
            module = importlib.import_module("dope.harness.reproduce")
            with mock.patch.object(module, "table_config", return_value=small):
                outcome = reproduce("table1", "desk", tmp, workers=1)
            self.assertEqual(outcome.report, Path(tmp) / "table1_report.csv")
            self.assertTrue(outcome.report.is_file())
            self.assertEqual(outcome.errors, [])
            # Only fle-fqe ran, so every acceptance row fails
            self.assertFalse(outcome.passed)
            self.assertEqual(len(outcome.failed_checks), 7)
