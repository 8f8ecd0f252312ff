import contextlib
import io
import json
import tempfile
import unittest
from pathlib import Path

from dope.harness.cli import main

from test_harness import small_config


def write_config(directory: str, **sections) -> str:
    path = Path(directory) / "config.json"
    path.write_text(json.dumps(small_config(directory, **sections)))
    return str(path)


def run_main(*argv) -> int:
    with contextlib.redirect_stdout(io.StringIO()):
        return main(["--log-level", "warning", *argv])


class TestCli(unittest.TestCase):
    def test_gen_data(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "data.csv"
            self.assertEqual(run_main("gen-data", "--config", write_config(tmp), "--out", str(out)), 0)
            self.assertTrue(out.is_file())

    def test_run_and_eval(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = write_config(tmp, algorithms=[{"name": "fle-fqe", "sigma": 0.1}])
            self.assertEqual(run_main("run", "--config", config, "--seed", "1", "--workers", "1"), 0)
            run = str(Path(tmp) / "fle-fqe" / "seed-1")
            report = Path(tmp) / "report.csv"
            code = run_main("eval", "--runs", run, "--steps", "1,3", "--samples", "500", "--out", str(report))
            self.assertEqual(code, 0)
            self.assertEqual(len(report.read_text().splitlines()), 3)

    def test_missing_run(self):
        self.assertEqual(run_main("eval", "--runs", "no/such/run", "--steps", "1"), 1)

    def test_histogram_needs_all_bounds(self):
        self.assertEqual(run_main("eval", "--runs", "no/such/run", "--steps", "1", "--bins", "10"), 1)

    def test_unsupported_dimension(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = write_config(
                tmp,
                environment={"horizon": 3, "obs_dim": 8, "reward_mode": "ring-2d"},
                algorithms=[{"name": "quantile-td", "n_quantiles": 10, "iterations": 5}],
            )
            self.assertEqual(run_main("run", "--config", config, "--seed", "1", "--workers", "1"), 1)

    def test_bad_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = write_config(tmp, colour="blue")
            self.assertEqual(run_main("gen-data", "--config", config), 1)

    def test_usage_errors(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(["--log-level", "chatty", "reproduce", "--table", "table1"])
            self.assertEqual(ctx.exception.code, 2)
            with self.assertRaises(SystemExit) as ctx:
                main(["reproduce", "--table", "table9"])
            self.assertEqual(ctx.exception.code, 2)
