import tempfile
from pathlib import Path
from unittest import TestCase

from dope import dynamic_import, dynamic_import_config, get_config, get_config_path, load_config
from dope.errors import ConfigurationError

RESOURCES = Path(__file__).parent / "resources"


class TestDynamicImport(TestCase):
    def test_dynamic_import(self):
        """Test dynamic import"""
        model_type = dynamic_import("resources.import_me:WideGaussian")
        self.assertEqual(model_type.__name__, "WideGaussian")
        self.assertEqual(model_type.family, "wide_gaussian")

    def test_bad_name(self):
        with self.assertRaises(ValueError):
            dynamic_import("resources.import_me.WideGaussian")

    def test_missing_item(self):
        with self.assertRaises(AttributeError):
            dynamic_import("resources.import_me:NoSuchModel")

    def test_dynamic_import_config(self):
        """Test dynamic import config"""
        items = dynamic_import_config(RESOURCES / "import_config.json")
        self.assertEqual(list(items), ["policy"])  # One item in the config file
        policy = items["policy"]
        self.assertEqual(type(policy).__name__, "EpsilonGreedyPolicy")
        self.assertEqual(policy.greedy_action, 1)
        self.assertEqual(policy.epsilon, 0.2)


class TestLoadConfig(TestCase):
    def test_none_and_dict(self):
        self.assertEqual(load_config(None), {})
        self.assertEqual(load_config({"name": "x"}), {"name": "x"})

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_config("no/such/config.toml")

    def test_project_metadata(self):
        project = load_config(Path(__file__).parents[1] / "pyproject.toml")["project"]
        self.assertEqual(project["name"], "dope")
        self.assertEqual(project["authors"], [{"name": "dope maintainers"}])

    def test_unsupported_format(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "config.ini"
            path.write_text("[environment]\n")
            with self.assertRaises(ConfigurationError):
                load_config(path)

    def test_json_must_hold_a_table(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "config.json"
            path.write_text("[1, 2]")
            with self.assertRaises(ConfigurationError):
                load_config(path)


class TestBundledConfigs(TestCase):
    def test_config_path(self):
        self.assertEqual(get_config_path("table1", "desk").name, "table1_desk.toml")

    def test_unknown_experiment(self):
        with self.assertRaises(FileNotFoundError):
            get_config_path("table9", "desk")

    def test_unknown_profile(self):
        with self.assertRaises(FileNotFoundError):
            get_config_path("table1", "laptop")

    def test_table2_is_two_dimensional(self):
        content = get_config("table2", "paper")
        self.assertEqual(content["environment"]["reward_mode"], "ring-2d")
        self.assertEqual(content["environment"]["horizon"], 10)
