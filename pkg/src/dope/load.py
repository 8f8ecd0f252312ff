from __future__ import annotations

from pathlib import Path
from typing import Any, Optional, Union

from .errors import ConfigurationError

ConfigSource = Optional[Union[str, Path, dict[str, Any]]]


def load_config(config: ConfigSource) -> dict[str, Any]:
    """
    Load a configuration document. Accepts the path to a config file or an already \
    parsed dictionary. Should config be `None`, an empty dictionary is returned.

    Args:
        config (str | Path | dict | None): Path to a config file or the config content.


    Supported formats:
    - TOML (stdlib `tomllib`, or `tomli` on Python < 3.11)
    - JSON
    - YAML (requires `pyyaml`)
    """

    # If no config is provided, return an empty dict
    if config is None:
        return {}  # Nothing

    # If the config is a dictionary, assume it is the content
    if isinstance(config, dict):
        return config

    # Config is a path
    # Make sure the path is a Path object
    if isinstance(config, str):
        config = Path(config)

    if not config.exists():
        raise FileNotFoundError(f"Config file not found: {config}")
    if not config.is_file():
        raise FileNotFoundError(f"Config file is not a file: {config}")

    if config.suffix in (".toml",):  # Handle TOML files
        try:
            import tomllib
        except ImportError:
            try:
                import tomli as tomllib
            except ImportError:
                raise ImportError(
                    "tomli is required to load TOML files on Python < 3.11. Install it with 'pip install dope[toml]'"
                )

        with open(config, "rb") as f:
            content = tomllib.load(f)

    elif config.suffix in (".json",):  # Handle JSON files
        import json

        with open(config, "r") as f:
            content = json.load(f)

    elif config.suffix in (".yaml", ".yml"):  # Handle YAML files
        try:
            import yaml
        except ImportError:
            raise ImportError(
                "PyYAML is required to load YAML files. Install it with 'pip install dope[yaml]'"
            )

        with open(config, "r") as f:
            content = yaml.safe_load(f)

    else:
        raise ConfigurationError(f"Unsupported config file format '{config}'")

    # Type check
    if not isinstance(content, dict):
        raise ConfigurationError("Config file must contain a dictionary")

    return content


def dynamic_import_config(config: ConfigSource) -> dict[str, Any]:
    """
    Import and instantiate every entry of a `{name: {import, args, kwargs}}` table.
    Used to plug custom policies or feature maps into an experiment.

    Example config dict:
    ```
    config = {
        "policy": {
            "import": "my_module:MyPolicy",
            "kwargs": {
                "epsilon": 0.1,
            },
            "args": [2]
        }
    }
    ```

    Example code:

    ```python
    items = dynamic_import_config("plugins.toml")

    # is equivalent to:
    from my_module import MyPolicy
    items = {"policy": MyPolicy(2, epsilon=0.1)}
    ```
    """
    content = load_config(config)

    # Load and instantiate the content
    return {
        name: dynamic_import(c["import"])(*c.get("args", []), **c.get("kwargs", {}))
        for name, c in content.items()
    }


def dynamic_import(name: str):
    """Dynamically load an item from a python module.

    ```python
    # Import example:
    model_type = dynamic_import("my_module:MyDensityModel")
    ModelRegistry.register_model_type("my-model", model_type)
    ```


    Args:
        name (str): The name of the item to load in format 'module:item'.

    """
    from importlib import import_module

    try:
        module, item = name.split(":")
    except ValueError:
        raise ValueError(f"Invalid name '{name}'. Need to be in format 'module:item'")

    try:
        return getattr(import_module(module), item)
    except AttributeError as ex:
        raise AttributeError(f"Item '{item}' not found in module '{module}'") from ex


def get_config(name: str, profile: str) -> dict[str, Any]:
    """Load one of the bundled experiment configurations."""
    return load_config(get_config_path(name, profile))


def get_config_path(name: str, profile: str) -> Path:
    """Path of a bundled experiment configuration, e.g. `get_config_path("table1", "desk")`."""
    root = (Path(__file__).parent / "harness" / "configs").resolve(strict=False)
    p = root / f"{name}_{profile}.toml"

    if not any(root.glob(f"{name}_*.toml")):
        raise FileNotFoundError(f"Experiment '{name}' not found")
    if not p.exists():
        raise FileNotFoundError(f"Profile '{profile}' not found for experiment '{name}'")

    return p
