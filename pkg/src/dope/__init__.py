from .load import dynamic_import, dynamic_import_config, get_config, get_config_path, load_config

__all__ = [
    "dynamic_import",
    "dynamic_import_config",
    "get_config",
    "get_config_path",
    "load_config",
]
