import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Union

from dotenv import dotenv_values


class ConfigObject:
    def __init__(self, dictionary: Dict[str, Any]):
        for key, value in dictionary.items():
            if isinstance(value, dict):
                value = ConfigObject(value)
            setattr(self, key, value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            key: value.to_dict() if isinstance(value, ConfigObject) else value
            for key, value in self.__dict__.items()
        }

    def pretty_print(self, indent=0, printer=print):
        for key, value in self.__dict__.items():
            if isinstance(value, ConfigObject):
                printer('    ' * indent + str(key) + ':')
                value.pretty_print(indent + 1, printer)
            else:
                printer('    ' * indent + str(key) + ': ' + str(value))


class OutputFormat(Enum):
    CSV = "csv"
    JSONL = "jsonl"


def load_config_from_file(config_file_path: Union[str, Path]) -> ConfigObject:
    """
    Loads a run configuration file.

    `.json` files may nest sections; anything else is read as flat `key=value` lines.
    Keys are lower-cased so `TAIL_TOL=1e-12` and `tail_tol=1e-12` mean the same.
    """
    path = Path(config_file_path)
    if path.suffix == ".json":
        with open(path, 'r') as config_file:
            config_data = json.load(config_file)
    else:
        config_data = {
            key.lower(): value
            for key, value in dotenv_values(path).items()
            if value is not None
        }
    return ConfigObject(config_data)
