from typing import Any, Dict, Optional

import os
import re
import json
from pathlib import Path

from shuttlehit.constants import (
    CONFIGURATION_FILE,
    SCORING_DEFAULTS,
    PREPROC_DEFAULTS,
    EXTRACTION_DEFAULTS,
    ASSEMBLY_DEFAULTS,
    DOMAIN_DEFAULTS,
)
from shuttlehit.pipeline.errors import ConfigurationError
from shuttlehit.pipeline.utils import log


def load_configuration_from_disk(
    path: Optional[Path] = None,
    quiet: bool = False
) -> "Configuration":
    """
    Load the configuration from disk.

    If no path is given, the default configuration file is used when it
    exists, otherwise an empty configuration (all defaults) is returned.
    A path given explicitly must point to a valid JSON file.
    """
    if path is None:
        if not os.path.isfile(CONFIGURATION_FILE):
            if not quiet: log("No configuration file found, using defaults.")
            return Configuration.empty()
        path = CONFIGURATION_FILE

    if not quiet: log(f"Loading configuration from {path}...")
    try:
        return Configuration(path=path)
    except FileNotFoundError as e:
        raise ConfigurationError(str(e)) from e
    except (ValueError, OSError) as e:
        raise ConfigurationError(f"Failed to load configuration from '{path}': {e}") from e


class Configuration:
    """
    Manages the configuration sections: scoring, preprocess, extraction,
    assembly and domains. Every section is optional.
    """
    def __init__(self, path: Optional[Path] = None):
        """
        Loads the data stored in the configuration file as object attributes
        for this instance.
        """
        self._path = path
        if path is None:
            return

        if not os.path.exists(path):
            raise FileNotFoundError(
                f"No configuration file found under {path}.")

        if not os.path.isfile(path):
            raise FileNotFoundError(
                f"The path {path} does not point to a file "
                "(is it a folder?).")

        with open(path, 'r') as c:
            configuration = json.load(c)
        if not isinstance(configuration, dict):
            raise ValueError("the configuration must be a JSON object")

        for key, value in self._decode_json_values(configuration).items():
            setattr(self, key, value)


    @staticmethod
    def empty() -> 'Configuration':
        """
        A configuration with no sections: defaults everywhere.
        """
        return Configuration(path=None)


    def __str__(self):
        """
        Prints out as a JSON object
        """
        return json.dumps(
            {k: v for k, v in vars(self).items() if not k.startswith("_")},
            indent=4)


    def _section(self, name: str, defaults: Dict[str, Any]) -> Dict[str, Any]:
        """
        Returns the defaults overridden by the values of a section.
        Unknown keys are reported, not silently dropped.
        """
        section = getattr(self, name, {})
        if not isinstance(section, dict):
            raise ConfigurationError(f"The '{name}' entry in the configuration "
                                     f"is not a dictionary.")
        unknown = sorted(set(section) - set(defaults))
        if unknown:
            raise ConfigurationError(f"Unknown keys in the '{name}' section: "
                                     f"{', '.join(unknown)}")
        return {**defaults, **section}


    def get_scoring_settings(self) -> Dict[str, Any]:
        return self._section("scoring", SCORING_DEFAULTS)


    def get_preprocess_settings(self) -> Dict[str, Any]:
        return self._section("preprocess", PREPROC_DEFAULTS)


    def get_extraction_settings(self) -> Dict[str, Any]:
        return self._section("extraction", EXTRACTION_DEFAULTS)


    def get_assembly_settings(self) -> Dict[str, Any]:
        return self._section("assembly", ASSEMBLY_DEFAULTS)


    def get_domain_settings(self) -> Dict[str, Any]:
        """
        Category domains, defaults as declared in the constants.
        """
        return self._section("domains", DOMAIN_DEFAULTS)


    @staticmethod
    def _decode_json_values(json: Dict) -> Dict:
        """
        Ensures the JSON is parsed properly: converts string numbers and
        string booleans into the correct types, recursively.
        Category labels like "A" stay strings.
        """
        decoded_json = {}
        for key, value in json.items():
            # Check keys: only alphanumeric and underscore allowed,
            # the rest get converted into underscore
            key = re.sub('[^0-9a-zA-Z]+', '_', key)
            # Recursion
            if isinstance(value, dict):
                value = Configuration._decode_json_values(value)
            if isinstance(value, list):
                value = [Configuration._decode_scalar(item) for item in value]
            value = Configuration._decode_scalar(value)
            decoded_json[key] = value
        return decoded_json


    @staticmethod
    def _decode_scalar(value: Any) -> Any:
        if not isinstance(value, str):
            return value
        if value.lower() == "false":
            return False
        if value.lower() == "true":
            return True
        try:
            number = float(value)
        except ValueError:
            return value
        return int(number) if number.is_integer() and "." not in value else number
