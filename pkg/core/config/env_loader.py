import json
import logging
import os
import re
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from core.errors import IsingConcError
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config.json")
PROFILE_VARIABLE = "ISING_CONC_PROFILE"


class ConfigLoader:
    """
    Loads config.json once and serves its sections with profile overrides merged in.

    String values may reference environment variables as ${NAME} or
    ${NAME:-fallback}; they are substituted when the file is first read.
    """

    _env_pattern = re.compile(r'\${([A-Za-z_][A-Za-z0-9_]*)(?::-(.*?))?}')

    def __init__(self, config_path: str = DEFAULT_CONFIG_PATH):
        self.config_path = config_path
        self._config: Optional[Dict[str, Any]] = None

    def load_config(self) -> Dict[str, Any]:
        """
        Parsed configuration, read on first use.

        A .env file in the working directory is applied first without
        overriding variables that are already set.

        Raises:
            FileNotFoundError: If the configuration file does not exist
            json.JSONDecodeError: If the configuration file is not valid JSON
        """
        if self._config is None:
            load_dotenv(override=False)
            try:
                with open(self.config_path, "r") as f:
                    raw = json.load(f)
            except FileNotFoundError:
                logger.error(f"Configuration file not found: {self.config_path}")
                raise
            except json.JSONDecodeError:
                logger.error(f"Invalid JSON in configuration file: {self.config_path}")
                raise
            self._config = self._expand(raw)
            logger.debug(f"Loaded configuration from {self.config_path}")
        return self._config

    def reload(self) -> Dict[str, Any]:
        self._config = None
        return self.load_config()

    @staticmethod
    def get_profile_name() -> str:
        return os.environ.get(PROFILE_VARIABLE, "default")

    def get_settings(self, section: str, profile: Optional[str] = None) -> Dict[str, Any]:
        """
        One configuration section with the overrides of `profile` (default: the active profile).

        Raises:
            IsingConcError: If the section or the profile is unknown
        """
        config = self.load_config()
        profile = self.get_profile_name() if profile is None else profile

        if section not in config or section == "profiles":
            logger.error(f"Section '{section}' not found in configuration")
            raise IsingConcError(f"Section '{section}' not found in configuration", module="config")
        profiles = config.get("profiles", {})
        if profile not in profiles:
            logger.error(f"Profile '{profile}' not found in configuration")
            raise IsingConcError(f"Profile '{profile}' not found in configuration", module="config")

        return RunUtils.merge_dictionaries(config[section], profiles[profile].get(section, {}))

    def _expand(self, node: Any) -> Any:
        if isinstance(node, dict):
            return {key: self._expand(value) for key, value in node.items()}
        if isinstance(node, list):
            return [self._expand(value) for value in node]
        if isinstance(node, str):
            return self._substitute_env_vars(node)
        return node

    def _substitute_env_vars(self, value: str) -> str:
        """Replace ${NAME} and ${NAME:-fallback}; unknown names without a fallback are left as written."""
        def lookup(match: "re.Match") -> str:
            name, fallback = match.group(1), match.group(2)
            if name in os.environ:
                return os.environ[name]
            if fallback is None:
                logger.warning(f"Environment variable '{name}' not found")
                return match.group(0)
            return fallback

        return self._env_pattern.sub(lookup, value)


# Shared loader
config_loader = ConfigLoader()


def get_config() -> Dict[str, Any]:
    return config_loader.load_config()


def get_settings(section: str, profile: Optional[str] = None) -> Dict[str, Any]:
    return config_loader.get_settings(section, profile)


def get_profile_name() -> str:
    return config_loader.get_profile_name()


def get_reporting_config() -> Dict[str, Any]:
    return config_loader.get_settings("reporting")
