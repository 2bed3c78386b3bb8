#!/usr/bin/env python3
"""
Riccati-Toda Configuration Management
Handles numerical tolerances, CLI defaults and logging setup
"""

import os
import copy
import yaml
import logging
from pathlib import Path
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

from dotenv import load_dotenv

load_dotenv()

DEFAULT_CONFIG_PATH = Path(__file__).parent / "riccati.yaml"


class SimpleConfig:
    """Simple configuration class that works as a dictionary-like object"""

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = config_path or os.environ.get(
            "RICCATI_TODA_CONFIG", str(DEFAULT_CONFIG_PATH)
        )
        self.data = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from YAML file, filling gaps from the defaults"""
        defaults = self._get_default_config()
        if os.path.exists(self.config_path):
            try:
                with open(self.config_path, "r") as f:
                    loaded = yaml.safe_load(f) or {}
                return _merge(defaults, loaded)
            except Exception as e:
                logging.warning(f"Failed to load config from {self.config_path}: {e}")
                return defaults
        else:
            logging.info(f"Config file {self.config_path} not found, using defaults")
            return defaults

    def _get_default_config(self) -> Dict[str, Any]:
        """Get default configuration"""
        return {
            "numerics": {
                "gauss_tol": 1e-10,
                "default_steps": 400,
                "substeps": 4,
                "fd_step": 1e-5,
                "blowup_scale": 0.5,
                "curvature_gate": 1e-8,
                "integrability_gate": 1e-8,
                "stepper": "rk4",
            },
            "cli": {
                "residual_gate": 1e-5,
                "out_dir": "out",
                "scenario_dir": str(Path(__file__).parent / "scenarios"),
            },
            "debug": False,
            "log_level": "INFO",
            "log_file": None,
        }

    def get(self, key: str, default=None):
        """Value at a dotted key such as "numerics.gauss_tol", or `default`"""
        node: Any = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, key: str, value: Any):
        """Set a dotted key, creating intermediate sections"""
        *sections, leaf = key.split(".")
        node = self.data
        for part in sections:
            node = node.setdefault(part, {})
        node[leaf] = value

    @contextmanager
    def override(self, values: Dict[str, Any]) -> Iterator["SimpleConfig"]:
        """Temporarily replace dotted keys; the previous settings come back on exit"""
        saved = copy.deepcopy(self.data)
        try:
            for key, value in values.items():
                self.set(key, value)
            yield self
        finally:
            self.data = saved

    def setup_logging(self, verbose: bool = False):
        """Setup logging configuration"""
        log_level = self.get("log_level", "INFO")
        if verbose or self.get("debug", False):
            log_level = "DEBUG"

        handlers: list = [logging.StreamHandler()]
        log_file = self.get("log_file")
        if log_file:
            handlers.append(logging.FileHandler(log_file))

        logging.basicConfig(
            level=getattr(logging, str(log_level).upper()),
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            handlers=handlers,
            force=True,
        )


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


# Global config instance
config = SimpleConfig()
