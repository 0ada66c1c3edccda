# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import inspect
import os.path

from configparser import Error as ParserError, MissingSectionHeaderError, RawConfigParser

from . import VERSION
from .exceptions import ConfigError

current_config = None

# Hyper-parameters preset for the two reference datasets. Keys are
# "SECTION.key" pairs applied on top of the defaults.
PROFILES = {
    "mit-states": {"MODEL.layers": 3, "TRAIN.negatives": 600},
    "ut-zappos": {"MODEL.layers": 2, "TRAIN.negatives": "all"},
}


# Options found before any section header. A run manifest is a valid
# configuration file, its run description lines are skipped.
FLAT_SECTION = "__flat__"
RUN_KEYS = ("command", "version", "seed")


def get_current_config():
    return current_config or DefaultConfig()


class DefaultConfig:
    BASE = {
        "log_file": None,
        "log_level": "WARNING",
        "log_rotate": False,
    }
    MODEL = {
        "model": "tmn",
        "layers": 3,
        "modules": 24,
        "module_dim": 16,
        "gating_hidden": 64,
        "embedding_dim": 300,
        "finetune_embeddings": True,
        "embeddings": None,
    }
    TRAIN = {
        "lr_feat": 0.001,
        "lr_gate": 0.01,
        "batch": 256,
        "negatives": 600,
        "concept_drop": 0.05,
        "epochs": 30,
        "seed": 0,
    }
    SYNTH = {
        "objects": 20,
        "attributes": 15,
        "latent_dim": 12,
        "feature_dim": 64,
        "samples_per_pair": 20,
        "eval_samples_per_pair": 5,
        "noise": 0.1,
        "unseen_fraction": 0.2,
        "seed": 0,
    }
    EVAL = {
        "topk": 3,
        "topn": 5,
        "tolerance": 0.03,
        "per_destination": True,
        "max_samples": 200,
    }

    def __init__(self):
        global current_config

        # Sections are class-level dicts, give each instance its own copy
        for cls in reversed(inspect.getmro(self.__class__)):
            for attr, value in cls.__dict__.items():
                if attr.startswith("_") or attr != attr.upper():
                    continue
                if isinstance(value, dict):
                    setattr(self, attr, value.copy())

        current_config = self

    @classmethod
    def sections(cls):
        return [
            attr
            for attr, value in inspect.getmembers(cls)
            if attr == attr.upper() and isinstance(value, dict)
        ]

    def apply_profile(self, name):
        try:
            profile = PROFILES[name]
        except KeyError:
            raise ConfigError(f"Unknown profile '{name}'")

        for key, value in profile.items():
            section, option = key.split(".")
            getattr(self, section)[option] = value

    def update(self, section, options):
        """Overrides values of a section, ignoring options set to None.

        Unknown sections or options are rejected.
        """

        section = section.upper()
        if section not in self.sections():
            raise ConfigError(f"Unknown configuration section '{section.lower()}'")

        target = getattr(self, section)
        for key, value in options.items():
            if key not in target:
                raise ConfigError(
                    f"Unknown configuration key '{key}' in section '{section.lower()}'"
                )
            if value is not None:
                target[key] = value


class IniConfig(DefaultConfig):
    common_paths = [
        "/etc/tmnet",
        os.path.expanduser("~/.tmnet"),
        os.path.expanduser("~/.config/tmnet/tmnet.conf"),
        "tmnet.conf",
    ]

    def __init__(self, paths, profile=None):
        super().__init__()
        if profile:
            self.apply_profile(profile)

        if isinstance(paths, (str, bytes, os.PathLike)):
            paths = [paths]

        self.read_files = []
        for path in paths:
            try:
                with open(path, encoding="utf-8") as f:
                    text = f.read()
            except OSError:
                continue
            except UnicodeDecodeError as e:
                raise ConfigError(f"Invalid configuration file '{path}': {e}") from e

            for section, options in self.__parse(text, path).items():
                self.update(section, options)
            self.read_files.append(path)

    @classmethod
    def __parse(cls, text, path):
        """Options of a file by section, either from ``[section]`` headers or
        from ``section.key`` names as written in run manifests"""

        parser = RawConfigParser()
        try:
            try:
                parser.read_string(text, str(path))
            except MissingSectionHeaderError:
                parser = RawConfigParser()
                parser.read_string(f"[{FLAT_SECTION}]\n{text}", str(path))
        except ParserError as e:
            raise ConfigError(f"Invalid configuration file: {e}") from e

        sections = {}
        for section in parser.sections():
            for key, value in parser.items(section):
                if section == FLAT_SECTION:
                    if key in RUN_KEYS:
                        continue
                    section_name, dot, key = key.partition(".")
                    if not dot:
                        raise ConfigError(
                            f"Option '{section_name}' in '{path}' needs a 'section.' prefix"
                        )
                else:
                    section_name = section
                sections.setdefault(section_name, {})[key] = cls.__try_parse(value)
        return sections

    @staticmethod
    def __try_parse(value):
        try:
            return int(value)
        except ValueError:
            try:
                return float(value)
            except ValueError:
                lv = value.lower()
                if lv in ("yes", "true", "on"):
                    return True
                if lv in ("no", "false", "off"):
                    return False
                if lv in ("", "none"):
                    return None
                return value

    @classmethod
    def from_common_locations(cls, extra=None, profile=None):
        paths = list(cls.common_paths)
        if extra:
            if not os.path.isfile(extra):
                raise ConfigError(f"Configuration file '{extra}' not found")
            paths.append(extra)
        return IniConfig(paths, profile)


class RunConfig:
    """Settings one command ran with, written next to its outputs"""

    def __init__(self, command, config, seed=None):
        self.command = command
        self.seed = seed
        self.version = VERSION
        self.sections = {
            section.lower(): dict(getattr(config, section)) for section in config.sections()
        }

    def items(self):
        yield "command", self.command
        yield "version", self.version
        yield "seed", self.seed
        for section, options in self.sections.items():
            for key, value in options.items():
                yield f"{section}.{key}", value

    def write_manifest(self, directory):
        with open(os.path.join(directory, "manifest"), "wt", encoding="utf-8", newline="\n") as f:
            for key, value in self.items():
                f.write(f"{key} = {'' if value is None else value}\n")
