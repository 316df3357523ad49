"""Shipped fixture access: the two robot designs, the optimized-variant
library, fitted activity profiles, measurements and synthesis constants."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from . import files

DESIGNS = ("chaser", "chaser_opt", "grabber", "grabber_opt", "grabber_split")
ACTIVITIES = ("chaser", "chaser_opt", "grabber", "grabber_opt")
MEASUREMENTS = ("chaser", "chaser_opt", "grabber", "grabber_opt")


def fixture_path(name: str) -> Path:
    path = resources.files(__package__) / "fixtures" / name
    return Path(str(path))


def design(name: str):
    return files.load_design(fixture_path(f"{name}.design.json"))


def library(name: str):
    return files.load_library(fixture_path(f"{name}.library.json"))


def activity(name: str):
    return files.load_activity(fixture_path(f"{name}.activity.json"))


def measurement(name: str):
    return files.load_measurement(fixture_path(f"{name}.measurement.json"))


def params():
    return files.load_params(fixture_path("params.json"))


def stub_counts(name: str):
    return files.load_stub_counts(fixture_path(f"{name}.stubs.json"))


def impls(name: str):
    return files.load_impls(fixture_path(f"{name}.impls.json"))


def resources_table():
    return files.load_resources(fixture_path("resources.json"))


def source_text(name: str) -> str:
    return fixture_path(f"{name}.hlsw").read_text()
