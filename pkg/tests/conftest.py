"""Shared fixtures: shipped networks and a small hand-built diamond code."""

import json

import pytest

from dsnlift.codes import deserialize_code
from dsnlift.network import load_network
from dsnlift.pipeline import read_input_text


@pytest.fixture(scope="session")
def line_net():
    return load_network(read_input_text("line"))


@pytest.fixture(scope="session")
def diamond_net():
    return load_network(read_input_text("diamond"))


@pytest.fixture(scope="session")
def nonlayered_net():
    return load_network(read_input_text("nonlayered"))


@pytest.fixture(scope="session")
def diamond_code():
    return deserialize_code(json.loads(read_input_text("diamond_code")))
