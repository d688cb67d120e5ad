"""Shared fixtures: one marked test image, reused across suites."""

import numpy as np
import pytest

from shotmark.embedder import MarkParams, mark_image
from shotmark.simulator import synth_content


@pytest.fixture(scope="session")
def params():
    return MarkParams()


@pytest.fixture(scope="session")
def content():
    return synth_content(np.random.default_rng(100), 1024, 768)


@pytest.fixture(scope="session")
def marked_and_report(content, params):
    return mark_image(content, params)


@pytest.fixture(scope="session")
def marked(marked_and_report):
    return marked_and_report[0]
