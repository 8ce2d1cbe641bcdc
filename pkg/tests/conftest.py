import pytest

from expbound import load_program
from expbound.cli import corpus_dir, load_golden


def corpus_program(name):
    return load_program(corpus_dir() / f"{name}.imp")


@pytest.fixture(scope="session")
def golden():
    return load_golden()
