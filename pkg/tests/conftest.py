import random
import sys
from pathlib import Path

import pytest

import corec
from corec.surface import parse_file
from corec.surface.session import Session
from corec.syntax import CodatatypeDecl, FunDecl, SourceFile

sys.path.insert(0, str(Path(__file__).parent))

CORPUS = Path(corec.__file__).parent / "corpus"


def corpus_text(name):
    return (CORPUS / f"{name}.corec").read_text(encoding="utf-8")


def load_definitions(name, **kw):
    """A session holding the corpus file's declarations but none of its commands."""
    f = parse_file(corpus_text(name))
    s = Session(**kw)
    s.run_file(SourceFile(tuple(d for d in f.decls if isinstance(d, (CodatatypeDecl, FunDecl)))))
    return s


@pytest.fixture(scope="session")
def streams():
    return load_definitions("streams")


@pytest.fixture(scope="session")
def trees():
    return load_definitions("trees")


@pytest.fixture(scope="session")
def llists():
    return load_definitions("lazy_lists")


@pytest.fixture(scope="session")
def rejected():
    return load_definitions("rejected")


@pytest.fixture
def rng():
    return random.Random(1234)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
