from pathlib import Path

import pytest

from grammatic.ir import load_program, parse_program, prepare

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "benchmarks"
GOLDEN = Path(__file__).resolve().parent / "golden"


def corpus_names(unsafe: bool = False) -> list[str]:
    return sorted(p.stem for p in CORPUS.glob("*.ir") if p.stem.endswith("_unsafe") == unsafe)


@pytest.fixture(scope="session")
def corpus():
    """name -> prepared program, for every benchmark."""
    return {p.stem: prepare(load_program(p)) for p in sorted(CORPUS.glob("*.ir"))}


@pytest.fixture
def build_inspect():
    return prepare(load_program(CORPUS / "buildInspect.ir"))


def program(text: str, name: str = "t"):
    return parse_program(text, name)


STRAIGHT = """
datavar x;
init A;
error ERR;
A: x := 1 -> B;
B: x := x + 1 -> C;
C: assert(x == 2) -> D;
"""

NIL_DEREF = """
datavar d;
objvar p;
datafield val;
init A;
error ERR;
A: d := p.val -> B;
B: assert(d == 0) -> C;
"""
