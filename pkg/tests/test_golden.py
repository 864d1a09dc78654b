"""Emitted scripts are byte-identical to checked-in copies.

Regenerate after an intended encoding change with
``GRAMMATIC_REGEN=1 pytest tests/test_golden.py``.
"""

import os
import subprocess
import sys

import pytest

from grammatic.baseline import baseline_script
from grammatic.chc import emit_horn
from grammatic.grammar import complete
from grammatic.ir import enumerate_paths
from grammatic.skeleton import Schedule, Split, build_skeleton
from grammatic.sympath import path_script

from conftest import GOLDEN, ROOT


def _scripts(build_inspect) -> dict[str, str]:
    P = build_inspect
    path = list(enumerate_paths(P, P.l_init, P.l_error, 12))[-1]
    lockstep = build_skeleton(P, Schedule((Split("L10", "L4", 1),)))
    return {
        "buildInspect_path.smt2": path_script(P, path),
        "buildInspect_plain.horn.smt2": emit_horn(complete(build_skeleton(P, Schedule())).system),
        "buildInspect_lockstep.horn.smt2": emit_horn(complete(lockstep).system),
        "buildInspect_baseline.horn.smt2": baseline_script(P),
    }


@pytest.fixture(scope="module")
def scripts(build_inspect_module):
    out = _scripts(build_inspect_module)
    if os.environ.get("GRAMMATIC_REGEN"):
        GOLDEN.mkdir(exist_ok=True)
        for name, text in out.items():
            (GOLDEN / name).write_text(text)
    return out


@pytest.fixture(scope="module")
def build_inspect_module():
    from grammatic.ir import load_program, prepare
    from conftest import CORPUS
    return prepare(load_program(CORPUS / "buildInspect.ir"))


@pytest.mark.parametrize("name", ["buildInspect_path.smt2", "buildInspect_plain.horn.smt2",
                                  "buildInspect_lockstep.horn.smt2", "buildInspect_baseline.horn.smt2"])
def test_matches_golden(scripts, name):
    assert scripts[name] == (GOLDEN / name).read_text()


def test_stable_across_hash_seeds(scripts):
    # set and dict iteration order must not leak into the output
    code = ("import sys; sys.path.insert(0, 'tests'); import test_golden as g; "
            "from grammatic.ir import load_program, prepare; "
            "P = prepare(load_program('benchmarks/buildInspect.ir')); "
            "sys.stdout.write(''.join(g._scripts(P).values()))")
    outs = set()
    for seed in ("1", "2"):
        env = dict(os.environ, PYTHONHASHSEED=seed)
        outs.add(subprocess.run([sys.executable, "-c", code], cwd=ROOT, env=env, capture_output=True, text=True,
                                check=True).stdout)
    assert outs == {"".join(scripts.values())}
