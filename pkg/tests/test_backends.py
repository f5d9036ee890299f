"""Backend-selection behaviour and cross-backend reproducibility."""

import os
import subprocess
import sys

import pytest

from cryophase import kernels

_RUN_SNIPPET = """
import sys
from cryophase import BACKEND
from cryophase.cli import main
sys.exit(main(["simulate", sys.argv[1], "--output-dir", sys.argv[2],
               "--quiet"]))
"""


def test_force_python_env(tmp_path):
    env = dict(os.environ, CRYOPHASE_FORCE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from cryophase import BACKEND; print(BACKEND)"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.skipif(kernels.BACKEND != "compiled",
                    reason="compiled kernels unavailable")
def test_full_run_bitwise_identical_across_backends(tmp_path):
    from cryophase.scenarios import scenario_path

    config = str(scenario_path("quench"))
    results = {}
    for label, force in (("compiled", ""), ("python", "1")):
        outdir = tmp_path / label
        env = dict(os.environ)
        if force:
            env["CRYOPHASE_FORCE_PYTHON"] = force
        else:
            env.pop("CRYOPHASE_FORCE_PYTHON", None)
        subprocess.run([sys.executable, "-c", _RUN_SNIPPET, config,
                        str(outdir)], env=env, check=True)
        results[label] = (outdir / "diagnostics.csv").read_bytes()
    assert results["compiled"] == results["python"]
