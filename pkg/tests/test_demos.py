import os
import subprocess
import sys

import pytest

DEMOS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "demos")


@pytest.mark.parametrize("script,args,expect", [
    ("somarc_walkthrough.py", ["--trials", "2000"], "0 errors in 2000 trials"),
    ("separation_sweep.py", ["--trials", "10"], "operating margin"),
    ("fading_regions.py", ["--samples", "20000"], "1.5850, 1.5850, 2.0000"),
])
def test_demo_runs(script, args, expect):
    r = subprocess.run([sys.executable, os.path.join(DEMOS, script), *args], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert expect in r.stdout
