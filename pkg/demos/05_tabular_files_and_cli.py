"""
Tabular files, run records and the command line
===============================================

A population-independent game can be stored as JSON and solved from the
command line.  Games whose payoffs depend on the crowd are frozen at a
chosen flow when written.  A run record stores every recorded
exploitability losslessly.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

from meanfield.envs import make_random_linear
from meanfield.records import RunRecord, dump_tabular_env, load_tabular_env

tmp = Path(tempfile.mkdtemp())
env = make_random_linear(seed=3, T=3, n_states=4, n_actions=2, coupling=0.0)
dump_tabular_env(env, tmp / "game.json")
print("reloaded shape:", load_tabular_env(tmp / "game.json").policy_shape)

cmd = [sys.executable, "-m", "meanfield", "solve", "--env-file", str(tmp / "game.json"),
       "--alg", "online_mirror_descent", "--max-iter", "30", "--record-every", "10",
       "--output", str(tmp / "run.json")]
print(subprocess.run(cmd, capture_output=True, text=True, check=True).stdout)

record = RunRecord.load(tmp / "run.json")
print("recorded iterations:", record.iterations)
print("final exploitability:", record.exploitabilities[-1])
