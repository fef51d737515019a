"""The command-line pipeline, step by step, inside a temporary run directory.

Equivalent shell session:

    activetask gen --synthetic -T 50 -n 1000 -m 100 --seed 7 -o run/
    activetask disc -i run/
    activetask select -i run/ --method active-da-ss -k 5 --seed 0
    activetask train -i run/
    activetask eval -i run/
    activetask bound -i run/
"""
import tempfile
from pathlib import Path

from activetask.cli import main

with tempfile.TemporaryDirectory() as tmp:
    run = str(Path(tmp) / "run")
    for argv in (["gen", "--synthetic", "-T", "50", "-n", "1000", "-m", "100", "--seed", "7", "-o", run],
                 ["disc", "-i", run],
                 ["select", "-i", run, "--method", "active-da-ss", "-k", "5", "--seed", "0"],
                 ["train", "-i", run], ["eval", "-i", run], ["bound", "-i", run]):
        code = main(["-v"] + argv)
        print(f"$ activetask {' '.join(argv)}  -> exit {code}")
    print(sorted(p.name for p in Path(run).iterdir() if not p.name.startswith(("task_", "test_"))))
    print((Path(run) / "bound.txt").read_text())
    # invalid requests fail with exit code 1 and one line on stderr
    print("k > T ->", main(["select", "-i", run, "--method", "da", "-k", "99"]))
