"""CLI invocations whose outputs are frozen under tests/golden/.

Run this file directly to regenerate the golden files after an intended
change in output::

    python3 tests/golden_cases.py
"""
import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

GOLDEN_DIR = Path(__file__).parent / "golden"

ED = '{"kind": "exp_decay", "gamma": 1.0, "detuning": %s}'
PUBLISHED_F1 = '{"kind": "exp_decay_sine", "gamma": 2.04, "omega": -1.49}'
PUBLISHED_F2 = '{"kind": "exp_decay_sine", "gamma": 2.60, "omega": 0.380}'

# name -> (argv, which output is frozen: "stdout" or "csv")
CASES = {
    "hom_probs.json": (
        ["probs", "--shape1", '{"kind": "gaussian", "gamma": 1.0}', "--shape2", '{"kind": "gaussian", "gamma": 1.0}',
         "--t-sq", "0.5"],
        "stdout",
    ),
    "bell_entropy.csv": (
        ["entropy-surface", "--outcome", "11", "--j-values", "0,0.25,0.5,0.75,0.99", "--t-sq-values", "0,0.5,1"],
        "csv",
    ),
    "ed_to_edsine_herald.json": (
        ["herald", "--shape1", ED % "8.0", "--shape2", ED % "-8.0", "--t-sq", "0.5", "--t-dec", "0",
         "--target", '{"kind": "exp_decay_sine", "gamma": 1.0, "omega": 4.0}'],
        "stdout",
    ),
    "published_gaussian_herald.json": (
        ["herald", "--shape1", PUBLISHED_F1, "--shape2", PUBLISHED_F2, "--t", "0.768", "--t-dec", "1.01",
         "--target", '{"kind": "gaussian", "gamma": 1.0, "tau0": 1.95}'],
        "stdout",
    ),
}


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "biphoton", *args], capture_output=True, text=True, cwd=cwd
    )


def produce(name, workdir: Path) -> str:
    """Run one case and return the frozen text."""
    argv, kind = CASES[name]
    if kind == "csv":
        out = workdir / name
        cp = run_cli(*argv, "--out", name, cwd=workdir)
        if cp.returncode != 0:
            raise RuntimeError(cp.stderr)
        return out.read_text()
    cp = run_cli(*argv, cwd=workdir)
    if cp.returncode != 0:
        raise RuntimeError(cp.stderr)
    return cp.stdout


def _numbers_close(a, b, rtol, atol):
    if isinstance(a, dict):
        return isinstance(b, dict) and a.keys() == b.keys() and all(
            _numbers_close(a[k], b[k], rtol, atol) for k in a
        )
    if isinstance(a, list):
        return isinstance(b, list) and len(a) == len(b) and all(
            _numbers_close(x, y, rtol, atol) for x, y in zip(a, b)
        )
    if isinstance(a, float) or isinstance(b, float):
        return isinstance(b, (int, float)) and math.isclose(a, b, rel_tol=rtol, abs_tol=atol)
    return a == b


def matches(name, text: str, rtol=1e-9, atol=1e-12) -> bool:
    """Numeric comparison against the stored file, tolerant of last-digit BLAS noise."""
    golden = (GOLDEN_DIR / name).read_text()
    if name.endswith(".json"):
        return _numbers_close(json.loads(golden), json.loads(text), rtol, atol)
    rows_a = list(csv.reader(io.StringIO(golden)))
    rows_b = list(csv.reader(io.StringIO(text)))
    if len(rows_a) != len(rows_b) or rows_a[0] != rows_b[0]:
        return False

    def cell(x):
        try:
            return float(x)
        except ValueError:
            return x

    return all(
        _numbers_close([cell(x) for x in ra], [cell(x) for x in rb], rtol, atol)
        for ra, rb in zip(rows_a[1:], rows_b[1:])
    )


if __name__ == "__main__":
    import tempfile

    GOLDEN_DIR.mkdir(exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        for case in CASES:
            (GOLDEN_DIR / case).write_text(produce(case, Path(tmp)))
            print(f"wrote {GOLDEN_DIR / case}")
