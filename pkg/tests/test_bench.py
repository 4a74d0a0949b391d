import json
import subprocess
import sys
from pathlib import Path

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs_and_backends_agree(tmp_path):
    out = tmp_path / "rows.json"
    res = subprocess.run([sys.executable, str(BENCH), "--repeats", "1", "--batch", "20", "--json", str(out)],
                         capture_output=True, text=True, timeout=300)
    assert res.returncode == 0, res.stderr
    rows = json.loads(out.read_text())
    assert len(rows) == 4 and all(r["agree"] for r in rows)
