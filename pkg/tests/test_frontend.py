"""Criterion gate for the browser UI: type-check, build, and vitest.

The UI contract tests themselves live in frontend/test (fixture-driven,
replaying captured service payloads). This wrapper runs them through npm
so one pytest invocation covers the whole repository; it skips cleanly
when node or the frontend dependencies are not installed.
"""

import shutil
import subprocess
from pathlib import Path

import pytest

FRONTEND = Path(__file__).resolve().parents[1] / "frontend"


def report(number, title, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"\n[{status}] criterion {number}: {title} ({detail})")
    assert ok, f"criterion {number}: {title} ({detail})"


def npm(args):
    return subprocess.run(
        ["npm", "run", args],
        cwd=FRONTEND,
        capture_output=True,
        text=True,
        timeout=300,
    )


@pytest.mark.skipif(shutil.which("npm") is None, reason="npm not available")
def test_criterion_10_ui_contract():
    if not (FRONTEND / "node_modules").exists():
        pytest.skip("frontend dependencies not installed (run npm install)")

    typecheck = npm("typecheck")
    assert typecheck.returncode == 0, typecheck.stdout + typecheck.stderr
    build = npm("build")
    assert build.returncode == 0, build.stdout + build.stderr
    tests = npm("test")

    out = tests.stdout + tests.stderr
    ok = tests.returncode == 0 and "passed" in out
    counts = [line.strip() for line in out.splitlines() if "Tests" in line]
    report(
        10,
        "UI contract (typecheck + build + fixture-driven vitest)",
        ok,
        counts[0] if counts else "vitest produced no summary",
    )
