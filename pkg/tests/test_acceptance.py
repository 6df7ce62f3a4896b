"""Acceptance gate: every criterion runs at its pinned tolerance.

Each test prints the one-line PASS/FAIL verdict for its criterion; the
same checks back the ``eivreg accept`` subcommand.
"""

import pytest

from eivreg.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("name", [c[0] for c in CRITERIA])
def test_criterion(name, tmp_path, capsys):
    result = run_criterion(name, out_dir=str(tmp_path))
    line = "%-4s %s (%.1fs)  %s: %s" % (
        result.name,
        "PASS" if result.passed else "FAIL",
        result.seconds,
        result.title,
        result.detail,
    )
    with capsys.disabled():
        print("\n" + line)
    assert result.passed, line
