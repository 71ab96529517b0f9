"""Release gate: every acceptance criterion at its stated tolerance, one line each."""
import pytest

from otecon.acceptance import CRITERIA, AcceptanceConfig, run_criterion


@pytest.mark.parametrize("number", [k for k, _, _ in CRITERIA], ids=[name for _, name, _ in CRITERIA])
def test_criterion(number, capsys):
    k, name, ok, detail = run_criterion(number, AcceptanceConfig())
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {k:2d} {name}: {detail}")
    assert ok, detail


def test_tampered_tolerance_flags_ipfp():
    cfg = AcceptanceConfig(marginal_tol=1.0)
    assert not run_criterion(3, cfg)[2]
