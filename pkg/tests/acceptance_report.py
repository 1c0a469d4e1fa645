"""Collects one summary line per acceptance criterion; printed by the
conftest terminal-summary hook."""

LINES = []


def record_criterion(name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    LINES.append(f"[{status}] {name}{suffix}")
