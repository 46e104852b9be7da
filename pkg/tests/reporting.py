"""Collects one pass/fail line per acceptance criterion."""
from __future__ import annotations

RESULTS: dict[int, str] = {}


class Criterion:
    """Accumulate sub-checks; ``close`` records the line and asserts."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.failed: list[str] = []
        self.notes: list[str] = []

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        if not ok:
            self.failed.append(f"{name}{': ' + detail if detail else ''}")
        return ok

    def note(self, text: str) -> None:
        self.notes.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, AssertionError):
            self.failed.append(f"error: {type(exc).__name__}: {exc}")
        status = "FAIL" if self.failed else "PASS"
        extra = "; ".join(self.failed + self.notes)
        RESULTS[self.number] = f"{status} [{self.number}] {self.title}" + (f" ({extra})" if extra else "")
        if exc is None and self.failed:
            raise AssertionError("; ".join(self.failed))
        return False
