"""Shared record of acceptance outcomes, printed at the end of the session."""

LINES: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    LINES.append(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    print(LINES[-1])
