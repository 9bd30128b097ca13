import pytest

from nccfind.corpus import bitext_from_segments

BALANCE_SHEET = [
    (["balance"], ["équilibre"]),
    (["sheet"], ["feuille"]),
    (["balance", "sheet"], ["bilan"]),
]


@pytest.fixture
def bs_bitext():
    return bitext_from_segments(BALANCE_SHEET)


@pytest.fixture
def bs_files(tmp_path):
    src = tmp_path / "en.txt"
    tgt = tmp_path / "fr.txt"
    src.write_text("".join(" ".join(s) + "\n" for s, _ in BALANCE_SHEET), encoding="utf-8")
    tgt.write_text("".join(" ".join(t) + "\n" for _, t in BALANCE_SHEET), encoding="utf-8")
    return src, tgt


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
