import gen


def pytest_terminal_summary(terminalreporter):
    if gen.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in gen.VERDICTS:
            terminalreporter.write_line(line)
