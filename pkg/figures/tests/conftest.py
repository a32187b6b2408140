import figures_report


def pytest_terminal_summary(terminalreporter):
    if figures_report.LINES:
        terminalreporter.section("acceptance criteria (secondary)")
        for line in figures_report.LINES:
            terminalreporter.write_line(line)
