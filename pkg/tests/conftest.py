def pytest_terminal_summary(terminalreporter):
    """Echo the one-line-per-criterion acceptance checklist after the run."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
