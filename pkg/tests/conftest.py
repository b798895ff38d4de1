def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance checklist after the run, past output capture."""
    try:
        from test_acceptance import CHECKLIST
    except ImportError:
        return
    if CHECKLIST:
        terminalreporter.section("acceptance checklist")
        for line in CHECKLIST:
            terminalreporter.write_line(line)
