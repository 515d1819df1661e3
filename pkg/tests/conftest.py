import sys
from pathlib import Path

# make `import oracles` work from any test module
sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # one verdict line per acceptance gate, shown even when capture is on
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None) if mod else None
    if lines:
        terminalreporter.section("acceptance gates")
        for line in lines:
            terminalreporter.write_line(line)
