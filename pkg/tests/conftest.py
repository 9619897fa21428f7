import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from hypothesis import settings

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


def pytest_terminal_summary(terminalreporter):
    # pytest imports test modules under its own names, so find the loaded one by file
    mods = [m for m in list(sys.modules.values()) if getattr(m, "__file__", "") and m.__file__.endswith("test_acceptance.py")]
    acc = next((m for m in mods if getattr(m, "RESULTS", None)), None)
    if acc is None:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acc.RESULTS):
        name, out = acc.RESULTS[k]
        terminalreporter.write_line(acc.format_line(k, name, out))
