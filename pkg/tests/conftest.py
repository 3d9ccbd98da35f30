import os
import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


def pytest_report_header(config):
    from rda_optctl import kernels

    forced = " (forced by RDA_OPTCTL_PURE_PYTHON)" if os.environ.get("RDA_OPTCTL_PURE_PYTHON") == "1" else ""
    return f"rda_optctl kernel backend: {kernels.BACKEND}{forced}; available: {', '.join(kernels.available())}"
