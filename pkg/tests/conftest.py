import numpy as np
import pytest

from focuswatch.geometry import make_synthetic_template
from focuswatch.types import SessionMeta


def pytest_terminal_summary(terminalreporter):
    """Replays the acceptance criterion lines after capture ends."""
    try:
        from tests import test_acceptance  # noqa: F401
    except ImportError:
        import test_acceptance  # rootdir layout without a tests package
    if test_acceptance.REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.REPORT_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_template():
    # 30 landmarks keeps the MLP and PCA tiny for unit tests
    return make_synthetic_template(30)


@pytest.fixture(scope="session")
def full_template():
    return make_synthetic_template(478)


@pytest.fixture
def meta_small(small_template):
    return SessionMeta(
        session_id="s1",
        user_id="u1",
        course_type="lecture",
        session_kind="FS",
        started_at="2026-01-01T00:00:00Z",
        landmark_count=small_template.landmark_count,
    )
