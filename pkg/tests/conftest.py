import numpy as np
import pytest

from portraitguide.maskdata import check_palette, make_label_mask


@pytest.fixture
def small_palette():
    return check_palette(
        {0: "background", 1: "skin", 4: "l_eye", 5: "r_eye", 10: "nose", 11: "mouth", 17: "hair"}
    )


def paint_disk(labels, value, cx, cy, r):
    h, w = labels.shape
    ys, xs = np.mgrid[0:h, 0:w]
    labels[(xs - cx) ** 2 + (ys - cy) ** 2 <= r * r] = value


def paint_rect(labels, value, x0, y0, x1, y1):
    labels[y0:y1, x0:x1] = value


@pytest.fixture
def face_template(small_palette):
    """64x64 toy face: skin disk, two eyes, nose, mouth."""
    labels = np.zeros((64, 64), dtype=np.uint8)
    paint_disk(labels, 1, 32, 34, 24)
    paint_rect(labels, 4, 20, 24, 28, 29)
    paint_rect(labels, 5, 36, 24, 44, 29)
    paint_rect(labels, 10, 30, 33, 34, 40)
    paint_rect(labels, 11, 26, 45, 38, 49)
    return make_label_mask(labels, small_palette)


# ---------------------------------------------------------------------------
# acceptance criterion reporting: one PASS/FAIL line per criterion at the end

_CRITERIA: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker and marker.args:
            _CRITERIA[item.nodeid] = marker.args[0]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    lines = []
    for outcome in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            name = _CRITERIA.get(getattr(report, "nodeid", None))
            if name and getattr(report, "when", "call") == "call":
                status = "PASS" if outcome == "passed" else outcome.upper()
                lines.append((name, status))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{status:5s} {name}")
