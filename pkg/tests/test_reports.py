import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from orrw.reports import (
    BoundCheckReport,
    ReturnTimeReport,
    ShapeReport,
    combine_verdicts,
    dumps,
    lower_bound_verdict,
    mean_and_se,
    report_fields,
    upper_bound_verdict,
    wilson_interval,
    write_csv,
)


def wilson_by_hand(k, n, conf):
    z = norm.ppf(0.5 + conf / 2)
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z / den * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return centre - half, centre + half


@given(n=st.integers(1, 5000), frac=st.floats(0, 1), conf=st.sampled_from([0.9, 0.95, 0.99]))
def test_wilson_matches_closed_form(n, frac, conf):
    k = int(round(frac * n))
    lo, hi = wilson_interval(k, n, conf)
    elo, ehi = wilson_by_hand(k, n, conf)
    assert lo == pytest.approx(max(elo, 0.0), abs=1e-9) and hi == pytest.approx(min(ehi, 1.0), abs=1e-9)
    assert lo <= k / n <= hi


def test_wilson_edge_cases():
    assert wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = wilson_interval(0, 100, 0.99)
    assert lo == 0.0 and 0 < hi < 0.07


def test_verdicts():
    assert upper_bound_verdict(0.3, 0.4) == ("pass", False)
    assert upper_bound_verdict(0.5, 0.4) == ("fail", False)
    assert upper_bound_verdict(0.9, 1.2) == ("vacuous", True)
    assert lower_bound_verdict(0.6, 0.5) == ("pass", False)
    assert lower_bound_verdict(0.4, 0.5) == ("fail", False)
    assert lower_bound_verdict(0.4, 0.0) == ("vacuous", True)
    assert combine_verdicts(["pass", "vacuous"]) == "pass"
    assert combine_verdicts(["vacuous", "vacuous"]) == "vacuous"
    assert combine_verdicts(["pass", "fail"]) == "fail"
    assert combine_verdicts(["reported"]) == "reported"


def test_mean_and_se():
    m, se = mean_and_se([1, 2, 3, 4])
    assert m == 2.5 and se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert math.isnan(mean_and_se([])[0]) and mean_and_se([3])[1] == math.inf


def test_report_validation_and_json():
    with pytest.raises(ValueError):
        BoundCheckReport("x", 0.5, 0.6, 0.7, 1, False, "pass", 1)
    with pytest.raises(ValueError):
        BoundCheckReport("x", 0.5, 0.4, 0.7, 1, False, "maybe", 1)
    r = BoundCheckReport("x", 0.5, 0.4, 0.7, 0.9, False, "pass", 10, wall_clock=3.2,
                         details={"delta": Fraction(1, 3), "n": np.int64(4), "ok": np.bool_(True),
                                  "inf": math.inf, "arr": np.arange(3), "pt": (1, 2)})
    d = json.loads(dumps(r))
    assert "wall_clock" not in d
    assert d["details"] == {"delta": "1/3", "n": 4, "ok": True, "inf": "inf", "arr": [0, 1, 2], "pt": [1, 2]}
    assert set(d) == set(report_fields(BoundCheckReport)) - {"wall_clock"}
    assert r.passed and not BoundCheckReport("x", 0.5, 0.4, 0.7, 0.9, False, "fail", 1).passed


def test_csv_rows(tmp_path):
    a = BoundCheckReport("a", 0.1, 0.0, 0.2, 0.5, False, "pass", 3,
                         details={"points": [{"d": 1, "p": 0.1, "nested": [1]}, {"d": 2, "p": 0.2}]})
    b = BoundCheckReport("b", 0.1, 0.0, 0.2, 0.5, False, "pass", 3)
    s = ShapeReport("shape", [1, 2], None, [[0, 0]], [[0.0, 1.0]], 0.1, (0.0, 0.2), "pass", 1)
    t = ReturnTimeReport("rt", {0: [1, 2]}, {0: {"mean": 1.5, "ci": (1, 2)}}, {1: [3]}, "reported", 2)
    text = write_csv([a, b, s, t], tmp_path / "r.csv").read_text().splitlines()
    assert text[0].split(",")[:3] == ["experiment", "d", "p"]
    assert len(text) == 1 + 2 + 1 + 2 + 1
