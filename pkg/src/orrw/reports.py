"""Report records, confidence intervals and their JSON/CSV serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats

VERDICTS = ("pass", "fail", "vacuous", "reported")


def wilson_interval(successes: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def mean_and_se(samples) -> tuple[float, float]:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def upper_bound_verdict(ci_high: float, bound: float) -> tuple[str, bool]:
    """Verdict for a probability that must stay below ``bound``."""
    if bound >= 1:
        return "vacuous", True
    return ("pass" if ci_high <= bound else "fail"), False


def lower_bound_verdict(ci_low: float, bound: float) -> tuple[str, bool]:
    """Verdict for a probability that must stay above ``bound``."""
    if bound <= 0:
        return "vacuous", True
    return ("pass" if ci_low >= bound else "fail"), False


def combine_verdicts(verdicts) -> str:
    verdicts = list(verdicts)
    if "fail" in verdicts:
        return "fail"
    if "pass" in verdicts:
        return "pass"
    if verdicts and all(v == "vacuous" for v in verdicts):
        return "vacuous"
    return "reported"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


@dataclass
class BoundCheckReport:
    """One checked statement: estimate with CI against a bound.

    ``wall_clock`` is measured but excluded from serialised reports so that
    report files are reproducible byte for byte; the run manifest keeps it.
    """

    name: str
    estimate: float
    ci_low: float
    ci_high: float
    bound: float
    vacuous: bool
    verdict: str
    replications: int
    wall_clock: float = 0.0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if not (math.isnan(self.estimate) or self.ci_low - 1e-12 <= self.estimate <= self.ci_high + 1e-12):
            raise ValueError("estimate outside its confidence interval")

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "vacuous", "reported")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("wall_clock")
        return _jsonable(d)

    def csv_rows(self) -> list[dict]:
        points = self.details.get("points")
        base = {"experiment": self.name}
        if not points:
            row = dict(base)
            row.update({k: self.to_dict()[k] for k in
                        ("estimate", "ci_low", "ci_high", "bound", "vacuous", "verdict", "replications")})
            return [row]
        return [dict(base, **{k: _jsonable(v) for k, v in p.items() if not isinstance(v, (list, dict))})
                for p in points]


@dataclass
class ShapeReport:
    name: str
    n_grid: list
    t_n: list
    centers: list
    overhang: list
    slope: float
    slope_ci: tuple
    verdict: str
    replications: int
    wall_clock: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "vacuous", "reported")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("wall_clock")
        return _jsonable(d)

    def csv_rows(self) -> list[dict]:
        rows = []
        for i, n in enumerate(self.n_grid):
            rows.append({"experiment": self.name, "n": n,
                         "mean_overhang": float(np.mean([o[i] for o in self.overhang])),
                         "max_overhang": float(np.max([o[i] for o in self.overhang])),
                         "slope": self.slope, "verdict": self.verdict})
        return rows


@dataclass
class ReturnTimeReport:
    name: str
    samples: dict
    moments: dict
    max_levels: dict
    verdict: str
    replications: int
    wall_clock: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "vacuous", "reported")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("wall_clock")
        return _jsonable(d)

    def csv_rows(self) -> list[dict]:
        rows = []
        for i, mom in sorted(self.moments.items()):
            row = {"experiment": self.name, "i": i}
            row.update({k: _jsonable(v) for k, v in mom.items() if not isinstance(v, (list, dict))})
            rows.append(row)
        return rows


def dumps(report) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def write_json(report, path: Path) -> Path:
    path = Path(path)
    path.write_text(dumps(report))
    return path


def write_csv(reports, path: Path) -> Path:
    rows = [row for r in reports for row in r.csv_rows()]
    keys: list[str] = []
    for row in rows:
        keys.extend(k for k in row if k not in keys)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())
    return Path(path)


def report_fields(cls) -> list[str]:
    return [f.name for f in fields(cls)]
