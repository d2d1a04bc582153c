"""Data sources: a synthetic nonstationary benchmark and CSV ingestion.

The synthetic process starts from 40 uniform draws. From then on each value
is Gaussian around the log of the sum of the squared last ``warmup`` values,
with a noise scale that grows linearly in time, so both the level and the
spread drift. Because the generator knows mu_t and sigma_t it also returns
the exact central (1 - alpha) interval per step, which downstream code uses
as the reference when judging predicted intervals.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyFile,
    MissingValue,
    NonPositiveMean,
    ParseError,
    SeriesTooShort,
)
from .framing import TimeSeries

# Rational approximation of the standard normal quantile (Acklam's
# coefficients, absolute relative error below 1.2e-9).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def norm_quantile(p: float) -> float:
    """Standard normal quantile at probability p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the synthetic benchmark series.

    ``noise_scale`` controls how c_t * mu_t is read: "stdev" (the default)
    uses it as the standard deviation, "variance" as the variance.
    ``zero_noise`` is a validation hook that suppresses the Gaussian term so
    the generated values equal mu_t exactly.
    """

    seed: int
    length: int = 1041
    warmup: int = 40
    oracle_alpha: float = 0.1
    noise_scale: str = "stdev"
    zero_noise: bool = False
    c0: float = 0.1
    c_slope: float = 0.001

    def __post_init__(self):
        if self.warmup < 1:
            raise ValueError("warmup must be >= 1")
        if self.length <= self.warmup:
            raise ValueError("length must exceed warmup")
        if not 0.0 < self.oracle_alpha < 1.0:
            raise ValueError("oracle_alpha must be in (0, 1)")
        if self.noise_scale not in ("stdev", "variance"):
            raise ValueError('noise_scale must be "stdev" or "variance"')


@dataclass(frozen=True)
class OracleIntervalSet:
    """Exact per-step central intervals of the generating process.

    Arrays are aligned with the series; entries before the first generated
    step (the warmup region) are NaN.
    """

    alpha: float
    mu: np.ndarray
    sigma: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def _uniform_open(rng: np.random.Generator) -> float:
    # uniform on (0, 1), both endpoints excluded
    return float(rng.integers(1, 2**53)) / 2**53


def gen_synthetic(config: SyntheticConfig) -> tuple[TimeSeries, OracleIntervalSet]:
    """Generate one benchmark series and its oracle intervals.

    y_t ~ Normal(mu_t, sd_t) for t > warmup (1-based), where mu_t is the log
    of the sum of the squared previous ``warmup`` values and sd_t comes from
    c_t * mu_t with c_t = c0 + c_slope * t. Gaussian draws are the normal
    quantile transform of open-interval uniforms from the seeded generator,
    so the trace is reproducible bit for bit from the seed.
    """
    rng = np.random.default_rng(config.seed)
    n, w = config.length, config.warmup
    y = np.empty(n, dtype=float)
    y[:w] = rng.random(w)
    mu = np.full(n, np.nan)
    sigma = np.full(n, np.nan)
    for t in range(w, n):
        m = math.log(math.fsum(v * v for v in y[t - w:t]))
        if m <= 0.0:
            raise NonPositiveMean(f"mu_{t + 1} = {m} <= 0; cannot scale noise")
        c = config.c0 + config.c_slope * (t + 1)
        scale = c * m
        sd = scale if config.noise_scale == "stdev" else math.sqrt(scale)
        mu[t] = m
        sigma[t] = sd
        if config.zero_noise:
            y[t] = m
        else:
            y[t] = m + sd * norm_quantile(_uniform_open(rng))
    z = norm_quantile(1.0 - config.oracle_alpha / 2.0)
    oracle = OracleIntervalSet(
        alpha=config.oracle_alpha,
        mu=mu,
        sigma=sigma,
        lower=mu - z * sigma,
        upper=mu + z * sigma,
    )
    return TimeSeries(y, id=f"synthetic-{config.seed}"), oracle


def split_train_test(series: TimeSeries, n_test: int) -> tuple[TimeSeries, TimeSeries]:
    """Split off the last ``n_test`` observations as the test segment."""
    if n_test < 1:
        raise ValueError("n_test must be >= 1")
    if n_test >= len(series):
        raise SeriesTooShort(
            f"series {series.id!r} has {len(series)} values; n_test={n_test} leaves no training data"
        )
    return (
        TimeSeries(series.values[: len(series) - n_test], id=series.id),
        TimeSeries(series.values[len(series) - n_test:], id=series.id),
    )


def _parse_float(cell: str, row: int, col: int) -> float:
    text = cell.strip()
    if text == "":
        raise MissingValue("blank cell", row=row, col=col)
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"cannot parse {cell!r} as a number", row=row, col=col) from None


def load_csv(path, layout: str) -> list[TimeSeries]:
    """Read series from a CSV file.

    layout "wide": header row of series ids, one series per column, all the
    same length. layout "long": header (id, t, value); rows may arrive in
    any order and are sorted by t within each id.
    """
    if layout not in ("wide", "long"):
        raise ValueError('layout must be "wide" or "long"')
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    rows = [r for r in rows if any(cell.strip() != "" for cell in r)]
    if len(rows) < 2:
        raise EmptyFile(f"{path} has no data rows")
    header, body = rows[0], rows[1:]

    if layout == "wide":
        ids = [c.strip() for c in header]
        if any(i == "" for i in ids):
            raise ParseError("blank series id in header", row=1)
        if len(set(ids)) != len(ids):
            raise ParseError("duplicate series ids in header", row=1)
        columns: list[list[float]] = [[] for _ in ids]
        for r, row in enumerate(body, start=2):
            if len(row) != len(ids):
                raise ParseError(
                    f"expected {len(ids)} cells, found {len(row)}", row=r
                )
            for c, cell in enumerate(row, start=1):
                columns[c - 1].append(_parse_float(cell, r, c))
        return [TimeSeries(np.asarray(col), id=i) for i, col in zip(ids, columns)]

    names = [c.strip().lower() for c in header]
    if names != ["id", "t", "value"]:
        raise ParseError('long layout needs header "id,t,value"', row=1)
    by_id: dict[str, list[tuple[int, float]]] = {}
    for r, row in enumerate(body, start=2):
        if len(row) != 3:
            raise ParseError(f"expected 3 cells, found {len(row)}", row=r)
        sid = row[0].strip()
        if sid == "":
            raise MissingValue("blank series id", row=r, col=1)
        t_text = row[1].strip()
        if t_text == "":
            raise MissingValue("blank time index", row=r, col=2)
        try:
            t = int(t_text)
        except ValueError:
            raise ParseError(f"cannot parse {row[1]!r} as an integer", row=r, col=2) from None
        value = _parse_float(row[2], r, 3)
        by_id.setdefault(sid, []).append((t, value))
    out = []
    for sid, pairs in by_id.items():
        times = [t for t, _ in pairs]
        if len(set(times)) != len(times):
            raise ParseError(f"duplicate time index for series {sid!r}")
        pairs.sort(key=lambda tv: tv[0])
        out.append(TimeSeries(np.asarray([v for _, v in pairs]), id=sid))
    return out


def save_wide_csv(series_list, path) -> None:
    """Write equally long series as a wide CSV, full float precision."""
    series_list = list(series_list)
    if not series_list:
        raise EmptyFile("nothing to write")
    lengths = {len(s) for s in series_list}
    if len(lengths) != 1:
        raise ValueError("wide layout requires equal-length series")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([s.id for s in series_list])
        for i in range(lengths.pop()):
            writer.writerow([repr(float(s.values[i])) for s in series_list])
