"""End-to-end interval forecasting pipelines.

Four methods share one harness contract: the training prefix is visible up
front, while test values sit behind a FeedbackStream that releases the truth
for a block of ``horizon`` steps only after the intervals for that block
have been submitted. All state updates (score windows, working miscoverage
levels, conformal corrections) therefore happen strictly between blocks.

Methods
-------
run_aenbmimocqr  bagged multi-output quantile pair, per-step score windows,
                 online miscoverage correction (the adaptive method)
run_mimocqr      single multi-output quantile pair, split calibration,
                 corrections frozen before the test segment
run_enbpi        bagged point forecaster rolled forward recursively,
                 symmetric absolute-residual intervals, sliding scores
run_enbcqr       three bagged one-step quantile models (lower, median,
                 upper), recursion through the median, sliding scores
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .adaptive import (
    AciState,
    SlidingScoreWindow,
    aci_update,
    init_gamma,
    sample_without_replacement,
)
from .conformal import conformal_quantile, cqr_interval
from .errors import AllRowsInBag, SeriesTooShort
from .framing import (
    HorizonIntervals,
    PredictionInterval,
    SupervisedFrame,
    TimeSeries,
    frame_mimo,
    frame_recursive,
    recursive_forecast,
)
from .quantile_net import TrainConfig, mse_train, train
from .seeding import derive_seed, spawn_rng


class FeedbackStream:
    """Test-segment oracle that reveals ground truth one block at a time.

    ``submit`` registers the intervals for the next steps; ``reveal`` hands
    back realized values, but never past what has been submitted, so a
    pipeline cannot peek at a block's outcomes before committing to its
    intervals. Every call is appended to ``events`` for auditing.
    """

    def __init__(self, values):
        values = getattr(values, "values", values)
        self._values = np.asarray(values, dtype=float).reshape(-1)
        if self._values.size == 0:
            raise ValueError("test segment is empty")
        if not np.all(np.isfinite(self._values)):
            raise ValueError("test values must be finite")
        self._submitted = 0
        self._revealed = 0
        self.events: list[tuple[str, int, int]] = []

    def __len__(self) -> int:
        return self._values.size

    @property
    def n_submitted(self) -> int:
        return self._submitted

    @property
    def n_revealed(self) -> int:
        return self._revealed

    def submit(self, block: HorizonIntervals) -> None:
        """Commit intervals for the next len(block) steps."""
        k = len(block)
        if k == 0:
            raise ValueError("cannot submit an empty block")
        if self._submitted + k > self._values.size:
            raise ValueError("submitted intervals overrun the test segment")
        self.events.append(("submit", self._submitted, k))
        self._submitted += k

    def reveal(self, k: int) -> np.ndarray:
        """Return the next k realized values; only allowed once intervals
        for those steps have been submitted."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if self._revealed + k > self._submitted:
            raise ValueError(
                "ground truth requested before intervals were submitted for it"
            )
        out = self._values[self._revealed: self._revealed + k].copy()
        self.events.append(("reveal", self._revealed, k))
        self._revealed += k
        return out


def _member_predict(member, x: np.ndarray) -> np.ndarray:
    f = getattr(member, "predict", member)
    return np.asarray(f(x), dtype=float).reshape(-1)


def _member_predict_batch(member, X: np.ndarray) -> np.ndarray:
    pb = getattr(member, "predict_batch", None)
    if pb is not None:
        return np.asarray(pb(X), dtype=float)
    return np.stack([_member_predict(member, x) for x in X])


@dataclass
class BootstrapEnsemble:
    """Bagged forecasters plus the bootstrap row multiset each one saw.

    ``members`` map a lag window (n_lags,) to a (horizon,) prediction; any
    callable or object with ``predict`` works, which is how tests inject
    deterministic stand-ins for trained networks.
    """

    members: list
    index_sets: list[np.ndarray]

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError("an ensemble needs at least 2 members")
        if len(self.members) != len(self.index_sets):
            raise ValueError("one index set per member required")
        self.index_sets = [np.asarray(s, dtype=int) for s in self.index_sets]

    @property
    def n_members(self) -> int:
        return len(self.members)

    def predict_mean(self, x: np.ndarray) -> np.ndarray:
        """Mean prediction of all members at one lag window."""
        vals = [_member_predict(m, x) for m in self.members]
        return np.mean(vals, axis=0)

    def predict_mean_batch(self, X: np.ndarray) -> np.ndarray:
        vals = [_member_predict_batch(m, X) for m in self.members]
        return np.mean(vals, axis=0)


def fit_ensemble(
    frame: SupervisedFrame,
    tau: float | None,
    n_models: int,
    seed: int,
    config: TrainConfig,
) -> BootstrapEnsemble:
    """Train ``n_models`` networks on with-replacement row resamples.

    ``tau`` selects the objective: a level in (0, 1) trains pinball nets,
    None trains squared-error nets. The bootstrap index sets depend only on
    ``seed``, so ensembles fitted with the same seed but different tau pair
    up member-for-member over identical resamples.
    """
    if n_models < 2:
        raise ValueError(f"n_models must be >= 2, got {n_models}")
    n = frame.n_rows
    rng = spawn_rng(seed, "bootstrap")
    index_sets = [rng.integers(0, n, size=n) for _ in range(n_models)]
    members = []
    for b, idx in enumerate(index_sets):
        sub = SupervisedFrame(
            frame.covariates[idx], frame.targets[idx], frame.n_lags, frame.horizon
        )
        member_cfg = replace(
            config, seed=derive_seed(seed, "member", b, "mse" if tau is None else str(tau))
        )
        if tau is None:
            members.append(mse_train(sub, member_cfg))
        else:
            members.append(train(sub, tau, member_cfg))
    return BootstrapEnsemble(members, index_sets)


def oob_predict(ensemble: BootstrapEnsemble, frame: SupervisedFrame):
    """Aggregate member predictions per row over the members whose bootstrap
    resample excluded that row.

    Returns (predictions, kept) where predictions is (n_rows, horizon) with
    NaN rows for covariates that appear in every bag, and kept is the
    boolean mask of rows that do have an out-of-bag prediction.
    """
    n = frame.n_rows
    in_bag = np.zeros((ensemble.n_members, n), dtype=bool)
    for b, idx in enumerate(ensemble.index_sets):
        if np.any(idx < 0) or np.any(idx >= n):
            raise ValueError("bootstrap index out of range for this frame")
        in_bag[b, idx] = True
    excluded = ~in_bag
    counts = excluded.sum(axis=0)
    kept = counts > 0
    if not np.any(kept):
        raise AllRowsInBag("every row appears in every bootstrap bag")
    preds = np.stack(
        [_member_predict_batch(m, frame.covariates) for m in ensemble.members]
    )
    total = np.einsum("bn,bnh->nh", excluded.astype(float), preds)
    out = np.full((n, frame.horizon), np.nan)
    out[kept] = total[kept] / counts[kept, None]
    return out, kept


@dataclass
class RunResult:
    """Everything a backtest produced, block by block.

    ``per_origin`` pairs each emitted block of intervals with the realized
    values for its steps. ``alpha_traces`` (adaptive method only) holds the
    working miscoverage level per horizon step, recorded before the first
    block and after each one, shape (horizon, n_blocks + 1).
    ``window_size_traces`` records score-window sizes on the same schedule.
    """

    method: str
    horizon: int
    per_origin: list[tuple[HorizonIntervals, np.ndarray]]
    alpha_traces: np.ndarray | None = None
    window_size_traces: np.ndarray | None = None
    skipped_oob_rows: int = 0

    @property
    def n_blocks(self) -> int:
        return len(self.per_origin)

    def intervals_flat(self) -> list[PredictionInterval]:
        return [iv for block, _ in self.per_origin for iv in block]

    def realized_flat(self) -> np.ndarray:
        if not self.per_origin:
            return np.empty(0)
        return np.concatenate([y for _, y in self.per_origin])

    def horizons_flat(self) -> np.ndarray:
        return np.tile(np.arange(1, self.horizon + 1), self.n_blocks)

    def origins_flat(self) -> np.ndarray:
        return np.repeat([block.origin for block, _ in self.per_origin], self.horizon)


def _check_stream(stream: FeedbackStream, horizon: int) -> int:
    if stream.n_submitted or stream.n_revealed:
        raise ValueError("stream has already been consumed")
    if len(stream) % horizon != 0:
        raise ValueError(
            f"test length {len(stream)} is not a multiple of horizon {horizon}"
        )
    return len(stream) // horizon


def _ordered_bounds(lo, hi):
    # quantile models can cross; treat the pair as an unordered band
    return np.minimum(lo, hi), np.maximum(lo, hi)


def _require_shared_index_sets(*ensembles: BootstrapEnsemble) -> None:
    first = ensembles[0].index_sets
    for other in ensembles[1:]:
        if len(other.index_sets) != len(first) or not all(
            np.array_equal(a, b) for a, b in zip(first, other.index_sets)
        ):
            raise ValueError("paired ensembles must share bootstrap index sets")


def run_aenbmimocqr(
    train_series: TimeSeries,
    stream: FeedbackStream,
    *,
    n_lags: int,
    horizon: int,
    alpha: float,
    n_models: int = 10,
    window_size: int = 100,
    seed: int = 0,
    config: TrainConfig | None = None,
    ensembles: tuple[BootstrapEnsemble, BootstrapEnsemble] | None = None,
    gamma_override: float | None = None,
) -> RunResult:
    """Adaptive bagged multi-output conformalized quantile regression.

    Fits lower/upper multi-output quantile ensembles over shared bootstrap
    resamples, calibrates per-step corrections on out-of-bag conformity
    scores, then walks the test segment block by block: emit corrected
    intervals, observe the block, score the observations against the
    corrected bounds, slide them into fixed-size per-step windows, update
    each step's working miscoverage level, and recompute the corrections.

    ``ensembles`` injects pre-fitted (lower, upper) ensembles in place of
    training; ``gamma_override`` pins the adaptation rate (0 disables
    adaptation), both mainly for equivalence testing.
    """
    config = config or TrainConfig()
    n_blocks = _check_stream(stream, horizon)
    frame = frame_mimo(train_series, n_lags, horizon)
    if ensembles is None:
        lo_ens = fit_ensemble(frame, alpha / 2.0, n_models, seed, config)
        hi_ens = fit_ensemble(frame, 1.0 - alpha / 2.0, n_models, seed, config)
    else:
        lo_ens, hi_ens = ensembles
    _require_shared_index_sets(lo_ens, hi_ens)

    lo_oob, kept = oob_predict(lo_ens, frame)
    hi_oob, _ = oob_predict(hi_ens, frame)
    skipped = int(frame.n_rows - kept.sum())
    lo_cal, hi_cal = _ordered_bounds(lo_oob[kept], hi_oob[kept])
    y_cal = frame.targets[kept]
    scores = np.maximum(lo_cal - y_cal, y_cal - hi_cal)  # (n_kept, horizon)

    n_scores = scores.shape[0]
    gamma = init_gamma(window_size, n_scores) if gamma_override is None else gamma_override
    state = AciState.fresh(alpha, gamma, horizon)
    qhat = np.array(
        [conformal_quantile(scores[:, h], state.alphas[h]) for h in range(horizon)]
    )
    windows = [
        sample_without_replacement(scores[:, h], window_size, derive_seed(seed, "window", h + 1))
        for h in range(horizon)
    ]

    history = list(train_series.values)
    per_origin: list[tuple[HorizonIntervals, np.ndarray]] = []
    alpha_rows = [state.alphas.copy()]
    window_rows = [[len(w) for w in windows]]
    for b in range(n_blocks):
        x = np.asarray(history[-n_lags:], dtype=float)
        lo, hi = _ordered_bounds(lo_ens.predict_mean(x), hi_ens.predict_mean(x))
        intervals = [
            cqr_interval(float(lo[h]), float(hi[h]), float(qhat[h]))
            for h in range(horizon)
        ]
        block = HorizonIntervals(origin=len(train_series) + b * horizon + 1, intervals=intervals)
        stream.submit(block)
        y = stream.reveal(horizon)
        per_origin.append((block, y))

        new_scores = np.maximum((lo - qhat) - y, y - (hi + qhat))
        for h in range(horizon):
            windows[h].push(float(new_scores[h]))
        for h in range(horizon):
            aci_update(state, h + 1, intervals[h].covers(float(y[h])))
        qhat = np.array(
            [conformal_quantile(windows[h].values(), state.alphas[h]) for h in range(horizon)]
        )
        history.extend(y)
        alpha_rows.append(state.alphas.copy())
        window_rows.append([len(w) for w in windows])

    return RunResult(
        method="aenbmimocqr",
        horizon=horizon,
        per_origin=per_origin,
        alpha_traces=np.asarray(alpha_rows).T,
        window_size_traces=np.asarray(window_rows, dtype=int),
        skipped_oob_rows=skipped,
    )


def run_mimocqr(
    train_series: TimeSeries,
    stream: FeedbackStream,
    *,
    n_lags: int,
    horizon: int,
    alpha: float,
    cal_fraction: float = 0.5,
    seed: int = 0,
    config: TrainConfig | None = None,
    models: tuple | None = None,
) -> RunResult:
    """Split conformalized multi-output quantile regression, no adaptation.

    The supervised rows are split in time order: the first part trains the
    lower/upper quantile nets, the last ``cal_fraction`` of rows calibrates
    one correction per forecast step. Corrections stay frozen across the
    whole test segment.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not 0.0 < cal_fraction <= 1.0:
        raise ValueError("cal_fraction must be in (0, 1]")
    config = config or TrainConfig()
    n_blocks = _check_stream(stream, horizon)
    frame = frame_mimo(train_series, n_lags, horizon)
    n_cal = int(frame.n_rows * cal_fraction)
    if n_cal < 1:
        raise SeriesTooShort("calibration split is empty")
    n_fit = frame.n_rows - n_cal
    if models is None:
        if n_fit < 1:
            raise SeriesTooShort("training split is empty")
        sub = SupervisedFrame(
            frame.covariates[:n_fit], frame.targets[:n_fit], n_lags, horizon
        )
        f_lo = train(sub, alpha / 2.0, replace(config, seed=derive_seed(seed, "mimocqr", "lo")))
        f_hi = train(sub, 1.0 - alpha / 2.0, replace(config, seed=derive_seed(seed, "mimocqr", "hi")))
    else:
        f_lo, f_hi = models

    cal_X = frame.covariates[n_fit:]
    cal_Y = frame.targets[n_fit:]
    lo_cal, hi_cal = _ordered_bounds(
        _member_predict_batch(f_lo, cal_X), _member_predict_batch(f_hi, cal_X)
    )
    scores = np.maximum(lo_cal - cal_Y, cal_Y - hi_cal)
    qhat = np.array(
        [conformal_quantile(scores[:, h], alpha) for h in range(horizon)]
    )

    history = list(train_series.values)
    per_origin: list[tuple[HorizonIntervals, np.ndarray]] = []
    for b in range(n_blocks):
        x = np.asarray(history[-n_lags:], dtype=float)
        lo, hi = _ordered_bounds(_member_predict(f_lo, x), _member_predict(f_hi, x))
        intervals = [
            cqr_interval(float(lo[h]), float(hi[h]), float(qhat[h]))
            for h in range(horizon)
        ]
        block = HorizonIntervals(origin=len(train_series) + b * horizon + 1, intervals=intervals)
        stream.submit(block)
        y = stream.reveal(horizon)
        per_origin.append((block, y))
        history.extend(y)

    return RunResult(method="mimocqr", horizon=horizon, per_origin=per_origin)


def run_enbpi(
    train_series: TimeSeries,
    stream: FeedbackStream,
    *,
    n_lags: int,
    horizon: int,
    alpha: float,
    n_models: int = 10,
    seed: int = 0,
    config: TrainConfig | None = None,
    ensemble: BootstrapEnsemble | None = None,
) -> RunResult:
    """Bagged point forecasts with symmetric absolute-residual intervals.

    One-step squared-error members are rolled forward recursively for each
    block; every step gets the same correction, the conformal quantile of a
    sliding window of absolute residuals that advances by ``horizon`` scores
    per block.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    config = config or TrainConfig()
    n_blocks = _check_stream(stream, horizon)
    frame = frame_recursive(train_series, n_lags)
    if ensemble is None:
        ensemble = fit_ensemble(frame, None, n_models, seed, config)

    oob, kept = oob_predict(ensemble, frame)
    skipped = int(frame.n_rows - kept.sum())
    residuals = np.abs(oob[kept, 0] - frame.targets[kept, 0])
    window = SlidingScoreWindow(capacity=residuals.size)
    for r in residuals:
        window.push(float(r))
    qhat = conformal_quantile(window.values(), alpha)

    history = list(train_series.values)
    per_origin: list[tuple[HorizonIntervals, np.ndarray]] = []
    window_rows = [[len(window)]]
    for b in range(n_blocks):
        points = recursive_forecast(
            lambda x: float(ensemble.predict_mean(x)[0]),
            np.asarray(history[-n_lags:], dtype=float),
            horizon,
        )
        intervals = [
            PredictionInterval(float(points[h] - qhat), float(points[h] + qhat))
            for h in range(horizon)
        ]
        block = HorizonIntervals(origin=len(train_series) + b * horizon + 1, intervals=intervals)
        stream.submit(block)
        y = stream.reveal(horizon)
        per_origin.append((block, y))
        for h in range(horizon):
            window.push(abs(float(points[h]) - float(y[h])))
        qhat = conformal_quantile(window.values(), alpha)
        history.extend(y)
        window_rows.append([len(window)])

    return RunResult(
        method="enbpi",
        horizon=horizon,
        per_origin=per_origin,
        window_size_traces=np.asarray(window_rows, dtype=int),
        skipped_oob_rows=skipped,
    )


def run_enbcqr(
    train_series: TimeSeries,
    stream: FeedbackStream,
    *,
    n_lags: int,
    horizon: int,
    alpha: float,
    n_models: int = 10,
    seed: int = 0,
    config: TrainConfig | None = None,
    ensembles: tuple[BootstrapEnsemble, BootstrapEnsemble, BootstrapEnsemble] | None = None,
) -> RunResult:
    """Bagged one-step quantile bands rolled forward through the median.

    Three ensembles (lower, median, upper) share bootstrap resamples. The
    median ensemble feeds the recursion that builds each block's covariates;
    the lower/upper ensembles evaluated on those covariates give the band,
    widened by the conformal quantile of a sliding window of band scores.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    config = config or TrainConfig()
    n_blocks = _check_stream(stream, horizon)
    frame = frame_recursive(train_series, n_lags)
    if ensembles is None:
        lo_ens = fit_ensemble(frame, alpha / 2.0, n_models, seed, config)
        med_ens = fit_ensemble(frame, 0.5, n_models, seed, config)
        hi_ens = fit_ensemble(frame, 1.0 - alpha / 2.0, n_models, seed, config)
    else:
        lo_ens, med_ens, hi_ens = ensembles
    _require_shared_index_sets(lo_ens, med_ens, hi_ens)

    lo_oob, kept = oob_predict(lo_ens, frame)
    hi_oob, _ = oob_predict(hi_ens, frame)
    skipped = int(frame.n_rows - kept.sum())
    lo_cal, hi_cal = _ordered_bounds(lo_oob[kept, 0], hi_oob[kept, 0])
    y_cal = frame.targets[kept, 0]
    band_scores = np.maximum(lo_cal - y_cal, y_cal - hi_cal)
    window = SlidingScoreWindow(capacity=band_scores.size)
    for s in band_scores:
        window.push(float(s))
    qhat = conformal_quantile(window.values(), alpha)

    history = list(train_series.values)
    per_origin: list[tuple[HorizonIntervals, np.ndarray]] = []
    window_rows = [[len(window)]]
    for b in range(n_blocks):
        buffer = list(history[-n_lags:])
        lo_steps = np.empty(horizon)
        hi_steps = np.empty(horizon)
        for h in range(horizon):
            x = np.asarray(buffer[-n_lags:], dtype=float)
            lo_h = float(lo_ens.predict_mean(x)[0])
            hi_h = float(hi_ens.predict_mean(x)[0])
            lo_steps[h], hi_steps[h] = min(lo_h, hi_h), max(lo_h, hi_h)
            buffer.append(float(med_ens.predict_mean(x)[0]))
        intervals = [
            cqr_interval(float(lo_steps[h]), float(hi_steps[h]), float(qhat))
            for h in range(horizon)
        ]
        block = HorizonIntervals(origin=len(train_series) + b * horizon + 1, intervals=intervals)
        stream.submit(block)
        y = stream.reveal(horizon)
        per_origin.append((block, y))
        for h in range(horizon):
            window.push(float(max(lo_steps[h] - y[h], y[h] - hi_steps[h])))
        qhat = conformal_quantile(window.values(), alpha)
        history.extend(y)
        window_rows.append([len(window)])

    return RunResult(
        method="enbcqr",
        horizon=horizon,
        per_origin=per_origin,
        window_size_traces=np.asarray(window_rows, dtype=int),
        skipped_oob_rows=skipped,
    )
