"""Baseline drift removal, moving-average smoothing and standardization.

The smoothing window is centred and shrinks at the edges (no values are
invented beyond the series).  Baseline fitting solves a least-squares
polynomial over anchor samples only - by default the leading and
trailing 10% of the session, which for the standard exposure protocol
are clean-air stretches - and subtracts its evaluation everywhere, so
the response transient itself is not fitted away.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acquisition import SESSION_HEADER, Session, meta_path, read_meta
from .sensors import GasMixture

EDGE_FRACTION = 0.10


@dataclass(frozen=True)
class FilterConfig:
    window_m: int = 5
    baseline_degree: int = 2
    edge_policy: str = "shrink"

    def __post_init__(self):
        if self.window_m < 1 or self.window_m % 2 == 0:
            raise ValueError("window_m must be an odd integer >= 1")
        if not 0 <= self.baseline_degree <= 5:
            raise ValueError("baseline_degree must be in 0..5")
        if self.edge_policy != "shrink":
            raise ValueError("only the shrink-window edge policy is supported")


def moving_average(series, window_m: int) -> np.ndarray:
    """Centred moving average with shrinking windows at the edges."""
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("series is empty")
    if window_m < 1 or window_m % 2 == 0:
        raise ValueError("window_m must be an odd integer >= 1")
    if window_m == 1:
        return x.copy()
    n = x.size
    half = window_m // 2
    idx = np.arange(n)
    lo = np.maximum(0, idx - half)
    hi = np.minimum(n, idx + half + 1)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    out = (csum[hi] - csum[lo]) / (hi - lo)
    # window means lie in [min, max] exactly; clip off cumsum rounding dust
    return np.clip(out, x.min(), x.max())


def default_anchors(n: int) -> np.ndarray:
    """Leading and trailing 10% of sample indices (at least one each)."""
    k = max(1, int(n * EDGE_FRACTION))
    return np.concatenate([np.arange(0, min(k, n)), np.arange(max(0, n - k), n)])


def fit_baseline(series, t, degree: int, anchors=None):
    """Least-squares polynomial over the anchor samples.

    Returns (baseline evaluated at every t, coefficients, (t0, tscale)).
    Coefficients are in the scaled coordinate s = (t - t0) / tscale for
    conditioning; callers comparing against an independent solve must
    use the same basis.
    """
    y = np.asarray(series, dtype=float)
    t = np.asarray(t, dtype=float)
    if y.size != t.size:
        raise ValueError("series and timestamps differ in length")
    if y.size < degree + 1:
        raise ValueError(f"need at least {degree + 1} samples for degree {degree}")
    anchors = default_anchors(y.size) if anchors is None else np.asarray(anchors)
    if anchors.dtype == bool:
        anchors = np.flatnonzero(anchors)
    if anchors.size < degree + 1:
        raise ValueError("not enough anchor samples for the requested degree")

    t0 = float(t.min())
    tscale = float(t.max() - t.min()) or 1.0
    s = (t - t0) / tscale
    vand = np.vander(s[anchors], degree + 1, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(vand, y[anchors], rcond=None)
    if rank < degree + 1:
        raise ValueError(f"rank-deficient baseline fit (rank {rank} < {degree + 1})")
    baseline = np.vander(s, degree + 1, increasing=True) @ coeffs
    return baseline, coeffs, (t0, tscale)


def remove_baseline(series, t, degree: int, anchors=None) -> np.ndarray:
    """Subtract the anchor-fitted polynomial baseline from the series."""
    baseline, _, _ = fit_baseline(series, t, degree, anchors)
    return np.asarray(series, dtype=float) - baseline


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-scoring with population (divide-by-N) deviations.

    Features with zero variance are flagged constant and passed through
    unchanged by both transform and inverse_transform.
    """

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray

    def transform(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = x.copy()
        live = ~self.constant
        out[:, live] = (x[:, live] - self.mean[live]) / self.std[live]
        return out

    def inverse_transform(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        out = z.copy()
        live = ~self.constant
        out[:, live] = z[:, live] * self.std[live] + self.mean[live]
        return out


def fit_standardizer(x) -> Standardizer:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.size == 0:
        raise ValueError("cannot fit a standardizer on an empty matrix")
    mean = x.mean(axis=0)
    std = x.std(axis=0)  # population convention
    constant = std == 0.0
    safe_std = np.where(constant, 1.0, std)
    return Standardizer(mean=mean, std=safe_std, constant=constant)


@dataclass(frozen=True)
class ProcessedSession:
    """Detrended, smoothed channel voltages with the session's metadata."""

    t_ms: np.ndarray
    channels: np.ndarray  # n x 4 processed voltages
    label: int = 0
    mixture: GasMixture | None = None
    sample_rate_hz: float = 10.0
    config: FilterConfig = FilterConfig()

    @property
    def n(self) -> int:
        return int(self.channels.shape[0])


def process_session(session: Session, config: FilterConfig = FilterConfig()) -> ProcessedSession:
    """Smooth each channel, then remove its polynomial baseline."""
    volts = session.voltages()
    t_ms = session.t_ms
    t_s = t_ms / 1000.0
    out = np.empty_like(volts, dtype=float)
    for ch in range(4):
        smooth = moving_average(volts[:, ch], config.window_m)
        out[:, ch] = remove_baseline(smooth, t_s, config.baseline_degree)
    return ProcessedSession(t_ms=t_ms, channels=out, label=session.label,
                            mixture=session.mixture,
                            sample_rate_hz=session.sample_rate_hz, config=config)


def write_processed(proc: ProcessedSession, csv_path) -> None:
    """Processed CSV: same schema as the session CSV plus config comments."""
    csv_path = Path(csv_path)
    lines = [
        f"# window_m = {proc.config.window_m}",
        f"# baseline_degree = {proc.config.baseline_degree}",
        f"# edge_policy = {proc.config.edge_policy}",
        SESSION_HEADER,
    ]
    for i in range(proc.n):
        vals = ",".join(repr(float(v)) for v in proc.channels[i])
        lines.append(f"{int(proc.t_ms[i])},{vals}")
    csv_path.write_text("\n".join(lines) + "\n")

    mix = proc.mixture or GasMixture()
    meta_path(csv_path).write_text("\n".join([
        f"label={proc.label}",
        f"acetone_ppm={mix.acetone_ppm!r}",
        f"ethanol_ppm={mix.ethanol_ppm!r}",
        f"methanol_ppm={mix.methanol_ppm!r}",
        f"sample_rate_hz={proc.sample_rate_hz!r}",
    ]) + "\n")


def read_processed(csv_path) -> ProcessedSession:
    csv_path = Path(csv_path)
    config_kv: dict[str, str] = {}
    t_list: list[int] = []
    rows: list[list[float]] = []
    for line in csv_path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line.lstrip("#").partition("=")
            config_kv[key.strip()] = value.strip()
            continue
        if line == SESSION_HEADER:
            continue
        fields = line.split(",")
        if len(fields) != 5:
            raise ValueError(f"bad processed row: {line!r}")
        t_list.append(int(fields[0]))
        rows.append([float(v) for v in fields[1:]])
    if not rows:
        raise ValueError(f"{csv_path} contains no data rows")

    config = FilterConfig(
        window_m=int(config_kv.get("window_m", "5")),
        baseline_degree=int(config_kv.get("baseline_degree", "2")),
    )
    label, mixture, rate = 0, None, 10.0
    mp = meta_path(csv_path)
    if mp.exists():
        meta = read_meta(mp)
        label = int(meta.get("label", "0"))
        rate = float(meta.get("sample_rate_hz", "10.0"))
        mixture = GasMixture(
            float(meta.get("acetone_ppm", "0")),
            float(meta.get("ethanol_ppm", "0")),
            float(meta.get("methanol_ppm", "0")),
        )
    return ProcessedSession(
        t_ms=np.array(t_list, dtype=np.int64),
        channels=np.array(rows, dtype=float),
        label=label, mixture=mixture, sample_rate_hz=rate, config=config)
