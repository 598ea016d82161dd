"""Ingestion of raw frame streams and the canonical session CSV format.

Wire format: newline-delimited ASCII, one frame per line,

    t_ms,raw1,raw2,raw3,raw4

with decimal-integer fields and raw counts in the 12-bit range.  A blank
raw field marks a dropped sample (imputed from its neighbours); anything
else that does not fit the schema is malformed.  Session files use the
same lines under a fixed header, with metadata in a `<name>.meta`
sidecar of flat `key=value` lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sensors import ADC_LEVELS, ADC_MAX, ADC_VREF, GasMixture, SensorFrame

SESSION_HEADER = "t_ms,raw1,raw2,raw3,raw4"
MALFORMED_FRACTION_LIMIT = 0.10


class StreamError(ValueError):
    """Raised when a frame stream cannot be ingested as a session."""

    def __init__(self, message: str, n_malformed: int = 0, n_lines: int = 0):
        super().__init__(message)
        self.n_malformed = n_malformed
        self.n_lines = n_lines


def adc_to_voltage(raw: int) -> float:
    """Volts for one 12-bit ADC count: raw * 3.3 / 4096."""
    if not 0 <= raw <= ADC_MAX:
        raise ValueError(f"raw count {raw} outside [0, {ADC_MAX}]")
    return raw * ADC_VREF / ADC_LEVELS


@dataclass(frozen=True)
class Session:
    """An ingested recording: ordered frames plus labeling metadata."""

    frames: tuple[SensorFrame, ...]
    label: int = 0
    mixture: GasMixture | None = None
    sample_rate_hz: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise ValueError("session has no frames")
        if self.label not in (0, 1, 2, 3):
            raise ValueError(f"label must be 0..3, got {self.label}")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be > 0")
        t = [f.t_ms for f in self.frames]
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("frame timestamps must be strictly increasing")

    @property
    def t_ms(self) -> np.ndarray:
        return np.array([f.t_ms for f in self.frames], dtype=np.int64)

    @property
    def counts(self) -> np.ndarray:
        """n x 4 matrix of raw ADC counts."""
        return np.array([f.raw for f in self.frames], dtype=np.int64)

    def voltages(self) -> np.ndarray:
        """n x 4 matrix of channel voltages via the ADC conversion rule."""
        return self.counts * ADC_VREF / ADC_LEVELS


def impute_missing(values) -> np.ndarray:
    """Fill NaN gaps with the mean of the nearest present neighbours.

    Interior gap runs take the mean of the closest present value on each
    side; runs touching a boundary copy the single available neighbour.
    Present values are never altered.
    """
    out = np.asarray(values, dtype=float).copy()
    n = out.size
    present = np.flatnonzero(~np.isnan(out))
    if present.size == 0:
        raise ValueError("cannot impute an all-missing series")
    if present.size == n:
        return out
    i = 0
    while i < n:
        if not math.isnan(out[i]):
            i += 1
            continue
        j = i
        while j < n and math.isnan(out[j]):
            j += 1
        left = out[i - 1] if i > 0 else None
        right = out[j] if j < n else None
        if left is None:
            fill = right
        elif right is None:
            fill = left
        else:
            fill = 0.5 * (left + right)
        out[i:j] = fill
        i = j
    return out


def _parse_line(line: str) -> tuple[int, list[float]] | None:
    """One data line -> (t_ms, 4 raw values, NaN for blank) or None if malformed."""
    fields = line.split(",")
    if len(fields) != 5:
        return None
    try:
        t_ms = int(fields[0])
    except ValueError:
        return None
    if t_ms < 0:
        return None
    raws: list[float] = []
    for f in fields[1:]:
        f = f.strip()
        if f == "":
            raws.append(math.nan)
            continue
        try:
            r = int(f)
        except ValueError:
            return None
        if not 0 <= r <= ADC_MAX:
            return None
        raws.append(float(r))
    return t_ms, raws


def parse_stream(lines, label: int = 0, mixture: GasMixture | None = None,
                 sample_rate_hz: float = 10.0) -> Session:
    """Parse an iterable of frame lines into a Session.

    Blank lines and the canonical header are skipped.  Malformed lines
    are counted; if they exceed 10% of the data lines, or timestamps are
    not strictly increasing, the whole stream is rejected.
    """
    rows: list[tuple[int, list[float]]] = []
    n_malformed = 0
    n_lines = 0
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#") or line == SESSION_HEADER:
            continue
        n_lines += 1
        parsed = _parse_line(line)
        if parsed is None:
            n_malformed += 1
        else:
            rows.append(parsed)

    if n_lines == 0:
        raise StreamError("stream contains no frames", n_malformed, n_lines)
    if n_malformed / n_lines > MALFORMED_FRACTION_LIMIT:
        raise StreamError(
            f"stream rejected: {n_malformed} of {n_lines} lines malformed "
            f"(limit {MALFORMED_FRACTION_LIMIT:.0%})",
            n_malformed, n_lines)
    if not rows:
        raise StreamError("stream contains no frames", n_malformed, n_lines)

    t = [r[0] for r in rows]
    if any(b <= a for a, b in zip(t, t[1:])):
        raise StreamError("stream rejected: timestamps not strictly increasing",
                          n_malformed, n_lines)

    raw = np.array([r[1] for r in rows], dtype=float)
    for ch in range(4):
        col = raw[:, ch]
        if np.isnan(col).any():
            if np.isnan(col).all():
                raise StreamError(f"channel {ch + 1} has no present values",
                                  n_malformed, n_lines)
            raw[:, ch] = np.clip(np.round(impute_missing(col)), 0, ADC_MAX)

    frames = tuple(
        SensorFrame(t_ms=t[i], raw=tuple(int(v) for v in raw[i]))
        for i in range(len(rows))
    )
    return Session(frames=frames, label=label, mixture=mixture,
                   sample_rate_hz=sample_rate_hz)


def frame_lines(frames) -> list[str]:
    return [f"{f.t_ms},{f.raw[0]},{f.raw[1]},{f.raw[2]},{f.raw[3]}" for f in frames]


def meta_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".meta")


def write_session(session: Session, csv_path) -> None:
    """Write the session CSV plus its `<name>.meta` sidecar."""
    csv_path = Path(csv_path)
    body = "\n".join([SESSION_HEADER, *frame_lines(session.frames)]) + "\n"
    csv_path.write_text(body)

    mix = session.mixture or GasMixture()
    meta = "\n".join([
        f"label={session.label}",
        f"acetone_ppm={mix.acetone_ppm!r}",
        f"ethanol_ppm={mix.ethanol_ppm!r}",
        f"methanol_ppm={mix.methanol_ppm!r}",
        f"sample_rate_hz={session.sample_rate_hz!r}",
    ]) + "\n"
    meta_path(csv_path).write_text(meta)


def read_meta(path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def read_session(csv_path) -> Session:
    """Read a session CSV; the .meta sidecar is applied when present."""
    csv_path = Path(csv_path)
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
    with csv_path.open() as fh:
        return parse_stream(fh, label=label, mixture=mixture, sample_rate_hz=rate)
