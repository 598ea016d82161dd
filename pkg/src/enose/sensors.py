"""Seedable simulator of a 4-channel metal-oxide gas sensor array.

Response model
--------------
Each sensor's steady-state sensitivity to a gas mixture is an additive
power law over the three gases:

    S = 1 + sum_g a_g * C_g ** b_g        (S = 1 in clean air)

with per-gas coefficients a_g >= 0 and exponents b_g in (0, 1], so the
response is monotone and concave in every concentration.  The sensor
resistance in gas is R_air / S; transitions between phases follow a
first-order relaxation with separate rise (into gas) and fall (back to
air) time constants.  A linear baseline drift and multiplicative
Gaussian noise are applied on top, then the resistance is read out
through a voltage divider and quantized to 12-bit ADC counts.

The default array holds one acetone-dominant channel whose power-law
coefficients are least-squares fitted to canonical saturating target
curves (see ``fit_power_law``), plus three channels with distinct
hand-set cross-sensitivity profiles, so the array as a whole separates
acetone / ethanol / methanol mixtures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

GASES = ("acetone", "ethanol", "methanol")

LABEL_UNKNOWN = 0
LABEL_ACETONE = 1
LABEL_ETHANOL = 2
LABEL_METHANOL = 3

ADC_VREF = 3.3
ADC_LEVELS = 4096
ADC_MAX = 4095

# Session timing (seconds): air baseline, gas exposure, air recovery.
BASELINE_S = 10.0
EXPOSURE_S = 30.0
RECOVERY_S = 30.0
SAMPLE_RATE_HZ = 10.0

DEFAULT_NOISE_SIGMA = 0.02
DEFAULT_DRIFT_RATE = 0.05  # fraction of r_air per hour


@dataclass(frozen=True)
class GasMixture:
    """ppm concentrations of the three gases in a test atmosphere."""

    acetone_ppm: float = 0.0
    ethanol_ppm: float = 0.0
    methanol_ppm: float = 0.0

    def __post_init__(self):
        for name, c in zip(GASES, self.as_tuple()):
            if not math.isfinite(c) or c < 0:
                raise ValueError(f"{name} concentration must be finite and >= 0, got {c}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.acetone_ppm, self.ethanol_ppm, self.methanol_ppm)


CLEAN_AIR = GasMixture(0.0, 0.0, 0.0)


def dominant_gas_label(mix: GasMixture) -> int:
    """Class label of the gas with the largest concentration.

    Ties go to the earlier gas in (acetone, ethanol, methanol) order;
    clean air maps to LABEL_UNKNOWN.
    """
    conc = mix.as_tuple()
    if sum(conc) == 0.0:
        return LABEL_UNKNOWN
    return 1 + max(range(3), key=lambda g: (conc[g], -g))


@dataclass(frozen=True)
class SensorSpec:
    """Static description of one array channel.

    sens_coeff / sens_exp are per-gas (acetone, ethanol, methanol)
    power-law parameters; r_air is the clean-air resistance in kOhm and
    doubles as the divider load resistance.
    """

    id: int
    r_air: float
    sens_coeff: tuple[float, float, float]
    sens_exp: tuple[float, float, float]
    tau_rise: float = 4.0
    tau_fall: float = 10.0
    drift_rate: float = DEFAULT_DRIFT_RATE
    noise_sigma: float = DEFAULT_NOISE_SIGMA

    def __post_init__(self):
        if self.r_air <= 0:
            raise ValueError("r_air must be > 0")
        if self.tau_rise <= 0 or self.tau_fall <= 0:
            raise ValueError("time constants must be > 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if len(self.sens_coeff) != 3 or len(self.sens_exp) != 3:
            raise ValueError("sens_coeff and sens_exp need one entry per gas")
        if any(a < 0 for a in self.sens_coeff):
            raise ValueError("sensitivity coefficients must be >= 0")
        if not any(a > 0 for a in self.sens_coeff):
            raise ValueError("sensor must respond to at least one gas")
        if any(not 0 < b <= 1 for b in self.sens_exp):
            raise ValueError("sensitivity exponents must lie in (0, 1]")


@dataclass(frozen=True)
class ExposureProtocol:
    """Ordered gas phases with durations, sampled at a fixed rate."""

    phases: tuple[tuple[GasMixture, float], ...]
    sample_rate_hz: float = SAMPLE_RATE_HZ

    def __post_init__(self):
        if not self.phases:
            raise ValueError("protocol needs at least one phase")
        if any(d <= 0 for _, d in self.phases):
            raise ValueError("phase durations must be > 0")
        if not 0 < self.sample_rate_hz <= 1000:
            raise ValueError("sample_rate_hz must be in (0, 1000]")

    @property
    def total_duration_s(self) -> float:
        return sum(d for _, d in self.phases)

    @property
    def n_samples(self) -> int:
        return math.ceil(self.total_duration_s * self.sample_rate_hz)


@dataclass(frozen=True)
class SensorFrame:
    """One timestamped 4-channel raw ADC reading."""

    t_ms: int
    raw: tuple[int, int, int, int]

    def __post_init__(self):
        if self.t_ms < 0:
            raise ValueError("t_ms must be >= 0")
        if len(self.raw) != 4:
            raise ValueError("frame carries exactly 4 channels")
        if any(not 0 <= r <= ADC_MAX for r in self.raw):
            raise ValueError(f"raw counts must lie in [0, {ADC_MAX}]")


def standard_protocol(mix: GasMixture, sample_rate_hz: float = SAMPLE_RATE_HZ) -> ExposureProtocol:
    """Air baseline -> 30 s gas exposure -> air recovery."""
    return ExposureProtocol(
        phases=(
            (CLEAN_AIR, BASELINE_S),
            (mix, EXPOSURE_S),
            (CLEAN_AIR, RECOVERY_S),
        ),
        sample_rate_hz=sample_rate_hz,
    )


def steady_sensitivity(spec: SensorSpec, mix: GasMixture) -> float:
    """Steady-state resistance ratio R_air / R_gas for a mixture (>= 1)."""
    s = 1.0
    for a, b, c in zip(spec.sens_coeff, spec.sens_exp, mix.as_tuple()):
        if a > 0 and c > 0:
            s += a * c**b
    return s


def divider_voltage(spec: SensorSpec, resistance: np.ndarray | float) -> np.ndarray | float:
    """Readout voltage of the sensor in a divider with R_load = r_air."""
    return ADC_VREF * spec.r_air / (spec.r_air + resistance)


def quantize(volts: np.ndarray) -> np.ndarray:
    """12-bit ADC: truncating conversion of volts to counts in [0, 4095]."""
    counts = np.floor(np.asarray(volts, dtype=float) * ADC_LEVELS / ADC_VREF)
    return np.clip(counts, 0, ADC_MAX).astype(np.int64)


def _channel_resistance(spec: SensorSpec, proto: ExposureProtocol, t: np.ndarray) -> np.ndarray:
    """Noise-free, drift-free resistance trace for one channel."""
    r = np.empty_like(t)
    r_entry = spec.r_air
    phase_start = 0.0
    for mix, duration in proto.phases:
        target = spec.r_air / steady_sensitivity(spec, mix)
        tau = spec.tau_rise if target < r_entry else spec.tau_fall
        mask = (t >= phase_start) & (t < phase_start + duration)
        r[mask] = target + (r_entry - target) * np.exp(-(t[mask] - phase_start) / tau)
        r_entry = target + (r_entry - target) * math.exp(-duration / tau)
        phase_start += duration
    return r


def simulate_session(
    specs: tuple[SensorSpec, ...],
    proto: ExposureProtocol,
    seed: int,
) -> list[SensorFrame]:
    """Simulate one acquisition session; identical inputs give identical frames."""
    if len(specs) != 4:
        raise ValueError("the array has exactly 4 channels")
    n = proto.n_samples
    dt = 1.0 / proto.sample_rate_hz
    t = np.arange(n) * dt
    rng = np.random.default_rng(seed)

    counts = np.empty((n, 4), dtype=np.int64)
    for ch, spec in enumerate(specs):
        r = _channel_resistance(spec, proto, t)
        r = r + spec.r_air * spec.drift_rate * (t / 3600.0)
        if spec.noise_sigma > 0:
            r = r * (1.0 + spec.noise_sigma * rng.standard_normal(n))
        r = np.maximum(r, 1e-9)
        counts[:, ch] = quantize(divider_voltage(spec, r))

    t_ms = [int(round(k * 1000.0 / proto.sample_rate_hz)) for k in range(n)]
    return [SensorFrame(t_ms=t_ms[k], raw=tuple(int(c) for c in counts[k])) for k in range(n)]


def session_seed(seed: int, row: int, rep: int) -> int:
    """Deterministic per-session child seed, independent of generation order."""
    ss = np.random.SeedSequence((seed, row, rep))
    return int(ss.generate_state(1, np.uint64)[0])


def generate_dataset(table, per_row_samples: int, seed: int,
                     specs: tuple[SensorSpec, ...] | None = None,
                     sample_rate_hz: float = SAMPLE_RATE_HZ) -> list:
    """Simulate `per_row_samples` labeled sessions for every mixture row.

    `table` only needs a `rows` attribute holding GasMixture entries;
    labels follow the dominant-gas rule (acetone=1, ethanol=2, methanol=3).
    """
    from .acquisition import Session  # deferred: acquisition imports our types

    if per_row_samples < 1:
        raise ValueError("per_row_samples must be >= 1")
    if specs is None:
        specs = default_sensor_array()
    sessions = []
    for row_idx, mix in enumerate(table.rows):
        proto = standard_protocol(mix, sample_rate_hz)
        label = dominant_gas_label(mix)
        for rep in range(per_row_samples):
            frames = simulate_session(specs, proto, session_seed(seed, row_idx, rep))
            sessions.append(Session(frames=frames, label=label, mixture=mix,
                                    sample_rate_hz=sample_rate_hz))
    return sessions


# --- calibration ---------------------------------------------------------

# Concentration grids the canonical response targets are pinned at.
ACETONE_GRID_PPM = (1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 20.0, 50.0, 100.0, 150.0, 200.0, 300.0)
INTERFERENT_GRID_PPM = (1.0, 10.0, 20.0, 50.0, 100.0, 200.0)


def saturating_target(c: float, s_max: float, c_half: float) -> float:
    """Canonical monotone-concave excess sensitivity S(c) - 1 = s_max*c/(c+c_half)."""
    return s_max * c / (c + c_half)


# (s_max, c_half, grid) per gas for the acetone-dominant channel.
TIO2_TARGETS = {
    "acetone": (9.0, 60.0, ACETONE_GRID_PPM),
    "ethanol": (2.2, 90.0, INTERFERENT_GRID_PPM),
    "methanol": (1.6, 120.0, INTERFERENT_GRID_PPM),
}


def power_law_sse(a: float, b: float, conc, excess) -> float:
    return sum((a * c**b - e) ** 2 for c, e in zip(conc, excess))


def fit_power_law(conc, excess, b_grid_size: int = 400) -> tuple[float, float]:
    """Least-squares fit of excess = a * c**b with b in (0, 1].

    For fixed b the optimal amplitude is closed-form, so the fit reduces
    to a 1-D scan over b followed by a golden-section refinement.
    """
    conc = np.asarray(conc, dtype=float)
    excess = np.asarray(excess, dtype=float)

    def best_a(b):
        x = conc**b
        denom = float(x @ x)
        return max(0.0, float(x @ excess) / denom) if denom > 0 else 0.0

    def sse(b):
        a = best_a(b)
        return float(np.sum((a * conc**b - excess) ** 2))

    bs = np.linspace(1.0 / b_grid_size, 1.0, b_grid_size)
    errs = [sse(b) for b in bs]
    k = int(np.argmin(errs))
    lo = bs[max(0, k - 1)]
    hi = bs[min(len(bs) - 1, k + 1)]

    # golden-section on the bracketed minimum
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = sse(x1), sse(x2)
    for _ in range(80):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = sse(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = sse(x2)
    b = 0.5 * (lo + hi)
    return best_a(b), b


@lru_cache(maxsize=None)
def _fitted_tio2_coeffs() -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    coeffs, exps = [], []
    for gas in GASES:
        s_max, c_half, grid = TIO2_TARGETS[gas]
        excess = [saturating_target(c, s_max, c_half) for c in grid]
        a, b = fit_power_law(grid, excess)
        coeffs.append(a)
        exps.append(b)
    return tuple(coeffs), tuple(exps)


def default_sensor_array(noise_sigma: float = DEFAULT_NOISE_SIGMA,
                         drift_rate: float = DEFAULT_DRIFT_RATE) -> tuple[SensorSpec, ...]:
    """The default 4-channel array with distinct cross-sensitivity profiles."""
    tio2_a, tio2_b = _fitted_tio2_coeffs()
    common = dict(noise_sigma=noise_sigma, drift_rate=drift_rate)
    return (
        # acetone-dominant channel, calibrated against the canonical targets
        SensorSpec(id=0, r_air=120.0, sens_coeff=tio2_a, sens_exp=tio2_b, **common),
        # broad-response channel
        SensorSpec(id=1, r_air=45.0,
                   sens_coeff=(0.30, 0.34, 0.26), sens_exp=(0.55, 0.52, 0.58), **common),
        # ethanol-leaning channel
        SensorSpec(id=2, r_air=30.0,
                   sens_coeff=(0.18, 0.90, 0.12), sens_exp=(0.60, 0.62, 0.58), **common),
        # methanol-leaning channel
        SensorSpec(id=3, r_air=60.0,
                   sens_coeff=(0.15, 0.20, 0.85), sens_exp=(0.60, 0.55, 0.62), **common),
    )
