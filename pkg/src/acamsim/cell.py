"""Single-cell semantics: conductance pair <-> analog match interval.

A 6T2M cell stores the interval ``[lo, hi]``: M1's divider sets the lower
bound (its midpoint crosses the pull-down threshold ``v_th_ml``) and M2's
divider plus inverter sets the upper bound (midpoint crossing ``v_th_inv``).
In the triode regime both bounds are affine in the stored conductance:

    lo = g_m1 * (v_slhi / v_th_ml  - 1) / beta + v_th
    hi = g_m2 * (v_slhi / v_th_inv - 1) / beta + v_th

Outside the triode regime (small conductances) the bound follows the
sub-threshold branch of the divider transistor and is found numerically.
``calibrate`` recovers the free parameters from published single-cell
operating points; foundry values are not available, so the default parameter
set is the calibration product.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .devices import (DeviceParams, TsDeviceParams, transistor_conductance,
                      transistor_conductance_inverse)
from .errors import (CalibrationError, DomainError, InconsistentCellError,
                     OutOfWindowError, PackingError)


@dataclass(frozen=True)
class VoltageInterval:
    """Closed analog match range [lo, hi] on the data line, in volts."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise DomainError(f"interval [{self.lo}, {self.hi}] must satisfy 0 <= lo <= hi <= 1")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class CellConfig:
    """The two programmed conductances of one cell (S)."""

    g_m1: float  # lower-bound memristor
    g_m2: float  # upper-bound memristor


@dataclass(frozen=True)
class LevelCode:
    """One discrete level of a code family: index and its match interval."""

    n_levels: int
    index: int
    interval: VoltageInterval

    def __post_init__(self):
        if not (0 <= self.index < self.n_levels):
            raise DomainError(f"level index {self.index} outside [0, {self.n_levels})")


# Default family used for discrete-level demonstrations: eight levels over
# [0.2, 0.6] V with 10 mV guard bands.
DEFAULT_LEVEL_WINDOW = VoltageInterval(0.2, 0.6)
DEFAULT_GUARD_V = 0.010


def default_demo_levels(n_levels: int = 8) -> "list[LevelCode]":
    return quantize_levels(n_levels, DEFAULT_LEVEL_WINDOW, DEFAULT_GUARD_V)


# ---------------------------------------------------------------------------
# conductance -> bounds
# ---------------------------------------------------------------------------

def _check_window(g: float, p: DeviceParams, which: str):
    if not (p.g_min <= g <= p.g_max):
        raise DomainError(
            f"{which}={g:.3e} S outside window [{p.g_min:.3e}, {p.g_max:.3e}] S")


def _crossing_voltages(p: DeviceParams, variant: str,
                       ts: TsDeviceParams | None) -> tuple[float, float]:
    """Divider-midpoint levels that define (lo, hi) for a cell variant.

    For the transistor pull-down cell the lower bound is where the M1
    midpoint falls to ``v_th_ml`` and the upper bound where the M2 midpoint
    falls to ``v_th_inv``. For the TS pull-up variant both pull-up devices
    snap at ``ts.v_threshold``; the M2 side is referred through the inverter.
    """
    if variant == "mosfet":
        return p.v_th_ml, p.v_th_inv
    if variant == "ts":
        if ts is None:
            raise DomainError("ts variant requires TsDeviceParams")
        # inverter output hits ts.v_threshold when its input is this far
        # below v_th_inv
        v_div2 = p.v_th_inv - (ts.v_threshold - p.v_th_inv) / p.inv_gain
        return ts.v_threshold, v_div2
    raise DomainError(f"unknown cell variant {variant!r}")


def _bound_from_g(g: float, v_cross: float, p: DeviceParams) -> float:
    """DL voltage where the divider midpoint crosses ``v_cross``.

    The midpoint equals v_cross when the transistor conductance reaches
    ``g * (v_slhi / v_cross - 1)``; inverting the transistor curve gives the
    bound directly (numeric only inside the blend window).
    """
    if not (0.0 < v_cross < p.v_slhi):
        raise DomainError(f"crossing level {v_cross} outside (0, v_slhi)")
    g_t_needed = g * (p.v_slhi / v_cross - 1.0)
    v = transistor_conductance_inverse(g_t_needed, p)
    return min(max(v, 0.0), 1.0)


def lower_bound_voltage(g_m1: float, p: DeviceParams, variant: str = "mosfet",
                        ts: TsDeviceParams | None = None) -> float:
    _check_window(g_m1, p, "g_m1")
    v_lo_cross, _ = _crossing_voltages(p, variant, ts)
    return _bound_from_g(g_m1, v_lo_cross, p)


def upper_bound_voltage(g_m2: float, p: DeviceParams, variant: str = "mosfet",
                        ts: TsDeviceParams | None = None) -> float:
    _check_window(g_m2, p, "g_m2")
    _, v_hi_cross = _crossing_voltages(p, variant, ts)
    return _bound_from_g(g_m2, v_hi_cross, p)


def bounds_from_conductance(c: CellConfig, p: DeviceParams,
                            variant: str = "mosfet",
                            ts: TsDeviceParams | None = None) -> VoltageInterval:
    """Map a programmed conductance pair to its stored match interval.

    Raises :class:`InconsistentCellError` if the pair maps to an inverted
    interval (upper-bound divider crossing below the lower-bound one).
    """
    lo = lower_bound_voltage(c.g_m1, p, variant, ts)
    hi = upper_bound_voltage(c.g_m2, p, variant, ts)
    if lo > hi:
        raise InconsistentCellError(
            f"conductances ({c.g_m1:.3e}, {c.g_m2:.3e}) S map to inverted "
            f"interval [{lo:.4f}, {hi:.4f}] V")
    return VoltageInterval(lo, hi)


def conductance_from_bounds(iv: VoltageInterval, p: DeviceParams,
                            variant: str = "mosfet",
                            ts: TsDeviceParams | None = None) -> CellConfig:
    """Inverse mapping: conductance targets that store the interval ``iv``.

    Uses the divider equation in closed form: the midpoint sits at the
    crossing level when ``g = G_T(v) * v_cross / (v_slhi - v_cross)``.
    Raises :class:`OutOfWindowError` naming the bound whose target falls
    outside the programmable window.
    """
    v_lo_cross, v_hi_cross = _crossing_voltages(p, variant, ts)
    g1 = transistor_conductance(iv.lo, p) * v_lo_cross / (p.v_slhi - v_lo_cross)
    g2 = transistor_conductance(iv.hi, p) * v_hi_cross / (p.v_slhi - v_hi_cross)
    if not (p.g_min <= g1 <= p.g_max):
        raise OutOfWindowError(
            f"lower bound {iv.lo:.4f} V needs g_m1={g1:.3e} S outside "
            f"[{p.g_min:.3e}, {p.g_max:.3e}] S", bound="lo")
    if not (p.g_min <= g2 <= p.g_max):
        raise OutOfWindowError(
            f"upper bound {iv.hi:.4f} V needs g_m2={g2:.3e} S outside "
            f"[{p.g_min:.3e}, {p.g_max:.3e}] S", bound="hi")
    return CellConfig(g_m1=g1, g_m2=g2)


def wildcard_cell(p: DeviceParams) -> CellConfig:
    """Cell matching the whole achievable window (g_m1 at floor, g_m2 at ceiling)."""
    return CellConfig(g_m1=p.g_min, g_m2=p.g_max)


def achievable_window(p: DeviceParams, variant: str = "mosfet",
                      ts: TsDeviceParams | None = None,
                      margin: float = 0.002) -> VoltageInterval:
    """Voltage window every point of which can serve as either bound.

    Both bound mappings must reach the window: a level interval near the
    ceiling still needs its own lower bound programmed, so the ceiling is
    the smaller of the two g_max images (and the floor the larger of the
    two g_min images), pulled in by ``margin``.
    """
    lo_floor = lower_bound_voltage(p.g_min, p, variant, ts)
    lo_ceil = lower_bound_voltage(p.g_max, p, variant, ts)
    hi_floor = upper_bound_voltage(p.g_min, p, variant, ts)
    hi_ceil = upper_bound_voltage(p.g_max, p, variant, ts)
    floor = max(lo_floor, hi_floor) + margin
    ceil = min(lo_ceil, hi_ceil) - margin
    if floor >= ceil:
        raise DomainError("device parameters leave no achievable interval window")
    return VoltageInterval(floor, ceil)


# ---------------------------------------------------------------------------
# discrete levels
# ---------------------------------------------------------------------------

def quantize_levels(n_levels: int, window: VoltageInterval,
                    guard: float) -> list[LevelCode]:
    """Split ``window`` into ``n_levels`` evenly pitched disjoint intervals.

    Each level keeps ``guard`` volts of separation (guard/2 per side); level
    i is addressed by the voltage ``window.lo + (i + 0.5) * pitch``.
    """
    if n_levels < 2:
        raise DomainError("need at least 2 levels")
    if guard < 0:
        raise DomainError("guard must be non-negative")
    if n_levels * guard >= window.width:
        raise PackingError(
            f"{n_levels} levels with {guard * 1e3:.1f} mV guards do not fit "
            f"in a {window.width * 1e3:.1f} mV window")
    pitch = window.width / n_levels
    levels = []
    for i in range(n_levels):
        lo = window.lo + i * pitch + guard / 2.0
        hi = window.lo + (i + 1) * pitch - guard / 2.0
        levels.append(LevelCode(n_levels, i, VoltageInterval(lo, hi)))
    return levels


def v_of_level(index: int, n_levels: int, window: VoltageInterval) -> float:
    """Input voltage addressing level ``index`` (the level-cell midpoint)."""
    pitch = window.width / n_levels
    return window.lo + (index + 0.5) * pitch


def encode_level(v: float, levels: list[LevelCode]) -> int:
    """Index of the level whose pitch slot contains ``v`` (nearest slot)."""
    n = levels[0].n_levels
    pitch = levels[1].interval.mid - levels[0].interval.mid
    window_lo = levels[0].interval.mid - 0.5 * pitch
    idx = int(np.floor((v - window_lo) / pitch))
    return min(max(idx, 0), n - 1)


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

# Published single-cell operating points used for the default parameter set:
# conductance pairs (uS) and the corresponding simulated match intervals (V)
# of the 16 nm-class reference cell.
REFERENCE_ANCHORS = (
    (CellConfig(40e-6, 80e-6), VoltageInterval(0.37, 0.42)),
    (CellConfig(20e-6, 80e-6), VoltageInterval(0.33, 0.43)),
)

# Residual ceiling above which a fit is rejected.
MAX_RESIDUAL_V = 0.015

# The affine bound model only identifies the two slopes and the shared
# intercept; the split of each slope into (beta, threshold) is fixed by
# pinning the pull-down threshold at this fraction of the supply.
V_TH_ML_FRACTION = 0.6


@dataclass(frozen=True)
class CalibrationResult:
    params: DeviceParams
    residuals: tuple[float, ...]  # per-anchor max endpoint error (V)

    @property
    def max_residual(self) -> float:
        return max(self.residuals)


def calibrate(anchors, v_slhi: float = 0.5, **param_overrides) -> CalibrationResult:
    """Fit {v_th, v_th_ml, v_th_inv, beta} to anchor (cell, interval) pairs.

    Least squares on the affine bound laws: each anchor contributes
    ``lo = K_lo * g_m1 + v_th`` and ``hi = K_hi * g_m2 + v_th`` rows, solved
    jointly for (K_lo, K_hi, v_th). The slopes are then unpacked with
    ``v_th_ml`` pinned at ``V_TH_ML_FRACTION * v_slhi`` (the affine model
    cannot separate beta from the thresholds). Residuals are verified on the
    full simulated bounds; any anchor off by more than ``MAX_RESIDUAL_V``
    raises :class:`CalibrationError`.
    """
    anchors = list(anchors)
    if len(anchors) < 2:
        raise DomainError("calibration needs at least 2 anchors")
    g1s = {round(c.g_m1, 12) for c, _ in anchors}
    if len(g1s) < 2:
        raise DomainError("anchors must cover at least 2 distinct g_m1 values")

    rows = []
    rhs = []
    for cell, iv in anchors:
        rows.append([cell.g_m1, 0.0, 1.0])
        rhs.append(iv.lo)
        rows.append([0.0, cell.g_m2, 1.0])
        rhs.append(iv.hi)
    a = np.asarray(rows)
    b = np.asarray(rhs)
    if np.linalg.matrix_rank(a) < 3:
        raise DomainError("anchors are degenerate; bound slopes not identifiable")
    (k_lo, k_hi, v_th), *_ = np.linalg.lstsq(a, b, rcond=None)
    if k_lo <= 0 or k_hi <= 0:
        raise CalibrationError(
            f"fit produced non-physical slopes (K_lo={k_lo:.1f}, K_hi={k_hi:.1f} V/S)")

    v_th_ml = V_TH_ML_FRACTION * v_slhi
    beta = (v_slhi / v_th_ml - 1.0) / k_lo
    v_th_inv = v_slhi / (1.0 + k_hi * beta)

    params = DeviceParams(v_th=float(v_th), v_th_ml=v_th_ml,
                          v_th_inv=float(v_th_inv), beta=float(beta),
                          v_slhi=v_slhi, **param_overrides)

    residuals = []
    for cell, iv in anchors:
        lo = lower_bound_voltage(cell.g_m1, params)
        hi = upper_bound_voltage(cell.g_m2, params)
        residuals.append(max(abs(lo - iv.lo), abs(hi - iv.hi)))
    if max(residuals) > MAX_RESIDUAL_V:
        raise CalibrationError(
            f"anchor residual {max(residuals) * 1e3:.1f} mV exceeds "
            f"{MAX_RESIDUAL_V * 1e3:.0f} mV", residuals=residuals)
    return CalibrationResult(params=params, residuals=tuple(residuals))


@functools.lru_cache(maxsize=1)
def calibrated_defaults() -> DeviceParams:
    """Default parameter set: calibration against the reference anchors."""
    return calibrate(REFERENCE_ANCHORS).params
