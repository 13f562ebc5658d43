"""Array-level search: match-line discharge, leakage, latency and word length.

Each row's match line (ML) is precharged and then discharged through the
pull-down legs of all its cells; the row matches when the ML is still above
``sense_frac * v_precharge`` at the sense instant. The ML is a lumped RC:

    V_ML(t) = v_precharge * exp(-G_row * t / C_ML),   C_ML = cols*c_ml + c_sense

so the sense criterion is equivalent to a row-conductance threshold
``G_th = C_ML * ln(1/sense_frac) / t_sense``. Sub-threshold leakage of the
matching cells adds to G_row and slightly moves every stored boundary as the
word gets longer; ``effective_bounds_in_array`` measures that shift and
``analytic_range_shift`` estimates it from the sub-threshold sensitivity.

The ``ts`` variant replaces the pull-down transistors with volatile
threshold-switching pull-ups: the ML starts low and is charged on mismatch,
so the sense comparison is inverted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cell import CellConfig, VoltageInterval, bounds_from_conductance
from .devices import (DeviceParams, TsDeviceParams, inverter_output,
                      pulldown_conductance, transistor_conductance,
                      ts_conductance_off_curve)
from .errors import (DomainError, EmptyIntervalError, NoDischargeError)

MAX_WORD_LENGTH_CAP = 2 ** 31 - 1
LN10 = math.log(10.0)


@dataclass(frozen=True)
class Parasitics:
    """Per-cell wire parasitics (ohms, farads) extracted from layout."""

    r_ml: float = 1.91
    r_dl: float = 2.27
    r_sl: float = 0.85
    c_ml: float = 0.227e-15
    c_dl: float = 0.324e-15
    c_sl: float = 0.454e-15

    def __post_init__(self):
        for name in ("r_ml", "r_dl", "r_sl", "c_ml", "c_dl", "c_sl"):
            if getattr(self, name) < 0:
                raise DomainError(f"parasitic {name} must be non-negative")


@dataclass(frozen=True)
class RowResult:
    matched: bool
    v_ml_at_sense: float
    latency: float | None  # ML threshold-crossing time; None when it never crosses


@dataclass(frozen=True)
class SearchResult:
    rows: tuple[RowResult, ...]

    @property
    def matched(self) -> tuple[bool, ...]:
        return tuple(r.matched for r in self.rows)

    def matched_rows(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.rows) if r.matched)


@dataclass(frozen=True)
class ArraySpec:
    """Geometry, cell contents and sensing configuration of one CAM array."""

    rows: int
    cols: int
    cells: tuple  # rows x cols of CellConfig
    parasitics: Parasitics = Parasitics()
    v_precharge: float = 0.8
    t_sense: float = 100e-12
    sense_frac: float = 0.5
    variant: str = "mosfet"  # "mosfet" (pull-down) or "ts" (pull-up)
    ts_params: TsDeviceParams | None = None
    c_sense: float = 1e-15  # fixed sense-node capacitance (F)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DomainError("array needs at least 1 row and 1 column")
        if len(self.cells) != self.rows or any(len(r) != self.cols for r in self.cells):
            raise DomainError(
                f"cells matrix must be {self.rows}x{self.cols}")
        if not (0.0 < self.sense_frac < 1.0):
            raise DomainError("sense_frac must lie in (0, 1)")
        if self.variant not in ("mosfet", "ts"):
            raise DomainError(f"unknown variant {self.variant!r}")
        if self.variant == "ts" and self.ts_params is None:
            raise DomainError("ts variant requires ts_params")
        if self.t_sense <= 0 or self.v_precharge <= 0:
            raise DomainError("t_sense and v_precharge must be positive")

    @property
    def c_ml_total(self) -> float:
        return self.cols * self.parasitics.c_ml + self.c_sense

    def conductance_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        g1 = np.array([[c.g_m1 for c in row] for row in self.cells])
        g2 = np.array([[c.g_m2 for c in row] for row in self.cells])
        return g1, g2

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "variant": self.variant,
            "v_precharge_V": self.v_precharge,
            "t_sense_ps": self.t_sense * 1e12,
            "sense_frac": self.sense_frac,
            "c_sense_fF": self.c_sense * 1e15,
            "parasitics": {
                "r_ml_ohm": self.parasitics.r_ml,
                "r_dl_ohm": self.parasitics.r_dl,
                "r_sl_ohm": self.parasitics.r_sl,
                "c_ml_fF": self.parasitics.c_ml * 1e15,
                "c_dl_fF": self.parasitics.c_dl * 1e15,
                "c_sl_fF": self.parasitics.c_sl * 1e15,
            },
            "cells": [[{"g_m1_uS": c.g_m1 * 1e6, "g_m2_uS": c.g_m2 * 1e6}
                       for c in row] for row in self.cells],
        }

    @classmethod
    def from_json_dict(cls, doc: dict,
                       ts_params: TsDeviceParams | None = None) -> "ArraySpec":
        par = doc.get("parasitics", {})
        parasitics = Parasitics(
            r_ml=par.get("r_ml_ohm", 1.91),
            r_dl=par.get("r_dl_ohm", 2.27),
            r_sl=par.get("r_sl_ohm", 0.85),
            c_ml=par.get("c_ml_fF", 0.227) * 1e-15,
            c_dl=par.get("c_dl_fF", 0.324) * 1e-15,
            c_sl=par.get("c_sl_fF", 0.454) * 1e-15,
        )
        cells = tuple(tuple(CellConfig(g_m1=c["g_m1_uS"] * 1e-6,
                                       g_m2=c["g_m2_uS"] * 1e-6)
                            for c in row) for row in doc["cells"])
        variant = doc.get("variant", "mosfet")
        if variant == "ts" and ts_params is None:
            ts_params = TsDeviceParams()
        return cls(rows=doc["rows"], cols=doc["cols"], cells=cells,
                   parasitics=parasitics,
                   v_precharge=doc.get("v_precharge_V", 0.8),
                   t_sense=doc.get("t_sense_ps", 100.0) * 1e-12,
                   sense_frac=doc.get("sense_frac", 0.5),
                   variant=variant, ts_params=ts_params,
                   c_sense=doc.get("c_sense_fF", 1.0) * 1e-15)


def make_array(cells, p: DeviceParams | None = None, variant: str = "mosfet",
               ts_params: TsDeviceParams | None = None, **kwargs) -> ArraySpec:
    """Convenience constructor from a nested list of CellConfig."""
    cells = tuple(tuple(row) for row in cells)
    if variant == "ts" and ts_params is None:
        ts_params = TsDeviceParams()
    return ArraySpec(rows=len(cells), cols=len(cells[0]), cells=cells,
                     variant=variant, ts_params=ts_params, **kwargs)


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------

def match_threshold_conductance(a: ArraySpec) -> float:
    """Row conductance at which the ML just reaches the sense level at t_sense."""
    if a.variant == "mosfet":
        return a.c_ml_total * math.log(1.0 / a.sense_frac) / a.t_sense
    return a.c_ml_total * math.log(1.0 / (1.0 - a.sense_frac)) / a.t_sense


def row_conductances(a: ArraySpec, stimuli: np.ndarray,
                     p: DeviceParams) -> np.ndarray:
    """Total ML pull-down (or pull-up) conductance per row.

    ``stimuli`` has shape (n_searches, cols); the result is (n_searches, rows).
    Per cell the two legs are evaluated from the divider midpoints: the M1
    side drives its pull-down gate directly, the M2 side goes through the
    inverter. The TS variant feeds the same two node voltages into the
    threshold-switching pull-ups (fresh OFF state each search).
    """
    stimuli = np.atleast_2d(np.asarray(stimuli, dtype=float))
    if stimuli.shape[1] != a.cols:
        raise DomainError(
            f"stimulus length {stimuli.shape[1]} does not match {a.cols} columns")
    if np.any(stimuli < 0.0) or np.any(stimuli > 1.0):
        raise DomainError("stimulus voltages must lie in [0, 1] V")

    g1, g2 = a.conductance_matrices()           # (rows, cols)
    g_t = transistor_conductance(stimuli, p)    # (n, cols)
    g_t = g_t[:, None, :]                       # (n, 1, cols)
    v_g1 = p.v_slhi * g1 / (g1 + g_t)           # (n, rows, cols)
    v_div2 = p.v_slhi * g2 / (g2 + g_t)
    v_g2 = inverter_output(v_div2, p)

    if a.variant == "mosfet":
        g_cell = pulldown_conductance(v_g1, p) + pulldown_conductance(v_g2, p)
    else:
        tp = a.ts_params
        g_cell = ts_conductance_off_curve(v_g1, tp) + ts_conductance_off_curve(v_g2, tp)
    return g_cell.sum(axis=2)


def _v_ml_at_sense(a: ArraySpec, g_row: np.ndarray) -> np.ndarray:
    x = g_row * a.t_sense / a.c_ml_total
    if a.variant == "mosfet":
        return a.v_precharge * np.exp(-x)
    return a.v_precharge * (1.0 - np.exp(-x))


def _matched(a: ArraySpec, v_ml: np.ndarray) -> np.ndarray:
    level = a.sense_frac * a.v_precharge
    if a.variant == "mosfet":
        return v_ml >= level  # exactly at threshold counts as a match
    return v_ml < level


def _crossing_latency(a: ArraySpec, g_row: float) -> float | None:
    """Time for the ML to cross the sense level, or None if it never does.

    The per-cell ML wire resistance is folded in as a series term (stimulus
    applied at the node farthest from the sense node, the worst case); it
    affects latency only, never the match decision.
    """
    if g_row <= 0.0:
        return None
    if a.variant == "mosfet":
        log_term = math.log(1.0 / a.sense_frac)
    else:
        log_term = math.log(1.0 / (1.0 - a.sense_frac))
    r_wire = a.cols * a.parasitics.r_ml
    return a.c_ml_total * log_term * (1.0 / g_row + r_wire)


def search(a: ArraySpec, stimulus, p: DeviceParams) -> SearchResult:
    """Search one stimulus word against every row of the array.

    Rows are independent: each row's result is a pure function of its own
    cells, the stimulus, and the shared ML capacitance.
    """
    stimulus = np.asarray(stimulus, dtype=float)
    if stimulus.ndim != 1:
        raise DomainError("stimulus must be a flat voltage vector")
    g_row = row_conductances(a, stimulus[None, :], p)[0]
    v_ml = _v_ml_at_sense(a, g_row)
    matched = _matched(a, v_ml)
    rows = []
    for r in range(a.rows):
        lat = None
        if not matched[r]:
            lat = _crossing_latency(a, float(g_row[r]))
        rows.append(RowResult(matched=bool(matched[r]),
                              v_ml_at_sense=float(v_ml[r]), latency=lat))
    return SearchResult(rows=tuple(rows))


def search_many(a: ArraySpec, stimuli, p: DeviceParams) -> np.ndarray:
    """Vectorized match decisions: (n_searches, cols) -> (n_searches, rows) bools."""
    g_row = row_conductances(a, stimuli, p)
    return _matched(a, _v_ml_at_sense(a, g_row))


def discharge_latency(a: ArraySpec, stimulus, row: int, p: DeviceParams) -> float:
    """Analytic ML crossing time for a mismatching row.

    Raises :class:`NoDischargeError` when the row matches (its ML never
    reaches the sense level by definition of the match).
    """
    if not (0 <= row < a.rows):
        raise DomainError(f"row {row} outside array")
    result = search(a, stimulus, p)
    if result.rows[row].matched:
        raise NoDischargeError(f"row {row} matches; its ML does not cross")
    return result.rows[row].latency


# ---------------------------------------------------------------------------
# in-array effective bounds and range shift
# ---------------------------------------------------------------------------

def _row_matches_at(a: ArraySpec, p: DeviceParams, row: int, col: int,
                    bias: np.ndarray, v: float) -> bool:
    stim = bias.copy()
    stim[col] = v
    return bool(search_many(a, stim[None, :], p)[0, row])


def effective_bounds_in_array(a: ArraySpec, row: int, col: int,
                              p: DeviceParams, step: float = 0.002,
                              bias: np.ndarray | None = None) -> VoltageInterval:
    """Matched sub-interval of one cell measured inside the array.

    All other columns are driven at the midpoint of their stored intervals
    (so they match); the chosen column is swept over [0, 1] V at ``step`` and
    the matched band's edges are then refined by bisection to 1 uV. This is
    the in-array, leakage-shifted range of the cell at (row, col).
    """
    if not (0 <= row < a.rows and 0 <= col < a.cols):
        raise DomainError("row/col outside array")
    if step <= 0:
        raise DomainError("step must be positive")
    if bias is None:
        bias = np.array([bounds_from_conductance(a.cells[row][c], p,
                                                 a.variant, a.ts_params).mid
                         for c in range(a.cols)])
    else:
        bias = np.asarray(bias, dtype=float)

    grid = np.arange(0.0, 1.0 + step / 2, step)
    stims = np.tile(bias, (len(grid), 1))
    stims[:, col] = grid
    matched = search_many(a, stims, p)[:, row]
    idx = np.nonzero(matched)[0]
    if len(idx) == 0:
        raise EmptyIntervalError(
            f"cell ({row}, {col}) matches nowhere on the sweep grid")

    def refine(v_match: float, v_miss: float) -> float:
        for _ in range(40):
            mid = 0.5 * (v_match + v_miss)
            if _row_matches_at(a, p, row, col, bias, mid):
                v_match = mid
            else:
                v_miss = mid
            if abs(v_match - v_miss) < 1e-6:
                break
        return v_match

    lo = grid[idx[0]]
    if idx[0] > 0:
        lo = refine(lo, grid[idx[0] - 1])
    hi = grid[idx[-1]]
    if idx[-1] < len(grid) - 1:
        hi = refine(hi, grid[idx[-1] + 1])
    return VoltageInterval(float(lo), float(hi))


def max_word_length(p: DeviceParams, margin_ratio: float) -> int:
    """Largest word length N with ``g_on > ((margin_ratio - 1) * N + 1) * g_off``.

    The match/mismatch margin on the ML pull-down path requires the single
    fully-on mismatch leg to dominate the accumulated leakage of N matching
    cells by the factor ``margin_ratio``; the ON/OFF conductance ratio of the
    pull-down transistor therefore caps the word length.
    """
    if margin_ratio <= 1.0:
        raise DomainError("margin_ratio must exceed 1")
    if p.g_off == 0.0:
        return MAX_WORD_LENGTH_CAP
    limit = (p.g_on / p.g_off - 1.0) / (margin_ratio - 1.0)
    # the bound is strict: an N landing exactly on the limit fails it
    snapped = round(limit)
    if abs(limit - snapped) <= 1e-6 * max(1.0, abs(limit)):
        n = snapped - 1
    else:
        n = math.floor(limit)
    return max(0, min(n, MAX_WORD_LENGTH_CAP))


def analytic_range_shift(n_cols: int, p: DeviceParams) -> float:
    """First-order estimate of the boundary shift caused by word-length leakage.

    The accumulated leakage of the other ``n_cols - 1`` cells lowers the
    conductance criterion seen by the boundary cell by ``(n_cols-1) * g_off``.
    Dividing by the boundary sensitivity S = dG/dV_DL, written from the
    sub-threshold slope as ``G_op * ln(10) / (alpha * swing)`` at the sense
    operating point ``G_op = sqrt(g_on * g_off)`` (the log-midpoint of the
    pull-down transition where match and mismatch are discriminated), gives
    the expected DL-referred shift in volts.
    """
    if n_cols < 1:
        raise DomainError("n_cols must be at least 1")
    if n_cols == 1 or p.g_off == 0.0:
        return 0.0
    g_op = math.sqrt(p.g_on * p.g_off)
    sensitivity = g_op * LN10 / (p.alpha * p.swing * 1e-3)  # S per volt of DL
    return (n_cols - 1) * p.g_off / sensitivity


# ---------------------------------------------------------------------------
# sweep data products
# ---------------------------------------------------------------------------

def sweep_column(a: ArraySpec, col: int, p: DeviceParams, step: float = 0.002,
                 bias: np.ndarray | None = None) -> list[tuple[float, int, float, bool]]:
    """Sweep one column's DL and record (v_dl, row, v_ml, matched) samples.

    Other columns sit at their stored-interval midpoints, the standard
    one-column-swept array characterization.
    """
    if not (0 <= col < a.cols):
        raise DomainError("col outside array")
    if bias is None:
        bias = np.array([bounds_from_conductance(a.cells[0][c], p,
                                                 a.variant, a.ts_params).mid
                         for c in range(a.cols)])
    grid = np.arange(0.0, 1.0 + step / 2, step)
    stims = np.tile(np.asarray(bias, dtype=float), (len(grid), 1))
    stims[:, col] = grid
    g_row = row_conductances(a, stims, p)
    v_ml = _v_ml_at_sense(a, g_row)
    matched = _matched(a, v_ml)
    out = []
    for i, v in enumerate(grid):
        for r in range(a.rows):
            out.append((float(v), r, float(v_ml[i, r]), bool(matched[i, r])))
    return out
