"""Compile integer range rules into ternary and multi-bit CAM tables.

A TCAM row stores one symbol {0, 1, X} per bit; an integer range is covered
by the minimal set of disjoint prefixes (wildcards in the least-significant
bits). A multi-bit analog CAM generalizes the alphabet to base-2^k digits
where a cell can hold an exact value, a sub-range {n-m}, or a full wildcard;
ranges are decomposed by peeling boundary digits from the least-significant
side of both ends and emitting one wildcard-bodied row for the middle, which
compresses rows and columns at once. ``lower_to_conductances`` maps a digit
table onto programmable conductance pairs through a discrete level family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .cell import (CellConfig, DeviceParams, LevelCode, VoltageInterval,
                   achievable_window, conductance_from_bounds, quantize_levels,
                   v_of_level)
from .devices import TsDeviceParams
from .errors import DomainError, OutOfWindowError


@dataclass(frozen=True)
class RangeRule:
    """Inclusive integer range [lo, hi] over a fixed-width unsigned field."""

    lo: int
    hi: int
    width_bits: int
    label: str = ""

    def __post_init__(self):
        if self.width_bits < 1:
            raise DomainError("width_bits must be at least 1")
        if not (0 <= self.lo <= self.hi < (1 << self.width_bits)):
            raise DomainError(
                f"range [{self.lo}, {self.hi}] not representable in "
                f"{self.width_bits} bits")


@dataclass(frozen=True)
class TernaryWord:
    """Fixed-width word over {0, 1, X}; X matches either bit value."""

    symbols: str

    def __post_init__(self):
        if any(ch not in "01X" for ch in self.symbols):
            raise DomainError(f"invalid ternary symbols in {self.symbols!r}")

    def __len__(self):
        return len(self.symbols)

    def matches(self, value: int) -> bool:
        width = len(self.symbols)
        for i, ch in enumerate(self.symbols):
            if ch == "X":
                continue
            bit = (value >> (width - 1 - i)) & 1
            if bit != int(ch):
                return False
        return True


@dataclass(frozen=True)
class DigitSpec:
    """One base-2^k cell: exact value, sub-range {lo-hi}, or wildcard."""

    lo: int
    hi: int
    base: int

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi < self.base):
            raise DomainError(
                f"digit range [{self.lo}, {self.hi}] invalid for base {self.base}")

    @classmethod
    def exact(cls, value: int, base: int) -> "DigitSpec":
        return cls(value, value, base)

    @classmethod
    def wildcard(cls, base: int) -> "DigitSpec":
        return cls(0, base - 1, base)

    @classmethod
    def subrange(cls, lo: int, hi: int, base: int) -> "DigitSpec":
        return cls(lo, hi, base)

    @property
    def is_wildcard(self) -> bool:
        return self.lo == 0 and self.hi == self.base - 1

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def matches(self, digit: int) -> bool:
        return self.lo <= digit <= self.hi

    def symbol(self) -> str:
        if self.is_wildcard:
            return "X"
        if self.is_exact:
            return str(self.lo)
        return f"{{{self.lo}-{self.hi}}}"


@dataclass(frozen=True)
class DigitWord:
    """Fixed-width word of DigitSpec cells, most-significant digit first."""

    digits: tuple[DigitSpec, ...]

    def __len__(self):
        return len(self.digits)

    def matches(self, value: int, bits_per_cell: int) -> bool:
        n = len(self.digits)
        for i, spec in enumerate(self.digits):
            shift = bits_per_cell * (n - 1 - i)
            digit = (value >> shift) & ((1 << bits_per_cell) - 1)
            if not spec.matches(digit):
                return False
        return True


@dataclass(frozen=True)
class IntervalWord:
    """Row of directly stored analog intervals (continuous mode, one per column)."""

    intervals: tuple[VoltageInterval, ...]

    def __len__(self):
        return len(self.intervals)


@dataclass(frozen=True)
class CamTable:
    """Compiled CAM content: rows of words plus their labels.

    ``bits_per_cell`` is None for ternary and continuous-interval tables.
    Labels live beside the rows, standing in for the companion RAM that the
    matching row would address.
    """

    rows: tuple  # of (TernaryWord | DigitWord | IntervalWord, label)
    width_bits: int | None = None
    bits_per_cell: int | None = None

    def __post_init__(self):
        widths = {len(word) for word, _ in self.rows}
        if len(widths) > 1:
            raise DomainError(f"rows have mixed widths {sorted(widths)}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0][0]) if self.rows else 0

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    def labels(self) -> tuple:
        return tuple(label for _, label in self.rows)

    def matching_labels(self, value: int) -> list:
        """Labels of all rows whose word covers the integer ``value``."""
        out = []
        for word, label in self.rows:
            if isinstance(word, TernaryWord):
                ok = word.matches(value)
            elif isinstance(word, DigitWord):
                ok = word.matches(value, self.bits_per_cell)
            else:
                raise DomainError("continuous tables do not match integers")
            if ok:
                out.append(label)
        return out


# ---------------------------------------------------------------------------
# range -> ternary (minimal prefix cover)
# ---------------------------------------------------------------------------

def range_to_ternary(r: RangeRule) -> list[TernaryWord]:
    """Minimal set of disjoint ternary words whose union is exactly [lo, hi].

    Recursive prefix cover: a subtree fully inside the range becomes one row
    with its free bits wildcarded; partially covered subtrees are split.
    Rows come out in ascending order of their covered sub-range.
    """
    words: list[TernaryWord] = []
    w = r.width_bits

    def cover(prefix_bits: str, node_lo: int, node_hi: int):
        if node_hi < r.lo or node_lo > r.hi:
            return
        if r.lo <= node_lo and node_hi <= r.hi:
            words.append(TernaryWord(prefix_bits + "X" * (w - len(prefix_bits))))
            return
        mid = (node_lo + node_hi) // 2
        cover(prefix_bits + "0", node_lo, mid)
        cover(prefix_bits + "1", mid + 1, node_hi)

    cover("", 0, (1 << w) - 1)
    return words


# ---------------------------------------------------------------------------
# range -> base-2^k digits (symmetric peel)
# ---------------------------------------------------------------------------

def range_to_digits(r: RangeRule, bits_per_cell: int) -> list[DigitWord]:
    """Digit-interval decomposition of [lo, hi] in base ``2**bits_per_cell``.

    Works least-significant digit first, symmetrically: when the low end is
    not digit-aligned a row with an exact prefix and a {d..base-1} boundary
    cell is peeled off (and likewise {0..d} at the high end), then the next
    digit position is processed; the final row covers the aligned middle
    with wildcards in all lower positions. Disjoint rows, exact coverage,
    ``ceil(width_bits / bits_per_cell)`` digits wide (zero-padded on top).
    """
    if not (1 <= bits_per_cell <= r.width_bits):
        raise DomainError("bits_per_cell must lie in [1, width_bits]")
    base = 1 << bits_per_cell
    n_digits = -(-r.width_bits // bits_per_cell)

    def to_digits(value: int, length: int) -> list[int]:
        out = []
        for _ in range(length):
            out.append(value % base)
            value //= base
        return out[::-1]  # most-significant first

    def make_row(prefix: list[int], d_lo: int, d_hi: int, n_x: int) -> DigitWord:
        digits = ([DigitSpec.exact(d, base) for d in prefix]
                  + [DigitSpec.subrange(d_lo, d_hi, base)]
                  + [DigitSpec.wildcard(base)] * n_x)
        return DigitWord(tuple(digits))

    rows_low: list[DigitWord] = []
    rows_high: list[DigitWord] = []
    lo, hi = r.lo, r.hi
    level = 0
    while level < n_digits:
        # prefixes above the current digit position
        lo_prefix, lo_digit = lo // base, lo % base
        hi_prefix, hi_digit = hi // base, hi % base
        remaining = n_digits - level - 1
        if lo_prefix == hi_prefix:
            rows_low.append(make_row(to_digits(lo_prefix, remaining),
                                     lo_digit, hi_digit, level))
            break
        if lo_digit != 0:
            rows_low.append(make_row(to_digits(lo_prefix, remaining),
                                     lo_digit, base - 1, level))
            lo_prefix += 1
        if hi_digit != base - 1:
            rows_high.append(make_row(to_digits(hi_prefix, remaining),
                                      0, hi_digit, level))
            hi_prefix -= 1
        if lo_prefix > hi_prefix:
            break
        lo, hi = lo_prefix, hi_prefix
        level += 1
    return rows_low + rows_high[::-1]


def compile_rule(r: RangeRule, bits_per_cell: int | None = None) -> CamTable:
    """Compile one rule to a CamTable (ternary when ``bits_per_cell`` is None)."""
    if bits_per_cell is None or bits_per_cell == 1:
        if bits_per_cell == 1:
            rows = tuple((word, r.label) for word in range_to_digits(r, 1))
            return CamTable(rows=rows, width_bits=r.width_bits, bits_per_cell=1)
        rows = tuple((word, r.label) for word in range_to_ternary(r))
        return CamTable(rows=rows, width_bits=r.width_bits, bits_per_cell=None)
    rows = tuple((word, r.label) for word in range_to_digits(r, bits_per_cell))
    return CamTable(rows=rows, width_bits=r.width_bits, bits_per_cell=bits_per_cell)


def compile_rules(rules, bits_per_cell: int | None = None) -> CamTable:
    """Compile several rules into one table (rows concatenated in rule order)."""
    rows = []
    width = None
    for r in rules:
        if width is None:
            width = r.width_bits
        elif r.width_bits != width:
            raise DomainError("all rules in one table must share width_bits")
        rows.extend(compile_rule(r, bits_per_cell).rows)
    return CamTable(rows=tuple(rows), width_bits=width, bits_per_cell=bits_per_cell)


# ---------------------------------------------------------------------------
# lowering to conductances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelFamily:
    """Discrete level geometry used to store digit cells as analog intervals."""

    levels: tuple[LevelCode, ...]
    window: VoltageInterval

    @property
    def n_levels(self) -> int:
        return self.levels[0].n_levels

    def digit_interval(self, spec: DigitSpec) -> VoltageInterval:
        if spec.base > self.n_levels:
            raise DomainError(
                f"digit base {spec.base} exceeds {self.n_levels}-level family")
        if spec.is_wildcard:
            return self.window
        return VoltageInterval(self.levels[spec.lo].interval.lo,
                               self.levels[spec.hi].interval.hi)

    def digit_voltage(self, digit: int) -> float:
        return v_of_level(digit, self.n_levels, self.window)


def default_level_family(n_levels: int, p: DeviceParams,
                         variant: str = "mosfet",
                         ts: TsDeviceParams | None = None) -> LevelFamily:
    """Level family over the achievable window with a guard of 20% of pitch."""
    window = achievable_window(p, variant, ts)
    pitch = window.width / n_levels
    guard = min(0.2 * pitch, 0.006)
    return LevelFamily(levels=tuple(quantize_levels(n_levels, window, guard)),
                       window=window)


def family_to_json_dict(f: LevelFamily) -> dict:
    return {
        "window": {"lo_V": f.window.lo, "hi_V": f.window.hi},
        "n_levels": f.n_levels,
        "levels": [{"index": lv.index, "lo_V": lv.interval.lo,
                    "hi_V": lv.interval.hi} for lv in f.levels],
    }


def family_from_json_dict(doc: dict) -> LevelFamily:
    n = doc["n_levels"]
    levels = tuple(LevelCode(n, lv["index"],
                             VoltageInterval(lv["lo_V"], lv["hi_V"]))
                   for lv in doc["levels"])
    return LevelFamily(levels=levels,
                       window=VoltageInterval(doc["window"]["lo_V"],
                                              doc["window"]["hi_V"]))


def lower_to_conductances(t: CamTable, p: DeviceParams,
                          family: LevelFamily | None = None,
                          variant: str = "mosfet",
                          ts: TsDeviceParams | None = None) -> list[list[CellConfig]]:
    """Map every table cell to a programmable conductance pair.

    Digit cells go through the level family (exact -> that level's interval,
    wildcard -> the full window, {n-m} -> the union of levels n..m stored as
    one interval); interval rows are taken as-is. A cell whose interval needs
    a conductance outside the window raises, naming the offending digit.
    """
    if t.bits_per_cell is not None:
        if family is None:
            family = default_level_family(1 << t.bits_per_cell, p, variant, ts)
    matrix: list[list[CellConfig]] = []
    for ri, (word, _) in enumerate(t.rows):
        row: list[CellConfig] = []
        if isinstance(word, IntervalWord):
            specs = word.intervals
        elif isinstance(word, DigitWord):
            specs = [family.digit_interval(d) for d in word.digits]
        elif isinstance(word, TernaryWord):
            if family is None:
                family = default_level_family(2, p, variant, ts)
            specs = [family.window if ch == "X"
                     else family.levels[int(ch)].interval
                     for ch in word.symbols]
        else:
            raise DomainError(f"cannot lower row type {type(word).__name__}")
        for ci, iv in enumerate(specs):
            try:
                row.append(conductance_from_bounds(iv, p, variant, ts))
            except OutOfWindowError as e:
                raise OutOfWindowError(
                    f"row {ri} digit {ci}: {e}", bound=e.bound) from e
        matrix.append(row)
    return matrix


def encode_integer(value: int, t: CamTable, family: LevelFamily) -> list[float]:
    """DL voltages addressing ``value`` on a digit or ternary table."""
    if t.bits_per_cell is None:
        raise DomainError("integer encoding needs a digit table")
    base = 1 << t.bits_per_cell
    n = t.n_cols
    if not (0 <= value < base ** n):
        raise DomainError(
            f"value {value} not representable in {n} base-{base} digits")
    digits = []
    v = value
    for _ in range(n):
        digits.append(v % base)
        v //= base
    return [family.digit_voltage(d) for d in digits[::-1]]


# ---------------------------------------------------------------------------
# text and JSON products
# ---------------------------------------------------------------------------

def format_grid(t: CamTable) -> str:
    """Human-readable grid, one table row per line, labels on the right."""
    lines = []
    for word, label in t.rows:
        if isinstance(word, TernaryWord):
            cells = list(word.symbols)
        elif isinstance(word, DigitWord):
            cells = [d.symbol() for d in word.digits]
        else:
            cells = [f"[{iv.lo:.3f},{iv.hi:.3f}]" for iv in word.intervals]
        width = max(len(c) for c in cells)
        row = " ".join(c.rjust(width) for c in cells)
        lines.append(f"{row}  | {label}" if label else row)
    return "\n".join(lines)


def _word_to_json(word) -> dict:
    if isinstance(word, TernaryWord):
        return {"kind": "ternary", "symbols": word.symbols}
    if isinstance(word, DigitWord):
        return {"kind": "digits",
                "digits": [{"lo": d.lo, "hi": d.hi} for d in word.digits]}
    return {"kind": "intervals",
            "intervals": [{"lo_V": iv.lo, "hi_V": iv.hi} for iv in word.intervals]}


def table_to_json_dict(t: CamTable) -> dict:
    return {
        "width_bits": t.width_bits,
        "bits_per_cell": t.bits_per_cell,
        "rows": [{"word": _word_to_json(word), "label": label}
                 for word, label in t.rows],
    }


def table_from_json_dict(doc: dict) -> CamTable:
    bits = doc.get("bits_per_cell")
    rows = []
    for entry in doc["rows"]:
        wd = entry["word"]
        if wd["kind"] == "ternary":
            word = TernaryWord(wd["symbols"])
        elif wd["kind"] == "digits":
            base = 1 << bits
            word = DigitWord(tuple(DigitSpec(d["lo"], d["hi"], base)
                                   for d in wd["digits"]))
        elif wd["kind"] == "intervals":
            word = IntervalWord(tuple(VoltageInterval(iv["lo_V"], iv["hi_V"])
                                      for iv in wd["intervals"]))
        else:
            raise DomainError(f"unknown word kind {wd['kind']!r}")
        rows.append((word, entry.get("label", "")))
    return CamTable(rows=tuple(rows), width_bits=doc.get("width_bits"),
                    bits_per_cell=bits)


def parse_rules_jsonl(text: str) -> list[RangeRule]:
    """Parse rules from JSON lines: {"lo":..., "hi":..., "width_bits":..., "label":...}."""
    rules = []
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as e:
            raise DomainError(f"rules line {i}: {e}") from e
        try:
            rules.append(RangeRule(lo=int(doc["lo"]), hi=int(doc["hi"]),
                                   width_bits=int(doc["width_bits"]),
                                   label=str(doc.get("label", f"rule{i}"))))
        except KeyError as e:
            raise DomainError(f"rules line {i}: missing field {e}") from e
    return rules
