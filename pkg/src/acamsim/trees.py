"""Map binary decision trees onto CAM tables for one-cycle classification.

Every root-to-leaf path is an AND of per-feature threshold constraints;
since AND commutes, the constraints are grouped by feature and intersected
into one interval per feature, with absent features stored as don't-cares.
Each path then becomes one CAM row carrying the leaf label, and classifying
an input is a single array search: exactly one row matches any in-domain
feature vector because sibling splits are mutually exclusive.

Feature values are carried to data-line voltages by per-feature affine maps
into the device's achievable interval window. Left branches take values
strictly below the threshold, right branches at or above it. To make that
deterministic on analog hardware the right row's stored lower edge sits a
few millivolts below the encoded threshold (absorbing the in-array boundary
offset, so an input exactly at the threshold resolves to the right side)
and the left row stops a further gap below that, keeping rows disjoint.
Inputs closer to a threshold than these margins may resolve to the right
side; classification contracts hold for inputs at least half a quantization
step away from every threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array import make_array, search_many
from .cell import VoltageInterval, achievable_window
from .devices import DeviceParams, TsDeviceParams
from .errors import (AmbiguousMatchError, DomainError, MalformedTreeError)
from .tables import (CamTable, DigitSpec, DigitWord, IntervalWord,
                     LevelFamily, default_level_family, lower_to_conductances)

# The ">=" row starts this far below its encoded threshold so that an input
# exactly at the threshold still matches after the in-array boundary offset.
THRESHOLD_UNDERLAP_V = 4e-3
# Additional gap down to the "<" row's upper edge, keeping the rows disjoint.
BOUNDARY_GAP_V = 1e-3


@dataclass(frozen=True)
class FeatureSpec:
    """One input feature and its real-valued domain [lo, hi]."""

    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise DomainError(f"feature {self.name!r} domain must have lo < hi")


@dataclass(frozen=True)
class TreeLeaf:
    label: str


@dataclass(frozen=True)
class TreeNode:
    feature: int       # feature index
    threshold: float   # left: value < threshold, right: value >= threshold
    left: "TreeNode | TreeLeaf"
    right: "TreeNode | TreeLeaf"


@dataclass(frozen=True)
class DecisionTree:
    features: tuple[FeatureSpec, ...]
    root: "TreeNode | TreeLeaf"

    def classify(self, x) -> str:
        """Reference traversal (the oracle the compiled table must agree with)."""
        node = self.root
        while isinstance(node, TreeNode):
            node = node.left if x[node.feature] < node.threshold else node.right
        return node.label


@dataclass(frozen=True)
class TreeTable:
    """Compiled tree: CAM rows plus the feature-to-voltage codec.

    Continuous mode (the default) stores one analog interval per feature;
    quantized mode snaps thresholds to a discrete level family and stores
    level sub-ranges instead.
    """

    table: CamTable
    features: tuple[FeatureSpec, ...]
    window: VoltageInterval
    family: LevelFamily | None = None  # set in quantized mode

    def encode_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 2 or xs.shape[1] != len(self.features):
            raise DomainError(
                f"feature vectors must be n x {len(self.features)}")
        los = np.array([f.lo for f in self.features])
        his = np.array([f.hi for f in self.features])
        if np.any(xs < los) or np.any(xs > his):
            raise DomainError("feature vector outside encoded domain")
        frac = (xs - los) / (his - los)
        if self.family is None:
            return self.window.lo + frac * self.window.width
        n = self.family.n_levels
        idx = np.clip(np.floor(frac * n).astype(int), 0, n - 1)
        centers = np.array([self.family.digit_voltage(i) for i in range(n)])
        return centers[idx]

    def encode(self, x) -> list[float]:
        return list(self.encode_many(np.asarray(x, dtype=float)[None, :])[0])


def tree_to_cam(t: DecisionTree, p: DeviceParams,
                variant: str = "mosfet",
                ts: TsDeviceParams | None = None,
                bits_per_cell: int | None = None) -> TreeTable:
    """Compile a tree to one CAM row per root-to-leaf path.

    Continuous by default; with ``bits_per_cell`` set, thresholds snap to
    the nearest boundary of a ``2**bits_per_cell``-level family and rows
    store level sub-ranges. Raises :class:`MalformedTreeError` when a path
    carries contradictory constraints (empty feature interval) or when
    quantization collapses a path's interval to nothing.
    """
    window = achievable_window(p, variant, ts)
    n = len(t.features)

    def to_v(fi: int, value: float) -> float:
        f = t.features[fi]
        frac = (value - f.lo) / (f.hi - f.lo)
        return window.lo + frac * window.width

    rows = []

    def walk(node, constraints):
        if isinstance(node, TreeLeaf):
            intervals = []
            for fi in range(n):
                lo, hi = constraints[fi]
                if lo > hi:
                    raise MalformedTreeError(
                        f"path to leaf {node.label!r} has empty interval for "
                        f"feature {t.features[fi].name!r}")
                intervals.append(VoltageInterval(lo, hi))
            rows.append((IntervalWord(tuple(intervals)), node.label))
            return
        if not (0 <= node.feature < n):
            raise MalformedTreeError(f"node references unknown feature {node.feature}")
        f = t.features[node.feature]
        if not (f.lo <= node.threshold <= f.hi):
            raise MalformedTreeError(
                f"threshold {node.threshold} outside domain of {f.name!r}")
        theta = to_v(node.feature, node.threshold)
        lo, hi = constraints[node.feature]

        left = dict(constraints)
        left[node.feature] = (lo, min(hi, theta - THRESHOLD_UNDERLAP_V
                                      - BOUNDARY_GAP_V))
        walk(node.left, left)

        right = dict(constraints)
        right[node.feature] = (max(lo, theta - THRESHOLD_UNDERLAP_V), hi)
        walk(node.right, right)

    walk(t.root, {fi: (window.lo, window.hi) for fi in range(n)})

    if bits_per_cell is None:
        table = CamTable(rows=tuple(rows), width_bits=None, bits_per_cell=None)
        return TreeTable(table=table, features=t.features, window=window)

    family = default_level_family(1 << bits_per_cell, p, variant, ts)
    n_levels = family.n_levels
    pitch = window.width / n_levels

    def snap(word: IntervalWord, label: str) -> DigitWord:
        digits = []
        for fi, iv in enumerate(word.intervals):
            k_lo = round((iv.lo - window.lo) / pitch)
            k_hi = round((iv.hi - window.lo) / pitch)
            i_lo = max(k_lo, 0)
            i_hi = min(k_hi - 1, n_levels - 1)
            if i_lo > i_hi:
                raise MalformedTreeError(
                    f"quantization collision: path to {label!r} collapses "
                    f"feature {t.features[fi].name!r} to an empty level range")
            digits.append(DigitSpec.subrange(i_lo, i_hi, n_levels))
        return DigitWord(tuple(digits))

    qrows = tuple((snap(word, label), label) for word, label in rows)
    table = CamTable(rows=qrows, width_bits=None, bits_per_cell=bits_per_cell)
    return TreeTable(table=table, features=t.features, window=window,
                     family=family)


def classify(tt: TreeTable, x, p: DeviceParams,
             array_factory=None, variant: str = "mosfet",
             ts: TsDeviceParams | None = None) -> str:
    """Classify one feature vector through the compiled array search.

    Raises :class:`AmbiguousMatchError` on zero or multiple matching rows
    (a quantization collision or an in-array boundary shift).
    """
    labels = classify_many(tt, [x], p, array_factory, variant, ts)
    return labels[0]


def classify_many(tt: TreeTable, xs, p: DeviceParams,
                  array_factory=None, variant: str = "mosfet",
                  ts: TsDeviceParams | None = None) -> list[str]:
    """Vectorized classification of many feature vectors on one array."""
    cells = lower_to_conductances(tt.table, p, family=tt.family,
                                  variant=variant, ts=ts)
    if array_factory is None:
        array = make_array(cells, variant=variant, ts_params=ts)
    else:
        array = array_factory(cells)
    stim = tt.encode_many(xs)
    matched = search_many(array, stim, p)  # (n, rows)
    labels = []
    row_labels = tt.table.labels()
    for i in range(matched.shape[0]):
        idx = tuple(np.nonzero(matched[i])[0])
        if len(idx) != 1:
            raise AmbiguousMatchError(
                f"input {i}: {len(idx)} rows matched (expected exactly 1)",
                matched_rows=idx)
        labels.append(row_labels[idx[0]])
    return labels


# ---------------------------------------------------------------------------
# JSON ingestion
# ---------------------------------------------------------------------------

def tree_from_json_dict(doc: dict) -> DecisionTree:
    """Parse {"features": [{name, lo, hi}...], "root": {...}} documents.

    Internal nodes carry {"feature", "threshold", "left", "right"}; leaves
    carry {"label"}.
    """
    try:
        features = tuple(FeatureSpec(name=f["name"], lo=float(f["lo"]),
                                     hi=float(f["hi"]))
                         for f in doc["features"])
    except KeyError as e:
        raise DomainError(f"tree document missing feature field {e}") from e

    def parse(node):
        if "label" in node:
            return TreeLeaf(label=str(node["label"]))
        try:
            return TreeNode(feature=int(node["feature"]),
                            threshold=float(node["threshold"]),
                            left=parse(node["left"]),
                            right=parse(node["right"]))
        except KeyError as e:
            raise DomainError(f"tree node missing field {e}") from e

    if "root" not in doc:
        raise DomainError("tree document missing 'root'")
    return DecisionTree(features=features, root=parse(doc["root"]))


def tree_to_json_dict(t: DecisionTree) -> dict:
    def emit(node):
        if isinstance(node, TreeLeaf):
            return {"label": node.label}
        return {"feature": node.feature, "threshold": node.threshold,
                "left": emit(node.left), "right": emit(node.right)}

    return {"features": [{"name": f.name, "lo": f.lo, "hi": f.hi}
                         for f in t.features],
            "root": emit(t.root)}
