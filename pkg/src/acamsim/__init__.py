"""Behavioral simulator and compiler for memristor-based analog CAMs."""

from .array import (ArraySpec, Parasitics, RowResult, SearchResult,
                    analytic_range_shift, discharge_latency,
                    effective_bounds_in_array, make_array, max_word_length,
                    search, search_many, sweep_column)
from .cell import (CellConfig, LevelCode, VoltageInterval, achievable_window,
                   bounds_from_conductance, calibrate, calibrated_defaults,
                   conductance_from_bounds, quantize_levels)
from .cost import (AreaParams, CostReport, EnergyParams, baseline_comparison,
                   compare_range_implementations, energy_per_search)
from .devices import (DeviceParams, MemristorState, TsDeviceParams,
                      divider_gate_voltage, program_memristor,
                      pulldown_conductance, transistor_conductance,
                      ts_conductance)
from .errors import AcamError
from .tables import (CamTable, DigitSpec, DigitWord, RangeRule, TernaryWord,
                     compile_rule, compile_rules, lower_to_conductances,
                     range_to_digits, range_to_ternary)
from .trees import (DecisionTree, FeatureSpec, TreeLeaf, TreeNode, TreeTable,
                    classify, classify_many, tree_to_cam)

__version__ = "0.1.0"
