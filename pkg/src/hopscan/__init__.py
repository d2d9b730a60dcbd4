"""hopscan: filter-accelerated scans over bit-interleaved composite keys."""

from .bitkey import BitKey, Mask, MaskProfile, comask, key_and_mask, mask_profile, merge_disjoint
from .engine import ScanOptions, ScanReport, Strategy, choose_strategy, run_partitioned, run_scan
from .errors import ContractError
from .layout import Dimension, Layout, build_layout
from .locus import (FrogGate, PointLocusStats, RangeLocusStats, RegionDistribution, StoreStats,
                    frog_gate, modeled_cost, point_locus_stats, range_locus_stats,
                    region_distribution, threshold, threshold_analytic)
from .matcher import (TRIVIAL_MATCH, TRIVIAL_MISMATCH, Matcher, PointFilter, RangeFilter,
                      ReducedProblem, SetFilter, compile_filters, reduce_filters)
from .store import (BPlusTreeStore, InstrumentedStore, OpCounters, Partition, PartitionedStore,
                    SortedArrayStore, read_gzk, write_gzk)

__all__ = [
    "BitKey", "Mask", "MaskProfile", "key_and_mask", "merge_disjoint", "comask", "mask_profile",
    "Dimension", "Layout", "build_layout",
    "PointFilter", "RangeFilter", "SetFilter", "ReducedProblem", "Matcher",
    "reduce_filters", "compile_filters", "TRIVIAL_MATCH", "TRIVIAL_MISMATCH",
    "PointLocusStats", "RangeLocusStats", "RegionDistribution", "StoreStats", "FrogGate",
    "point_locus_stats", "range_locus_stats", "region_distribution", "frog_gate",
    "threshold", "threshold_analytic", "modeled_cost",
    "SortedArrayStore", "BPlusTreeStore", "InstrumentedStore", "PartitionedStore",
    "Partition", "OpCounters", "read_gzk", "write_gzk",
    "Strategy", "ScanOptions", "ScanReport", "run_scan", "run_partitioned", "choose_strategy",
    "ContractError",
]

__version__ = "0.1.0"
