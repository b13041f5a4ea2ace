"""Lattice simulator for the Yang-Mills-Higgs k-flow on periodic lattices."""

from .algebra import GROUPS, SU2, U1, Group
from .analysis import GaugeTransform, blowup_extract, gauge_transform, rescale, smoothing_diagnostic
from .config import RunConfig, load_config, parse_config
from .energy import FlowParams, ymh_energy, ymh_k_energy
from .errors import (
    BlowUpSignal, BranchError, ConfigError, CorruptSnapshotError, CurvatureTooRoughError,
    LatticeTooSmallError, NoSingularityError, SnapshotFormatError, StallSignal, YMHKError,
)
from .fields import GaugeField, HiggsField, TensorField, cov_diff, cov_diff_adjoint, curvature
from .flow import FlowState, cold_start, hot_start, run, step
from .gradient import gradient
from .lattice import LatticeShape
from .storage import load_snapshot, save_snapshot

__version__ = "0.1.0"

__all__ = [
    "GROUPS", "SU2", "U1", "Group", "GaugeTransform", "blowup_extract", "gauge_transform", "rescale",
    "smoothing_diagnostic", "RunConfig", "load_config", "parse_config", "FlowParams", "ymh_energy",
    "ymh_k_energy", "BlowUpSignal", "BranchError", "ConfigError", "CorruptSnapshotError",
    "CurvatureTooRoughError", "LatticeTooSmallError", "NoSingularityError", "SnapshotFormatError",
    "StallSignal", "YMHKError", "GaugeField", "HiggsField", "TensorField", "cov_diff",
    "cov_diff_adjoint", "curvature", "FlowState", "cold_start", "hot_start", "run", "step",
    "gradient", "LatticeShape", "load_snapshot", "save_snapshot",
]
