"""System-level simulator of UABS-assisted LTE-Advanced HetNets.

Computes the 5th-percentile spectral efficiency (5pSE) of a two-tier
macro/aerial network under eICIC/FeICIC and cell range expansion, and
searches UABS placements and ICIC parameters that maximize it.
"""

from .association import (IcicConfig, IcicMode, NetworkEvaluation, UeAssignment, UeClass,
                          assign_ue, evaluate_network, fifth_percentile_se, tally_counts,
                          ue_spectral_efficiency)
from .campaign import Scenario, SimulationSettings, aggregate, draw_layout, run_campaign, run_drop
from .deployment import NetworkLayout, Region, destroy_mbs, place_hex_grid, sample_ppp
from .estimators import GeneticPlacementOptimizer, HexGridIcicSearch
from .optimizer import (Chromosome, GaSettings, IcicGrid, fitness, ga_optimize, grid_search_icic)
from .radio import PowerModel, SirBundle, compute_sir_bundle, interference_sum, nearest_cells, received_power

__version__ = "0.1.0"

__all__ = [
    "Chromosome",
    "GaSettings",
    "GeneticPlacementOptimizer",
    "HexGridIcicSearch",
    "IcicConfig",
    "IcicGrid",
    "IcicMode",
    "NetworkEvaluation",
    "NetworkLayout",
    "PowerModel",
    "Scenario",
    "SimulationSettings",
    "Region",
    "SirBundle",
    "UeAssignment",
    "UeClass",
    "aggregate",
    "assign_ue",
    "compute_sir_bundle",
    "destroy_mbs",
    "draw_layout",
    "evaluate_network",
    "fifth_percentile_se",
    "fitness",
    "ga_optimize",
    "grid_search_icic",
    "interference_sum",
    "nearest_cells",
    "place_hex_grid",
    "received_power",
    "run_campaign",
    "run_drop",
    "sample_ppp",
    "tally_counts",
    "ue_spectral_efficiency",
]
