"""Sweeps, flat-file I/O and comparison reports behind the command-line tool."""

from .compare import ComparisonCell, ComparisonReport, binomial_z, cell_key, compare_cells
from .sweeps import (Normalization, SweepSpec, cell_seed, chi_grid_deg, des_sweep,
                     expected_probs, oracle_sweep)
from .tables import emit_series, ingest_series, read_table, write_table
