"""
Synthetic AR(p) series with heavy-tailed, skewed, heteroscedastic noise.
"""

from dgp.innovations import innovation_distribution, innovation_tau0
from dgp.menu import DGP_MENU, get_dgp, list_dgps
from dgp.simulate import (
    SeriesSample,
    read_series,
    simulate_from_spec,
    simulate_series,
    stationary_states,
    write_series,
)
from dgp.stationarity import check_stationarity

__all__ = [
    "DGP_MENU",
    "SeriesSample",
    "check_stationarity",
    "get_dgp",
    "innovation_distribution",
    "innovation_tau0",
    "list_dgps",
    "read_series",
    "simulate_from_spec",
    "simulate_series",
    "stationary_states",
    "write_series",
]
