import numpy as np
import pytest

import nkconsensus as nk
from nkconsensus.dynamics import final_rates_after, occupancy_trajectory, simulate_trajectory


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the simulation kernels once so timed tests measure runtime only."""
    L = nk.generate_landscape(2, 1, 0)
    C = nk.generate_competence(2, 2, 0.5, 0)
    mp = nk.build_complete_multiplex(2, 2)
    cpl = nk.Coupling(0.1, 1.0)
    simulate_trajectory(L, C, mp, cpl, 1.0, np.linspace(0, 1, 5), seed=0)
    occupancy_trajectory(L, C, mp, cpl, 50, seed=0)
    final_rates_after(L, C, mp, cpl, 10, seed=0)
