"""Growth constants of integer Lipschitz functions on graphs.

Exact Ehrhart counting for small graphs, sequential importance sampling for
larger ones, and numerical checks of the q-series and logistic-profile
quantities behind the pi^2/(6d) asymptotic for sparse random graphs.
"""

__version__ = "0.1.0"

from lipvol.graphs import (
    Graph,
    components,
    gen_gnp,
    make_circular_target,
    make_complete,
    make_complete_bipartite,
    make_cycle,
    make_hypercube,
    make_path,
)
from lipvol.exact import ResourceBudgetExceeded, count_lipschitz, ehrhart_c

__all__ = [
    "__version__",
    "Graph",
    "components",
    "gen_gnp",
    "make_circular_target",
    "make_complete",
    "make_complete_bipartite",
    "make_cycle",
    "make_hypercube",
    "make_path",
    "ResourceBudgetExceeded",
    "count_lipschitz",
    "ehrhart_c",
]
