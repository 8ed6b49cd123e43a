"""LP score functions and the nonparametric models built from them."""

from .basis import LegendreBasis, ScoreBasis, build_scores, legendre
from .dist import ContingencyTable, DiscreteDist, JointDist, empirical_dist, table_margins
from .errors import DataError, LPError, NumericalError
from .io import load_dataset
from .moments import (
    LPComomentMatrix,
    LPMomentVector,
    covariance_decomposition,
    dagostino,
    gini_correlations,
    lp1_order_stat,
    lp_comoments,
    lp_moments,
    population_lp_moments,
    spearman_lp11,
    variance_decomposition,
)

__version__ = "0.1.0"
