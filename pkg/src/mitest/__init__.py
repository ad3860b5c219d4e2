"""Independence tests built on the asymptotic law of the plug-in mutual information."""

from ._core import BACKEND
from .binning import BinningSpec, bin_count_rule, discretize
from .calculus import fd_derivatives, mi_gradient, mi_hessian, multinomial_cov
from .errors import (BinningError, MITestError, NegativeWeightError, SeriesConvergenceError, TableError,
                     ZeroCellError)
from .inference import TestResult, independence_test, t1_statistic, t2_statistic
from .measures import g2, joint_entropy, mutual_information, normalized_mutual_information, pearson_chi2
from .nulldist import ChiBarWeights, cdf, chi_bar_weights, null_weights, pvalue, quantile, sample, sf
from .table import JointTable, ProbTable, empirical, from_counts, product_of_marginals, vec2

__version__ = "0.1.0"
