"""Bias-corrected divide-and-conquer estimation.

Thin python layer over the C++ core: per-batch shrinkage / estimating-equation
/ kernel fits, composite aggregation (naive average, Gram-weighted expression,
bias-corrected global estimator), batch homogenization, streaming sufficient
statistics and the Monte-Carlo experiment driver.
"""

from gbcdc._core import *  # noqa: F401,F403
from gbcdc._core import __version__  # noqa: F401
