"""Total-error estimation for tabulated job statistics.

Frame construction with composite weights, the five indicator estimators
under multiplicative noise infusion and multiple imputation, and the
within / between-imputation / noise variance decomposition with CV, degrees
of freedom and margins of error per publication cell.
"""

__version__ = "0.1.0"

STATS = ("M", "B", "F", "ZW3", "W1")
