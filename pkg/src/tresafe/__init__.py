"""tresafe: disclosure-risk assessment and safe-release checking for
tabular ML models trained inside trusted research environments.

The toolkit trains a small native classifier family, simulates membership-
and attribute-inference attacks against fitted models, computes the
associated risk metrics, enforces hyperparameter constraints from a TRE
rules file, detects post-fit tampering, and writes release reports an
output checker can act on.
"""

__version__ = "0.1.0"
