"""In-context soil parameter inference.

Kernel class probabilities and discretized posteriors over a stored training
context, iterated conditional-mean imputation, permutation-SHAP attribution,
and embedding similarity diagnostics. Thin wrapper around the C++ core.
"""

from ._geoinfer import *  # noqa: F401,F403
from ._geoinfer import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
