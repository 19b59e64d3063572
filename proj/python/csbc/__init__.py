"""Score-level fusion of pedestrian detectors.

Spatial consensus adds each overlapping support window's calibrated score to
the root window's score; the content-based variant weights every support term
by a PLS estimate of how well that window covers a pedestrian.
"""

from ._csbc import *  # noqa: F401,F403
from ._csbc import __doc__  # noqa: F401
