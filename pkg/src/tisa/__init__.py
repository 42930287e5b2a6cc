"""Instance-space adequacy metrics for black-box system-level test suites."""

__version__ = "0.1.0"

from .dataset import TestSuite, load_suite, minmax_normalize, pearson_correlation, write_suite  # noqa: E402
from .pipeline import build_instance_space  # noqa: E402

__all__ = [
    "TestSuite",
    "build_instance_space",
    "load_suite",
    "minmax_normalize",
    "pearson_correlation",
    "write_suite",
]
