"""Expected-cost bounds for probabilistic programs.

Potential-based bound inference reduced to exact linear programming, with a
Monte-Carlo simulator and a truncated expected-cost oracle for validation.
"""

from .analysis import AnalysisReport, analyze, analyze_text
from .bound import Bound, parse_bound
from .frontend import load_program, parse_program

__version__ = "0.1.0"

__all__ = ["AnalysisReport", "Bound", "analyze", "analyze_text", "load_program",
           "parse_bound", "parse_program", "__version__"]
