"""Charts for dispatch benchmark result CSVs."""

from dispatchplots.reader import ResultRow, ResultsError, read_results

__all__ = ["ResultRow", "ResultsError", "read_results"]
