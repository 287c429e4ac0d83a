"""Exception types shared across the pipeline.

The CLI maps these onto its exit codes: DataError -> 2, NumericError -> 3.
Programmer-contract violations (bad kernel size, bad probability, ...) raise
plain ValueError and surface as usage errors.
"""


class PipelineError(Exception):
    """Base class for errors raised by leafpipe itself."""


class DataError(PipelineError):
    """Bad input data: missing/malformed files, degenerate datasets."""


class NumericError(PipelineError):
    """Numeric failure: non-finite activations or loss during training."""
