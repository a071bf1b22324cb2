"""Exception hierarchy shared across the pipeline.

Every error carries a stable machine-readable ``code`` so the CLI can emit
structured diagnostics on stderr.
"""


class PipelineError(Exception):
    code = "pipeline-error"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


class InvalidInputError(PipelineError):
    """Raised for inputs that violate a precondition (empty clip, bad audio)."""

    code = "invalid-input"


class ConfigError(PipelineError):
    """Raised for inconsistent or out-of-range configuration values."""

    code = "config-error"


class FramingError(PipelineError):
    """Raised when a waveform does not match the framing contract."""

    code = "framing-error"


class ShapeMismatchError(PipelineError):
    """Raised when tensor shapes disagree with the run configuration."""

    code = "shape-mismatch"


class DegenerateInputError(PipelineError):
    """Raised for mathematically degenerate inputs (zero vectors, all ties)."""

    code = "degenerate-input"


class DivergenceError(PipelineError):
    """Raised when training produces non-finite losses or parameters."""

    code = "divergence"


class ManifestError(PipelineError):
    """Raised for malformed or inconsistent dataset manifests."""

    code = "manifest-error"


class CacheMissError(PipelineError):
    """Raised when a required embedding-cache entry is absent or stale."""

    code = "cache-miss"
