"""Exception types shared across the package."""


class ReviewSumError(Exception):
    """Base class for all package errors."""


class CorpusError(ReviewSumError):
    """Raised on malformed corpus files or invariant violations at load time."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RetrievalError(ReviewSumError):
    """Raised when a retrieval backend (e.g. an embedder) fails."""


class BackendError(ReviewSumError):
    """Raised on non-retryable LLM backend failures."""


class TransportError(BackendError):
    """Raised on network / rate-limit failures after retries are exhausted."""


class EmptyCompletionError(BackendError):
    """Raised when a backend returns an empty completion."""
