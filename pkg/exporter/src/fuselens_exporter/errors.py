"""Exporter error types, mirroring the consumer's exit-code conventions."""


class ExportError(Exception):
    """Base class for exporter failures."""


class JobError(ExportError):
    """A job document is malformed or self-contradictory."""


class BackboneError(ExportError):
    """The requested backbone is unknown or unavailable."""
