"""Exception hierarchy shared across the package."""


class ZoneRouteError(Exception):
    """Base class for all package errors."""


class InvalidInputError(ZoneRouteError, ValueError):
    """Raised when an argument violates a shape or value contract."""


class MissingLabelError(ZoneRouteError, ValueError):
    """Raised when an instance lacks an actual sequence or quality label."""


class SizeExceededError(ZoneRouteError, ValueError):
    """Raised when the exact solver is asked to handle too many nodes."""


class CorpusFormatError(ZoneRouteError, ValueError):
    """Raised when a corpus file does not match the documented schema."""

    def __init__(self, message, route_id=None, field=None):
        self.route_id = route_id
        self.field = field
        where = []
        if route_id is not None:
            where.append(f"route {route_id!r}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class ArtifactError(ZoneRouteError, ValueError):
    """Raised when a JSON artifact (matrix, weights, predictions) cannot be used."""
