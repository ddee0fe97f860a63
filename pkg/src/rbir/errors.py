"""Exception hierarchy. Each externally visible failure mode gets its own
class so the CLI can map error categories to distinct exit codes."""


class RbirError(Exception):
    """Base class for all rbir errors."""


class InvalidParameterError(RbirError):
    """A parameter violates its documented range or shape."""


class UnsupportedFormatError(RbirError):
    """The file exists but is not a format this build decodes."""


class MalformedFileError(RbirError):
    """The file claims a supported format but its contents are broken."""


class TruncatedFileError(MalformedFileError):
    """Payload shorter than the header promises."""


class CorruptHeaderError(MalformedFileError):
    """Magic/version/shape fields of a stored file are invalid."""


class VersionMismatchError(MalformedFileError):
    """Stored file written by an incompatible format version."""


class EmptyRegionError(RbirError):
    """An interest region covers zero pixels."""


class ShapeMismatchError(RbirError):
    """Two signatures (or a signature and an index) disagree on (n, m)."""


class DuplicateOidError(RbirError):
    """An oid was inserted twice into the same tree or signature file."""


class PaletteMismatchError(RbirError):
    """The palette supplied at query time does not match the indexed one."""
