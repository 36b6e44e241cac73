"""Exception hierarchy shared by every module of the package."""


class VoirieError(Exception):
    """Base class for all domain errors (CLI maps these to exit code 1)."""


# geometry
class ValidityError(VoirieError):
    pass


class ShapeError(VoirieError):
    pass


class ParameterError(VoirieError, ValueError):
    pass


class RangeError(VoirieError, ValueError):
    pass


class RepairError(VoirieError):
    pass


# ingestion
class SchemaError(VoirieError):
    pass


class DuplicationError(VoirieError):
    pass


class CRSError(VoirieError):
    pass


class CardinalityError(VoirieError):
    pass


# lexicon
class StructureError(VoirieError):
    pass


class RankError(VoirieError):
    pass


class UnknownTermError(VoirieError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# footprint / registry
class ConsistencyError(VoirieError):
    pass


class RecordValidationError(VoirieError, ValueError):
    pass


class UnknownSectionError(VoirieError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ExportError(VoirieError, OSError):
    pass
