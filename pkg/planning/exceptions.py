class ViewPlanError(Exception):
    """Base class for every error raised by the planning package."""


class MeshError(ViewPlanError, ValueError):
    pass


class UndefinedScoreError(ViewPlanError, ValueError):
    pass


class ViewError(ViewPlanError, ValueError):
    pass


class CoverageError(ViewPlanError, ValueError):
    pass


class TrainingError(ViewPlanError):
    pass


class InstanceError(ViewPlanError, ValueError):
    pass


class FormatError(ViewPlanError, ValueError):
    pass


class DigestMismatchError(FormatError):
    pass
