# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).


class MixdimException(Exception):
    pass


class ConfigException(MixdimException):
    pass


class GeometryException(MixdimException):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class MeshException(MixdimException):
    def __init__(self, message, locations=None):
        super().__init__(message)
        self.locations = list(locations or [])


class AssemblyException(MixdimException):
    pass


class SolverException(MixdimException):
    pass


class FactorizationException(SolverException):
    """Breakdown of a bulk block factorization; ``region`` is the block."""

    def __init__(self, message, region=None):
        super().__init__(message)
        self.region = region


class SPDViolation(SolverException):
    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class PreconditionerException(MixdimException):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class AnalysisException(MixdimException):
    pass
