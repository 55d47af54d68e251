"""Exception types shared across the package."""


class RbflowError(Exception):
    """Base class for package errors."""


class MeshError(RbflowError):
    """Mesh construction failed (tangled elements, bad profile, ...)."""


class OutOfDomainError(RbflowError):
    """A point or parameter lies outside the supported domain."""


class SingularSystemError(RbflowError):
    """A linear system that should be regular turned out singular."""


class StoreError(RbflowError):
    """Persistent store is missing, corrupt or inconsistent."""
