"""Exception hierarchy shared by all modules."""


class ModalRegError(Exception):
    """Base class for library errors."""


class SingularSystem(ModalRegError):
    """The (regularized) Gram matrix is numerically rank-deficient."""


class NoConvergence(ModalRegError):
    """An iterative numeric routine hit its iteration/subdivision cap."""


class NotQuadraticallyMinorizable(ModalRegError):
    """The kernel's profile is not convex, so IRLS has no minorizer."""


class EmptySupport(ModalRegError):
    """Every IRLS weight is zero; the start sees no kernel mass."""


class AllStartsFailed(ModalRegError):
    """Every start of a multi-start fit raised."""


class NotNegativeDefinite(ModalRegError):
    """The curvature matrix of a declared model is not negative definite."""


class ZeroBias(ModalRegError):
    """The leading bias vanishes, so the optimal bandwidth is undefined."""


class ExperimentFailed(ModalRegError):
    """Too many Monte Carlo trials failed."""
