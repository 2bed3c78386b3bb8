"""
Exception hierarchy shared by every package.
The CLI maps these onto exit codes; library code only raises.
"""

from typing import Any, Optional, Sequence, Tuple, Union


class RiccatiTodaError(Exception):
    """Base class for all library failures"""


class ShapeError(RiccatiTodaError, ValueError):
    """Matrix or block dimensions do not fit the gradation"""


class SingularError(RiccatiTodaError):
    """A matrix that must be inverted is singular or ill-conditioned"""


class NotDecomposableError(RiccatiTodaError):
    """A leading block minor is singular: the element has no Gauss decomposition"""

    def __init__(
        self,
        message: str,
        block_index: Optional[int] = None,
        coordinate: Optional[Sequence[float]] = None,
    ):
        super().__init__(message)
        self.block_index = block_index
        self.coordinate = None if coordinate is None else tuple(float(c) for c in coordinate)


class BlowupAtNode(NotDecomposableError):
    """Linearized Riccati solution left the decomposable set at a trajectory node"""

    def __init__(
        self,
        message: str,
        node: Union[int, Tuple[int, ...]],
        coordinate: Optional[Sequence[float]] = None,
        block_index: Optional[int] = None,
    ):
        super().__init__(message, block_index=block_index, coordinate=coordinate)
        self.node = node


class DivergenceError(RiccatiTodaError):
    """Numerical integration produced a non-finite or escaping state"""

    def __init__(
        self,
        message: str,
        coordinate: Optional[Sequence[float]] = None,
        index: Optional[int] = None,
        last_state: Any = None,
    ):
        super().__init__(message)
        self.coordinate = None if coordinate is None else tuple(float(c) for c in coordinate)
        self.index = index
        self.last_state = last_state


class BlowupError(RiccatiTodaError):
    """A closed-form resolvent factor is singular"""

    def __init__(self, message: str, coordinate: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.coordinate = None if coordinate is None else tuple(float(c) for c in coordinate)


class NotIntegrableError(RiccatiTodaError):
    """A coefficient family is not curl-free where a potential is required"""


class IntegrabilityError(RiccatiTodaError):
    """Integrability conditions of a linear system fail above the gate"""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class TooFewNodesError(RiccatiTodaError, ValueError):
    """A grid axis is too short for second-order differences"""


class CurvatureWarning(UserWarning):
    """Multidimensional integration ran with a curvature residual above the gate"""


def coordinate_of(exc: BaseException) -> Optional[tuple]:
    """Failure coordinate carried by an exception, if any"""
    return getattr(exc, "coordinate", None)
