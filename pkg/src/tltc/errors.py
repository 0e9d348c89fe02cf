"""Exception hierarchy shared by every tltc module."""

from __future__ import annotations


class TltcError(Exception):
    """Base class for all toolkit errors."""


class FormulaSyntaxError(SyntaxError, TltcError):
    """Raised by :func:`tltc.formula.parse` with line/column information."""

    def __init__(self, msg: str, line: int, column: int, text: str | None = None):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.msg = msg
        self.lineno = line
        self.offset = column
        self.text = text


class NnfUnsupported(TltcError):
    """Negation above Until cannot be pushed inward without a release operator."""


class CycleError(TltcError):
    """A proposition binding would make reference resolution non-terminating."""


class UnboundProposition(TltcError):
    def __init__(self, name: str):
        super().__init__(f"proposition {name!r} has no binding")
        self.name = name


class UnsupportedGeometry(TltcError):
    """The backend cannot construct the requested set."""


class FragmentError(TltcError):
    def __init__(self, subformula, fragment):
        from tltc.formula import render

        super().__init__(f"{render(subformula)} is not in fragment {fragment.name}")
        self.subformula = subformula
        self.fragment = fragment


class DirectionConflict(TltcError):
    def __init__(self, label, detail: str = "children mix UNDER and OVER"):
        from tltc.formula import render

        super().__init__(f"approximation conflict at {render(label)}: {detail}")
        self.label = label


class IncompatibleBackend(TltcError):
    """A primitive needs a procedure the backend does not provide."""


class UnsoundRealization(TltcError):
    """Static analysis rejected the tree for this backend."""

    def __init__(self, msg: str, report=None):
        super().__init__(msg)
        self.report = report


class RealizationError(TltcError):
    """A backend failure, annotated with the formula of the failing node."""

    def __init__(self, msg: str, label=None):
        super().__init__(msg)
        self.label = label


class OutOfDomain(TltcError):
    """State or time outside the represented domain."""


class BackendMismatch(TltcError):
    """Operands belong to different backends."""


class HorizonMismatch(TltcError):
    """Operands are defined over incompatible time grids."""


class ShapeMismatch(TltcError):
    """Level sets over different grids or time axes."""


class CflViolation(TltcError):
    """Time step too large for the explicit scheme."""


class NumericalError(TltcError):
    """NaN or Inf encountered during integration."""


class DimensionMismatch(TltcError):
    """Matrix or set dimensions are inconsistent."""


class BinaryCapExceeded(TltcError):
    """Too many binary factors for exhaustive enumeration."""
