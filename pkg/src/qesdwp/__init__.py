"""Quasi-exact levels of the Manning, Razavy and Shifman double wells."""

from .errors import (
    DegenerateNullspace,
    DomainError,
    GridMarginWarning,
    IncompleteEnumeration,
    IndexOutOfRange,
    InvalidQesParameters,
    MethodDisagreement,
    PoleCollision,
    QesError,
    RootCountMismatch,
    Unsupported,
)
from .models import ManningParams, QesState, RazavyParams, ShifmanParams
from .spectra import Spectrum, assemble_spectrum, pairing_check, splitting_table

__version__ = "0.1.0"

__all__ = [
    "ManningParams",
    "RazavyParams",
    "ShifmanParams",
    "QesState",
    "Spectrum",
    "assemble_spectrum",
    "splitting_table",
    "pairing_check",
    "QesError",
    "InvalidQesParameters",
    "DomainError",
    "PoleCollision",
    "Unsupported",
    "IndexOutOfRange",
    "DegenerateNullspace",
    "MethodDisagreement",
    "IncompleteEnumeration",
    "RootCountMismatch",
    "GridMarginWarning",
]
