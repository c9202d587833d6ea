"""Lattice counting and amplifier exponent toolkit for definite forms."""

from .fields import (
    FieldContext,
    FieldElement,
    FieldError,
    field_context,
    evaluate,
    units_in_box,
    integers_in_box,
    cone_reduce,
    principal_primes_in_cone,
)

__all__ = [
    "FieldContext",
    "FieldElement",
    "FieldError",
    "field_context",
    "evaluate",
    "units_in_box",
    "integers_in_box",
    "cone_reduce",
    "principal_primes_in_cone",
]

__version__ = "0.1.0"
