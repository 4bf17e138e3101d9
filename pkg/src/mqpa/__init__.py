"""Measure-quantified arithmetic: exact semantics, function algebras, compilers."""
from .events import DyadicEvent, EventInterval, event_combine, event_from_bit, interval_combine, measure
from .lang import parse, print_formula, print_term

__all__ = [
    "DyadicEvent",
    "EventInterval",
    "event_combine",
    "event_from_bit",
    "interval_combine",
    "measure",
    "parse",
    "print_formula",
    "print_term",
]
