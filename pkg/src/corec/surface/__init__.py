"""The surface language and the pipeline that runs its commands."""

from .parser import parse_expr, parse_file
from .pretty import pretty
from .resolve import resolve

__all__ = ["parse_expr", "parse_file", "pretty", "resolve"]
