"""hygex: a hygienic macro expansion kernel with scope-metadata hygiene."""

from .driver import RunConfig, Runner, run_string
from .syntax import (
    Atom,
    Ident,
    Missing,
    Name,
    Node,
    add_macro_scope,
    format_scoped,
    macro_scopes,
    render,
)

__all__ = [
    "Atom",
    "Ident",
    "Missing",
    "Name",
    "Node",
    "RunConfig",
    "Runner",
    "add_macro_scope",
    "format_scoped",
    "macro_scopes",
    "render",
    "run_string",
]

__version__ = "0.1.0"
