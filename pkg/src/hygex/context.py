"""Global context, scope allocation, and the transformer environment.

Scope numbers are handed out by a single per-run counter.  A transformer
invocation gets a *lazy* current-scope cell: the counter only advances when
the scope is actually observed (a quotation is instantiated or the scope is
queried), so bookkeeping-only macros leave no trace in the numbering.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

from .syntax import Name, Symbol, Syntax, base_name, macro_scopes

# Scope value reserved for kernel-synthesized constant references; the
# run counter starts above it, so no user binder can ever carry it.
RESERVED_SCOPE = 0


class ScopeCounter:
    def __init__(self, start: int = 1, step: int = 1):
        self._next = start
        self._step = step

    def alloc(self) -> int:
        value = self._next
        self._next += self._step
        return value


class _Cell:
    __slots__ = ("value",)

    def __init__(self) -> None:
        self.value: Optional[int] = None


class ScopeState:
    """Current macro scope plus the ability to enter a fresh one.

    This is the one capability quotations need from their host, and it is
    shared verbatim by the expander, the elaborator, and the tactic engine.
    """

    def __init__(self, counter: Optional[ScopeCounter] = None):
        self.counter = counter or ScopeCounter()
        self._stack: List[_Cell] = [_Cell()]

    def current(self) -> int:
        cell = self._stack[-1]
        if cell.value is None:
            cell.value = self.counter.alloc()
        return cell.value

    def peek(self) -> Optional[int]:
        """The current scope if it has been allocated, without allocating."""
        return self._stack[-1].value

    @contextmanager
    def fresh(self):
        self._stack.append(_Cell())
        try:
            yield
        finally:
            self._stack.pop()


@dataclass
class Decl:
    """What a global symbol stands for."""

    kind: str  # "def" | "theorem" | "type" | "const"
    type_: Any = None  # CoreType of value constants, when elaborated
    prop: Any = None  # proposition proved, for theorems


class GlobalContext:
    """Symbols visible at top level, in declaration order."""

    def __init__(self) -> None:
        self.decls: Dict[Symbol, Decl] = {}

    def __contains__(self, symbol: Symbol) -> bool:
        return symbol in self.decls

    def __iter__(self):
        return iter(self.decls)

    def get(self, symbol: Symbol) -> Optional[Decl]:
        return self.decls.get(symbol)

    def add(self, symbol: Symbol, decl: Decl) -> None:
        self.decls[symbol] = decl

    def match_surface(self, name: Name) -> List[Symbol]:
        """Global symbols an identifier could refer to.

        Besides strict symbol equality, a name matches any declaration it
        could spell under some namespace prefix: equal macro scopes and the
        declaration's base name ending in the identifier's base name.
        """
        scopes = macro_scopes(name)
        nb = base_name(name).parts
        out = []
        for g in self.decls:
            if g == name:
                out.append(g)
                continue
            if nb and macro_scopes(g) == scopes:
                gb = base_name(g).parts
                if len(gb) > len(nb) and gb[len(gb) - len(nb):] == nb:
                    out.append(g)
        return out


# A transformer rewrites one syntax node.  It returns None when none of its
# rules matched (a normal outcome) and raises on a real diagnostic.
Transformer = Callable[[Syntax, "TransformerEnv"], Optional[Syntax]]


class MacroTable:
    """Per node kind, registered transformers, newest first."""

    def __init__(self) -> None:
        self._by_kind: Dict[Name, List[Transformer]] = {}

    def register(self, kind: Name, transformer: Transformer) -> None:
        self._by_kind.setdefault(kind, []).insert(0, transformer)

    def lookup(self, kind: Name) -> List[Transformer]:
        return self._by_kind.get(kind, [])

    def __contains__(self, kind: Name) -> bool:
        return bool(self._by_kind.get(kind))


@dataclass
class TransformerEnv:
    """What a transformer invocation sees: globals and its macro scope."""

    gctx: GlobalContext
    scopes: ScopeState
    # test-only mode: keep just the newest scope instead of the full stack,
    # to demonstrate why the stack is needed
    single_scope: bool = False

    def current_macro_scope(self) -> int:
        return self.scopes.current()

    def with_fresh_macro_scope(self):
        return self.scopes.fresh()

    def apply_scope(self, name: Name) -> Name:
        msc = self.current_macro_scope()
        if self.single_scope:
            return Name(base_name(name).parts + (msc,))
        return Name(name.parts + (msc,))
