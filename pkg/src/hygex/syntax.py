"""Names, macro scopes, and the concrete syntax tree.

Identifiers carry their macro scopes inline as trailing numeric name
components; top-level resolutions captured inside quotations are kept in a
separate ``preresolved`` list.  Everything here is immutable and safe to
share.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union


# ---------------------------------------------------------------------------
# Hierarchical names


@dataclass(frozen=True)
class Name:
    """A hierarchical name: text components plus numeric scope components.

    Numeric components are reserved for the kernel (macro scopes and other
    internal names); the surface parser never produces them.
    """

    parts: Tuple[Union[str, int], ...] = ()

    @staticmethod
    def of(dotted: str) -> "Name":
        """Build a name from a dotted surface spelling, e.g. ``a.b``."""
        if not dotted:
            return Name(())
        return Name(tuple(dotted.split(".")))

    @property
    def is_anonymous(self) -> bool:
        return not self.parts

    def child(self, part: Union[str, int]) -> "Name":
        return Name(self.parts + (part,))

    def __str__(self) -> str:
        if not self.parts:
            return "[anonymous]"
        out = ".".join(str(p) for p in self.parts)
        # a leading numeric component renders with an explicit dot: ".5"
        if isinstance(self.parts[0], int):
            out = "." + out
        return out

    def __repr__(self) -> str:
        return f"Name({str(self)!r})"


ANONYMOUS = Name(())

# A symbol (the unit of binding equality) is simply a full name, macro
# scopes included.  Two symbols are equal iff all their components are.
Symbol = Name


def add_macro_scope(n: Name, msc: int) -> Name:
    """Append one macro scope; repeated application builds the scope stack."""
    return Name(n.parts + (msc,))


def macro_scopes(n: Name) -> Tuple[int, ...]:
    """The maximal trailing run of numeric components, in application order."""
    scopes = []
    for p in reversed(n.parts):
        if isinstance(p, int):
            scopes.append(p)
        else:
            break
    return tuple(reversed(scopes))


def base_name(n: Name) -> Name:
    """The name with its trailing macro scopes removed."""
    k = len(macro_scopes(n))
    return Name(n.parts[: len(n.parts) - k]) if k else n


# ---------------------------------------------------------------------------
# Source locations


@dataclass(frozen=True)
class SourceInfo:
    line: int
    col: int
    offset: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------------------
# Syntax trees


@dataclass(frozen=True)
class Node:
    kind: Name
    children: Tuple["Syntax", ...]

    def __repr__(self) -> str:
        return f"Node({self.kind}, {list(self.children)})"


@dataclass(frozen=True)
class Atom:
    text: str
    info: Optional[SourceInfo] = None

    def __repr__(self) -> str:
        return f"Atom({self.text!r})"


@dataclass(frozen=True)
class Ident:
    """An identifier: surface spelling, full name, top-level scopes."""

    raw: str
    name: Name
    preresolved: Tuple[Name, ...] = ()
    info: Optional[SourceInfo] = None

    def __repr__(self) -> str:
        return f"Ident({format_scoped(self)})"


@dataclass(frozen=True)
class Missing:
    def __repr__(self) -> str:
        return "Missing()"


Syntax = Union[Node, Atom, Ident, Missing]

MISSING = Missing()


def node(kind: str, *children: Syntax) -> Node:
    return Node(Name.of(kind), tuple(children))


def ident(name: Union[str, Name], preresolved: Iterable[Name] = ()) -> Ident:
    if isinstance(name, str):
        name = Name.of(name)
    raw = ".".join(str(p) for p in name.parts if isinstance(p, str))
    return Ident(raw, name, tuple(preresolved))


# Node kinds used by the kernel itself.  User syntax rules get generated
# kinds; these fixed ones back the built-in grammar.
KIND_QUOT = "quot"          # quot / quot.<cat>; children: [body]
KIND_DQUOT = "dquot"        # checked quotation, same layout
KIND_ANTIQUOT = "antiquot"  # antiquot / antiquot.<cat>; children: [payload]
KIND_SPLICE = "splice"      # splice / splice.<sep>; children: [antiquot]
KIND_SPLICEGROUP = "splicegroup"  # splicegroup / splicegroup.<sep>; children: items
KIND_SEPSEQ = "sepseq"      # elements interleaved with separator atoms
KIND_SEQ = "seq"            # plain element sequence
KIND_CMDSEQ = "cmdseq"      # several top-level commands from one expansion
KIND_CHOICE = "choice"      # overloaded reference candidates


def is_quotation(stx: Syntax) -> bool:
    return isinstance(stx, Node) and stx.kind.parts[:1] in ((KIND_QUOT,), (KIND_DQUOT,))


def quotation_category(stx: Node) -> Optional[Name]:
    """The explicit category of a quotation node, if one was written."""
    if len(stx.kind.parts) > 1:
        return Name(stx.kind.parts[1:])
    return None


def is_antiquot(stx: Syntax) -> bool:
    return isinstance(stx, Node) and stx.kind.parts[:1] == (KIND_ANTIQUOT,)


def is_splice(stx: Syntax) -> bool:
    return isinstance(stx, Node) and stx.kind.parts[0] in (KIND_SPLICE, KIND_SPLICEGROUP)


def antiquot_payload(stx: Node) -> Syntax:
    return stx.children[0]


def splice_separator(stx: Node) -> str:
    parts = stx.kind.parts
    return str(parts[1]) if len(parts) > 1 else ""


# ---------------------------------------------------------------------------
# Scope-aware operations on identifiers


class NotAnIdentifier(Exception):
    pass


def strip_top_level_scopes(stx: Syntax) -> Name:
    """The full (scoped) name of a binder, its top-level scopes discarded."""
    if not isinstance(stx, Ident):
        raise NotAnIdentifier(f"expected an identifier, got {stx!r}")
    return stx.name


def format_scoped(stx: Syntax) -> str:
    """Debug rendering ``n.msc1.….mscn{tsc1, …, tscn}`` of an identifier."""
    if not isinstance(stx, Ident):
        raise NotAnIdentifier(f"expected an identifier, got {stx!r}")
    out = str(stx.name)
    if stx.preresolved:
        out += "{" + ", ".join(str(t) for t in stx.preresolved) + "}"
    return out


# ---------------------------------------------------------------------------
# Rendering

_NO_SPACE_BEFORE = ")]⟩»,;"
_NO_SPACE_AFTER = "([⟨«"


def render(stx: Syntax) -> str:
    """Pretty-print a tree; parsed trees re-parse to the same structure."""
    return join_tokens(render_tokens(stx))


def join_tokens(tokens: Iterable[str]) -> str:
    out: list[str] = []
    prev = ""
    for tok in tokens:
        if (
            out
            and tok[0] not in _NO_SPACE_BEFORE
            and not (prev and prev[-1] in _NO_SPACE_AFTER)
        ):
            out.append(" ")
        out.append(tok)
        prev = tok
    return "".join(out)


def render_tokens(stx: Syntax) -> list:
    match stx:
        case Atom(text=text):
            return [text]
        case Ident():
            return [format_scoped(stx)]
        case Missing():
            return ["<missing>"]
        case Node(kind=kind, children=children):
            head = kind.parts[0]
            if head in (KIND_QUOT, KIND_DQUOT):
                open_tok = "`(" if head == KIND_QUOT else "``("
                cat = quotation_category(stx)
                toks = [open_tok]
                if cat is not None:
                    toks.append(str(cat) + "|")
                for c in children:
                    toks += render_tokens(c)
                toks.append(")")
                return toks
            if head == KIND_ANTIQUOT:
                payload = stx.children[0]
                suffix = ""
                if len(kind.parts) > 1:
                    suffix = ":" + str(Name(kind.parts[1:]))
                if isinstance(payload, Ident):
                    return ["$" + format_scoped(payload) + suffix]
                return ["$("] + render_tokens(payload) + [")" + suffix]
            if head == KIND_SPLICE:
                inner = render_tokens(stx.children[0])
                sep = splice_separator(stx)
                return inner[:-1] + [inner[-1] + sep + "*"]
            if head == KIND_SPLICEGROUP:
                toks = ["$["]
                for c in children:
                    toks += render_tokens(c)
                toks.append("]" + splice_separator(stx) + "*")
                return toks
            if head == "argdecl":
                name, _colon, cat = children
                return [f"{format_scoped(name)}:{format_scoped(cat)}"]
            if head == "slotprec":
                slot, prec = children
                return [f"{format_scoped(slot)}:{prec.text}"]
            if head == KIND_CHOICE:
                toks = ["choice("]
                for i, c in enumerate(children):
                    if i:
                        toks.append("|")
                    toks += render_tokens(c)
                toks.append(")")
                return toks
            if head == "app":
                fn, arg = children
                toks = _parenthesize(fn) if _app_prec(fn) < 1 else render_tokens(fn)
                toks += _parenthesize(arg) if _app_prec(arg) < 2 else render_tokens(arg)
                return toks
            if head in ("plus", "arrow"):
                left, op, right = children
                # plus is left-associative, arrow right-associative
                left_floor, right_floor = (0, 1) if head == "plus" else (1, 0)
                toks = (
                    _parenthesize(left)
                    if _infix_prec(left) < left_floor
                    else render_tokens(left)
                )
                toks += render_tokens(op)
                toks += (
                    _parenthesize(right)
                    if _infix_prec(right) < right_floor
                    else render_tokens(right)
                )
                return toks
            toks = []
            for c in children:
                toks += render_tokens(c)
            return toks
    raise TypeError(f"not syntax: {stx!r}")


# Synthesized trees can place any form in argument position; parsed trees
# only ever put leaves there, so added parentheses never change a re-parse.
_ATOMIC_KINDS = {
    "num", "tuple", "anonCtor", KIND_QUOT, KIND_DQUOT, KIND_ANTIQUOT,
    KIND_SPLICE, KIND_SPLICEGROUP, KIND_CHOICE,
}


def _app_prec(stx: Syntax) -> int:
    """2: fits anywhere in an application; 1: fits as the function;
    0: needs parentheses."""
    if isinstance(stx, Node):
        head = stx.kind.parts[0]
        if head in _ATOMIC_KINDS:
            return 2
        return 1 if head == "app" else 0
    return 2


def _infix_prec(stx: Syntax) -> int:
    """1: atomic or application; 0: an infix chain; -1: a low binder form."""
    if isinstance(stx, Node):
        head = stx.kind.parts[0]
        if head in _ATOMIC_KINDS or head == "app":
            return 1
        if head in ("plus", "arrow"):
            return 0
        return -1
    return 1


def _parenthesize(stx: Syntax) -> list:
    return ["("] + render_tokens(stx) + [")"]
