"""The recursive hygienic expander and per-command processing.

Expansion reduces macro uses to core forms and resolves every identifier
against the local and global contexts.  The expander never invents macro
scopes itself: scopes enter trees only when a quotation is instantiated
inside some transformer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Tuple

from .context import (
    Decl,
    GlobalContext,
    MacroTable,
    ScopeState,
    TransformerEnv,
)
from .errors import ExpansionError, KernelError, UnboundIdentifier
from .parser import (
    CatRef,
    K_ALT,
    K_APP,
    K_ARROW,
    K_DECLARE_CAT,
    K_DEF,
    K_DEF_TYPED,
    K_FUN,
    K_MACRO_RULES,
    K_MATCH,
    K_MR_ALT,
    K_NUM,
    K_PLUS,
    K_SLOT_PREC,
    K_SYNTAX,
    K_THEOREM,
    K_TUPLE,
    Lit,
    ParseRule,
    ParserTable,
)
from .precheck import Prechecker
from .quotation import (
    make_rule_transformer,
    process_pattern,
    process_quotation,
)
from .syntax import (
    Atom,
    Ident,
    KIND_CHOICE,
    KIND_CMDSEQ,
    KIND_SEPSEQ,
    KIND_SEQ,
    Missing,
    Name,
    Node,
    Symbol,
    Syntax,
    base_name,
    is_quotation,
    render,
    strip_top_level_scopes,
)

LocalContext = FrozenSet[Symbol]

EMPTY_LOCALS: LocalContext = frozenset()

_SEQ_KINDS = (Name.of(KIND_SEQ), Name.of(KIND_SEPSEQ))

# (kind, before, after) per macro step
TraceFn = Callable[[Name, Syntax, Syntax], None]


@dataclass
class ExpanderState:
    """Everything one run threads through: contexts, tables, the counter."""

    table: ParserTable = field(default_factory=ParserTable)
    gctx: GlobalContext = field(default_factory=GlobalContext)
    macros: MacroTable = field(default_factory=MacroTable)
    elaborators: Dict[Name, Callable] = field(default_factory=dict)
    tactics: Dict[Name, Callable] = field(default_factory=dict)
    scopes: ScopeState = field(default_factory=ScopeState)
    max_expansion_depth: int = 512
    single_scope: bool = False
    notation_precheck: bool = True
    on_macro_step: Optional[TraceFn] = None
    prechecker: Optional[Prechecker] = None

    def tenv(self) -> TransformerEnv:
        return TransformerEnv(self.gctx, self.scopes, self.single_scope)

    def make_prechecker(self) -> Prechecker:
        if self.prechecker is None:
            self.prechecker = Prechecker(self.gctx, self.macros)
        return self.prechecker


# ---------------------------------------------------------------------------
# Identifier resolution (the three rules)


def resolve_identifier(
    stx: Ident, lctx: LocalContext, gctx: GlobalContext
) -> Syntax:
    """Resolve a reference: local match wins, then top-level scopes plus
    matching globals, otherwise the identifier is unbound."""
    if stx.name in lctx:
        return Ident(stx.raw, stx.name, (), None)
    candidates: List[Symbol] = []
    for cand in tuple(stx.preresolved) + tuple(gctx.match_surface(stx.name)):
        if cand not in candidates:
            candidates.append(cand)
    if len(candidates) == 1:
        return Ident(stx.raw, candidates[0], (), None)
    if candidates:
        refs = tuple(Ident(stx.raw, c, (), None) for c in candidates)
        return Node(Name.of(KIND_CHOICE), refs)
    raise UnboundIdentifier(stx.raw, stx.info)


# ---------------------------------------------------------------------------
# Expansion


class Expander:
    def __init__(self, state: ExpanderState):
        self.state = state
        self.last_step_scope: Optional[int] = None

    # -- macro steps

    def expand_macro_step(self, stx: Node) -> Syntax:
        transformers = self.state.macros.lookup(stx.kind)
        if not transformers:
            raise ExpansionError(
                f"unexpected syntax kind '{stx.kind}' (no macro registered)",
                info=_info_of(stx),
            )
        state = self.state
        with state.scopes.fresh():
            tenv = state.tenv()
            try:
                for transformer in transformers:
                    out = transformer(stx, tenv)
                    if out is not None:
                        self.last_step_scope = state.scopes.peek()
                        if state.on_macro_step:
                            state.on_macro_step(stx.kind, stx, out)
                        return out
            except KernelError as err:
                err.frames.insert(0, (stx.kind, state.scopes.peek()))
                raise
        raise ExpansionError(
            f"no macro alternative matched '{render(stx)}'", info=_info_of(stx)
        )

    def _with_frame(self, kind: Name, fn):
        """Attribute errors in a macro's output to the macro that made it."""
        scope = self.last_step_scope
        try:
            return fn()
        except KernelError as err:
            err.frames.insert(0, (kind, scope))
            raise

    # -- terms

    def expand(self, stx: Syntax, lctx: LocalContext = EMPTY_LOCALS, depth: int = 0) -> Syntax:
        if depth > self.state.max_expansion_depth:
            raise ExpansionError("macro expansion depth exceeded")
        match stx:
            case Ident():
                return resolve_identifier(stx, lctx, self.state.gctx)
            case Atom() | Missing():
                return stx
            case Node(kind=kind, children=children):
                pass
            case _:
                raise ExpansionError(f"cannot expand {stx!r}")
        if kind == K_NUM:
            return stx
        if kind == K_FUN:
            return self._expand_fun(stx, lctx, depth)
        if kind in (K_PLUS, K_ARROW, K_APP) or kind in _SEQ_KINDS:
            return Node(kind, tuple(self.expand(c, lctx, depth) for c in children))
        if kind == K_MATCH:
            return self._expand_match(stx, lctx, depth)
        if kind == K_TUPLE and kind not in self.state.macros:
            # plain grouping when no tuple macros are installed
            elems = _seq_elements(children[1])
            if len(elems) == 1:
                return self.expand(elems[0], lctx, depth)
        if is_quotation(stx):
            raise ExpansionError(
                "quotations are only supported as macro right-hand sides",
                info=_info_of(stx),
            )
        if kind in self.state.elaborators and kind not in self.state.macros:
            # type-directed syntax is left for the elaborator; its term
            # children still participate in expansion and resolution
            return Node(kind, tuple(self.expand(c, lctx, depth) for c in children))
        out = self.expand_macro_step(stx)
        return self._with_frame(
            stx.kind, lambda: self.expand(out, lctx, depth + 1)
        )

    def _expand_fun(self, stx: Node, lctx: LocalContext, depth: int) -> Node:
        kw, binder, arrow, body = stx.children
        if not isinstance(binder, Ident):
            raise ExpansionError(
                f"binder must be an identifier, got '{render(binder)}'"
            )
        symbol = strip_top_level_scopes(binder)
        body2 = self.expand(body, lctx | {symbol}, depth)
        return Node(K_FUN, (kw, Ident(binder.raw, symbol, (), None), arrow, body2))

    def _expand_match(self, stx: Node, lctx: LocalContext, depth: int) -> Node:
        kw, discrs, with_, alts = stx.children
        discrs2 = self.expand(discrs, lctx, depth)
        out_alts = []
        for alt in _seq_elements(alts):
            if not (isinstance(alt, Node) and alt.kind == K_ALT):
                raise ExpansionError(f"malformed match alternative '{render(alt)}'")
            bar, pats, arrow, rhs = alt.children
            bound: set = set()
            pats2 = self._expand_pattern(pats, lctx, bound)
            rhs2 = self.expand(rhs, lctx | bound, depth)
            out_alts.append(Node(K_ALT, (bar, pats2, arrow, rhs2)))
        return Node(K_MATCH, (kw, discrs2, with_, Node(alts.kind, tuple(out_alts))))

    def _expand_pattern(self, stx: Syntax, lctx: LocalContext, bound: set) -> Syntax:
        """Pattern identifiers that match a global are references; all
        others bind."""
        match stx:
            case Ident(raw=raw, name=name, preresolved=pre):
                if pre or self.state.gctx.match_surface(name):
                    return resolve_identifier(stx, EMPTY_LOCALS, self.state.gctx)
                symbol = strip_top_level_scopes(stx)
                if raw != "_":
                    bound.add(symbol)
                return Ident(raw, symbol, (), None)
            case Node(kind=kind, children=children):
                return Node(
                    kind,
                    tuple(self._expand_pattern(c, lctx, bound) for c in children),
                )
            case _:
                return stx

    # -- commands

    def process_command(self, stx: Syntax, depth: int = 0) -> List[Syntax]:
        """Fully process one command; returns the final core commands.

        Macro commands are expanded and their outputs processed
        incrementally, so earlier declarations of one expansion are in the
        global context of later ones.
        """
        if depth > self.state.max_expansion_depth:
            raise ExpansionError("macro expansion depth exceeded")
        if isinstance(stx, Missing):
            return [stx]
        if not isinstance(stx, Node):
            raise ExpansionError(f"not a command: '{render(stx)}'")
        kind = stx.kind
        if kind == Name.of(KIND_CMDSEQ):
            out: List[Syntax] = []
            for c in stx.children:
                out.extend(self.process_command(c, depth))
            return out
        if kind in (K_DEF, K_DEF_TYPED):
            return [self._process_def(stx)]
        if kind == K_THEOREM:
            return [self._process_theorem(stx)]
        if kind == K_SYNTAX:
            return [self._process_syntax(stx)]
        if kind == K_MACRO_RULES:
            return [self._process_macro_rules(stx)]
        if kind == K_DECLARE_CAT:
            return [self._process_declare_cat(stx)]
        out_stx = self.expand_macro_step(stx)
        return self._with_frame(
            stx.kind, lambda: self.process_command(out_stx, depth + 1)
        )

    def _declare(self, binder: Syntax, decl: Decl) -> Symbol:
        if not isinstance(binder, Ident):
            raise ExpansionError(
                f"declaration name must be an identifier, got '{render(binder)}'"
            )
        symbol = strip_top_level_scopes(binder)
        if symbol in self.state.gctx:
            raise ExpansionError(f"'{symbol}' has already been declared")
        self.state.gctx.add(symbol, decl)
        return symbol

    def _process_def(self, stx: Node) -> Node:
        if stx.kind == K_DEF_TYPED:
            kw, name, colon, ty, assign, rhs = stx.children
            ty2: Optional[Syntax] = self.expand(ty)
        else:
            kw, name, assign, rhs = stx.children
            colon = ty2 = None
        rhs2 = self.expand(rhs)
        symbol = self._declare(name, Decl("def"))
        plain = Ident(name.raw if isinstance(name, Ident) else str(symbol), symbol, (), None)
        if ty2 is not None:
            return Node(K_DEF_TYPED, (kw, plain, colon, ty2, assign, rhs2))
        return Node(K_DEF, (kw, plain, assign, rhs2))

    def _process_theorem(self, stx: Node) -> Node:
        kw, name, binders, colon, target, assign, by = stx.children
        lctx = set()
        out_binders = []
        for b in _seq_elements(binders):
            open_, bname, bcolon, sort, close = b.children
            symbol = strip_top_level_scopes(bname)
            lctx.add(symbol)
            out_binders.append(
                Node(b.kind, (open_, Ident(bname.raw, symbol, (), None), bcolon, sort, close))
            )
        target2 = self.expand(target, frozenset(lctx))
        symbol = self._declare(name, Decl("theorem"))
        plain = Ident(name.raw if isinstance(name, Ident) else str(symbol), symbol, (), None)
        return Node(
            K_THEOREM,
            (kw, plain, Node(binders.kind, tuple(out_binders)), colon, target2, assign, by),
        )

    def _process_syntax(self, stx: Node) -> Node:
        kw, items, colon, cat_ident = stx.children
        rule_items: List = []
        for item in _seq_elements(items):
            if isinstance(item, Atom):
                rule_items.append(Lit(_string_content(item)))
            elif isinstance(item, Ident):
                # structural name positions ignore macro scopes
                rule_items.append(CatRef(base_name(item.name)))
            elif isinstance(item, Node) and item.kind == K_SLOT_PREC:
                slot, prec = item.children
                rule_items.append(CatRef(base_name(slot.name), int(prec.text)))
            else:
                raise ExpansionError(f"bad syntax rule item '{render(item)}'")
        if not isinstance(cat_ident, Ident):
            raise ExpansionError("syntax rule needs a category name")
        cat = base_name(cat_ident.name)
        kind = self.state.table.gen_kind(rule_items)
        self.state.table.register_rule(cat, ParseRule(kind, tuple(rule_items)))
        return stx

    def _process_macro_rules(self, stx: Node) -> Node:
        kw, alts = stx.children
        rules = []
        out_alts = []
        for alt in _seq_elements(alts):
            bar, pat, arrow, rhs = alt.children
            if not (isinstance(pat, Node) and is_quotation(pat)):
                raise ExpansionError(
                    f"macro_rules left-hand side must be a quotation, got '{render(pat)}'"
                )
            if not (isinstance(rhs, Node) and is_quotation(rhs)):
                raise ExpansionError(
                    f"macro_rules right-hand side must be a quotation, got '{render(rhs)}'"
                )
            pattern = process_pattern(pat)
            if rhs.kind.parts[0] == "dquot":
                self.state.make_prechecker().check(rhs.children[0])
            template = process_quotation(rhs, self.state.gctx)
            rules.append((pattern, template))
            shown = Node(Name(("quot",) + rhs.kind.parts[1:]), (template.body,))
            out_alts.append(Node(K_MR_ALT, (bar, pat, arrow, shown)))
        transformer = make_rule_transformer(rules)
        self.state.macros.register(rules[0][0].kind, transformer)
        return Node(K_MACRO_RULES, (kw, Node(alts.kind, tuple(out_alts))))

    def _process_declare_cat(self, stx: Node) -> Node:
        kw, name = stx.children
        if not isinstance(name, Ident):
            raise ExpansionError("declare_syntax_cat needs a category name")
        self.state.table.add_category(base_name(name.name))
        return stx


def _seq_elements(stx: Syntax) -> Tuple[Syntax, ...]:
    if isinstance(stx, Node) and stx.kind in _SEQ_KINDS:
        return tuple(
            c for c in stx.children if not (isinstance(c, Atom) and c.text in (",", ";"))
        )
    return (stx,)


def _string_content(atom: Atom) -> str:
    text = atom.text
    if len(text) >= 2 and text.startswith('"') and text.endswith('"'):
        return text[1:-1]
    return text


def _info_of(stx: Syntax):
    match stx:
        case Atom(info=info) | Ident(info=info):
            return info
        case Node(children=children):
            for c in children:
                info = _info_of(c)
                if info is not None:
                    return info
    return None
