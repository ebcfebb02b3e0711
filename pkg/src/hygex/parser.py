"""Tokenizer and table-driven parser for the command language.

The rule table is extended at runtime by ``syntax`` and
``declare_syntax_cat`` commands; literal tokens of registered rules become
keywords from that point on.  Parsing itself is pure given a snapshot of
the table, and the driver only mutates the table between commands.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple, Union

from .errors import LexError, ParseError
from .syntax import (
    Atom,
    Ident,
    KIND_ANTIQUOT,
    KIND_CMDSEQ,
    KIND_DQUOT,
    KIND_QUOT,
    KIND_SEPSEQ,
    KIND_SEQ,
    KIND_SPLICE,
    KIND_SPLICEGROUP,
    Name,
    Node,
    SourceInfo,
    Syntax,
)

# Node kinds of the built-in grammar.
K_NUM = Name.of("num")
K_FUN = Name.of("fun")
K_FUN_MULTI = Name.of("funMulti")
K_FUN_MATCH = Name.of("funMatch")
K_MATCH = Name.of("match")
K_ALT = Name.of("alt")
K_TUPLE = Name.of("tuple")
K_ANON_CTOR = Name.of("anonCtor")
K_APP = Name.of("app")
K_PLUS = Name.of("plus")
K_ARROW = Name.of("arrow")
K_DEF = Name.of("defn")
K_DEF_TYPED = Name.of("defnTyped")
K_THEOREM = Name.of("theorem")
K_BINDER = Name.of("binder")
K_BY = Name.of("by")
K_SYNTAX = Name.of("syntaxCmd")
K_SLOT_PREC = Name.of("slotprec")
K_MACRO_RULES = Name.of("macroRules")
K_MR_ALT = Name.of("mrAlt")
K_DECLARE_CAT = Name.of("declCat")
K_MACRO = Name.of("macroDecl")
K_ARGDECL = Name.of("argdecl")
K_NOTATION = Name.of("notationDecl")
K_INTRO = Name.of("intro")
K_EXACT = Name.of("exact")
K_ASSUMPTION = Name.of("assumption")
K_SKIP = Name.of("skip")
K_FAIL = Name.of("fail")
K_TRY = Name.of("try")
K_TSEQ = Name.of("tseq")
K_TPAREN = Name.of("tparen")

CAT_TERM = Name.of("term")
CAT_COMMAND = Name.of("command")
CAT_TACTIC = Name.of("tactic")
CAT_IDENT = Name.of("ident")  # pseudo-category: a single identifier

APP_PREC = 100

_CORE_KEYWORDS = {
    "def", "theorem", "syntax", "macro_rules", "declare_syntax_cat",
    "fun", "match", "with", "by", "Prop",
    "intro", "exact", "assumption", "skip", "fail", "try",
    ":=", "=>", ":", "|", "+", "→",
}

_SPECIALS = {"(", ")", "[", "]", "⟨", "⟩", ",", ";", "*"}


# ---------------------------------------------------------------------------
# Rules and categories


@dataclass(frozen=True)
class Lit:
    text: str


@dataclass(frozen=True)
class CatRef:
    cat: Name
    prec: int = 0


Item = Union[Lit, CatRef]


@dataclass(frozen=True)
class ParseRule:
    kind: Name
    items: Tuple[Item, ...]
    prec: int = 0
    right_assoc: bool = False

    @property
    def leading(self) -> bool:
        return isinstance(self.items[0], Lit)


@dataclass
class Category:
    name: Name
    rules: List[ParseRule] = field(default_factory=list)  # newest first


class ParserTable:
    """Syntax categories, their rules, and the live keyword set."""

    def __init__(self) -> None:
        self.categories: Dict[Name, Category] = {}
        self.keywords: Set[str] = set(_CORE_KEYWORDS)
        self.kinds: Set[Name] = set()
        self.command_heads: Set[str] = {
            "def", "theorem", "syntax", "macro_rules", "declare_syntax_cat",
        }
        for cat in (CAT_TERM, CAT_COMMAND, CAT_TACTIC):
            self.categories[cat] = Category(cat)
        for kind in (
            K_NUM, K_FUN, K_FUN_MULTI, K_FUN_MATCH, K_MATCH, K_ALT, K_TUPLE,
            K_ANON_CTOR, K_APP, K_DEF, K_DEF_TYPED,
            K_THEOREM, K_BINDER, K_BY, K_SYNTAX, K_MACRO_RULES, K_MR_ALT,
            K_DECLARE_CAT, K_MACRO, K_ARGDECL, K_NOTATION, K_INTRO, K_EXACT,
            K_ASSUMPTION, K_SKIP, K_FAIL, K_TRY, K_TSEQ, K_TPAREN,
        ):
            self.kinds.add(kind)
        # core infix rules; everything else term-level is built in
        self.register_rule(CAT_TERM, ParseRule(K_PLUS, (CatRef(CAT_TERM), Lit("+"), CatRef(CAT_TERM)), prec=65))
        self.register_rule(CAT_TERM, ParseRule(K_ARROW, (CatRef(CAT_TERM), Lit("→"), CatRef(CAT_TERM)), prec=25, right_assoc=True))

    def snapshot_keywords(self) -> frozenset:
        return frozenset(self.keywords)

    def enable_command_head(self, name: str) -> None:
        self.command_heads.add(name)
        self.keywords.add(name)

    def add_category(self, name: Name) -> None:
        if name in self.categories or name in (CAT_IDENT,):
            raise ParseError(f"syntax category '{name}' already exists")
        self.categories[name] = Category(name)

    def has_category(self, name: Name) -> bool:
        return name in self.categories or name == CAT_IDENT

    def register_rule(self, cat: Name, rule: ParseRule) -> None:
        if cat not in self.categories:
            raise ParseError(f"unknown syntax category '{cat}'")
        if rule.kind in self.kinds:
            raise ParseError(f"duplicate syntax kind '{rule.kind}'")
        for item in rule.items:
            if isinstance(item, CatRef) and not self.has_category(item.cat):
                raise ParseError(f"unknown syntax category '{item.cat}'")
        if not rule.leading and not (
            len(rule.items) >= 2 and isinstance(rule.items[1], Lit)
        ):
            raise ParseError(
                "rules starting with a category must have a literal token next"
            )
        self.categories[cat].rules.insert(0, rule)
        self.kinds.add(rule.kind)
        for item in rule.items:
            if isinstance(item, Lit):
                self.keywords.add(item.text)

    def gen_kind(self, items: Sequence[Item]) -> Name:
        base = ""
        for item in items:
            if isinstance(item, Lit):
                base = item.text
                break
        if not base:
            base = str(items[0].cat) + "_rule"
        kind = Name((base,))
        n = 1
        while kind in self.kinds:
            n += 1
            kind = Name((f"{base}_{n}",))
        return kind


# ---------------------------------------------------------------------------
# Tokens


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | ident | num | str | special | quote | dquote | eof
    text: str
    info: SourceInfo
    end: int


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_rest(c: str) -> bool:
    return c.isalnum() or c in "_'"


class Lexer:
    def __init__(self, text: str, keywords: frozenset):
        self.text = text
        self.keywords = keywords
        self._line_starts = [0]
        for i, c in enumerate(text):
            if c == "\n":
                self._line_starts.append(i + 1)
        self._symbolic = sorted(
            (k for k in (keywords | _SPECIALS) if not _is_ident_start(k[0])),
            key=len,
            reverse=True,
        )

    def _info(self, offset: int) -> SourceInfo:
        line = bisect.bisect_right(self._line_starts, offset)
        return SourceInfo(line, offset - self._line_starts[line - 1] + 1, offset)

    def token_at(self, pos: int) -> Token:
        text = self.text
        n = len(text)
        while pos < n:
            if text[pos].isspace():
                pos += 1
            elif text.startswith("--", pos):
                while pos < n and text[pos] != "\n":
                    pos += 1
            else:
                break
        info = self._info(pos)
        if pos >= n:
            return Token("eof", "", info, pos)
        c = text[pos]
        if c == "`":
            if text.startswith("``(", pos):
                return Token("dquote", "``(", info, pos + 3)
            if text.startswith("`(", pos):
                return Token("quote", "`(", info, pos + 2)
            raise LexError("stray '`' (expected '`(' or '``(')", info)
        if c == "$":
            if text.startswith("$[", pos):
                return Token("special", "$[", info, pos + 2)
            return Token("special", "$", info, pos + 1)
        if c == '"':
            end = pos + 1
            while end < n and text[end] != '"':
                if text[end] == "\n":
                    break
                end += 1
            if end >= n or text[end] != '"':
                raise LexError("unterminated string literal", info)
            return Token("str", text[pos : end + 1], info, end + 1)
        if c == "«":
            end = pos + 1
            while end < n and text[end] != "»":
                end += 1
            if end >= n:
                raise LexError("unterminated '«' identifier", info)
            return Token("ident", text[pos + 1 : end], info, end + 1)
        for kw in self._symbolic:
            if text.startswith(kw, pos):
                kind = "special" if kw in _SPECIALS else "keyword"
                return Token(kind, kw, info, pos + len(kw))
        if c.isdigit():
            end = pos
            while end < n and text[end].isdigit():
                end += 1
            return Token("num", text[pos:end], info, end)
        if _is_ident_start(c):
            end = pos
            while end < n and _is_ident_rest(text[end]):
                end += 1
            while (
                end + 1 < n
                and text[end] == "."
                and _is_ident_start(text[end + 1])
            ):
                end += 1
                while end < n and _is_ident_rest(text[end]):
                    end += 1
            word = text[pos:end]
            kind = "keyword" if word in self.keywords else "ident"
            return Token(kind, word, info, end)
        raise LexError(f"illegal character {c!r}", info)


def tokenize(text: str, keywords: frozenset = frozenset()) -> List[Token]:
    """Tokenize a whole input with a fixed keyword set (tests, tooling)."""
    lexer = Lexer(text, keywords | frozenset(_CORE_KEYWORDS))
    out = []
    pos = 0
    while True:
        tok = lexer.token_at(pos)
        if tok.kind == "eof":
            return out
        out.append(tok)
        pos = tok.end


# ---------------------------------------------------------------------------
# Parser


class Parser:
    def __init__(self, text: str, table: ParserTable, pos: int = 0):
        self.table = table
        self.lexer = Lexer(text, table.snapshot_keywords())
        self.pos = pos
        self.quot_depth = 0

    # -- token plumbing

    def peek(self, ahead: int = 0) -> Token:
        pos = self.pos
        tok = self.lexer.token_at(pos)
        for _ in range(ahead):
            pos = tok.end
            tok = self.lexer.token_at(pos)
        return tok

    def bump(self) -> Token:
        tok = self.peek()
        self.pos = tok.end
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("keyword", "special")

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    def expect(self, text: str) -> Atom:
        tok = self.peek()
        if tok.kind in ("keyword", "special") and tok.text == text:
            self.bump()
            return Atom(tok.text, tok.info)
        raise ParseError(f"expected '{text}', found {describe(tok)}", tok.info)

    def expect_ident(self) -> Ident:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected identifier, found {describe(tok)}", tok.info)
        self.bump()
        return Ident(tok.text, Name.of(tok.text), (), tok.info)

    def _ident_or_antiquot(self) -> Syntax:
        if self.quot_depth and self.at("$"):
            return self.parse_antiquot()
        return self.expect_ident()

    # -- categories

    def parse_category(self, cat: Name, min_prec: int = 0) -> Syntax:
        builtin = cat in (CAT_IDENT, CAT_TERM, CAT_TACTIC, CAT_COMMAND)
        if self.quot_depth and self.peek().text in ("$", "$["):
            if builtin or self.peek().text == "$[":
                # a hole can stand for a whole slot
                return self.parse_antiquot()
            return self._parse_user_category_antiquot(cat, min_prec)
        if cat == CAT_IDENT:
            return self.expect_ident()
        if cat == CAT_TERM:
            return self.parse_term(min_prec)
        if cat == CAT_TACTIC:
            return self.parse_tactic(min_prec)
        if cat == CAT_COMMAND:
            return self.parse_command()
        category = self._category(cat)
        left = self._parse_leading(category)
        return self._parse_trailing(category, left, min_prec)

    def _category(self, cat: Name) -> Category:
        category = self.table.categories.get(cat)
        if category is None:
            raise ParseError(f"unknown syntax category '{cat}'", self.peek().info)
        return category

    def _parse_user_category_antiquot(self, cat: Name, min_prec: int) -> Syntax:
        """A hole at a user-category slot: `$x:cat` stands for the whole
        slot; a bare `$x` is first offered to the category's own rules."""
        start = self.pos
        anti = self.parse_antiquot()
        if anti.kind.parts[1:] == cat.parts:
            return anti
        self.pos = start
        category = self._category(cat)
        try:
            left = self._parse_leading(category)
            return self._parse_trailing(category, left, min_prec)
        except ParseError:
            self.pos = start
            return self.parse_antiquot()

    def _parse_leading(self, category: Category) -> Syntax:
        tok = self.peek()
        best: Optional[ParseError] = None

        def note(err: ParseError) -> None:
            nonlocal best
            if (
                best is None
                or best.info is None
                or (err.info and err.info.offset > best.info.offset)
            ):
                best = err

        if tok.kind in ("keyword", "special"):
            for rule in category.rules:
                if rule.leading and rule.items[0].text == tok.text:
                    start = self.pos
                    try:
                        return self._parse_rule_items(rule, [])
                    except ParseError as err:
                        note(err)
                        self.pos = start
        for rule in category.rules:
            if rule.leading or rule.items[0].cat == category.name:
                continue
            start = self.pos
            try:
                head = self.parse_category(rule.items[0].cat, rule.items[0].prec)
                return self._parse_rule_items(rule, [head], from_item=1)
            except ParseError as err:
                note(err)
                self.pos = start
        if best is not None:
            raise best
        raise ParseError(
            f"expected {category.name}, found {describe(tok)}", tok.info
        )

    def _parse_trailing(self, category: Category, left: Syntax, min_prec: int) -> Syntax:
        while True:
            tok = self.peek()
            rule = None
            for cand in category.rules:
                if (
                    not cand.leading
                    and isinstance(cand.items[0], CatRef)
                    and cand.items[0].cat == category.name
                    and cand.prec >= min_prec
                    and isinstance(cand.items[1], Lit)
                    and tok.text == cand.items[1].text
                    and tok.kind in ("keyword", "special")
                ):
                    rule = cand
                    break
            if rule is None:
                return left
            left = self._parse_rule_items(rule, [left], from_item=1)

    def _parse_rule_items(
        self, rule: ParseRule, children: List[Syntax], from_item: int = 0
    ) -> Node:
        items = rule.items
        for i in range(from_item, len(items)):
            item = items[i]
            if isinstance(item, Lit):
                children.append(self.expect(item.text))
            else:
                prec = item.prec
                if i == len(items) - 1 and isinstance(items[0], CatRef):
                    # rightmost operand of an infix-like rule
                    prec = max(prec, rule.prec if rule.right_assoc else rule.prec + 1)
                children.append(self.parse_category(item.cat, prec))
        return Node(rule.kind, tuple(children))

    # -- terms

    def parse_term(self, min_prec: int = 0) -> Syntax:
        left = self._parse_term_leading()
        category = self.table.categories[CAT_TERM]
        while True:
            before = self.pos
            left2 = self._parse_trailing(category, left, min_prec)
            if (
                min_prec <= APP_PREC
                and self._starts_term_leaf(self.peek())
                and self._same_line(self.peek())
            ):
                arg = self._parse_term_leading()
                left = Node(K_APP, (left2, arg))
                continue
            left = left2
            if self.pos == before:
                return left

    def _same_line(self, tok: Token) -> bool:
        # an application argument must not drift to the next line; this is
        # what separates a trailing term from the next top-level command
        if self.pos == 0:
            return True
        return self.lexer._info(self.pos - 1).line == tok.info.line

    def _starts_term_leaf(self, tok: Token) -> bool:
        if tok.kind in ("ident", "num", "quote", "dquote"):
            return True
        if tok.kind == "special" and tok.text in ("(", "⟨"):
            return True
        if self.quot_depth and tok.text == "$":
            # an antiquotation explicitly tagged with a non-term category
            # belongs to an enclosing sequence, not to an application
            name = self.peek(1)
            colon = self.peek(2)
            cat = self.peek(3)
            if (
                name.kind == "ident"
                and colon.text == ":"
                and colon.info.offset == name.end
                and cat.kind in ("ident", "keyword")
                and cat.info.offset == colon.end
                and cat.text not in ("term", "ident", "num")
            ):
                return False
            return True
        return False

    def _parse_term_leading(self) -> Syntax:
        tok = self.peek()
        if self.quot_depth and tok.text in ("$", "$["):
            return self.parse_antiquot()
        if tok.kind == "ident":
            self.bump()
            return Ident(tok.text, Name.of(tok.text), (), tok.info)
        if tok.kind == "num":
            self.bump()
            return Node(K_NUM, (Atom(tok.text, tok.info),))
        if tok.kind in ("quote", "dquote"):
            return self.parse_quotation()
        if tok.text == "(":
            open_ = self.expect("(")
            elems = self._parse_elements(
                lambda: self.parse_term(0), ",", lambda: self.at(")")
            )
            close = self.expect(")")
            return Node(K_TUPLE, (open_, elems, close))
        if tok.text == "⟨":
            open_ = self.expect("⟨")
            elems = self._parse_elements(
                lambda: self.parse_term(0), ",", lambda: self.at("⟩")
            )
            close = self.expect("⟩")
            return Node(K_ANON_CTOR, (open_, elems, close))
        if tok.text == "fun":
            return self._parse_fun()
        if tok.text == "match":
            return self._parse_match()
        if tok.kind == "keyword":
            for rule in self.table.categories[CAT_TERM].rules:
                if rule.leading and rule.items[0].text == tok.text:
                    return self._parse_rule_items(rule, [])
        raise ParseError(f"expected term, found {describe(tok)}", tok.info)

    def _parse_fun(self) -> Node:
        fun = self.expect("fun")
        if self.at("|"):
            alts = self._parse_alts()
            return Node(K_FUN_MATCH, (fun, alts))
        binders: List[Syntax] = []
        has_splice = False
        while not self.at("=>"):
            item = self._parse_seq_item(self._ident_or_antiquot, None)
            if isinstance(item, Node) and item.kind.parts[0] in (KIND_SPLICE, KIND_SPLICEGROUP):
                has_splice = True
            binders.append(item)
            if len(binders) > 64:
                raise ParseError("runaway binder list", self.peek().info)
        if not binders:
            raise ParseError("expected at least one binder", self.peek().info)
        arrow = self.expect("=>")
        body = self.parse_term(0)
        if len(binders) == 1 and not has_splice:
            return Node(K_FUN, (fun, binders[0], arrow, body))
        return Node(K_FUN_MULTI, (fun, Node(Name.of(KIND_SEQ), tuple(binders)), arrow, body))

    def _parse_match(self) -> Node:
        kw = self.expect("match")
        discrs = self._parse_elements(
            lambda: self.parse_term(0), ",", lambda: self.at("with")
        )
        with_ = self.expect("with")
        alts = self._parse_alts()
        return Node(K_MATCH, (kw, discrs, with_, alts))

    def _parse_alts(self) -> Node:
        alts: List[Syntax] = []
        while True:
            tok = self.peek()
            if tok.text == "|":
                alts.append(self._parse_alt())
            elif self.quot_depth and tok.text in ("$", "$["):
                alts.append(self._parse_seq_item(self._parse_alt, None))
            else:
                break
        if not alts:
            raise ParseError("expected at least one '|' alternative", self.peek().info)
        return Node(Name.of(KIND_SEQ), tuple(alts))

    def _parse_alt(self) -> Node:
        bar = self.expect("|")
        pats = self._parse_elements(
            lambda: self.parse_term(0), ",", lambda: self.at("=>")
        )
        arrow = self.expect("=>")
        rhs = self.parse_term(0)
        return Node(K_ALT, (bar, pats, arrow, rhs))

    # -- element sequences with splice support

    def _parse_elements(
        self,
        elem_fn: Callable[[], Syntax],
        sep: Optional[str],
        at_end: Callable[[], bool],
    ) -> Node:
        """Parse ``sep``-separated elements into a sequence node.

        Inside quotations, an element may be an antiquotation splice; at
        most one splice is allowed per sequence.
        """
        children: List[Syntax] = []
        splices = 0
        while not at_end():
            if children and sep is not None:
                children.append(self.expect(sep))
            item = self._parse_seq_item(elem_fn, sep)
            if isinstance(item, Node) and item.kind.parts[0] in (KIND_SPLICE, KIND_SPLICEGROUP):
                splices += 1
                if splices > 1:
                    raise ParseError("at most one splice per sequence", self.peek().info)
            children.append(item)
        kind = KIND_SEPSEQ if sep is not None else KIND_SEQ
        return Node(Name.of(kind), tuple(children))

    def _parse_seq_item(
        self, elem_fn: Callable[[], Syntax], sep: Optional[str]
    ) -> Syntax:
        tok = self.peek()
        if self.quot_depth and tok.text == "$[":
            return self._parse_splicegroup(elem_fn)
        if self.quot_depth and tok.text == "$":
            # commit to the antiquotation only when it is a splice item;
            # otherwise it is an ordinary leaf of the element grammar
            start = self.pos
            anti = self.parse_antiquot()
            spliced = self._maybe_splice_suffix(anti)
            if spliced is not anti:
                return spliced
            self.pos = start
        return elem_fn()

    def _maybe_splice_suffix(self, anti: Node) -> Syntax:
        tok = self.peek()
        if tok.text == "*" and tok.kind == "special":
            self.bump()
            return Node(Name((KIND_SPLICE,)), (anti,))
        if (
            tok.kind == "special"
            and tok.text in (",", ";")
            and self.peek(1).text == "*"
            and self.peek(1).info.offset == tok.end
        ):
            self.bump()
            self.bump()
            return Node(Name((KIND_SPLICE, tok.text)), (anti,))
        return anti

    def _parse_splicegroup(self, elem_fn: Callable[[], Syntax]) -> Node:
        self.expect("$[")
        inner = self._parse_seq_item(elem_fn, None)
        close = self.expect("]")
        tok = self.peek()
        sep = ""
        if tok.kind == "special" and tok.text in (",", ";") and self.peek(1).text == "*":
            sep = tok.text
            self.bump()
        self.expect("*")
        parts = (KIND_SPLICEGROUP, sep) if sep else (KIND_SPLICEGROUP,)
        return Node(Name(parts), (inner,))

    # -- antiquotations and quotations

    def parse_antiquot(self) -> Node:
        tok = self.peek()
        if tok.text == "$[":
            # bare nested splice in slot position: parse as term element
            return self._parse_splicegroup(lambda: self.parse_term(0))
        dollar = self.expect("$")
        tok = self.peek()
        if tok.text == "(":
            self.expect("(")
            payload: Syntax = self.parse_term(0)
            self.expect(")")
            payload_end = self.pos
        elif tok.kind == "ident":
            payload = self.expect_ident()
            payload_end = tok.end
        else:
            raise ParseError(
                f"expected identifier or '(' after '$', found {describe(tok)}",
                tok.info,
            )
        colon = self.peek()
        suffix: Tuple = ()
        if (
            colon.text == ":"
            and colon.info.offset == payload_end
            and self.peek(1).kind in ("ident", "keyword")
            and self.peek(1).info.offset == colon.end
        ):
            self.bump()
            cat = self.bump()
            tag = Name.of(cat.text)
            if not (self.table.has_category(tag) or tag in self.table.kinds):
                raise ParseError(
                    f"unknown antiquotation category '{cat.text}'", cat.info
                )
            suffix = tuple(tag.parts)
        return Node(Name((KIND_ANTIQUOT,) + suffix), (payload,))

    def parse_quotation(self) -> Node:
        tok = self.bump()
        if tok.kind not in ("quote", "dquote"):
            raise ParseError(f"expected quotation, found {describe(tok)}", tok.info)
        head = KIND_QUOT if tok.kind == "quote" else KIND_DQUOT
        self.quot_depth += 1
        try:
            cat_tok = self.peek()
            if (
                cat_tok.kind == "ident"
                and self.peek(1).text == "|"
                and self.table.has_category(Name.of(cat_tok.text))
            ):
                self.bump()
                self.bump()
                cat = Name.of(cat_tok.text)
                if cat == CAT_TACTIC:
                    body: Syntax = self.parse_tactic_seq()
                else:
                    body = self.parse_category(cat, 0)
                self.expect(")")
                return Node(Name((head,) + cat.parts), (body,))
            body = self._parse_quotation_body()
            self.expect(")")
            return Node(Name((head,)), (body,))
        finally:
            self.quot_depth -= 1

    def _parse_quotation_body(self) -> Syntax:
        start = self.pos
        term_result: Optional[Tuple[Syntax, int]] = None
        term_err: Optional[ParseError] = None
        try:
            body = self.parse_term(0)
            if self.at(")"):
                term_result = (body, self.pos)
        except ParseError as err:
            term_err = err
        self.pos = start
        cmd_result: Optional[Tuple[Syntax, int]] = None
        cmd_err: Optional[ParseError] = None
        try:
            cmds = [self.parse_command()]
            while not self.at(")") and not self.at_eof():
                cmds.append(self.parse_command())
            if self.at(")"):
                body = cmds[0] if len(cmds) == 1 else Node(Name.of(KIND_CMDSEQ), tuple(cmds))
                cmd_result = (body, self.pos)
        except ParseError as err:
            cmd_err = err
        if term_result and cmd_result:
            if term_result[0] == cmd_result[0]:
                self.pos = term_result[1]
                return term_result[0]
            raise ParseError(
                "ambiguous quotation: parses as both a term and a command",
                self.lexer._info(start),
            )
        if term_result:
            self.pos = term_result[1]
            return term_result[0]
        if cmd_result:
            self.pos = cmd_result[1]
            return cmd_result[0]
        raise term_err or cmd_err or ParseError(
            "empty quotation", self.lexer._info(start)
        )

    # -- tactics

    def parse_tactic(self, min_prec: int = 0) -> Syntax:
        tok = self.peek()
        if self.quot_depth and tok.text in ("$", "$["):
            return self.parse_antiquot()
        if tok.text == "(":
            open_ = self.expect("(")
            inner = self.parse_tactic_seq()
            close = self.expect(")")
            return Node(K_TPAREN, (open_, inner, close))
        if tok.text == "intro":
            kw = self.expect("intro")
            name = self._ident_or_antiquot()
            return Node(K_INTRO, (kw, name))
        if tok.text == "exact":
            kw = self.expect("exact")
            term = self.parse_term(0)
            return Node(K_EXACT, (kw, term))
        for text, kind in (("assumption", K_ASSUMPTION), ("skip", K_SKIP), ("fail", K_FAIL)):
            if tok.text == text:
                kw = self.expect(text)
                return Node(kind, (kw,))
        if tok.text == "try":
            kw = self.expect("try")
            inner = self.parse_tactic(0)
            return Node(K_TRY, (kw, inner))
        if tok.kind == "keyword":
            for rule in self.table.categories[CAT_TACTIC].rules:
                if rule.leading and rule.items[0].text == tok.text:
                    return self._parse_rule_items(rule, [])
        raise ParseError(f"expected tactic, found {describe(tok)}", tok.info)

    def parse_tactic_seq(self) -> Syntax:
        first = self.parse_tactic(0)
        if self.at(";"):
            sep = self.expect(";")
            rest = self.parse_tactic_seq()
            return Node(K_TSEQ, (first, sep, rest))
        return first

    # -- commands

    def parse_command(self) -> Syntax:
        tok = self.peek()
        if self.quot_depth and tok.text in ("$",):
            return self.parse_antiquot()
        if tok.text == "def":
            return self._parse_def()
        if tok.text == "theorem":
            return self._parse_theorem()
        if tok.text == "syntax":
            return self._parse_syntax_cmd()
        if tok.text == "macro_rules":
            return self._parse_macro_rules()
        if tok.text == "declare_syntax_cat":
            kw = self.expect("declare_syntax_cat")
            name = self.expect_ident()
            return Node(K_DECLARE_CAT, (kw, name))
        if tok.text == "macro" and "macro" in self.table.command_heads:
            return self._parse_macro_decl()
        if tok.text == "notation" and "notation" in self.table.command_heads:
            return self._parse_notation_decl()
        if tok.kind == "keyword":
            for rule in self.table.categories[CAT_COMMAND].rules:
                if rule.leading and rule.items[0].text == tok.text:
                    return self._parse_rule_items(rule, [])
        raise ParseError(f"unknown command, found {describe(tok)}", tok.info)

    def _parse_def(self) -> Node:
        kw = self.expect("def")
        name = self._ident_or_antiquot()
        if self.at(":"):
            colon = self.expect(":")
            ty = self.parse_term(0)
            assign = self.expect(":=")
            value = self.parse_term(0)
            return Node(K_DEF_TYPED, (kw, name, colon, ty, assign, value))
        assign = self.expect(":=")
        value = self.parse_term(0)
        return Node(K_DEF, (kw, name, assign, value))

    def _parse_theorem(self) -> Node:
        kw = self.expect("theorem")
        name = self._ident_or_antiquot()
        binders: List[Syntax] = []
        while (
            self.at("(")
            and self.peek(2).text == ":"
            and self.peek(3).text == "Prop"
        ):
            open_ = self.expect("(")
            bname = self.expect_ident()
            colon = self.expect(":")
            sort = self.expect("Prop")
            close = self.expect(")")
            binders.append(Node(K_BINDER, (open_, bname, colon, sort, close)))
        colon = self.expect(":")
        target = self.parse_term(0)
        assign = self.expect(":=")
        by = self.expect("by")
        script = self.parse_tactic_seq()
        return Node(
            K_THEOREM,
            (kw, name, Node(Name.of(KIND_SEQ), tuple(binders)), colon, target,
             assign, Node(K_BY, (by, script))),
        )

    def _parse_syntax_cmd(self) -> Node:
        kw = self.expect("syntax")
        items: List[Syntax] = []
        while not self.at(":"):
            tok = self.peek()
            if tok.kind == "str":
                self.bump()
                items.append(Atom(tok.text, tok.info))
            elif tok.kind in ("ident", "keyword") and tok.text != ":":
                self.bump()
                slot = Ident(tok.text, Name.of(tok.text), (), tok.info)
                colon = self.peek()
                # a tight `cat:N` raises the slot's minimum precedence
                if (
                    colon.text == ":"
                    and colon.info.offset == tok.end
                    and self.peek(1).kind == "num"
                    and self.peek(1).info.offset == colon.end
                ):
                    self.bump()
                    prec = self.bump()
                    items.append(
                        Node(K_SLOT_PREC, (slot, Atom(prec.text, prec.info)))
                    )
                else:
                    items.append(slot)
            else:
                raise ParseError(
                    f"expected string literal or category, found {describe(tok)}",
                    tok.info,
                )
        if not items:
            raise ParseError("empty syntax rule", self.peek().info)
        colon = self.expect(":")
        cat = self.expect_ident()
        return Node(K_SYNTAX, (kw, Node(Name.of(KIND_SEQ), tuple(items)), colon, cat))

    def _parse_macro_rules(self) -> Node:
        kw = self.expect("macro_rules")
        alts: List[Syntax] = []
        while self.at("|"):
            bar = self.expect("|")
            pat = self.parse_term(0)
            arrow = self.expect("=>")
            rhs = self.parse_term(0)
            alts.append(Node(K_MR_ALT, (bar, pat, arrow, rhs)))
        if not alts:
            raise ParseError("macro_rules needs at least one alternative", self.peek().info)
        return Node(K_MACRO_RULES, (kw, Node(Name.of(KIND_SEQ), tuple(alts))))

    def _parse_macro_decl(self) -> Node:
        kw = self.expect("macro")
        items: List[Syntax] = []
        while True:
            tok = self.peek()
            if tok.kind == "str":
                self.bump()
                items.append(Atom(tok.text, tok.info))
            elif tok.kind == "ident":
                self.bump()
                name = Ident(tok.text, Name.of(tok.text), (), tok.info)
                colon = self.expect(":")
                cat = self.expect_ident()
                items.append(Node(K_ARGDECL, (name, colon, cat)))
            elif tok.text == ":":
                break
            else:
                raise ParseError(
                    f"expected macro item or ':', found {describe(tok)}", tok.info
                )
        colon = self.expect(":")
        cat = self.expect_ident()
        arrow = self.expect("=>")
        rhs = self.parse_term(0)
        return Node(
            K_MACRO,
            (kw, Node(Name.of(KIND_SEQ), tuple(items)), colon, cat, arrow, rhs),
        )

    def _parse_notation_decl(self) -> Node:
        kw = self.expect("notation")
        items: List[Syntax] = []
        while not self.at("=>"):
            tok = self.peek()
            if tok.kind == "str":
                self.bump()
                items.append(Atom(tok.text, tok.info))
            elif tok.kind == "ident":
                self.bump()
                items.append(Ident(tok.text, Name.of(tok.text), (), tok.info))
            else:
                raise ParseError(
                    f"expected notation item or '=>', found {describe(tok)}", tok.info
                )
        arrow = self.expect("=>")
        rhs = self.parse_term(0)
        return Node(K_NOTATION, (kw, Node(Name.of(KIND_SEQ), tuple(items)), arrow, rhs))


def describe(tok: Token) -> str:
    if tok.kind == "eof":
        return "end of input"
    return f"'{tok.text}'"

