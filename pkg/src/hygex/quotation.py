"""Quotation semantics: capture processing, pattern matching, instantiation.

A quotation template is processed once, at the point its surrounding macro
declaration is elaborated: every captured identifier is annotated with the
global symbols it matches right there.  Instantiating the template later
applies the invocation's current macro scope to exactly those captured
identifiers; spliced-in payloads are inserted verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from .context import RESERVED_SCOPE, GlobalContext, TransformerEnv
from .errors import ExpansionError
from .syntax import (
    Atom,
    Ident,
    KIND_SPLICE,
    Missing,
    Name,
    Node,
    Syntax,
    add_macro_scope,
    antiquot_payload,
    is_antiquot,
    is_quotation,
    is_splice,
    render,
    splice_separator,
)

# ---------------------------------------------------------------------------
# Match environments


@dataclass(frozen=True)
class Tree:
    stx: Syntax


@dataclass(frozen=True)
class SepSeq:
    elems: Tuple[Syntax, ...]
    sep: str = ","


@dataclass(frozen=True)
class Seq:
    elems: Tuple[Syntax, ...]


@dataclass(frozen=True)
class Rep:
    """Element-wise captures of one variable under a nested splice."""

    items: Tuple["Capture", ...]


Capture = Union[Tree, SepSeq, Seq, Rep]
MatchEnv = Dict[Name, Capture]


def _elems_of(capture: Capture) -> Tuple[Syntax, ...]:
    match capture:
        case Tree(stx):
            return (stx,)
        case SepSeq(elems, _):
            return elems
        case Seq(elems):
            return elems
    raise ExpansionError("sequence payload expected, got element-wise captures")


# ---------------------------------------------------------------------------
# Processing


@dataclass(frozen=True)
class QuotationTemplate:
    body: Syntax
    holes: FrozenSet[Name]
    checked: bool = False  # declared with a double-backtick quotation


@dataclass(frozen=True)
class QuotationPattern:
    body: Syntax
    kind: Name
    vars: FrozenSet[Name]


def _hole_var(anti: Node) -> Name:
    payload = antiquot_payload(anti)
    if not isinstance(payload, Ident):
        raise ExpansionError(
            f"unsupported antiquotation payload '{render(payload)}' "
            "(only identifier holes can be written in source)"
        )
    return payload.name


def collect_holes(stx: Syntax, out: Optional[List[Name]] = None) -> List[Name]:
    """Hole variables of a template or pattern body, in source order."""
    if out is None:
        out = []
    if isinstance(stx, Node):
        if is_antiquot(stx):
            out.append(_hole_var(stx))
        else:
            for c in stx.children:
                collect_holes(c, out)
    return out


def process_quotation(quot: Node, gctx: GlobalContext) -> QuotationTemplate:
    """Annotate captured identifiers of a quotation with top-level scopes."""
    if not is_quotation(quot):
        raise ExpansionError(f"expected a quotation, got '{render(quot)}'")
    body = quot.children[0]
    processed = _process(body, gctx)
    return QuotationTemplate(
        processed,
        frozenset(collect_holes(processed)),
        checked=quot.kind.parts[0] == "dquot",
    )


def _process(stx: Syntax, gctx: GlobalContext) -> Syntax:
    match stx:
        case Ident(raw=raw, name=name):
            return Ident(raw, name, tuple(gctx.match_surface(name)), None)
        case Node() if is_antiquot(stx):
            _hole_var(stx)  # validate early
            return stx
        case Node(kind=kind, children=children):
            return Node(kind, tuple(_process(c, gctx) for c in children))
        case _:
            return stx


def process_pattern(quot: Node) -> QuotationPattern:
    if not is_quotation(quot):
        raise ExpansionError(
            f"macro_rules left-hand side must be a quotation, got '{render(quot)}'"
        )
    body = quot.children[0]
    if not isinstance(body, Node) or is_antiquot(body) or is_splice(body):
        raise ExpansionError("a macro pattern must start with a syntax node")
    seen: List[Name] = collect_holes(body)
    dups = {v for v in seen if seen.count(v) > 1}
    if dups:
        names = ", ".join(sorted(str(d) for d in dups))
        raise ExpansionError(f"duplicate pattern variable: {names}")
    return QuotationPattern(body, body.kind, frozenset(seen))


# ---------------------------------------------------------------------------
# Matching


def match_quotation(pattern: QuotationPattern, stx: Syntax) -> Optional[MatchEnv]:
    env: MatchEnv = {}
    if _match(pattern.body, stx, env):
        return env
    return None


def _antiquot_admits(anti: Node, stx: Syntax) -> bool:
    suffix = anti.kind.parts[1:]
    if not suffix:
        return True
    if suffix == ("ident",):
        return isinstance(stx, Ident)
    if suffix == ("num",):
        return isinstance(stx, Node) and stx.kind == Name.of("num")
    # other category/kind tags only document intent; the surrounding
    # literal structure already pins the shape
    return True


def _match(pat: Syntax, stx: Syntax, env: MatchEnv) -> bool:
    if isinstance(pat, Node) and is_antiquot(pat):
        if not _antiquot_admits(pat, stx):
            return False
        env[_hole_var(pat)] = Tree(stx)
        return True
    match pat, stx:
        case Atom(text=a), Atom(text=b):
            return a == b
        case Ident(raw=a), Ident(raw=b):
            # surface spelling only: scopes and top-level scopes are
            # irrelevant to structural matching
            return a == b
        case Missing(), Missing():
            return True
        case Node(kind=k1, children=pats), Node(kind=k2, children=inputs):
            if k1 != k2:
                return False
            return _match_children(pats, inputs, env)
    return False


def _split_elements(
    children: Sequence[Syntax], sep: str
) -> Optional[List[Syntax]]:
    if sep == "":
        return list(children)
    if not children:
        return []
    if len(children) % 2 == 0:
        return None
    elems = list(children[0::2])
    for s in children[1::2]:
        if not (isinstance(s, Atom) and s.text == sep):
            return None
    return elems


def _match_children(
    pats: Sequence[Syntax], inputs: Sequence[Syntax], env: MatchEnv
) -> bool:
    splice_at = None
    for i, p in enumerate(pats):
        if is_splice(p):
            splice_at = i
            break
    if splice_at is None:
        if len(pats) != len(inputs):
            return False
        return all(_match(p, s, env) for p, s in zip(pats, inputs))
    prefix = pats[:splice_at]
    suffix = pats[splice_at + 1 :]
    if len(inputs) < len(prefix) + len(suffix):
        return False
    for p, s in zip(prefix, inputs[: len(prefix)]):
        if not _match(p, s, env):
            return False
    if suffix:
        for p, s in zip(suffix, inputs[len(inputs) - len(suffix) :]):
            if not _match(p, s, env):
                return False
        middle = inputs[len(prefix) : len(inputs) - len(suffix)]
    else:
        middle = inputs[len(prefix) :]
    return _match_splice(pats[splice_at], middle, env)


def _match_splice(splice: Node, middle: Sequence[Syntax], env: MatchEnv) -> bool:
    sep = splice_separator(splice)
    head = splice.kind.parts[0]
    if head == KIND_SPLICE:
        anti = splice.children[0]
        elems = _split_elements(middle, sep)
        if elems is None:
            return False
        if not all(_antiquot_admits(anti, e) for e in elems):
            return False
        var = _hole_var(anti)
        env[var] = SepSeq(tuple(elems), sep) if sep else Seq(tuple(elems))
        return True
    # nested splice: the inner pattern must match every element
    inner = splice.children[0]
    elems = _split_elements(middle, sep)
    if elems is None:
        return False
    vars_ = collect_holes(inner)
    collected: Dict[Name, List[Capture]] = {v: [] for v in vars_}
    for elem in elems:
        sub: MatchEnv = {}
        if not _match(inner, elem, sub):
            return False
        for v in vars_:
            collected[v].append(sub[v])
    for v, items in collected.items():
        env[v] = Rep(tuple(items))
    return True


# ---------------------------------------------------------------------------
# Instantiation


def instantiate(
    template: QuotationTemplate, env: MatchEnv, tenv: TransformerEnv
) -> Syntax:
    missing = template.holes - set(env)
    if missing:
        names = ", ".join(sorted(str(m) for m in missing))
        raise ExpansionError(f"unbound antiquotation variable: {names}")
    return _instantiate(template.body, env, tenv)


def _instantiate(stx: Syntax, env: MatchEnv, tenv: TransformerEnv) -> Syntax:
    match stx:
        case Ident(raw=raw, name=name, preresolved=pre):
            return Ident(raw, tenv.apply_scope(name), pre, None)
        case Atom(text=text):
            return Atom(text, None)
        case Node() if is_antiquot(stx):
            capture = env[_hole_var(stx)]
            if not isinstance(capture, Tree):
                raise ExpansionError(
                    f"hole ${_hole_var(stx)} expects a single tree, "
                    "got a sequence capture"
                )
            return capture.stx
        case Node(kind=kind, children=children):
            out: List[Syntax] = []
            for child in children:
                if is_splice(child):
                    out.extend(_instantiate_splice(child, env, tenv))
                else:
                    out.append(_instantiate(child, env, tenv))
            return Node(kind, tuple(out))
        case _:
            return stx


def _with_separators(elems: List[Syntax], sep: str) -> List[Syntax]:
    if not sep:
        return elems
    out: List[Syntax] = []
    for i, e in enumerate(elems):
        if i:
            out.append(Atom(sep, None))
        out.append(e)
    return out


def _instantiate_splice(
    splice: Node, env: MatchEnv, tenv: TransformerEnv
) -> List[Syntax]:
    sep = splice_separator(splice)
    if splice.kind.parts[0] == KIND_SPLICE:
        capture = env[_hole_var(splice.children[0])]
        # separators are inserted/removed/replaced to fit this position
        return _with_separators(list(_elems_of(capture)), sep)
    inner = splice.children[0]
    vars_ = collect_holes(inner)
    lengths = set()
    per_var: Dict[Name, Tuple] = {}
    for v in vars_:
        capture = env[v]
        if isinstance(capture, Rep):
            per_var[v] = capture.items
        else:
            per_var[v] = tuple(Tree(e) for e in _elems_of(capture))
        lengths.add(len(per_var[v]))
    if not vars_:
        raise ExpansionError("nested splice without antiquotations")
    if len(lengths) != 1:
        raise ExpansionError(
            "nested splice variables hold sequences of different lengths"
        )
    n = lengths.pop()
    elems = []
    for i in range(n):
        sub = dict(env)
        sub.update({v: per_var[v][i] for v in vars_})
        elems.append(_instantiate(inner, sub, tenv))
    return _with_separators(elems, sep)


# ---------------------------------------------------------------------------
# Rule transformers

# A procedural right-hand side gets the match environment and the
# transformer environment and returns replacement syntax.
RuleBody = Union[QuotationTemplate, Callable[[MatchEnv, TransformerEnv], Syntax]]


def make_rule_transformer(
    rules: Sequence[Tuple[QuotationPattern, RuleBody]]
) -> Callable[[Syntax, TransformerEnv], Optional[Syntax]]:
    if not rules:
        raise ExpansionError("macro_rules needs at least one alternative")
    kinds = {p.kind for p, _ in rules}
    if len(kinds) != 1:
        names = ", ".join(sorted(str(k) for k in kinds))
        raise ExpansionError(
            f"macro_rules alternatives target different syntax kinds: {names}"
        )
    for pattern, body in rules:
        if isinstance(body, QuotationTemplate):
            stray = body.holes - pattern.vars
            if stray:
                names = ", ".join(sorted(str(s) for s in stray))
                raise ExpansionError(f"unbound antiquotation variable: {names}")

    def transformer(stx: Syntax, tenv: TransformerEnv) -> Optional[Syntax]:
        for pattern, body in rules:
            env = match_quotation(pattern, stx)
            if env is None:
                continue
            if isinstance(body, QuotationTemplate):
                return instantiate(body, env, tenv)
            return body(env, tenv)
        return None

    return transformer


def mk_c_ident(name: Name, tenv: Optional[TransformerEnv] = None) -> Ident:
    """A hygienic reference to a known global: a reserved scope keeps it
    clear of every user binder, and the top-level scope pins the target."""
    raw = ".".join(str(p) for p in name.parts if isinstance(p, str))
    return Ident(raw, add_macro_scope(name, RESERVED_SCOPE), (name,), None)
