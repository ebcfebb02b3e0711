"""Type-directed elaboration of expanded (or still macro-bearing) terms.

Elaboration checks against an expected type when one is known and
synthesizes otherwise; there is no unification.  Macro kinds without their
own elaborator are adapted on the fly: expand one step under a fresh scope,
then elaborate the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from .context import TransformerEnv
from .errors import ElabError
from .expander import ExpanderState, resolve_identifier
from .parser import K_APP, K_ARROW, K_FUN, K_NUM, K_PLUS
from .quotation import mk_c_ident
from .syntax import (
    Atom,
    Ident,
    KIND_CHOICE,
    Name,
    Node,
    Symbol,
    Syntax,
    render,
    strip_top_level_scopes,
)

NAT = Name.of("Nat")
UNIT = Name.of("Unit")
PROD = Name.of("Prod")
UNIT_UNIT = Name.of("Unit.unit")
PROD_MK = Name.of("Prod.mk")
NAT_ADD = Name.of("Nat.add")


# ---------------------------------------------------------------------------
# Core terms and types


@dataclass(frozen=True)
class TNat:
    def __str__(self) -> str:
        return "nat"


@dataclass(frozen=True)
class TUnit:
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class TPropAtom:
    name: Name

    def __str__(self) -> str:
        return f"prop({self.name})"


@dataclass(frozen=True)
class TArrow:
    dom: "CoreType"
    cod: "CoreType"

    def __str__(self) -> str:
        return f"arrow({self.dom}, {self.cod})"


@dataclass(frozen=True)
class TProd:
    left: "CoreType"
    right: "CoreType"

    def __str__(self) -> str:
        return f"prod({self.left}, {self.right})"


CoreType = object  # TNat | TUnit | TPropAtom | TArrow | TProd


@dataclass(frozen=True)
class Const:
    name: Name

    def __str__(self) -> str:
        return f"const({self.name})"


@dataclass(frozen=True)
class Local:
    symbol: Symbol

    def __str__(self) -> str:
        return f"local({self.symbol})"


@dataclass(frozen=True)
class Lam:
    binder: Symbol
    binder_type: CoreType
    body: "CoreExpr"

    def __str__(self) -> str:
        return f"lam({self.binder} : {self.binder_type}. {self.body})"


@dataclass(frozen=True)
class App:
    fn: "CoreExpr"
    arg: "CoreExpr"

    def __str__(self) -> str:
        return f"app({self.fn}, {self.arg})"


@dataclass(frozen=True)
class NatLit:
    value: int

    def __str__(self) -> str:
        return f"natLit({self.value})"


@dataclass(frozen=True)
class Pair:
    fst: "CoreExpr"
    snd: "CoreExpr"

    def __str__(self) -> str:
        return f"pair({self.fst}, {self.snd})"


CoreExpr = object  # Const | Local | Lam | App | NatLit | Pair


# ---------------------------------------------------------------------------
# Environment


@dataclass
class ElabEnv:
    """Locals, signatures, and the shared quotation-scope capability."""

    state: ExpanderState
    locals: Dict[Symbol, CoreType] = field(default_factory=dict)
    # expected-type head -> (constructor, arity)
    constructors: Dict[type, Tuple[Name, int]] = field(
        default_factory=lambda: {TProd: (PROD_MK, 2), TUnit: (UNIT_UNIT, 0)}
    )

    @property
    def scopes(self):
        return self.state.scopes

    def signature(self, symbol: Symbol) -> Optional[CoreType]:
        decl = self.state.gctx.get(symbol)
        return decl.type_ if decl else None

    def child(self, symbol: Symbol, ty: CoreType) -> "ElabEnv":
        locals2 = dict(self.locals)
        locals2[symbol] = ty
        return replace(self, locals=locals2)


def _mismatch(expected: CoreType, actual: CoreType, stx: Syntax) -> ElabError:
    return ElabError(
        f"type mismatch at '{render(stx)}': expected {expected}, got {actual}"
    )


def _ensure(expected: Optional[CoreType], actual: CoreType, stx: Syntax) -> CoreType:
    if expected is not None and expected != actual:
        raise _mismatch(expected, actual, stx)
    return actual


# ---------------------------------------------------------------------------
# Elaboration


def elab_term(
    stx: Syntax, env: ElabEnv, expected: Optional[CoreType] = None
) -> Tuple[CoreExpr, CoreType]:
    match stx:
        case Ident():
            return _elab_ident(stx, env, expected)
        case Node(kind=kind):
            pass
        case _:
            raise ElabError(f"cannot elaborate '{render(stx)}'")
    if kind == K_NUM:
        value = int(stx.children[0].text)
        return NatLit(value), _ensure(expected, TNat(), stx)
    if kind == Name.of(KIND_CHOICE):
        return _elab_choice(stx, env, expected)
    if kind == K_FUN:
        return _elab_fun(stx, env, expected)
    if kind == K_PLUS:
        left, _op, right = stx.children
        fst, _ = elab_term(left, env, TNat())
        snd, _ = elab_term(right, env, TNat())
        expr = App(App(Const(NAT_ADD), fst), snd)
        return expr, _ensure(expected, TNat(), stx)
    if kind == K_APP:
        return _elab_app(stx, env, expected)
    elaborator = env.state.elaborators.get(kind)
    if elaborator is not None:
        with env.scopes.fresh():
            return elaborator(stx, env, expected)
    if kind in env.state.macros:
        return transformer_to_elaborator(stx, env, expected)
    raise ElabError(f"no elaboration rule for syntax kind '{kind}'")


def transformer_to_elaborator(
    stx: Node, env: ElabEnv, expected: Optional[CoreType]
) -> Tuple[CoreExpr, CoreType]:
    """Run the node's registered transformer with the elaborator's scope
    state threaded through, then elaborate the output."""
    state = env.state
    with state.scopes.fresh():
        tenv = TransformerEnv(state.gctx, state.scopes, state.single_scope)
        out: Optional[Syntax] = None
        for transformer in state.macros.lookup(stx.kind):
            out = transformer(stx, tenv)
            if out is not None:
                break
        if out is None:
            raise ElabError(
                f"no macro alternative matched '{render(stx)}' "
                f"while elaborating '{stx.kind}'"
            )
        if state.on_macro_step:
            state.on_macro_step(stx.kind, stx, out)
    return elab_term(out, env, expected)


def _elab_ident(
    stx: Ident, env: ElabEnv, expected: Optional[CoreType]
) -> Tuple[CoreExpr, CoreType]:
    resolved = resolve_identifier(stx, frozenset(env.locals), env.state.gctx)
    if isinstance(resolved, Node):  # overloaded
        return _elab_choice(resolved, env, expected)
    symbol = resolved.name
    if symbol in env.locals:
        return Local(symbol), _ensure(expected, env.locals[symbol], stx)
    sig = env.signature(symbol)
    if sig is None:
        raise ElabError(f"'{symbol}' has no value signature")
    return Const(symbol), _ensure(expected, sig, stx)


def _elab_choice(
    stx: Node, env: ElabEnv, expected: Optional[CoreType]
) -> Tuple[CoreExpr, CoreType]:
    viable = []
    for cand in stx.children:
        assert isinstance(cand, Ident)
        if env.signature(cand.name) is not None:
            viable.append(cand)
    if len(viable) != 1:
        names = ", ".join(str(c.name) for c in stx.children)
        raise ElabError(f"ambiguous reference (candidates: {names})")
    return _elab_ident(viable[0], env, expected)


def _elab_fun(
    stx: Node, env: ElabEnv, expected: Optional[CoreType]
) -> Tuple[CoreExpr, CoreType]:
    _kw, binder, _arrow, body = stx.children
    if expected is None:
        raise ElabError(
            f"cannot infer the type of '{render(stx)}' without an expected type"
        )
    if not isinstance(expected, TArrow):
        raise _mismatch(expected, "a function", stx)
    if not isinstance(binder, Ident):
        raise ElabError(f"binder must be an identifier, got '{render(binder)}'")
    symbol = strip_top_level_scopes(binder)
    body_expr, _ = elab_term(body, env.child(symbol, expected.dom), expected.cod)
    return Lam(symbol, expected.dom, body_expr), expected


def _app_spine(stx: Syntax) -> Tuple[Syntax, List[Syntax]]:
    args: List[Syntax] = []
    while isinstance(stx, Node) and stx.kind == K_APP:
        args.append(stx.children[1])
        stx = stx.children[0]
    args.reverse()
    return stx, args


def _elab_app(
    stx: Node, env: ElabEnv, expected: Optional[CoreType]
) -> Tuple[CoreExpr, CoreType]:
    head, args = _app_spine(stx)
    # saturated pair constructor: the builtin polymorphic case
    if isinstance(head, Ident):
        resolved = resolve_identifier(head, frozenset(env.locals), env.state.gctx)
        if isinstance(resolved, Ident) and resolved.name == PROD_MK and len(args) == 2:
            want = expected if isinstance(expected, TProd) else None
            fst, t1 = elab_term(args[0], env, want.left if want else None)
            snd, t2 = elab_term(args[1], env, want.right if want else None)
            return Pair(fst, snd), _ensure(expected, TProd(t1, t2), stx)
    fn_expr, fn_ty = elab_term(stx.children[0], env, None)
    if not isinstance(fn_ty, TArrow):
        raise ElabError(
            f"'{render(stx.children[0])}' is not a function (type {fn_ty})"
        )
    arg_expr, _ = elab_term(stx.children[1], env, fn_ty.dom)
    return App(fn_expr, arg_expr), _ensure(expected, fn_ty.cod, stx)


def elab_anonymous_ctor(
    stx: Node, env: ElabEnv, expected: Optional[CoreType]
) -> Tuple[CoreExpr, CoreType]:
    """⟨e, …⟩ elaborates as the expected type's constructor applied to the
    components; the constructor reference is synthesized hygienically."""
    if expected is None:
        raise ElabError("expected type required to elaborate '⟨…⟩'")
    entry = env.constructors.get(type(expected))
    if entry is None:
        raise ElabError(f"no constructor known for expected type {expected}")
    ctor, arity = entry
    args = [
        c
        for c in stx.children[1].children
        if not (isinstance(c, Atom) and c.text == ",")
    ]
    if len(args) != arity:
        raise ElabError(
            f"'{ctor}' expects {arity} argument(s), got {len(args)}"
        )
    out: Syntax = mk_c_ident(ctor)
    for arg in args:
        out = Node(K_APP, (out, arg))
    return elab_term(out, env, expected)


# ---------------------------------------------------------------------------
# Types written as terms


def interp_type(stx: Syntax, env: ElabEnv) -> CoreType:
    """Read an expanded term in type position as a core type."""
    match stx:
        case Ident(name=name):
            decl = env.state.gctx.get(name)
            if decl is not None and decl.kind == "type":
                if name == NAT:
                    return TNat()
                if name == UNIT:
                    return TUnit()
            raise ElabError(f"'{render(stx)}' is not a type")
        case Node(kind=kind) if kind == K_ARROW:
            left, _op, right = stx.children
            return TArrow(interp_type(left, env), interp_type(right, env))
        case Node(kind=kind) if kind == K_APP:
            head, args = _app_spine(stx)
            if isinstance(head, Ident) and head.name == PROD and len(args) == 2:
                return TProd(interp_type(args[0], env), interp_type(args[1], env))
    raise ElabError(f"'{render(stx)}' is not a type")


# ---------------------------------------------------------------------------
# Independent type checker (soundness oracle)


def check_expr(
    expr: CoreExpr,
    sigs: Dict[Symbol, CoreType],
    locals_: Optional[Dict[Symbol, CoreType]] = None,
) -> CoreType:
    """Recompute the type of a core term from scratch.

    Deliberately separate from elaboration so the two can disagree."""
    env = dict(locals_ or {})

    def go(e: CoreExpr) -> CoreType:
        match e:
            case NatLit():
                return TNat()
            case Const(name=name):
                if name == UNIT_UNIT:
                    return TUnit()
                if name in sigs:
                    return sigs[name]
                raise ElabError(f"unknown constant '{name}'")
            case Local(symbol=symbol):
                if symbol in env:
                    return env[symbol]
                raise ElabError(f"loose local '{symbol}'")
            case Pair(fst=f, snd=s):
                return TProd(go(f), go(s))
            case Lam(binder=b, binder_type=bt, body=body):
                saved = env.get(b)
                env[b] = bt
                ty = TArrow(bt, go(body))
                if saved is None:
                    del env[b]
                else:
                    env[b] = saved
                return ty
            case App(fn=fn, arg=arg):
                fn_ty = go(fn)
                if not isinstance(fn_ty, TArrow):
                    raise ElabError(f"applying non-function of type {fn_ty}")
                arg_ty = go(arg)
                if arg_ty != fn_ty.dom:
                    raise ElabError(
                        f"argument type {arg_ty} does not fit {fn_ty}"
                    )
                return fn_ty.cod
        raise ElabError(f"unknown core term {e!r}")

    return go(expr)
