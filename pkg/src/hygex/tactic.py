"""Goal-based tactic evaluation over a minimal propositional logic.

Tactic macros are not pre-expanded: the evaluator unfolds them one step at
a time when it reaches them, which is what lets `repeat` terminate.  The
`exact` tactic resolves its argument through the ordinary expander rules
with the hypotheses as the local context, so tactic hygiene is the same
hygiene as everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

from .errors import TacticBudgetError, TacticError
from .expander import Expander, ExpanderState
from .parser import (
    K_ARROW,
    K_ASSUMPTION,
    K_BY,
    K_EXACT,
    K_FAIL,
    K_INTRO,
    K_SKIP,
    K_TPAREN,
    K_TRY,
    K_TSEQ,
)
from .syntax import Ident, Name, Node, Symbol, Syntax, render, strip_top_level_scopes


# ---------------------------------------------------------------------------
# Propositions and goals


@dataclass(frozen=True)
class PropAtom:
    name: Name

    def __str__(self) -> str:
        return str(self.name)


@dataclass(frozen=True)
class Implies:
    antecedent: "Prop"
    consequent: "Prop"

    def __str__(self) -> str:
        left = str(self.antecedent)
        if isinstance(self.antecedent, Implies):
            left = f"({left})"
        return f"{left} → {self.consequent}"


Prop = object  # PropAtom | Implies


def interp_prop(stx: Syntax) -> Prop:
    """Read an expanded term as a proposition."""
    match stx:
        case Ident(name=name):
            return PropAtom(name)
        case Node(kind=kind, children=(left, _op, right)) if kind == K_ARROW:
            return Implies(interp_prop(left), interp_prop(right))
    raise TacticError(f"'{render(stx)}' is not a proposition")


@dataclass(frozen=True)
class ProofGoal:
    hypotheses: Tuple[Tuple[Symbol, Prop], ...]
    target: Prop

    def with_hypothesis(self, symbol: Symbol, prop: Prop) -> "ProofGoal":
        # re-binding the same symbol shadows the old hypothesis
        kept = tuple((s, p) for s, p in self.hypotheses if s != symbol)
        return ProofGoal(kept + ((symbol, prop),), self.target)

    def lookup(self, symbol: Symbol) -> Optional[Prop]:
        for s, p in self.hypotheses:
            if s == symbol:
                return p
        return None

    def __str__(self) -> str:
        hyps = ", ".join(f"{s} : {p}" for s, p in self.hypotheses)
        return f"{hyps} ⊢ {self.target}" if hyps else f"⊢ {self.target}"


@dataclass(frozen=True)
class TacticState:
    """Remaining goals plus the run-wide context handles.

    The expander state provides the global context and the fresh-scope
    capability, so quotations instantiated by procedural tactics behave
    exactly as they do in macros."""

    goals: Tuple[ProofGoal, ...]
    state: ExpanderState
    steps_left: List[int]  # single mutable cell: tactic-macro budget

    def goal(self) -> ProofGoal:
        if not self.goals:
            raise TacticError("no goals remaining")
        return self.goals[0]

    def close_goal(self) -> "TacticState":
        return replace(self, goals=self.goals[1:])

    def set_goal(self, goal: ProofGoal) -> "TacticState":
        return replace(self, goals=(goal,) + self.goals[1:])

    def __str__(self) -> str:
        if not self.goals:
            return "no goals"
        return "; ".join(str(g) for g in self.goals)


TraceTacticFn = Callable[[Syntax, TacticState], None]


# ---------------------------------------------------------------------------
# Evaluation


def eval_tactic(
    stx: Syntax, ts: TacticState, trace: Optional[TraceTacticFn] = None
) -> TacticState:
    if not isinstance(stx, Node):
        raise TacticError(f"unknown tactic '{render(stx)}'")
    kind = stx.kind
    if kind == K_TSEQ:
        first, _sep, rest = stx.children
        return eval_tactic(rest, eval_tactic(first, ts, trace), trace)
    if kind == K_TPAREN:
        return eval_tactic(stx.children[1], ts, trace)
    if kind == K_SKIP:
        out = ts
    elif kind == K_FAIL:
        raise TacticError("fail tactic invoked")
    elif kind == K_TRY:
        try:
            out = eval_tactic(stx.children[1], ts, trace)
        except TacticError:
            out = ts  # failing branch leaves the state untouched
    elif kind == K_INTRO:
        out = _eval_intro(stx, ts)
    elif kind == K_EXACT:
        out = _eval_exact(stx, ts)
    elif kind == K_ASSUMPTION:
        out = _eval_assumption(stx, ts)
    elif kind in ts.state.tactics:
        # host-registered procedural tactic; it may instantiate tactic
        # quotations and feed them back through eval_tactic itself
        out = ts.state.tactics[kind](stx, ts)
    elif kind in ts.state.macros:
        if ts.steps_left[0] <= 0:
            raise TacticBudgetError(
                "tactic macro expansion budget exceeded (see --max-repeat)"
            )
        ts.steps_left[0] -= 1
        expander = Expander(ts.state)
        unfolded = expander.expand_macro_step(stx)
        return expander._with_frame(
            kind, lambda: eval_tactic(unfolded, ts, trace)
        )
    else:
        raise TacticError(f"unknown tactic '{render(stx)}'")
    if trace:
        trace(stx, out)
    return out


def _eval_intro(stx: Node, ts: TacticState) -> TacticState:
    goal = ts.goal()
    name = stx.children[1]
    if not isinstance(name, Ident):
        raise TacticError(f"intro: expected a hypothesis name, got '{render(name)}'")
    if not isinstance(goal.target, Implies):
        raise TacticError(f"intro: target '{goal.target}' is not an implication")
    symbol = strip_top_level_scopes(name)
    goal2 = ProofGoal(goal.hypotheses, goal.target.consequent).with_hypothesis(
        symbol, goal.target.antecedent
    )
    return ts.set_goal(goal2)


def _resolve_reference(term: Syntax, ts: TacticState) -> Symbol:
    goal = ts.goal()
    lctx = frozenset(s for s, _ in goal.hypotheses)
    resolved = Expander(ts.state).expand(term, lctx)
    if isinstance(resolved, Ident):
        return resolved.name
    raise TacticError(f"exact: '{render(term)}' is not a plain reference")


def _eval_exact(stx: Node, ts: TacticState) -> TacticState:
    goal = ts.goal()
    symbol = _resolve_reference(stx.children[1], ts)
    prop = goal.lookup(symbol)
    if prop is None:
        decl = ts.state.gctx.get(symbol)
        prop = decl.prop if decl else None
    if prop is None:
        raise TacticError(f"exact: '{symbol}' does not prove anything")
    if prop != goal.target:
        raise TacticError(
            f"exact: '{symbol} : {prop}' does not match target '{goal.target}'"
        )
    return ts.close_goal()


def _eval_assumption(stx: Node, ts: TacticState) -> TacticState:
    goal = ts.goal()
    for _symbol, prop in goal.hypotheses:
        if prop == goal.target:
            return ts.close_goal()
    raise TacticError(f"assumption: no hypothesis proves '{goal.target}'")


# ---------------------------------------------------------------------------
# Whole proofs


def run_proof(
    by_node: Node,
    target: Prop,
    state: ExpanderState,
    max_steps: int = 1024,
    trace: Optional[TraceTacticFn] = None,
) -> None:
    if not (isinstance(by_node, Node) and by_node.kind == K_BY):
        raise TacticError("expected a 'by' proof")
    script = by_node.children[1]
    ts = TacticState((ProofGoal((), target),), state, [max_steps])
    final = eval_tactic(script, ts, trace)
    if final.goals:
        raise TacticError(f"unsolved goals: {final}")
