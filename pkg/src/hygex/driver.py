"""Batch command-file processing: parse, expand, elaborate, report.

Commands are processed strictly in order; the parser table and global
context thread through the whole run.  A diagnostic aborts only its own
command, and the scope counter starts fresh per run, so identical inputs
give byte-identical output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .elaborator import ElabEnv, elab_term, interp_type
from .errors import KernelError, LexError, ParseError
from .expander import Expander, ExpanderState
from .parser import K_DEF, K_DEF_TYPED, K_THEOREM, Parser
from .prelude import bootstrap
from .syntax import Ident, Missing, Name, Node, SourceInfo, Syntax, render
from .tactic import TacticState, interp_prop, run_proof


@dataclass
class RunConfig:
    stage: str = "expand"  # expand | elaborate
    trace_expansion: bool = False
    trace_tactics: bool = False
    notation_precheck: bool = True
    prelude: bool = True
    max_expansion_depth: int = 512
    max_repeat: int = 1024
    recover: bool = False

    def __post_init__(self) -> None:
        if self.stage not in ("expand", "elaborate"):
            raise ValueError(f"unknown stage '{self.stage}'")
        if self.max_expansion_depth <= 0 or self.max_repeat <= 0:
            raise ValueError("limits must be positive")


@dataclass
class Diagnostic:
    message: str
    info: Optional[SourceInfo] = None
    frames: Tuple[Tuple[Name, Optional[int]], ...] = ()

    def render(self) -> str:
        line = f"error: {self.message}"
        if self.info is not None:
            line += f" @{self.info.line}:{self.info.col}"
        for kind, scope in self.frames:
            line += f"\n  in expansion of {kind}"
            if scope is not None:
                line += f" (scope {scope})"
        return line


_COMMAND_START = re.compile(
    r"^\s*(def|theorem|syntax|macro_rules|declare_syntax_cat|macro|notation)\b"
)


class Runner:
    """One deterministic run over one or more input files."""

    def __init__(self, cfg: Optional[RunConfig] = None):
        self.cfg = cfg or RunConfig()
        self.state = ExpanderState(
            max_expansion_depth=self.cfg.max_expansion_depth,
            notation_precheck=self.cfg.notation_precheck,
        )
        self.lines: List[str] = []
        self.diagnostics: List[Diagnostic] = []
        bootstrap(self.state, prelude=self.cfg.prelude)
        # the prelude loads untraced
        if self.cfg.trace_expansion:
            self.state.on_macro_step = self._trace_macro_step
        self.expander = Expander(self.state)
        self.elab_env = ElabEnv(self.state)

    # -- output

    def _emit(self, text: str) -> None:
        self.lines.append(text)

    def _trace_macro_step(self, kind: Name, before: Syntax, after: Syntax) -> None:
        self._emit(f"{kind}: {render(before)} ==> {render(after)}")

    def _trace_tactic(self, stx: Syntax, ts: TacticState) -> None:
        self._emit(f"tac: {render(stx)} ==> {ts}")

    def _diagnose(self, err: KernelError) -> None:
        diag = Diagnostic(err.message, err.info, tuple(err.frames))
        self.diagnostics.append(diag)
        self._emit(diag.render())

    @property
    def output(self) -> str:
        return "\n".join(self.lines) + "\n" if self.lines else ""

    # -- command processing

    def run_files(self, paths: Sequence[str]) -> int:
        for path in paths:
            try:
                with open(path, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as err:
                self.diagnostics.append(Diagnostic(f"cannot read {path}: {err}"))
                self._emit(f"error: cannot read {path}: {err}")
                return 2
            self.run_source(text)
        return 1 if self.diagnostics else 0

    def run_source(self, text: str) -> None:
        pos = 0
        while True:
            parser = Parser(text, self.state.table, pos)
            try:
                if parser.at_eof():
                    return
                cmd = parser.parse_command()
                pos = parser.pos
            except (LexError, ParseError) as err:
                self._diagnose(err)
                if self.cfg.recover:
                    self._emit(render(Missing()))
                next_pos = _resync(text, pos, err.info.offset if err.info else pos)
                if next_pos <= pos:
                    return
                pos = next_pos
                continue
            try:
                outputs = self.expander.process_command(cmd)
            except KernelError as err:
                self._diagnose(err)
                continue
            for out in outputs:
                try:
                    self._emit_command(out)
                except KernelError as err:
                    self._diagnose(err)

    def _emit_command(self, out: Syntax) -> None:
        if self.cfg.stage == "expand":
            self._emit(render(out))
            return
        if isinstance(out, Node) and out.kind in (K_DEF, K_DEF_TYPED):
            self._elaborate_def(out)
            return
        if isinstance(out, Node) and out.kind == K_THEOREM:
            self._run_theorem(out)
            return
        self._emit(render(out))

    def _elaborate_def(self, out: Node) -> None:
        if out.kind == K_DEF_TYPED:
            _kw, name, _c, ty_stx, _a, rhs = out.children
            ty = interp_type(ty_stx, self.elab_env)
            expr, ty = elab_term(rhs, self.elab_env, ty)
        else:
            _kw, name, _a, rhs = out.children
            expr, ty = elab_term(rhs, self.elab_env, None)
        assert isinstance(name, Ident)
        decl = self.state.gctx.get(name.name)
        if decl is not None:
            decl.type_ = ty
        self._emit(f"def {name.name} : {ty} := {expr}")

    def _run_theorem(self, out: Node) -> None:
        _kw, name, _binders, _colon, target, _assign, by = out.children
        assert isinstance(name, Ident)
        prop = interp_prop(target)
        trace = self._trace_tactic if self.cfg.trace_tactics else None
        run_proof(by, prop, self.state, self.cfg.max_repeat, trace)
        decl = self.state.gctx.get(name.name)
        if decl is not None:
            decl.prop = prop
        self._emit(f"theorem {name.name} : {prop} := proved")


def _resync(text: str, cmd_start: int, err_offset: int) -> int:
    """Skip to the next line that looks like a command start.

    The error's own line counts, as long as it lies past the start of the
    command that failed."""
    pos = text.rfind("\n", 0, max(err_offset, 0)) + 1
    while True:
        line_end = text.find("\n", pos)
        line = text[pos:] if line_end == -1 else text[pos:line_end]
        if pos > cmd_start and _COMMAND_START.match(line):
            return pos
        if line_end == -1:
            return len(text)
        pos = line_end + 1


def run_string(src: str, cfg: Optional[RunConfig] = None) -> Tuple[int, str]:
    """Convenience entry point used by tests: one in-memory run."""
    runner = Runner(cfg)
    runner.run_source(src)
    code = 1 if runner.diagnostics else 0
    return code, runner.output
