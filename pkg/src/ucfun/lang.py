"""Priority-rule expression language evolved by the search.

A program is one arithmetic expression over per-unit, per-period features.
Grammar::

    expr := cmp
    cmp  := sum (("<" | "<=" | ">" | ">=" | "==") sum)?
    sum  := prod (("+" | "-") prod)*
    prod := unary (("*" | "/") unary)*
    unary := "-" unary | atom
    atom := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"

Identifiers are the feature names in :data:`FEATURES` plus the functions
``min(a, b)``, ``max(a, b)``, ``abs(a)`` and ``if(cond, a, b)``. Comparisons
yield 1.0 or 0.0. All arguments of ``if`` are evaluated. A program fails
with :class:`NumericDomainError` when it divides by zero or any
sub-expression is not finite, and with :class:`BudgetExhausted` when it
uses more node evaluations than its budget.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Union

import numpy as np

from .instance import CommitmentMatrix, UcInstance
from .kernels import STATUS_BUDGET, STATUS_DOMAIN, ProgramDomainError, get_backend, kernels
from .kernels.opcodes import (
    BINARY_OPS,
    CALL_OPS,
    FEATURE_INDEX,
    FEATURES,
    OP_CONST,
    OP_FEAT,
    OP_NEG,
)

MAX_NODES = 512
MAX_NESTING = 200
DEFAULT_BUDGET = 10**6
FUNCTION_ARITY = {"min": 2, "max": 2, "abs": 1, "if": 3}
COMPARISONS = ("<", "<=", ">", ">=", "==")


# --- syntax tree -----------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: Node


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple[Node, ...]


Node = Union[Num, Var, Neg, BinOp, Call]


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    return ()


def node_count(node: Node) -> int:
    count, stack = 0, [node]
    while stack:
        n = stack.pop()
        count += 1
        stack.extend(children(n))
    return count


# --- errors ----------------------------------------------------------------


class ProgramParseError(ValueError):
    reason = "syntax"

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)
        self.position = position


class UnknownIdentifierError(ProgramParseError):
    reason = "unknown-identifier"


class ProgramTooLargeError(ProgramParseError):
    reason = "size"


class ProgramEvaluationError(ArithmeticError):
    reason = "evaluation"


class NumericDomainError(ProgramEvaluationError):
    reason = "numeric-domain"


class BudgetExhausted(ProgramEvaluationError):
    reason = "budget"


# --- parsing ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op><=|>=|==|[-+*/<>(),]))"
)
_END = "<end>"


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            if source[pos:].strip() == "":
                break
            bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ProgramParseError(f"unexpected character {source[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append((_END, "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.nodes = 0
        self.depth = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        kind, value, at = self.take()
        if value != text or kind != "op":
            found = "end of input" if kind == _END else repr(value)
            raise ProgramParseError(f"expected {text!r}, found {found}", at)

    def make(self, node: Node) -> Node:
        self.nodes += 1
        if self.nodes > MAX_NODES:
            raise ProgramTooLargeError(f"program exceeds {MAX_NODES} nodes", self.peek()[2])
        return node

    def parse(self) -> Node:
        node = self.expr()
        kind, value, at = self.peek()
        if kind != _END:
            raise ProgramParseError(f"unexpected {value!r}", at)
        return node

    def expr(self) -> Node:
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise ProgramTooLargeError(f"nesting deeper than {MAX_NESTING}", self.peek()[2])
        node = self.cmp()
        self.depth -= 1
        return node

    def cmp(self) -> Node:
        left = self.sum()
        kind, value, _ = self.peek()
        if kind == "op" and value in COMPARISONS:
            self.take()
            left = self.make(BinOp(value, left, self.sum()))
        return left

    def sum(self) -> Node:
        left = self.prod()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            left = self.make(BinOp(op, left, self.prod()))
        return left

    def prod(self) -> Node:
        left = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            left = self.make(BinOp(op, left, self.unary()))
        return left

    def unary(self) -> Node:
        kind, value, at = self.peek()
        if kind == "op" and value == "-":
            self.take()
            self.depth += 1
            if self.depth > MAX_NESTING:
                raise ProgramTooLargeError(f"nesting deeper than {MAX_NESTING}", at)
            node = self.make(Neg(self.unary()))
            self.depth -= 1
            return node
        return self.atom()

    def atom(self) -> Node:
        kind, value, at = self.take()
        if kind == "num":
            return self.make(Num(float(value)))
        if kind == "ident":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if value not in FUNCTION_ARITY:
                    if value in FEATURE_INDEX:
                        raise ProgramParseError(f"feature {value!r} is not callable", at)
                    raise UnknownIdentifierError(f"unknown function {value!r}", at)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == "," and self.peek()[0] == "op":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTION_ARITY[value]:
                    raise ProgramParseError(
                        f"{value}() takes {FUNCTION_ARITY[value]} argument(s), got {len(args)}", at
                    )
                return self.make(Call(value, tuple(args)))
            if value in FUNCTION_ARITY:
                raise ProgramParseError(f"function {value!r} needs arguments", at)
            if value not in FEATURE_INDEX:
                raise UnknownIdentifierError(f"unknown identifier {value!r}", at)
            return self.make(Var(value))
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == _END else repr(value)
        raise ProgramParseError(f"unexpected {found}", at)


# --- printing --------------------------------------------------------------

_LEVEL = {"<": 1, "<=": 1, ">": 1, ">=": 1, "==": 1, "+": 2, "-": 2, "*": 3, "/": 3}


def format_number(value: float) -> str:
    if value < 0 or not math.isfinite(value):
        raise ValueError(f"literal must be finite and non-negative, got {value}")
    if value.is_integer() and value < 1e15:
        return str(int(value))
    return repr(value)


def _fmt(node: Node) -> tuple[str, int]:
    if isinstance(node, Num):
        return format_number(node.value), 5
    if isinstance(node, Var):
        return node.name, 5
    if isinstance(node, Call):
        return f"{node.func}({', '.join(_fmt(a)[0] for a in node.args)})", 5
    if isinstance(node, Neg):
        text, level = _fmt(node.operand)
        return "-" + (text if level >= 4 else f"({text})"), 4
    level = _LEVEL[node.op]
    left, ll = _fmt(node.left)
    right, rl = _fmt(node.right)
    # comparisons do not chain; everything else is left-associative
    if ll < level or (level == 1 and ll == 1):
        left = f"({left})"
    if rl <= level:
        right = f"({right})"
    return f"{left} {node.op} {right}", level


def to_source(node: Node) -> str:
    """Canonical text for ``node``; ``parse(to_source(n)).ast == n``."""
    return _fmt(node)[0]


# --- compilation -----------------------------------------------------------


class _VectorDomain(ProgramDomainError):
    pass


def _finite(*xs):
    for x in xs:
        if not np.all(np.isfinite(x)):
            raise _VectorDomain("non-finite value")


def _v_div(a, b):
    _finite(a, b)
    if np.any(np.asarray(b) == 0):
        raise _VectorDomain("division by zero")
    return a / b


def _v_cmp(fn):
    def op(a, b):
        _finite(a, b)
        return np.where(fn(a, b), 1.0, 0.0)

    return op


def _v_min(a, b):
    _finite(a, b)
    return np.minimum(a, b)


def _v_max(a, b):
    _finite(a, b)
    return np.maximum(a, b)


def _v_abs(a):
    _finite(a)
    return np.abs(a)


def _v_if(c, a, b):
    _finite(c, a, b)
    return np.where(np.asarray(c) != 0, a, b)


def _v_root(x):
    _finite(x)
    return x


_VECTOR_ENV = {
    "_div": _v_div,
    "_lt": _v_cmp(np.less),
    "_le": _v_cmp(np.less_equal),
    "_gt": _v_cmp(np.greater),
    "_ge": _v_cmp(np.greater_equal),
    "_eq": _v_cmp(np.equal),
    "_min": _v_min,
    "_max": _v_max,
    "_abs": _v_abs,
    "_if": _v_if,
    "_root": _v_root,
}
_VECTOR_CALL = {"<": "_lt", "<=": "_le", ">": "_gt", ">=": "_ge", "==": "_eq", "/": "_div"}


def _vector_expr(node: Node) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_vector_expr(node.operand)})"
    if isinstance(node, Call):
        return f"_{node.func}({', '.join(_vector_expr(a) for a in node.args)})"
    left, right = _vector_expr(node.left), _vector_expr(node.right)
    if node.op in _VECTOR_CALL:
        return f"{_VECTOR_CALL[node.op]}({left}, {right})"
    return f"({left} {node.op} {right})"


@dataclass(frozen=True)
class CompiledProgram:
    code: np.ndarray
    args: np.ndarray
    consts: np.ndarray
    depth: int
    node_count: int
    ast: Node = field(repr=False)

    @cached_property
    def vector_fn(self) -> Callable:
        """numpy closure over feature arrays, built only when the numpy backend needs it."""
        src = f"def _prog(F):\n    {', '.join(FEATURES)}, = F\n    return _root({_vector_expr(self.ast)})\n"
        namespace = dict(_VECTOR_ENV)
        exec(compile(src, "<priority-program>", "exec"), namespace)  # built only from parsed, whitelisted tokens
        return namespace["_prog"]


def compile_program(ast: Node) -> CompiledProgram:
    code: list[int] = []
    args: list[int] = []
    consts: list[float] = []
    depth = 0
    max_depth = 0

    def emit(op: int, arg: int, delta: int) -> None:
        nonlocal depth, max_depth
        code.append(op)
        args.append(arg)
        depth += delta
        max_depth = max(max_depth, depth)

    def walk(node: Node) -> None:
        if isinstance(node, Num):
            consts.append(float(node.value))
            emit(OP_CONST, len(consts) - 1, 1)
        elif isinstance(node, Var):
            emit(OP_FEAT, FEATURE_INDEX[node.name], 1)
        elif isinstance(node, Neg):
            walk(node.operand)
            emit(OP_NEG, 0, 0)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
            emit(BINARY_OPS[node.op], 0, -1)
        else:
            for a in node.args:
                walk(a)
            emit(CALL_OPS[node.func], 0, 1 - len(node.args))

    walk(ast)
    return CompiledProgram(
        code=np.array(code, dtype=np.int64),
        args=np.array(args, dtype=np.int64),
        consts=np.array(consts if consts else [0.0], dtype=np.float64),
        depth=max_depth,
        node_count=len(code),
        ast=ast,
    )


@dataclass(frozen=True)
class HeuristicProgram:
    source: str
    ast: Node = field(repr=False)

    @cached_property
    def normalized(self) -> str:
        return to_source(self.ast)

    @cached_property
    def size(self) -> int:
        return node_count(self.ast)

    @cached_property
    def compiled(self) -> CompiledProgram:
        return compile_program(self.ast)


def parse(source: str) -> HeuristicProgram:
    if not isinstance(source, str):
        raise ProgramParseError("program source must be text")
    # each nesting level costs about six parser frames
    need = 8 * MAX_NESTING + 1000
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)
    return HeuristicProgram(source, _Parser(source).parse())


# --- scalar reference interpreter -------------------------------------------


@dataclass(frozen=True)
class FeatureContext:
    """Feature values for one (unit, period) pair during decoding."""

    cost_rate: float
    p_min: float
    p_max: float
    min_up: float
    min_down: float
    demand: float
    residual_demand: float
    hours_in_state: float
    is_on: float
    t: float
    T: float
    N: float

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in FEATURES}


_SCALAR_BINARY: dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "<": lambda a, b: 1.0 if a < b else 0.0,
    "<=": lambda a, b: 1.0 if a <= b else 0.0,
    ">": lambda a, b: 1.0 if a > b else 0.0,
    ">=": lambda a, b: 1.0 if a >= b else 0.0,
    "==": lambda a, b: 1.0 if a == b else 0.0,
}


def evaluate_priority(
    program: HeuristicProgram | Node,
    ctx: FeatureContext | Mapping[str, float],
    budget: int = DEFAULT_BUDGET,
) -> float:
    """Evaluate a program for one unit; every node visit costs one budget unit."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    ast = program.ast if isinstance(program, HeuristicProgram) else program
    env = ctx.as_dict() if isinstance(ctx, FeatureContext) else {k: float(v) for k, v in ctx.items()}
    remaining = budget

    def ev(node: Node) -> float:
        nonlocal remaining
        remaining -= 1
        if remaining < 0:
            raise BudgetExhausted(f"program exceeded {budget} node evaluations")
        if isinstance(node, Num):
            value = float(node.value)
        elif isinstance(node, Var):
            value = env[node.name]
        elif isinstance(node, Neg):
            value = -ev(node.operand)
        elif isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "/":
                if b == 0.0:
                    raise NumericDomainError("division by zero")
                value = a / b
            else:
                value = _SCALAR_BINARY[node.op](a, b)
        else:
            vals = [ev(arg) for arg in node.args]
            if node.func == "min":
                value = min(vals)
            elif node.func == "max":
                value = max(vals)
            elif node.func == "abs":
                value = abs(vals[0])
            else:
                value = vals[1] if vals[0] != 0.0 else vals[2]
        if not math.isfinite(value):
            raise NumericDomainError(f"non-finite value {value}")
        return value

    return ev(ast)


# --- decoding --------------------------------------------------------------


def decode(
    instance: UcInstance,
    program: HeuristicProgram,
    budget: int = DEFAULT_BUDGET,
    backend: str | None = None,
    strict: bool = False,
) -> CommitmentMatrix:
    """Turn priority scores into an on/off schedule, period by period.

    Units still inside their minimum up or down time keep their state. The
    remaining units are ranked by descending score (ties by id) and switched
    on until committed capacity covers demand.

    Unless ``strict`` is set, the units left over are then visited once more
    in rank order: a unit that was on stays on if switching it off would
    lock it out (minimum down time) of a later period that the rest of the
    fleet cannot cover; after that, a unit is switched on if doing so
    strictly lowers the period's merit-order dispatch cost. Everything else
    is switched off. Only the ranking depends on the program.
    """
    k = get_backend(backend) if backend else kernels
    u, status = k.decode(instance.arrays, program.compiled, budget, not strict)
    if status == STATUS_DOMAIN:
        raise NumericDomainError(f"program {program.normalized!r} produced a division by zero or non-finite value")
    if status == STATUS_BUDGET:
        raise BudgetExhausted(f"program {program.normalized!r} exceeded {budget} node evaluations")
    return CommitmentMatrix(u)
