"""Typed STRIPS subset of PDDL: parsing into ASTs and grounding into a PlanningTask.

Supported requirements are ``:strips``, ``:typing`` and ``:equality``.
``:action-costs`` is accepted, but cost annotations are dropped with a
warning because every action gets unit cost. Equality may appear positively
or negated, since it is decided at grounding time. All other requirements
are rejected.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .task import Action, PlanningTask

logger = logging.getLogger(__name__)

SUPPORTED_REQUIREMENTS = {":strips", ":typing", ":equality", ":action-costs"}


class PddlError(Exception):
    """Base class for all input errors raised by this module."""


class PddlSyntaxError(PddlError):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnsupportedRequirementError(PddlError):
    def __init__(self, flag: str, detail: str = "") -> None:
        msg = f"unsupported requirement {flag}"
        super().__init__(f"{msg}: {detail}" if detail else msg)
        self.flag = flag


class PddlTypeError(PddlError):
    pass


class Sym(str):
    """A lower-cased symbol that remembers where it was read."""

    line: int
    col: int

    def __new__(cls, text: str, line: int = 0, col: int = 0) -> "Sym":
        obj = super().__new__(cls, text.lower())
        obj.line = line
        obj.col = col
        return obj


class SList(list):
    line: int = 0
    col: int = 0


_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


def _tokens(text: str) -> Iterator[tuple[str, int, int]]:
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # pragma: no cover - the pattern matches any character
            raise PddlSyntaxError("unreadable input", line, pos - line_start + 1)
        tok = m.group()
        if not tok.isspace() and not tok.startswith(";"):
            yield tok, line, pos - line_start + 1
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()


def read_sexpr(text: str) -> SList:
    """Read exactly one top-level s-expression."""
    stack: list[SList] = []
    result: SList | None = None
    for tok, line, col in _tokens(text):
        if result is not None:
            raise PddlSyntaxError("trailing content after top-level expression", line, col)
        if tok == "(":
            lst = SList()
            lst.line, lst.col = line, col
            stack.append(lst)
        elif tok == ")":
            if not stack:
                raise PddlSyntaxError("unbalanced ')'", line, col)
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                result = done
        else:
            if not stack:
                raise PddlSyntaxError(f"unexpected symbol {tok!r} outside parentheses", line, col)
            stack[-1].append(Sym(tok, line, col))
    if stack:
        raise PddlSyntaxError("unexpected end of input; missing ')'", stack[-1].line, stack[-1].col)
    if result is None:
        raise PddlSyntaxError("empty input", 1, 1)
    return result


# --------------------------------------------------------------------------
# ASTs
# --------------------------------------------------------------------------

Atom = tuple[str, tuple[str, ...]]


@dataclass
class ActionSchema:
    name: str
    parameters: list[tuple[str, str]]
    pre: list[Atom]
    add: list[Atom]
    delete: list[Atom]
    equal: list[tuple[str, str]] = field(default_factory=list)
    not_equal: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class DomainAst:
    name: str
    requirements: set[str]
    types: dict[str, str]  # child -> parent; "object" is the root
    constants: list[tuple[str, str]]
    predicates: dict[str, list[tuple[str, str]]]
    action_schemas: list[ActionSchema]


@dataclass
class ProblemAst:
    name: str
    domain_name: str
    objects: list[tuple[str, str]]
    init: set[Atom]
    goal: set[Atom]


def _loc(x) -> tuple[int, int]:
    return getattr(x, "line", 0), getattr(x, "col", 0)


def _expect_list(x, what: str) -> SList:
    if not isinstance(x, list):
        raise PddlSyntaxError(f"expected a list for {what}, got {x!r}", *_loc(x))
    return x


def _expect_sym(x, what: str) -> Sym:
    if isinstance(x, list):
        raise PddlSyntaxError(f"expected a symbol for {what}", *_loc(x))
    return x


def _typed_list(items: list, *, allow_types: bool = True) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    pending: list[Sym] = []
    i = 0
    while i < len(items):
        tok = _expect_sym(items[i], "typed list")
        if tok == "-":
            if i + 1 >= len(items):
                raise PddlSyntaxError("type expected after '-'", tok.line, tok.col)
            ty = items[i + 1]
            if isinstance(ty, list):
                raise UnsupportedRequirementError(":typing", "'either' types are not supported")
            out.extend((p, str(ty)) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(tok)
        i += 1
    out.extend((p, "object") for p in pending)
    if not allow_types and any(t != "object" for _, t in out):
        raise PddlTypeError("typed list used without :typing")
    return out


def _sections(expr: SList, kind: str) -> tuple[str, list[SList]]:
    if len(expr) < 2 or expr[0] != "define":
        raise PddlSyntaxError(f"expected (define ({kind} ...) ...)", expr.line, expr.col)
    head = _expect_list(expr[1], kind)
    if len(head) != 2 or head[0] != kind:
        raise PddlSyntaxError(f"expected ({kind} <name>)", head.line, head.col)
    return str(head[1]), [_expect_list(s, "section") for s in expr[2:]]


def _check_requirements(reqs: list) -> set[str]:
    flags = set()
    for r in reqs:
        r = _expect_sym(r, "requirement")
        if r not in SUPPORTED_REQUIREMENTS:
            raise UnsupportedRequirementError(str(r))
        if r == ":action-costs":
            logger.warning("action costs are ignored; every action has unit cost")
        flags.add(str(r))
    return flags


def parse_domain(text: str) -> DomainAst:
    name, sections = _sections(read_sexpr(text), "domain")
    reqs: set[str] = {":strips"}
    types: dict[str, str] = {}
    constants: list[tuple[str, str]] = []
    predicates: dict[str, list[tuple[str, str]]] = {}
    schemas: list[ActionSchema] = []
    raw_actions: list[SList] = []
    for sec in sections:
        key = _expect_sym(sec[0], "section keyword") if sec else None
        if key == ":requirements":
            reqs |= _check_requirements(sec[1:])
        elif key == ":types":
            for child, parent in _typed_list(sec[1:]):
                types[child] = parent
        elif key == ":constants":
            constants = _typed_list(sec[1:])
        elif key == ":predicates":
            for p in sec[1:]:
                p = _expect_list(p, "predicate declaration")
                pname = str(_expect_sym(p[0], "predicate name"))
                predicates[pname] = _typed_list(p[1:])
        elif key == ":functions":
            logger.warning("ignoring :functions section")
        elif key == ":action":
            raw_actions.append(sec)
        elif key == ":derived":
            raise UnsupportedRequirementError(":derived-predicates")
        elif key == ":durative-action":
            raise UnsupportedRequirementError(":durative-actions")
        else:
            line, col = _loc(sec)
            raise PddlSyntaxError(f"unknown domain section {key!r}", line, col)

    for parent in list(types.values()):
        if parent != "object" and parent not in types:
            types[parent] = "object"
    ast = DomainAst(name, reqs, types, constants, predicates, [])
    for sec in raw_actions:
        schemas.append(_parse_action(sec, ast))
    names = [s.name for s in schemas]
    if len(names) != len(set(names)):
        raise PddlTypeError("duplicate action schema names")
    ast.action_schemas = schemas
    for _, ty in constants:
        _check_type(ast, ty)
    return ast


def _check_type(d: DomainAst, ty: str) -> None:
    if ty != "object" and ty not in d.types:
        raise PddlTypeError(f"undeclared type {ty!r}")


def _parse_action(sec: SList, d: DomainAst) -> ActionSchema:
    name = str(_expect_sym(sec[1], "action name"))
    params: list[tuple[str, str]] = []
    pre_expr = None
    eff_expr = None
    i = 2
    while i < len(sec):
        key = _expect_sym(sec[i], "action keyword")
        if i + 1 >= len(sec):
            raise PddlSyntaxError(f"missing value for {key}", key.line, key.col)
        val = sec[i + 1]
        if key == ":parameters":
            params = _typed_list(_expect_list(val, ":parameters"))
        elif key == ":precondition":
            pre_expr = val
        elif key == ":effect":
            eff_expr = val
        else:
            raise PddlSyntaxError(f"unknown action keyword {key!r}", key.line, key.col)
        i += 2
    for _, ty in params:
        _check_type(d, ty)
    scope = {p for p, _ in params} | {c for c, _ in d.constants}
    schema = ActionSchema(name, params, [], [], [])
    if pre_expr is not None:
        _parse_precondition(pre_expr, d, scope, schema)
    if eff_expr is not None:
        _parse_effect(eff_expr, d, scope, schema)
    return schema


def _atom(expr: SList, d: DomainAst, scope: set[str] | None) -> Atom:
    pred = str(_expect_sym(expr[0], "predicate"))
    args = tuple(str(_expect_sym(a, "argument")) for a in expr[1:])
    if pred not in d.predicates:
        raise PddlTypeError(f"undeclared predicate {pred!r} (line {expr.line})")
    if len(args) != len(d.predicates[pred]):
        raise PddlTypeError(f"predicate {pred!r} expects {len(d.predicates[pred])} arguments, got {len(args)}")
    if scope is not None:
        for a in args:
            if a not in scope:
                raise PddlTypeError(f"undeclared variable or constant {a!r} in ({pred} ...)")
    return pred, args


def _conjuncts(expr) -> list:
    expr = _expect_list(expr, "formula")
    if not expr:
        return []
    if expr[0] == "and":
        out = []
        for sub in expr[1:]:
            out.extend(_conjuncts(sub))
        return out
    return [expr]


def _parse_precondition(expr, d: DomainAst, scope: set[str], schema: ActionSchema) -> None:
    for lit in _conjuncts(expr):
        head = lit[0] if lit else None
        if head == "=":
            schema.equal.append((str(lit[1]), str(lit[2])))
        elif head == "not":
            inner = _expect_list(lit[1], "negated literal")
            if inner and inner[0] == "=":
                schema.not_equal.append((str(inner[1]), str(inner[2])))
            else:
                raise UnsupportedRequirementError(":negative-preconditions")
        elif head in ("or", "imply"):
            raise UnsupportedRequirementError(":disjunctive-preconditions")
        elif head in ("exists", "forall"):
            raise UnsupportedRequirementError(":quantified-preconditions")
        else:
            schema.pre.append(_atom(lit, d, scope))


def _parse_effect(expr, d: DomainAst, scope: set[str], schema: ActionSchema) -> None:
    for lit in _conjuncts(expr):
        head = lit[0] if lit else None
        if head == "not":
            schema.delete.append(_atom(_expect_list(lit[1], "negated effect"), d, scope))
        elif head in ("increase", "decrease", "assign", "scale-up", "scale-down"):
            logger.warning("ignoring numeric effect in action %s", schema.name)
        elif head in ("when", "forall"):
            raise UnsupportedRequirementError(":conditional-effects")
        else:
            schema.add.append(_atom(lit, d, scope))


def parse_problem(text: str, domain: DomainAst | None = None) -> ProblemAst:
    name, sections = _sections(read_sexpr(text), "problem")
    domain_name = ""
    objects: list[tuple[str, str]] = []
    init_raw: list = []
    goal_raw = None
    for sec in sections:
        key = _expect_sym(sec[0], "section keyword") if sec else None
        if key == ":domain":
            domain_name = str(sec[1])
        elif key == ":requirements":
            _check_requirements(sec[1:])
        elif key == ":objects":
            objects = _typed_list(sec[1:])
        elif key == ":init":
            init_raw = list(sec[1:])
        elif key == ":goal":
            goal_raw = sec[1] if len(sec) > 1 else SList()
        elif key == ":metric":
            logger.warning("ignoring :metric; plans are measured by length")
        else:
            line, col = _loc(sec)
            raise PddlSyntaxError(f"unknown problem section {key!r}", line, col)
    prob = ProblemAst(name, domain_name, objects, set(), set())
    if domain is not None:
        _bind_problem(prob, domain, init_raw, goal_raw)
    else:
        prob.init = {_raw_atom(a) for a in init_raw if _raw_atom(a) is not None}
        prob.goal = {_raw_atom(a) for a in _conjuncts(goal_raw or SList())}
    return prob


def _raw_atom(expr) -> Atom | None:
    expr = _expect_list(expr, "atom")
    if expr and expr[0] == "=":
        return None
    return str(expr[0]), tuple(str(a) for a in expr[1:])


def _bind_problem(prob: ProblemAst, d: DomainAst, init_raw: list, goal_raw) -> None:
    if prob.domain_name != d.name:
        raise PddlTypeError(f"problem is for domain {prob.domain_name!r}, not {d.name!r}")
    for _, ty in prob.objects:
        _check_type(d, ty)
    scope = {o for o, _ in prob.objects} | {c for c, _ in d.constants}
    for a in init_raw:
        a = _expect_list(a, "init atom")
        if a and a[0] == "=":
            logger.warning("ignoring numeric initialisation %s", a)
            continue
        prob.init.add(_atom(a, d, scope))
    for lit in _conjuncts(goal_raw if goal_raw is not None else SList()):
        if lit and lit[0] in ("not", "or", "exists", "forall", "imply"):
            raise UnsupportedRequirementError(":negative-preconditions" if lit[0] == "not" else ":adl",
                                              "goals must be conjunctions of positive atoms")
        prob.goal.add(_atom(lit, d, scope))


def parse(domain_text: str, problem_text: str) -> tuple[DomainAst, ProblemAst]:
    domain = parse_domain(domain_text)
    return domain, parse_problem(problem_text, domain)


# --------------------------------------------------------------------------
# Grounding
# --------------------------------------------------------------------------


def _objects_by_type(d: DomainAst, objects: list[tuple[str, str]]) -> dict[str, list[str]]:
    def ancestors(ty: str) -> list[str]:
        chain = [ty]
        seen = {ty}
        while ty != "object":
            ty = d.types.get(ty, "object")
            if ty in seen:
                raise PddlTypeError(f"cyclic type hierarchy at {ty!r}")
            seen.add(ty)
            chain.append(ty)
        return chain

    by_type: dict[str, set[str]] = {}
    for obj, ty in objects:
        for anc in ancestors(ty):
            by_type.setdefault(anc, set()).add(obj)
    return {ty: sorted(objs) for ty, objs in by_type.items()}


def _fmt(atom: Atom) -> str:
    pred, args = atom
    return "(" + " ".join((pred,) + args) + ")"


def ground(d: DomainAst, p: ProblemAst, name: str = "") -> PlanningTask:
    """Instantiate every schema over type-consistent objects.

    Actions are ordered by schema name, then by argument tuple. Preconditions
    on static predicates (never added by any schema) are checked against the
    initial state during instantiation. Actions whose fluent preconditions can
    never appear in the fact set are then pruned until nothing changes.
    """
    objects = list(dict.fromkeys(d.constants + p.objects))
    by_type = _objects_by_type(d, objects)
    added_preds = {atom[0] for s in d.action_schemas for atom in s.add}
    static_preds = set(d.predicates) - added_preds
    init = set(p.init)

    candidates: list[tuple[str, list[Atom], list[Atom], list[Atom]]] = []
    for schema in sorted(d.action_schemas, key=lambda s: s.name):
        candidates.extend(_instantiate(schema, by_type, static_preds, init))

    facts = set(init) | set(p.goal)
    alive = candidates
    while True:
        reachable = set(init) | set(p.goal)
        for _, _, add, _ in alive:
            reachable.update(add)
        kept = [c for c in alive if all(q in reachable for q in c[1])]
        if len(kept) == len(alive):
            facts = reachable
            break
        alive = kept

    fact_names = sorted(_fmt(f) for f in facts)
    index = {n: i for i, n in enumerate(fact_names)}

    def ids(atoms) -> tuple[int, ...]:
        return tuple(sorted({index[_fmt(a)] for a in atoms if _fmt(a) in index}))

    actions = []
    for aname, pre, add, dele in alive:
        add_ids = ids(add)
        del_ids = tuple(f for f in ids(dele) if f not in add_ids)
        actions.append(Action(aname, ids(pre), add_ids, del_ids))
    return PlanningTask(
        tuple(fact_names),
        tuple(actions),
        frozenset(index[_fmt(a)] for a in init),
        frozenset(index[_fmt(a)] for a in p.goal),
        name=name or p.name,
    )


def _instantiate(schema: ActionSchema, by_type: dict[str, list[str]], static_preds: set[str],
                 init: set[Atom]) -> Iterator[tuple[str, list[Atom], list[Atom], list[Atom]]]:
    params = [v for v, _ in schema.parameters]
    pos = {v: i for i, v in enumerate(params)}

    def depth_of(args) -> int:
        return max((pos[a] for a in args if a in pos), default=-1)

    # Checks that become decidable once parameter `k` is bound.
    checks: list[list] = [[] for _ in range(len(params) + 1)]
    for atom in schema.pre:
        if atom[0] in static_preds:
            checks[depth_of(atom[1]) + 1].append(("static", atom))
    for a, b in schema.equal:
        checks[depth_of((a, b)) + 1].append(("eq", (a, b)))
    for a, b in schema.not_equal:
        checks[depth_of((a, b)) + 1].append(("neq", (a, b)))

    domains = [by_type.get(ty, []) for _, ty in schema.parameters]
    binding: dict[str, str] = {}

    def subst(args) -> tuple[str, ...]:
        return tuple(binding.get(a, a) for a in args)

    def ok(level: int) -> bool:
        for kind, data in checks[level]:
            if kind == "static":
                if (data[0], subst(data[1])) not in init:
                    return False
            else:
                a, b = subst(data)
                if (a == b) != (kind == "eq"):
                    return False
        return True

    def rec(k: int):
        if k == len(params):
            args = [binding[v] for v in params]
            yield (
                "(" + " ".join([schema.name] + args) + ")",
                [(pr, subst(ar)) for pr, ar in schema.pre],
                [(pr, subst(ar)) for pr, ar in schema.add],
                [(pr, subst(ar)) for pr, ar in schema.delete],
            )
            return
        for obj in domains[k]:
            binding[params[k]] = obj
            if ok(k + 1):
                yield from rec(k + 1)
        binding.pop(params[k], None)

    if ok(0):
        yield from rec(0)


def load_task(domain_path: str | Path, problem_path: str | Path) -> PlanningTask:
    domain_path, problem_path = Path(domain_path), Path(problem_path)
    d, p = parse(domain_path.read_text(), problem_path.read_text())
    return ground(d, p, name=problem_path.stem)
