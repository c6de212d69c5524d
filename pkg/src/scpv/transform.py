"""Most specific generalization, fold-instance matching, task decomposition
and residual-program construction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .config import Configuration, ParamGen, TimedApp, compose_subst, subst_seq
from .lang import (
    BULLET,
    Bullet,
    Call,
    FuncDef,
    Paren,
    Param,
    Program,
    Rule,
    Seq,
    Sym,
    Var,
    bullet_count,
    iter_items,
)


class Incompatible(Exception):
    """Top-level shapes cannot be merged into a common configuration."""


@dataclass(frozen=True)
class Generalization:
    gen: Configuration
    theta1: dict
    theta2: dict


@dataclass(frozen=True)
class FoldEdge:
    from_id: int
    to_id: int
    theta: dict


def _ground_item(it) -> bool:
    return not any(isinstance(x, (Param, Var, Bullet)) for x in iter_items((it,)))


def _sym_kind(it) -> bool:
    return isinstance(it, Sym) or (isinstance(it, Param) and it.kind == "s")


def _alignable(x, y) -> bool:
    if x == y and _ground_item(x):
        return True
    if isinstance(x, Bullet) and isinstance(y, Bullet):
        return True
    if _sym_kind(x) and _sym_kind(y):
        return True
    if isinstance(x, Param) and isinstance(y, Param) and x.kind == y.kind:
        return True
    if isinstance(x, Paren) and isinstance(y, Paren):
        return True
    if isinstance(x, Call) and isinstance(y, Call):
        return x.fname == y.fname and len(x.args) == len(y.args)
    return False


def msg_seq(a: Seq, b: Seq, pgen: ParamGen, th1: dict, th2: dict) -> Seq:
    """Generalize two sequences: greedy alignment from both ends, one fresh
    e-parameter for the mismatching middle."""
    a, b = tuple(a), tuple(b)
    lo = 0
    left = []
    while lo < len(a) and lo < len(b) and _alignable(a[lo], b[lo]):
        left.append(_msg_item(a[lo], b[lo], pgen, th1, th2))
        lo += 1
    hi = 0
    right = []
    while (
        len(a) - hi > lo
        and len(b) - hi > lo
        and _alignable(a[-1 - hi], b[-1 - hi])
    ):
        right.append(_msg_item(a[-1 - hi], b[-1 - hi], pgen, th1, th2))
        hi += 1
    mid_a, mid_b = a[lo : len(a) - hi], b[lo : len(b) - hi]
    middle = []
    if mid_a or mid_b:
        if bullet_count(mid_a) or bullet_count(mid_b):
            raise Incompatible("bullets cannot be generalized away")
        p = pgen.fresh("e")
        th1[p] = mid_a
        th2[p] = mid_b
        middle = [p]
    return tuple(left + middle + list(reversed(right)))


def _msg_item(x, y, pgen: ParamGen, th1, th2):
    if x == y and _ground_item(x):
        return x
    if isinstance(x, Bullet):
        return x
    if isinstance(x, Paren) and isinstance(y, Paren):
        return Paren(msg_seq(x.items, y.items, pgen, th1, th2))
    if isinstance(x, Call) and isinstance(y, Call):
        return Call(
            x.fname,
            tuple(msg_seq(p, q, pgen, th1, th2) for p, q in zip(x.args, y.args)),
        )
    if isinstance(x, Param) and isinstance(y, Param) and x.kind == y.kind == "e":
        p = pgen.fresh("e")
        th1[p] = (x,)
        th2[p] = (y,)
        return p
    # both symbol-kind
    p = pgen.fresh("s")
    th1[p] = (x,)
    th2[p] = (y,)
    return p


def msg(c1: Configuration, c2: Configuration, pgen: ParamGen) -> Generalization:
    """Most specific generalization of two same-shaped configurations.

    Returns gen with fresh parameters and the two witnessing substitutions;
    the ancestor's time labels are kept on the generalized entries.
    """
    if len(c1.stack) != len(c2.stack):
        raise Incompatible("stack heights differ")
    th1: dict = {}
    th2: dict = {}
    entries = []
    for f, g in zip(c1.stack, c2.stack):
        if f.fname != g.fname or len(f.args) != len(g.args):
            raise Incompatible(f"stack entries {f.fname}/{g.fname} differ")
        args = tuple(msg_seq(p, q, pgen, th1, th2) for p, q in zip(f.args, g.args))
        entries.append(TimedApp(f.fname, args, f.time))
    tail = msg_seq(c1.tail, c2.tail, pgen, th1, th2)
    return Generalization(Configuration(tuple(entries), tail), th1, th2)


# ---------------------------------------------------------------------------
# Fold-instance matching

_MATCH_BUDGET = 200_000


class _Budget:
    def __init__(self, n):
        self.n = n

    def spend(self):
        self.n -= 1
        return self.n > 0


def _inst_seq(pat: Seq, subj: Seq, th: dict, budget: _Budget) -> Optional[dict]:
    if not budget.spend():
        return None
    if not pat:
        return th if not subj else None
    p, rest = pat[0], pat[1:]
    if isinstance(p, Param) and p.kind == "e":
        if p in th:
            v = th[p]
            if subj[: len(v)] == v:
                return _inst_seq(rest, subj[len(v) :], th, budget)
            return None
        for k in range(len(subj) + 1):
            th2 = dict(th)
            th2[p] = subj[:k]
            got = _inst_seq(rest, subj[k:], th2, budget)
            if got is not None:
                return got
        return None
    if not subj:
        return None
    d = subj[0]
    if isinstance(p, Param):  # s-parameter
        if not _sym_kind(d):
            return None
        if p in th:
            if th[p] != (d,):
                return None
            return _inst_seq(rest, subj[1:], th, budget)
        th2 = dict(th)
        th2[p] = (d,)
        return _inst_seq(rest, subj[1:], th2, budget)
    if isinstance(p, (Sym, Bullet)):
        if p != d:
            return None
        return _inst_seq(rest, subj[1:], th, budget)
    if isinstance(p, Paren):
        if not isinstance(d, Paren):
            return None
        got = _inst_seq(p.items, d.items, th, budget)
        if got is None:
            return None
        return _inst_seq(rest, subj[1:], got, budget)
    if isinstance(p, Call):
        if not (isinstance(d, Call) and d.fname == p.fname and len(d.args) == len(p.args)):
            return None
        got = th
        for pa, da in zip(p.args, d.args):
            got = _inst_seq(pa, da, got, budget)
            if got is None:
                return None
        return _inst_seq(rest, subj[1:], got, budget)
    return None


def fold_instance(ancestor: Configuration, current: Configuration) -> Optional[dict]:
    """A substitution with ancestor applied equal to current, labels ignored."""
    if len(ancestor.stack) != len(current.stack):
        return None
    budget = _Budget(_MATCH_BUDGET)
    th: Optional[dict] = {}
    for f, g in zip(ancestor.stack, current.stack):
        if f.fname != g.fname or len(f.args) != len(g.args):
            return None
        for pa, da in zip(f.args, g.args):
            th = _inst_seq(pa, da, th, budget)
            if th is None:
                return None
    return _inst_seq(ancestor.tail, current.tail, th, budget)


# ---------------------------------------------------------------------------
# Task decomposition at a Turchin split point


def split_task(c: Configuration, l: int, pgen: ParamGen):
    """Cut a configuration at stack position l (1-based, 1 < l <= height).

    Returns (prefix task, context task, connector): the prefix computes the
    top l-1 entries into a bullet tail; the context receives that value
    through a fresh parameter where its first entry's bullet was.
    """
    k = len(c.stack)
    if not 1 < l <= k:
        raise ValueError(f"split index {l} out of range for height {k}")
    prefix = Configuration(c.stack[: l - 1], (BULLET,))
    connector = pgen.fresh("e")
    first = c.stack[l - 1]
    filled = TimedApp(
        first.fname,
        tuple(_replace_bullet_seq(a, (connector,)) for a in first.args),
        first.time,
    )
    context = Configuration((filled,) + c.stack[l:], c.tail)
    return prefix, context, connector


def _replace_bullet_seq(seq: Seq, value: Seq) -> Seq:
    out = []
    for it in seq:
        if isinstance(it, Bullet):
            out.extend(value)
        elif isinstance(it, Paren):
            out.append(Paren(_replace_bullet_seq(it.items, value)))
        elif isinstance(it, Call):
            out.append(
                Call(it.fname, tuple(_replace_bullet_seq(a, value) for a in it.args))
            )
        else:
            out.append(it)
    return tuple(out)


# ---------------------------------------------------------------------------
# Residual construction


class IncompleteGraph(Exception):
    pass


def _render_seq(seq: Seq) -> Seq:
    """Parameters become ordinary variables in residual code."""
    out = []
    for it in seq:
        if isinstance(it, Param):
            out.append(Var(it.kind, str(it.num)))
        elif isinstance(it, Paren):
            out.append(Paren(_render_seq(it.items)))
        elif isinstance(it, Call):
            out.append(Call(it.fname, tuple(_render_seq(a) for a in it.args)))
        elif isinstance(it, Bullet):
            raise IncompleteGraph("bullet escaped into residual code")
        else:
            out.append(it)
    return tuple(out)


def _config_params(c: Configuration) -> list:
    seen = []
    for e in c.stack:
        for a in e.args:
            for it in iter_items(a):
                if isinstance(it, Param) and it not in seen:
                    seen.append(it)
    for it in iter_items(c.tail):
        if isinstance(it, Param) and it not in seen:
            seen.append(it)
    return seen


UNDEF_NAME = "Undef"


class _Emitter:
    """Reads residual functions off the graph.

    All expressions are kept in parameter space; rendering to source
    variables happens once per emitted rule.
    """

    def __init__(self, graph, entry_id: int, entry_name: str):
        self.g = graph
        self.entry_id = entry_id
        self.fn_name: dict[int, str] = {entry_id: entry_name}
        self.fn_formals: dict[int, list] = {}
        self.emitted: dict[str, FuncDef] = {}
        self.pending: list[int] = []
        self.need_undef = False

    def name_of(self, nid: int) -> str:
        if nid not in self.fn_name:
            self.fn_name[nid] = f"F{nid}"
        return self.fn_name[nid]

    def formals_of(self, nid: int) -> list:
        if nid not in self.fn_formals:
            self.fn_formals[nid] = _config_params(self.g.node(nid).config)
        return self.fn_formals[nid]

    def demand(self, nid: int) -> str:
        name = self.name_of(nid)
        if name not in self.emitted and nid not in self.pending:
            self.pending.append(nid)
        return name

    def call_expr(self, nid: int, theta: dict) -> Seq:
        name = self.demand(nid)
        formals = self.formals_of(nid)
        # parameterless functions take one empty argument so the printed
        # program reparses with a consistent arity
        args = tuple(subst_seq((p,), theta) for p in formals) or ((),)
        return (Call(name, args),)

    # -- expression for a node referenced in value position ---------------

    def node_expr(self, nid: int) -> Seq:
        node = self.g.node(nid)
        if node.entry_subst is not None:
            return self.call_expr(nid, node.entry_subst)
        if node.kind == "passive":
            return node.value
        if node.kind == "stuck":
            self.need_undef = True
            return (Call(UNDEF_NAME, ((),)),)
        if node.kind == "fold":
            return self.call_expr(node.fold_target, node.fold_theta)
        if node.kind == "letsplit":
            return self.let_expr(node)
        if node.kind == "drive":
            # a branching point in value position becomes a function
            return self.call_expr(nid, {})
        raise IncompleteGraph(f"open node {nid} in residual graph")

    def let_expr(self, node) -> Seq:
        # parts: [(connector_or_None, node_id)]; a part's connector carries
        # the previous part's value, the last part is the whole value
        parts = node.parts
        expr = self.node_expr(parts[-1][1])
        for i in range(len(parts) - 1, 0, -1):
            connector = parts[i][0]
            expr = subst_seq(expr, {connector: self.node_expr(parts[i - 1][1])})
        return expr

    # -- rule flattening ---------------------------------------------------

    def emit(self) -> None:
        while self.pending:
            nid = self.pending.pop(0)
            name = self.name_of(nid)
            if name in self.emitted:
                continue
            node = self.g.node(nid)
            formals = self.formals_of(nid)
            rules: list[Rule] = []
            self.flatten(nid, {}, formals, rules, root=True)
            if not rules:
                # every instance is undefined: keep the entry well-formed
                self.need_undef = True
                rules.append(
                    Rule(
                        tuple((p,) for p in formals),
                        (Call(UNDEF_NAME, ((),)),),
                    )
                )
            self.emitted[name] = FuncDef(
                name,
                max(1, len(formals)),
                tuple(
                    Rule(
                        tuple(_render_seq(p) for p in r.lhs) or ((),),
                        _render_seq(r.rhs),
                    )
                    for r in rules
                ),
            )

    def flatten(self, nid: int, theta: dict, formals, rules, root=False) -> None:
        node = self.g.node(nid)
        if not root and node.entry_subst is not None:
            self.add_rule(
                rules, formals, theta, self.call_expr(nid, node.entry_subst)
            )
            return
        if node.kind == "drive":
            for contraction, cid in node.children:
                self.flatten(cid, compose_subst(theta, contraction), formals, rules)
            return
        if node.kind == "stuck":
            return
        if node.kind == "passive":
            self.add_rule(rules, formals, theta, node.value)
            return
        if node.kind == "fold":
            self.add_rule(
                rules, formals, theta,
                self.call_expr(node.fold_target, node.fold_theta),
            )
            return
        if node.kind == "letsplit":
            self.add_rule(rules, formals, theta, self.let_expr(node))
            return
        raise IncompleteGraph(f"open node {nid} while flattening")

    def add_rule(self, rules, formals, theta, rhs: Seq) -> None:
        lhs = tuple(subst_seq((p,), theta) for p in formals)
        rules.append(Rule(lhs, rhs))


def build_residual(graph, entry_id: int, entry_name: str) -> Program:
    """Read the folded process graph off into a program.

    One residual function per fold target, generalization point and
    branching point referenced in value position. Only functions reachable
    from the entry are emitted, which is the dead-code removal pass.
    """
    em = _Emitter(graph, entry_id, entry_name)
    em.demand(entry_id)
    em.emit()
    defs = list(em.emitted.values())
    if em.need_undef:
        defs.append(
            FuncDef(
                UNDEF_NAME,
                1,
                (Rule(((Sym("never"),),), (Sym("never"),)),),
            )
        )
    return Program(defs)


# ---------------------------------------------------------------------------
# Residual cleanup: the simplified global analysis


def _pattern_instance(general: Seq, specific: Seq, th: dict) -> Optional[dict]:
    """Match one pattern sequence against another, variables as holes."""
    if not general:
        return th if not specific else None
    p, rest = general[0], general[1:]
    if isinstance(p, Var) and p.kind == "e":
        if p in th:
            v = th[p]
            return (
                _pattern_instance(rest, specific[len(v):], th)
                if specific[: len(v)] == v
                else None
            )
        for k in range(len(specific) + 1):
            th2 = dict(th)
            th2[p] = specific[:k]
            got = _pattern_instance(rest, specific[k:], th2)
            if got is not None:
                return got
        return None
    if not specific:
        return None
    d = specific[0]
    if isinstance(p, Var):  # s-variable hole
        if not (isinstance(d, Sym) or (isinstance(d, Var) and d.kind == "s")):
            return None
        if p in th:
            return _pattern_instance(rest, specific[1:], th) if th[p] == (d,) else None
        th2 = dict(th)
        th2[p] = (d,)
        return _pattern_instance(rest, specific[1:], th2)
    if isinstance(p, Sym):
        return _pattern_instance(rest, specific[1:], th) if p == d else None
    if isinstance(p, Paren):
        if not isinstance(d, Paren):
            return None
        got = _pattern_instance(p.items, d.items, th)
        if got is None:
            return None
        return _pattern_instance(rest, specific[1:], got)
    return None


def _rule_subsumed(early: Rule, late: Rule) -> bool:
    th: Optional[dict] = {}
    for g, s in zip(early.lhs, late.lhs):
        th = _pattern_instance(g, s, th)
        if th is None:
            return False
    return True


def _drop_dead_rules(d: FuncDef) -> FuncDef:
    kept: list = []
    for r in d.rules:
        if any(_rule_subsumed(k, r) for k in kept):
            continue
        kept.append(r)
    return FuncDef(d.name, d.arity, tuple(kept))


def _subst_vars_seq(seq: Seq, env: dict) -> Seq:
    out = []
    for it in seq:
        if isinstance(it, Var):
            out.extend(env.get(it, (it,)))
        elif isinstance(it, Paren):
            out.append(Paren(_subst_vars_seq(it.items, env)))
        elif isinstance(it, Call):
            out.append(Call(it.fname, tuple(_subst_vars_seq(a, env) for a in it.args)))
        else:
            out.append(it)
    return tuple(out)


def _sym_item(it) -> bool:
    return isinstance(it, Sym) or (isinstance(it, Var) and it.kind == "s")


def _inline_calls(seq: Seq, inlinable: dict, budget: list) -> Seq:
    out = []
    for it in seq:
        if isinstance(it, Paren):
            out.append(Paren(_inline_calls(it.items, inlinable, budget)))
            continue
        if not isinstance(it, Call):
            out.append(it)
            continue
        args = tuple(_inline_calls(a, inlinable, budget) for a in it.args)
        rule = inlinable.get(it.fname)
        if rule is not None and budget[0] > 0:
            env = {}
            ok = True
            for pat, arg in zip(rule.lhs, args):
                if len(pat) == 1 and isinstance(pat[0], Var):
                    v = pat[0]
                    if v.kind == "e":
                        env[v] = arg
                    elif len(arg) == 1 and _sym_item(arg[0]):
                        env[v] = arg
                    else:
                        ok = False
                        break
                elif pat == () and arg == ():
                    continue
                else:
                    ok = False
                    break
            if ok:
                budget[0] -= 1
                out.extend(_inline_calls(_subst_vars_seq(rule.rhs, env), inlinable, budget))
                continue
        out.append(Call(it.fname, args))
    return tuple(out)


def _canonical_def(d: FuncDef) -> tuple:
    """Shape of a definition with variables numbered by first occurrence."""
    names: dict = {}

    def canon(seq):
        out = []
        for it in seq:
            if isinstance(it, Var):
                key = ("v", it)
                if key not in names:
                    names[key] = len(names)
                out.append((it.kind, names[key]))
            elif isinstance(it, Paren):
                out.append(("p", canon(it.items)))
            elif isinstance(it, Call):
                out.append(("c", it.fname, tuple(canon(a) for a in it.args)))
            else:
                out.append(it)
        return tuple(out)

    body = []
    for r in d.rules:
        body.append((tuple(canon(p) for p in r.lhs), canon(r.rhs)))
    return (d.arity, tuple(body))


def _rename_calls(seq: Seq, mapping: dict) -> Seq:
    out = []
    for it in seq:
        if isinstance(it, Paren):
            out.append(Paren(_rename_calls(it.items, mapping)))
        elif isinstance(it, Call):
            out.append(
                Call(
                    mapping.get(it.fname, it.fname),
                    tuple(_rename_calls(a, mapping) for a in it.args),
                )
            )
        else:
            out.append(it)
    return tuple(out)


def simplify_program(prog: Program, entry: str, rounds: int = 12) -> Program:
    """Dead-code removal plus inlining of pattern-free forwarder functions
    and merging of structurally identical definitions."""
    defs = {d.name: _drop_dead_rules(d) for d in prog.defs.values()}
    for _ in range(rounds):
        changed = False
        # single-rule functions whose patterns are fresh bare variables are
        # transitive chains: inline them at every call site
        inlinable = {}
        for d in defs.values():
            if d.name == entry or len(d.rules) != 1:
                continue
            r = d.rules[0]
            seen = set()
            ok = True
            for pat in r.lhs:
                if pat == ():
                    continue
                if (
                    len(pat) != 1
                    or not isinstance(pat[0], Var)
                    or pat[0] in seen
                ):
                    ok = False
                    break
                seen.add(pat[0])
            if ok:
                inlinable[d.name] = r
        if inlinable:
            budget = [10_000]
            new_defs = {}
            for d in defs.values():
                rules = tuple(
                    Rule(r.lhs, _inline_calls(r.rhs, inlinable, budget))
                    for r in d.rules
                )
                if rules != d.rules:
                    changed = True
                new_defs[d.name] = FuncDef(d.name, d.arity, rules)
            defs = new_defs
        # merge structurally identical definitions
        canon_map: dict = {}
        rename: dict = {}
        for d in defs.values():
            if d.name == entry:
                continue
            key = _canonical_def(d)
            if key in canon_map:
                rename[d.name] = canon_map[key]
                changed = True
            else:
                canon_map[key] = d.name
        if rename:
            # follow chains in case targets were themselves renamed
            def resolve(n):
                while n in rename:
                    n = rename[n]
                return n

            defs = {
                d.name: FuncDef(
                    d.name,
                    d.arity,
                    tuple(
                        Rule(r.lhs, _rename_calls(r.rhs, {k: resolve(k) for k in rename}))
                        for r in d.rules
                    ),
                )
                for d in defs.values()
                if d.name not in rename
            }
        # dead-code: keep what the entry reaches
        reachable = {entry}
        work = [entry]
        while work:
            f = work.pop()
            if f not in defs:
                continue
            for r in defs[f].rules:
                for it in iter_items(r.rhs):
                    if isinstance(it, Call) and it.fname not in reachable:
                        reachable.add(it.fname)
                        work.append(it.fname)
        if len(reachable & set(defs)) != len(defs):
            defs = {n: d for n, d in defs.items() if n in reachable}
            changed = True
        if not changed:
            break
    return Program(defs.values())
