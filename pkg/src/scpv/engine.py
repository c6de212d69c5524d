"""The unfold-fold control loop: task queue, transitive skipping, whistle
consultation, folding, generalization, residual construction and the
syntactic safety scan."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

from .config import (
    Clock,
    Configuration,
    ParamGen,
    TimedApp,
    check_config,
    decompose,
    replace_bullet,
    subst_config,
    subst_seq,
)
from .driving import drive, is_renaming
from .lang import (
    BULLET,
    Call,
    Param,
    Paren,
    Program,
    Seq,
    Sym,
    Var as _Var,
    iter_items,
    parse_expr,
    print_seq,
)
from .relations import whistle
from .transform import Incompatible, fold_instance, msg, split_task


class BudgetExceeded(Exception):
    def __init__(self, msg, graph=None, trace=None):
        super().__init__(msg)
        self.graph = graph
        self.trace = trace


class PropertyViolation(AssertionError):
    """An instrumented invariant of the strategy failed during a run."""


@dataclass
class Limits:
    max_nodes: int = 200_000
    max_depth: int = 5_000
    time_budget_s: float = 120.0


@dataclass
class Node:
    id: int
    config: Configuration
    kind: str = "open"  # open|drive|passive|stuck|fold|letsplit
    children: list = field(default_factory=list)  # drive: (contraction, child_id)
    parts: list = field(default_factory=list)  # letsplit: (connector|None, child_id)
    parent: Optional[int] = None
    path: tuple = ()  # whistle ancestors (node ids), oldest first
    value: Seq = ()
    fold_target: Optional[int] = None
    fold_theta: Optional[dict] = None
    entry_subst: Optional[dict] = None  # set when generalization replaced this node
    dead: bool = False
    complete: bool = False
    pending_children: int = 0


class ProcessGraph:
    def __init__(self):
        self.nodes: dict[int, Node] = {}
        self.next_id = 0
        self.by_shape: dict[tuple, list] = {}
        self.fold_sources: dict[int, list] = {}
        self.task_roots: dict[tuple, list] = {}

    def new_node(self, config: Configuration, parent=None, path=()) -> Node:
        if __debug__:
            check_config(config)
        n = Node(self.next_id, config, parent=parent, path=tuple(path))
        self.next_id += 1
        self.nodes[n.id] = n
        return n

    def node(self, nid: int) -> Node:
        return self.nodes[nid]

    def shape_key(self, c: Configuration) -> tuple:
        return tuple(e.fname for e in c.stack)

    def index_complete(self, n: Node) -> None:
        self.by_shape.setdefault(self.shape_key(n.config), []).append(n.id)

    def complete_candidates(self, c: Configuration):
        for nid in self.by_shape.get(self.shape_key(c), ()):
            n = self.nodes[nid]
            if not n.dead:
                yield n

    def kill_subtree(self, nid: int) -> None:
        """Remove the sub-tree below nid; returns ids of removed nodes."""
        killed = []
        stack = [cid for _, cid in list(self.nodes[nid].children) + list(self.nodes[nid].parts)]
        self.nodes[nid].children = []
        self.nodes[nid].parts = []
        while stack:
            cid = stack.pop()
            child = self.nodes[cid]
            if child.dead:
                continue
            child.dead = True
            killed.append(cid)
            stack.extend(c for _, c in list(child.children) + list(child.parts))
        return killed

    def fold_edges(self):
        from .transform import FoldEdge

        return [
            FoldEdge(n.id, n.fold_target, n.fold_theta)
            for n in self.nodes.values()
            if not n.dead and n.kind == "fold"
        ]

    def stats(self) -> dict:
        live = [n for n in self.nodes.values() if not n.dead]
        return {
            "nodes": len(live),
            "folds": sum(1 for n in live if n.kind == "fold"),
            "letsplits": sum(1 for n in live if n.kind == "letsplit"),
        }


class Trace:
    """Deterministic event log; serializes to JSON lines, schema v1."""

    def __init__(self, instrument: bool = False):
        self.events: list[dict] = []
        self.instrument = instrument
        self.violations: list[str] = []
        self.first_generalization: Optional[dict] = None
        self.warnings: list[str] = []
        self.msg_checked = 0
        self.fold_checked = 0

    def emit(self, ev: str, **fields) -> None:
        rec = {"v": 1, "ev": ev}
        rec.update(fields)
        self.events.append(rec)

    def warn(self, msg: str) -> None:
        self.warnings.append(msg)

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(e, sort_keys=True) for e in self.events)


def _print_config(c: Configuration) -> str:
    return repr(c)


def _theta_str(theta: dict) -> dict:
    return {repr(p): print_seq(v) for p, v in theta.items()}


# ---------------------------------------------------------------------------
# Strategy-property instrumentation (the proposition checks)


def _shared_timed_matching(c1: Configuration, c2: Configuration) -> bool:
    a = {(e.fname, e.time) for e in c1.stack if e.fname == "Matching"}
    b = {(e.fname, e.time) for e in c2.stack if e.fname == "Matching"}
    return bool(a & b)


def _match_headed_nil(c: Configuration) -> bool:
    """The first-generalization form: a Match of the empty pattern on top,
    with the surrounding Matching and Eval applications below."""
    if not c.stack or c.stack[0].fname != "Match":
        return False
    args = c.stack[0].args
    below = {e.fname for e in c.stack[1:]}
    return (
        len(args) == 3
        and args[0] == ()
        and "Matching" in below
        and "Eval" in below
    )


def _check_action(trace: Trace, what: str, c1: Configuration, c2: Configuration):
    """Instrumented invariants for fold/generalize pairs on interpreter runs."""
    if not trace.instrument:
        return
    if _shared_timed_matching(c1, c2):
        trace.violations.append(
            f"{what} between configurations sharing a timed Matching application"
        )
    if (
        c1.stack
        and c2.stack
        and c1.stack[0].fname == "Match"
        and c2.stack[0].fname == "Match"
    ):
        shared = {(e.fname, e.time) for e in c1.stack} & {
            (e.fname, e.time) for e in c2.stack
        }
        if shared:
            from .lang import is_ground
            from .relations import strict_embed

            p1, p2 = c1.stack[0].args[0], c2.stack[0].args[0]
            if is_ground(p1) and is_ground(p2) and (
                strict_embed(p1, p2) or strict_embed(p2, p1)
            ):
                trace.violations.append(
                    f"{what} between Match configurations of one big-step "
                    "with strictly related constant patterns"
                )


def _note_generalization(trace: Trace, c1: Configuration, c2: Configuration):
    if trace.instrument and trace.first_generalization is None:
        trace.first_generalization = {
            "match_nil_headed": _match_headed_nil(c1) and _match_headed_nil(c2),
            "prev": _print_config(c1),
            "cur": _print_config(c2),
        }


# ---------------------------------------------------------------------------
# The engine


class Engine:
    def __init__(self, prog: Program, limits: Limits, trace: Optional[Trace] = None):
        self.prog = prog
        self.limits = limits
        self.trace = trace or Trace()
        self.graph = ProcessGraph()
        self.clock = Clock()
        self.pgen = ParamGen()
        self.t0 = time.monotonic()
        self.tasks: list[int] = []  # FIFO of task-root node ids
        self.agenda: list[int] = []  # LIFO within the current task
        self.transitive_steps = 0

    # -- bookkeeping -------------------------------------------------------

    def _check_budget(self) -> None:
        if len(self.graph.nodes) > self.limits.max_nodes:
            raise BudgetExceeded("node budget exceeded", self.graph, self.trace)
        if time.monotonic() - self.t0 > self.limits.time_budget_s:
            raise BudgetExceeded("time budget exceeded", self.graph, self.trace)

    def _record_fold(self, source: Node, target_id: int, theta: dict) -> None:
        source.kind = "fold"
        source.fold_target = target_id
        source.fold_theta = theta
        self.graph.fold_sources.setdefault(target_id, []).append(source.id)
        self.trace.emit(
            "Fold", node=source.id, target=target_id, theta=_theta_str(theta)
        )

    def _enqueue_task(self, node: Node) -> None:
        """Queue a specialization task, folding it into an equivalent
        earlier task root instead when one exists."""
        key = self.graph.shape_key(node.config)
        for rid in self.graph.task_roots.get(key, ()):
            root = self.graph.node(rid)
            if root.dead or rid == node.id:
                continue
            theta = fold_instance(root.config, node.config)
            if theta is not None:
                self._record_fold(node, rid, theta)
                _check_action(self.trace, "fold", root.config, node.config)
                self._complete(node)
                return
        self.graph.task_roots.setdefault(key, []).append(node.id)
        self.tasks.append(node.id)

    def _after_kill(self, killed) -> None:
        """Reopen surviving fold sources whose target was removed."""
        killed_set = set(killed)
        for tid in killed:
            for sid in self.graph.fold_sources.pop(tid, ()):
                s = self.graph.node(sid)
                if s.dead or sid in killed_set:
                    continue
                s.kind = "open"
                s.fold_target = None
                s.fold_theta = None
                s.complete = False
                self.trace.warn(f"fold source {sid} reopened, target {tid} removed")
                self.tasks.append(sid)

    def _retarget_folds(self, target: Node, theta1: dict) -> None:
        """After a generalization the target is more general; existing fold
        substitutions compose with the generalization witness."""
        for sid in self.graph.fold_sources.get(target.id, ()):
            s = self.graph.node(sid)
            if s.dead:
                continue
            s.fold_theta = {
                p: subst_seq(v, s.fold_theta) for p, v in theta1.items()
            }

    def _complete(self, node: Node) -> None:
        node.complete = True
        self.graph.index_complete(node)
        pid = node.parent
        while pid is not None:
            parent = self.graph.node(pid)
            parent.pending_children -= 1
            if parent.pending_children > 0:
                break
            parent.complete = True
            self.graph.index_complete(parent)
            pid = parent.parent

    # -- main loop -----------------------------------------------------------

    def run(self, entry: Configuration) -> int:
        root = self.graph.new_node(entry)
        self.tasks.append(root.id)
        while self.tasks:
            task = self.tasks.pop(0)
            if self.graph.node(task).dead:
                continue
            self.agenda = [task]
            while self.agenda:
                nid = self.agenda.pop()
                node = self.graph.node(nid)
                if node.dead or node.kind != "open":
                    continue
                self.step(node)
        return root.id

    def step(self, node: Node) -> None:
        self._check_budget()
        if len(node.path) > self.limits.max_depth:
            raise BudgetExceeded("depth budget exceeded", self.graph, self.trace)
        config = node.config

        # transitive configurations are skipped and removed from the tree;
        # generalization points and fold targets keep their configuration,
        # other code refers to their parameters
        protected = node.entry_subst is not None or node.id in self.graph.fold_sources
        skipped = 0
        while True:
            res = drive(config, self.prog, self.clock, self.pgen, self.trace.warn)
            if (
                not protected
                and res.kind == "branches"
                and len(res.branches) == 1
                and res.branches[0].tag != "stuck"
                and is_renaming(res.branches[0].contraction)
                and not res.branches[0].deferred
            ):
                config = res.branches[0].successor
                self.transitive_steps += 1
                skipped += 1
                if time.monotonic() - self.t0 > self.limits.time_budget_s:
                    raise BudgetExceeded("time budget exceeded", self.graph, self.trace)
                continue
            break
        node.config = config
        if skipped:
            self.trace.emit("TransitiveSkip", node=node.id, count=skipped)

        if res.kind == "passive":
            node.kind = "passive"
            node.value = res.value
            self.trace.emit("Drive", node=node.id, out="passive")
            self._complete(node)
            return

        if res.kind == "split":
            self._make_letsplit(node, res.primary, res.deferred)
            return

        # eager folding: path ancestors and completed nodes
        target = self._find_fold(node)
        if target is not None:
            tid, theta = target
            self._record_fold(node, tid, theta)
            _check_action(
                self.trace, "fold", self.graph.node(tid).config, node.config
            )
            if self.trace.instrument and self.trace.first_generalization is None:
                if not _match_headed_nil(node.config):
                    self.trace.violations.append(
                        "fold before the first generalization is not Match-[]-headed"
                    )
            self._verify_fold(tid, theta, node.config)
            self._complete(node)
            return

        # the whistle
        decision = whistle(
            [self.graph.node(a).config for a in node.path], node.config
        )
        if decision.is_act:
            anc_id = node.path[decision.ancestor]
            self.trace.emit(
                "WhistleAct",
                node=node.id,
                ancestor=anc_id,
                kind=decision.kind,
                split=decision.witness.l if decision.witness else None,
            )
            if decision.kind == "turchin":
                self._act_split(node, anc_id, decision.witness)
            else:
                self._act_generalize(node, anc_id)
            return

        self._make_drive(node, res.branches)

    # -- node constructors ---------------------------------------------------

    def _make_drive(self, node: Node, branches) -> None:
        node.kind = "drive"
        self.trace.emit(
            "Drive",
            node=node.id,
            config=_print_config(node.config),
            branches=[
                {"theta": _theta_str(b.contraction), "tag": b.tag}
                for b in branches
            ],
        )
        child_ids = []
        for b in branches:
            if b.tag == "stuck":
                child = self.graph.new_node(
                    Configuration((), ()), parent=node.id, path=node.path
                )
                child.kind = "stuck"
                node.children.append((b.contraction, child.id))
                continue
            if b.deferred:
                child = self.graph.new_node(
                    Configuration((), ()), parent=node.id, path=node.path
                )
                node.children.append((b.contraction, child.id))
                self._make_letsplit(child, b.successor, b.deferred)
                continue
            child = self.graph.new_node(
                b.successor, parent=node.id, path=node.path + (node.id,)
            )
            node.children.append((b.contraction, child.id))
            child_ids.append(child.id)
        node.pending_children = sum(
            0 if self.graph.node(cid).complete else 1 for _, cid in node.children
        )
        leaves = [
            cid for _, cid in node.children if self.graph.node(cid).kind == "stuck"
        ]
        for cid in leaves:
            self._complete(self.graph.node(cid))
        for cid in reversed(child_ids):
            self.agenda.append(cid)

    def _make_letsplit(self, node: Node, primary: Configuration, deferred) -> None:
        node.kind = "letsplit"
        # the first configuration continues the current unfolding and keeps
        # its ancestor path; the continuations are postponed as separate
        # tasks, unfolded completely independently
        first = self.graph.new_node(primary, parent=node.id, path=node.path)
        node.parts = [(None, first.id)]
        for p, cfg in deferred:
            part = self.graph.new_node(cfg, parent=node.id, path=())
            node.parts.append((p, part.id))
        node.pending_children = len(node.parts)
        self.trace.emit(
            "TaskSplit", node=node.id, parts=[pid for _, pid in node.parts]
        )
        self.agenda.append(first.id)
        for _, pid in node.parts[1:]:
            self._enqueue_task(self.graph.node(pid))

    # -- folding ---------------------------------------------------------------

    def _find_fold(self, node: Node):
        for aid in node.path:
            anc = self.graph.node(aid)
            theta = fold_instance(anc.config, node.config)
            if theta is not None:
                return aid, theta
        for cand in self.graph.complete_candidates(node.config):
            if cand.id == node.id:
                continue
            if cand.kind != "drive":
                continue
            theta = fold_instance(cand.config, node.config)
            if theta is not None:
                return cand.id, theta
        return None

    def _verify_fold(self, tid: int, theta: dict, current: Configuration) -> None:
        target = self.graph.node(tid).config
        applied = subst_config(target, theta)
        stripped_a = [(e.fname, e.args) for e in applied.stack]
        stripped_c = [(e.fname, e.args) for e in current.stack]
        if stripped_a != stripped_c or applied.tail != current.tail:
            raise PropertyViolation(
                f"fold substitution fails the instance equation for node {tid}"
            )
        self.trace.fold_checked += 1

    # -- whistle actions ---------------------------------------------------------

    def _act_generalize(self, node: Node, anc_id: int) -> None:
        anc = self.graph.node(anc_id)
        theta = fold_instance(anc.config, node.config)
        if theta is not None:
            self._record_fold(node, anc_id, theta)
            _check_action(self.trace, "fold", anc.config, node.config)
            self._verify_fold(anc_id, theta, node.config)
            self._complete(node)
            return
        try:
            g = msg(anc.config, node.config, self.pgen)
        except Incompatible as e:
            self.trace.warn(f"msg failed on whistle pair: {e}")
            self._make_drive_from_config(node)
            return
        _check_action(self.trace, "generalize", anc.config, node.config)
        _note_generalization(self.trace, anc.config, node.config)
        self._verify_msg(g, anc.config, node.config)
        self.trace.emit(
            "Generalize",
            node=node.id,
            ancestor=anc_id,
            gen=_print_config(g.gen),
            theta1=_theta_str(g.theta1),
            theta2=_theta_str(g.theta2),
        )
        self._restart(anc, g.gen, g.theta1)

    def _act_split(self, node: Node, anc_id: int, witness) -> None:
        anc = self.graph.node(anc_id)
        l = witness.l
        prefix, context, connector = split_task(anc.config, l, self.pgen)
        # compare against the current configuration's split to decide whether
        # the new tasks start generalized
        m = len(node.config.stack)
        shared = len(anc.config.stack) - l + 1
        cur_prefix = Configuration(node.config.stack[: l - 1], (BULLET,))
        cur_first = node.config.stack[m - shared]
        cur_filled = TimedApp(
            cur_first.fname,
            tuple(
                replace_bullet(a, (connector,)) for a in cur_first.args
            ),
            cur_first.time,
        )
        cur_context = Configuration(
            (cur_filled,) + node.config.stack[m - shared + 1 :], node.config.tail
        )
        prefix_entry = None
        context_entry = None
        if fold_instance(prefix, cur_prefix) is None:
            try:
                g = msg(prefix, cur_prefix, self.pgen)
                _note_generalization(self.trace, prefix, cur_prefix)
                _check_action(self.trace, "generalize", prefix, cur_prefix)
                self._verify_msg(g, prefix, cur_prefix)
                prefix, prefix_entry = g.gen, g.theta1
            except Incompatible as e:
                self.trace.warn(f"prefix msg failed: {e}")
        if fold_instance(context, cur_context) is None:
            try:
                g = msg(context, cur_context, self.pgen)
                _check_action(self.trace, "generalize", context, cur_context)
                self._verify_msg(g, context, cur_context)
                context, context_entry = g.gen, g.theta1
                self.trace.warn("context generalized at a split point")
            except Incompatible as e:
                self.trace.warn(f"context msg failed: {e}")
        self.trace.emit(
            "TaskSplit",
            node=anc_id,
            split=l,
            prefix=_print_config(prefix),
            context=_print_config(context),
        )
        killed = self.graph.kill_subtree(anc_id)
        self._prune_agenda()
        self._after_kill(killed)
        anc.kind = "letsplit"
        p_node = self.graph.new_node(prefix, parent=anc_id, path=())
        p_node.entry_subst = prefix_entry
        c_node = self.graph.new_node(context, parent=anc_id, path=())
        c_node.entry_subst = context_entry
        anc.parts = [(None, p_node.id), (connector, c_node.id)]
        anc.pending_children = 2
        anc.complete = False
        self._enqueue_task(p_node)
        self._enqueue_task(c_node)

    def _restart(self, anc: Node, gen: Configuration, theta1: dict) -> None:
        killed = self.graph.kill_subtree(anc.id)
        self._prune_agenda()
        self._after_kill(killed)
        anc.config = gen
        anc.kind = "open"
        anc.entry_subst = (
            theta1
            if anc.entry_subst is None
            else {
                p: subst_seq(v, anc.entry_subst)
                for p, v in theta1.items()
            }
        )
        anc.complete = False
        anc.pending_children = 0
        self._retarget_folds(anc, theta1)
        self.agenda.append(anc.id)

    def _prune_agenda(self) -> None:
        self.agenda = [
            nid for nid in self.agenda if not self.graph.node(nid).dead
        ]

    def _verify_msg(self, g, c1: Configuration, c2: Configuration) -> None:
        for theta, target, tag in ((g.theta1, c1, 1), (g.theta2, c2, 2)):
            applied = subst_config(g.gen, theta)
            same = [(e.fname, e.args) for e in applied.stack] == [
                (e.fname, e.args) for e in target.stack
            ] and applied.tail == target.tail
            if not same:
                raise PropertyViolation(f"msg equation gen*theta{tag} failed")
        self.trace.msg_checked += 1

    def _make_drive_from_config(self, node: Node) -> None:
        res = drive(node.config, self.prog, self.clock, self.pgen, self.trace.warn)
        if res.kind == "branches":
            self._make_drive(node, res.branches)
        elif res.kind == "passive":
            node.kind = "passive"
            node.value = res.value
            self._complete(node)
        else:
            self._make_letsplit(node, res.primary, res.deferred)


# ---------------------------------------------------------------------------
# Public entry points


def supercompile(
    prog: Program,
    entry: Configuration,
    limits: Optional[Limits] = None,
    trace: Optional[Trace] = None,
    entry_name: str = "Start",
):
    """Drive, fold and residualize one entry configuration."""
    from .transform import build_residual, simplify_program

    limits = limits or Limits()
    trace = trace or Trace()
    eng = Engine(prog, limits, trace)
    root_id = eng.run(entry)
    residual = build_residual(eng.graph, root_id, entry_name)
    residual = simplify_program(residual, entry_name)
    for name in residual.defs:
        trace.emit("ResidualFn", name=name, rules=len(residual.defs[name].rules))
    return residual, eng.graph, trace


@dataclass
class SafetyVerdict:
    safe: bool
    witnesses: list
    passes_used: int = 0


def verify_safety(residual: Program, unsafe_symbol: str = "False") -> SafetyVerdict:
    """Scan every rule's right-hand side for the unsafe identifier."""
    bad = Sym(unsafe_symbol)
    witnesses = []
    for d in residual.defs.values():
        for i, r in enumerate(d.rules):
            if any(it == bad for it in iter_items(r.rhs)):
                witnesses.append((d.name, i))
    return SafetyVerdict(not witnesses, witnesses)


def make_entry_config(prog: Program, fname: str, pgen: Optional[ParamGen] = None):
    """A fully parameterized call of a defined function, as a configuration."""
    pgen = pgen or ParamGen(1)
    params = [pgen.fresh("e") for _ in range(prog.arity(fname))]
    cfg = Configuration(
        (TimedApp(fname, tuple((p,) for p in params), 0),), (BULLET,)
    )
    return cfg, params


def parse_entry_config(prog: Program, text: str):
    """Parse a CLI entry expression; free variables become parameters."""
    seq = parse_expr(text)
    pgen = ParamGen(1)
    mapping = {}

    def conv(s):
        out = []
        for it in s:
            if isinstance(it, Paren):
                out.append(Paren(conv(it.items)))
            elif isinstance(it, Call):
                out.append(Call(it.fname, tuple(conv(a) for a in it.args)))
            elif isinstance(it, _Var):
                if it not in mapping:
                    mapping[it] = pgen.fresh(it.kind)
                out.append(mapping[it])
            else:
                out.append(it)
        return tuple(out)

    seq = conv(seq)
    cfg, deferred = decompose(seq, Clock(), ParamGen(50))
    if deferred:
        raise ValueError("entry expressions must decompose to a single task")
    return cfg


def verify_protocol(
    model: Program,
    mode: str = "direct",
    passes: int = 1,
    limits: Optional[Limits] = None,
    entry: str = "Main",
    unsafe_symbol: str = "False",
    instrument: bool = False,
    model_name: str = "Model",
):
    """Run the whole verification pipeline and report the verdict."""
    from .corpus import self_interpreter

    limits = limits or Limits()
    report = {
        "mode": mode,
        "passes": [],
        "safe": None,
        "violations": [],
        "warnings": [],
    }
    if mode == "direct":
        prog = model
        entry_cfg, _ = make_entry_config(model, entry)
        entry_fn = entry
    elif mode == "indirect":
        prog = self_interpreter({model_name: model})
        pgen = ParamGen(1)
        p = pgen.fresh("e")
        entry_cfg = Configuration(
            (
                TimedApp(
                    "Int",
                    (
                        (Paren((Sym("Call"), Sym(entry), p)),),
                        (Paren((Sym("Prog"), Sym(model_name))),),
                    ),
                    0,
                ),
            ),
            (BULLET,),
        )
        entry_fn = "Int"
    else:
        raise ValueError(f"unknown mode {mode!r}")

    current = prog
    for p_i in range(passes):
        t0 = time.monotonic()
        trace = Trace(instrument=instrument and mode == "indirect" and p_i == 0)
        residual, graph, trace = supercompile(
            current, entry_cfg, limits, trace, entry_name=f"{entry_fn}Res"
        )
        verdict = verify_safety(residual, unsafe_symbol)
        report["passes"].append(
            {
                "pass": p_i + 1,
                "safe": verdict.safe,
                "witnesses": verdict.witnesses,
                "functions": len(residual.defs),
                "nodes": graph.stats()["nodes"],
                "msg_checked": trace.msg_checked,
                "fold_checked": trace.fold_checked,
                "seconds": round(time.monotonic() - t0, 3),
            }
        )
        report["violations"].extend(trace.violations)
        report["warnings"].extend(trace.warnings)
        report["safe"] = verdict.safe
        report["residual"] = residual
        report["trace"] = trace
        if trace.first_generalization is not None or "first_generalization" not in report:
            report["first_generalization"] = trace.first_generalization
        if verdict.safe or p_i + 1 >= passes:
            break
        current = residual
        entry_cfg, _ = make_entry_config(residual, f"{entry_fn}Res")
    report["passes_used"] = len(report["passes"])
    return report
