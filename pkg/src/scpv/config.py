"""Parameterized configurations: timed application stacks over a passive tail.

A configuration is a stack of timed function applications chained by a
bullet placeholder, plus a passive tail expression. Substitution, the
let-style decomposition of raw expressions into stack form, and the
supporting clocks live here.
"""

from __future__ import annotations

from dataclasses import dataclass
from .lang import (
    BULLET,
    Bullet,
    Call,
    Param,
    Paren,
    Seq,
    bullet_count,
    contains_call,
    print_seq,
)


class Clock:
    """Monotone time source; one per engine task tree."""

    def __init__(self, start: int = 0):
        self.now = start

    def tick(self) -> int:
        self.now += 1
        return self.now

    def clone(self) -> "Clock":
        return Clock(self.now)


class ParamGen:
    """Fresh-parameter supply, shared between driving and generalization."""

    def __init__(self, start: int = 100):
        self.next_num = start

    def fresh(self, kind: str) -> Param:
        p = Param(kind, self.next_num)
        self.next_num += 1
        return p

    def clone(self) -> "ParamGen":
        return ParamGen(self.next_num)


@dataclass(frozen=True)
class TimedApp:
    fname: str
    args: tuple
    time: int

    def __repr__(self):
        inner = ", ".join(print_seq(a) for a in self.args)
        return f"{self.fname}@{self.time}({inner})"


@dataclass(frozen=True)
class Configuration:
    stack: tuple  # TimedApp entries, top first
    tail: Seq

    def __repr__(self):
        parts = [repr(e) for e in self.stack]
        parts.append(print_seq(self.tail))
        return ", ".join(parts)

    @property
    def length(self) -> int:
        return len(self.stack)


def config_length(c: Configuration) -> int:
    """Number of upper function applications (the stack height)."""
    return len(c.stack)


def check_config(c: Configuration) -> None:
    """Assert the bullet and time-label invariants; used in tests and debug."""
    times = [e.time for e in c.stack]
    assert len(set(times)) == len(times), f"duplicate time labels in {c!r}"
    for i, e in enumerate(c.stack):
        n = sum(bullet_count(a) for a in e.args)
        want = 0 if i == 0 else 1
        assert n == want, f"entry {i} of {c!r} has {n} bullets"
    if c.stack:
        assert bullet_count(c.tail) == 1, f"tail of {c!r} must hold one bullet"
    assert not contains_call(c.tail) or True  # tails may suspend calls transiently


# ---------------------------------------------------------------------------
# Substitution


def subst_seq(seq: Seq, theta: dict) -> Seq:
    """Apply a parameter substitution; e-parameters splice their sequences."""
    if not theta:
        return seq
    out = []
    for it in seq:
        if isinstance(it, Param):
            rep = theta.get(it)
            if rep is None:
                out.append(it)
            else:
                if it.kind == "s" and len(rep) != 1:
                    raise ValueError(f"s-parameter {it!r} bound to a sequence")
                out.extend(rep)
        elif isinstance(it, Paren):
            out.append(Paren(subst_seq(it.items, theta)))
        elif isinstance(it, Call):
            out.append(Call(it.fname, tuple(subst_seq(a, theta) for a in it.args)))
        else:
            out.append(it)
    return tuple(out)


def apply_subst(seq: Seq, theta: dict) -> Seq:
    return subst_seq(seq, theta)


def subst_app(app: TimedApp, theta: dict) -> TimedApp:
    if not theta:
        return app
    return TimedApp(app.fname, tuple(subst_seq(a, theta) for a in app.args), app.time)


def subst_config(c: Configuration, theta: dict) -> Configuration:
    if not theta:
        return c
    return Configuration(
        tuple(subst_app(e, theta) for e in c.stack), subst_seq(c.tail, theta)
    )


def compose_subst(first: dict, second: dict) -> dict:
    """The substitution equal to applying ``first`` then ``second``."""
    out = {p: subst_seq(v, second) for p, v in first.items()}
    for p, v in second.items():
        if p not in out:
            out[p] = v
    return out


def replace_bullet(seq: Seq, value: Seq) -> Seq:
    out = []
    for it in seq:
        if isinstance(it, Bullet):
            out.extend(value)
        elif isinstance(it, Paren):
            out.append(Paren(replace_bullet(it.items, value)))
        elif isinstance(it, Call):
            out.append(Call(it.fname, tuple(replace_bullet(a, value) for a in it.args)))
        else:
            out.append(it)
    return tuple(out)


def plug_app(app: TimedApp, value: Seq) -> TimedApp:
    """Fill the entry's bullet; the label is kept, this is the same application."""
    return TimedApp(app.fname, tuple(replace_bullet(a, value) for a in app.args), app.time)


# ---------------------------------------------------------------------------
# Normal form

def normalize(seq) -> Seq:
    """Flatten any stray nesting into the tuple segment form (idempotent)."""
    out = []
    for it in seq:
        if isinstance(it, (tuple, list)):
            out.extend(normalize(tuple(it)))
        elif isinstance(it, Paren):
            out.append(Paren(normalize(it.items)))
        elif isinstance(it, Call):
            out.append(Call(it.fname, tuple(normalize(a) for a in it.args)))
        else:
            out.append(it)
    return tuple(out)


# ---------------------------------------------------------------------------
# Decomposition into stack form


def _split_leftmost_call(seq: Seq):
    """Locate the leftmost call item, descending through parens only.

    Returns (call, ctx) where ctx is seq with that item replaced by a bullet,
    or None when seq is passive.
    """
    for i, it in enumerate(seq):
        if isinstance(it, Call):
            return it, seq[:i] + (BULLET,) + seq[i + 1 :]
        if isinstance(it, Paren):
            got = _split_leftmost_call(it.items)
            if got is not None:
                call, inner_ctx = got
                return call, seq[:i] + (Paren(inner_ctx),) + seq[i + 1 :]
    return None


def decompose_expr(seq: Seq):
    """Extract the leftmost-innermost call chain of an expression.

    Returns (chain, ctx): chain is a list of Call items ordered innermost
    first, each later element holding one bullet where the previous result
    flows in; ctx is the expression with the chain's outermost call replaced
    by a bullet. For passive expressions the chain is empty and ctx is seq.

    Appends never enter the chain: concatenation is part of the normal form.
    """
    got = _split_leftmost_call(seq)
    if got is None:
        return [], seq
    call, ctx = got
    wrappers = []
    cur = call
    while True:
        inner = None
        for k, a in enumerate(cur.args):
            sub = _split_leftmost_call(a)
            if sub is not None:
                inner_call, arg_ctx = sub
                hollowed = Call(
                    cur.fname, cur.args[:k] + (arg_ctx,) + cur.args[k + 1 :]
                )
                inner = (inner_call, hollowed)
                break
        if inner is None:
            break
        cur, hollow = inner[0], inner[1]
        wrappers.append(hollow)
    chain = [cur] + list(reversed(wrappers))
    return chain, ctx


def timed_chain(chain, clock: Clock):
    """Stamp a chain with fresh labels, outermost application first."""
    times = [clock.tick() for _ in chain]
    # chain is innermost-first; the outermost gets the earliest label
    return tuple(
        TimedApp(c.fname, c.args, t) for c, t in zip(chain, reversed(times))
    )


def decompose(seq: Seq, clock: Clock, pgen: ParamGen):
    """Split a raw expression into a primary configuration plus deferred
    continuations connected by fresh parameters (the let-decomposition)."""
    chain, ctx = decompose_expr(seq)
    if not chain:
        return Configuration((), seq), []
    stack = timed_chain(chain, clock)
    if contains_call(ctx):
        p = pgen.fresh("e")
        cont_seq = replace_bullet(ctx, (p,))
        cont_cfg, more = decompose(cont_seq, clock, pgen)
        return Configuration(stack, (BULLET,)), [(p, cont_cfg)] + more
    return Configuration(stack, ctx), []
