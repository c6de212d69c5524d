"""Encoding of programs and expressions into ground data, and decoding back.

The encodable fragment has unary functions only. Encoded variables, calls
and parens are tagged with the reserved markers ``Var``, ``Call`` and the
characters ``'*'`` / ``'='``.
"""

from __future__ import annotations

from .lang import (
    Call,
    FuncDef,
    LangError,
    Paren,
    Program,
    Rule,
    Seq,
    Sym,
    Var,
)

MARK_PAREN = Sym("*", char=True)
MARK_EQ = Sym("=", char=True)
MARK_CALL = Sym("Call")
MARK_VAR = Sym("Var")


class NotEncodable(LangError):
    pass


class DecodeError(LangError):
    def __init__(self, msg: str, path: tuple = ()):
        self.path = path
        super().__init__(f"{msg} (at {'/'.join(map(str, path)) or 'root'})")


def encode_expr(seq: Seq) -> Seq:
    out = []
    for it in seq:
        if isinstance(it, Sym):
            out.append(it)
        elif isinstance(it, Var):
            out.append(Paren((MARK_VAR, Sym(it.kind, char=True), Sym(it.name))))
        elif isinstance(it, Paren):
            out.append(Paren((MARK_PAREN,) + encode_expr(it.items)))
        elif isinstance(it, Call):
            if len(it.args) != 1:
                raise NotEncodable(f"non-unary call to {it.fname}")
            out.append(Paren((MARK_CALL, Sym(it.fname)) + encode_expr(it.args[0])))
        else:
            raise NotEncodable(f"item {it!r} has no encoding")
    return tuple(out)


def encode_rule(rule: Rule) -> Paren:
    if len(rule.lhs) != 1:
        raise NotEncodable("only unary functions are encodable")
    return Paren(
        (Paren(encode_expr(rule.lhs[0])), MARK_EQ, Paren(encode_expr(rule.rhs)))
    )


def encode_program(prog: Program) -> Seq:
    """The whole-program encoding: one paren holding one paren per definition."""
    defs = []
    for d in prog.defs.values():
        if d.arity != 1:
            raise NotEncodable(f"function {d.name} is not unary")
        defs.append(Paren((Sym(d.name),) + tuple(encode_rule(r) for r in d.rules)))
    return (Paren(tuple(defs)),)


def decode_expr(seq: Seq, path: tuple = ()) -> Seq:
    out = []
    for i, it in enumerate(seq):
        here = path + (i,)
        if isinstance(it, Sym):
            out.append(it)
        elif isinstance(it, Paren):
            inner = it.items
            if not inner:
                raise DecodeError("empty paren is not an encoding", here)
            head = inner[0]
            if head == MARK_PAREN:
                out.append(Paren(decode_expr(inner[1:], here)))
            elif head == MARK_VAR:
                if (
                    len(inner) != 3
                    or not isinstance(inner[1], Sym)
                    or inner[1].name not in ("s", "e")
                    or not isinstance(inner[2], Sym)
                ):
                    raise DecodeError("malformed variable encoding", here)
                out.append(Var(inner[1].name, inner[2].name))
            elif head == MARK_CALL:
                if len(inner) < 2 or not isinstance(inner[1], Sym) or inner[1].char:
                    raise DecodeError("malformed call encoding", here)
                out.append(Call(inner[1].name, (decode_expr(inner[2:], here),)))
            else:
                raise DecodeError(f"unknown marker {head!r}", here)
        else:
            raise DecodeError(f"non-data item {it!r}", here)
    return tuple(out)


def decode_program(data: Seq) -> Program:
    if len(data) != 1 or not isinstance(data[0], Paren):
        raise DecodeError("program encoding must be a single paren")
    defs = []
    for i, d in enumerate(data[0].items):
        if not isinstance(d, Paren) or not d.items or not isinstance(d.items[0], Sym):
            raise DecodeError("malformed definition", (i,))
        name = d.items[0].name
        rules = []
        for j, r in enumerate(d.items[1:]):
            if (
                not isinstance(r, Paren)
                or len(r.items) != 3
                or not isinstance(r.items[0], Paren)
                or r.items[1] != MARK_EQ
                or not isinstance(r.items[2], Paren)
            ):
                raise DecodeError("malformed rule", (i, j))
            lhs = decode_expr(r.items[0].items, (i, j, 0))
            rhs = decode_expr(r.items[2].items, (i, j, 2))
            rules.append(Rule((lhs,), rhs))
        if not rules:
            raise DecodeError(f"definition {name} has no rules", (i,))
        defs.append(FuncDef(name, 1, tuple(rules)))
    return Program(defs)
