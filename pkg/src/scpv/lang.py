"""Core syntax for the object language: flat expression sequences, programs,
parsing, printing and validation.

Expressions are kept in concatenation-normal form throughout: an expression
is a tuple of items, `[]` is the empty tuple, `:` and `++` both concatenate.
This makes the associativity/unit equalities of the append constructor hold
by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union


class LangError(Exception):
    """Syntax or validation error, with source position when available."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg = msg
        self.line = line
        self.col = col
        where = f" at {line}:{col}" if line else ""
        super().__init__(f"{msg}{where}")


# ---------------------------------------------------------------------------
# Items


@dataclass(frozen=True)
class Sym:
    """A symbol: an identifier (``True``) or a character literal (``'a'``)."""

    name: str
    char: bool = False

    def __repr__(self):
        return f"'{self.name}'" if self.char else self.name


@dataclass(frozen=True)
class Var:
    """A program variable, kind 's' (one symbol) or 'e' (any expression)."""

    kind: str
    name: str

    def __repr__(self):
        return f"{self.kind}.{self.name}"


@dataclass(frozen=True)
class Param:
    """A configuration parameter, globally numbered within one run."""

    kind: str
    num: int

    def __repr__(self):
        return f"{self.kind}.{self.num}"


@dataclass(frozen=True)
class Paren:
    """The unnamed tree constructor ``( ... )``."""

    items: "Seq"

    def __repr__(self):
        return f"({print_seq(self.items)})"


@dataclass(frozen=True)
class Call:
    """Function application; every argument is a sequence."""

    fname: str
    args: tuple

    def __repr__(self):
        return f"{self.fname}({', '.join(print_seq(a) for a in self.args)})"


@dataclass(frozen=True)
class Bullet:
    """Placeholder threading a stack result through a configuration."""

    def __repr__(self):
        return "•"


Item = Union[Sym, Var, Param, Paren, Call, Bullet]
Seq = tuple
NIL: Seq = ()
BULLET = Bullet()


def cons(item: Item, rest: Seq) -> Seq:
    return (item,) + tuple(rest)


def cat(*seqs: Seq) -> Seq:
    """Concatenation; the `++` constructor in normal form."""
    out = []
    for s in seqs:
        out.extend(s)
    return tuple(out)


# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class Rule:
    lhs: tuple  # one pattern Seq per parameter
    rhs: Seq


@dataclass(frozen=True)
class FuncDef:
    name: str
    arity: int
    rules: tuple


class Program:
    """Ordered collection of function definitions."""

    def __init__(self, defs: Iterable[FuncDef] = ()):
        self.defs: dict[str, FuncDef] = {}
        for d in defs:
            if d.name in self.defs:
                raise LangError(f"duplicate definition of {d.name}")
            self.defs[d.name] = d

    def __eq__(self, other):
        return isinstance(other, Program) and list(self.defs.items()) == list(
            other.defs.items()
        )

    def __repr__(self):
        return f"<Program {', '.join(self.defs)}>"

    def arity(self, fname: str) -> int:
        return self.defs[fname].arity

    def rules(self, fname: str) -> tuple:
        return self.defs[fname].rules

    def extended(self, d: FuncDef) -> "Program":
        p = Program(self.defs.values())
        if d.name in p.defs:
            raise LangError(f"duplicate definition of {d.name}")
        p.defs[d.name] = d
        return p


# ---------------------------------------------------------------------------
# Structure queries


def iter_items(seq: Seq):
    """All items of seq, recursing through parens and call arguments."""
    for it in seq:
        yield it
        if isinstance(it, Paren):
            yield from iter_items(it.items)
        elif isinstance(it, Call):
            for a in it.args:
                yield from iter_items(a)


def multiplicity(v: Union[Var, Param], seq: Seq) -> int:
    """Number of occurrences of a variable in an expression."""
    return sum(1 for it in iter_items(seq) if it == v)


def vars_of(seq: Seq) -> list:
    out = []
    for it in iter_items(seq):
        if isinstance(it, (Var, Param)) and it not in out:
            out.append(it)
    return out


def _contains_call(seq: Seq) -> bool:
    for it in seq:
        if isinstance(it, Call):
            return True
        if isinstance(it, Paren) and _contains_call(it.items):
            return True
    return False


def contains_call(seq: Seq) -> bool:
    return _contains_call(seq)


def is_passive(seq: Seq) -> bool:
    return not contains_call(seq)


def is_ground(seq: Seq) -> bool:
    """True iff seq lies in the data set: symbols and parens only."""
    return all(isinstance(it, (Sym, Paren)) for it in iter_items(seq))


def bullet_count(seq: Seq) -> int:
    return sum(1 for it in iter_items(seq) if isinstance(it, Bullet))


# ---------------------------------------------------------------------------
# Lexer

_PUNCT = ("=>", "++", "[]", "{", "}", "(", ")", ",", ";", ":")


def _lex(text: str):
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)

    def word_at(j):
        k = j
        while k < n and (text[k].isalnum() or text[k] == "_"):
            k += 1
        return text[j:k], k

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "'":
            if i + 2 < n and text[i + 2] == "'":
                toks.append(("CHAR", text[i + 1], line, col))
                i += 3
                col += 3
                continue
            raise LangError("unterminated character literal", line, col)
        if c.isalnum() or c == "_":
            w, j = word_at(i)
            if w in ("s", "e") and j < n and text[j] == ".":
                name, k = word_at(j + 1)
                if name:
                    toks.append(("VAR", (w, name), line, col))
                    col += k - i
                    i = k
                    continue
            if j < n and text[j] == "(":
                toks.append(("CALLNAME", w, line, col))
            else:
                toks.append(("IDENT", w, line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append((p, p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise LangError(f"unexpected character {c!r}", line, col)
    toks.append(("EOF", None, line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t[0] != kind:
            raise LangError(f"expected {kind!r}, found {t[1]!r}", t[2], t[3])
        return t

    def parse_program(self) -> Program:
        defs = []
        while self.peek()[0] != "EOF":
            defs.append(self.parse_def())
        return Program(defs)

    def parse_def(self) -> FuncDef:
        t = self.next()
        if t[0] not in ("IDENT", "CALLNAME"):
            raise LangError(f"expected function name, found {t[1]!r}", t[2], t[3])
        name = t[1]
        self.expect("{")
        rules = []
        while self.peek()[0] != "}":
            rules.append(self.parse_rule())
        self.expect("}")
        if not rules:
            raise LangError(f"function {name} has no rules", t[2], t[3])
        arity = len(rules[0].lhs)
        for r in rules:
            if len(r.lhs) != arity:
                raise LangError(f"arity mismatch in rules of {name}", t[2], t[3])
        return FuncDef(name, arity, tuple(rules))

    def parse_rule(self) -> Rule:
        pats = [self.parse_seq(stop=(",", "=>"))]
        while self.peek()[0] == ",":
            self.next()
            pats.append(self.parse_seq(stop=(",", "=>")))
        self.expect("=>")
        rhs = self.parse_seq(stop=(";",))
        self.expect(";")
        return Rule(tuple(pats), rhs)

    def parse_seq(self, stop) -> Seq:
        """A sequence of elements; juxtaposition, ':' and '++' all concatenate."""
        out = []
        while True:
            t = self.peek()
            if t[0] in stop or t[0] in ("EOF", ")", "}"):
                break
            if t[0] in (":", "++"):
                self.next()
                continue
            out.extend(self.parse_element())
        return tuple(out)

    def parse_element(self) -> Seq:
        t = self.next()
        kind, val, line, col = t
        if kind == "[]":
            return NIL
        if kind == "CHAR":
            return (Sym(val, char=True),)
        if kind == "IDENT":
            return (Sym(val),)
        if kind == "VAR":
            return (Var(val[0], val[1]),)
        if kind == "(":
            inner = self.parse_seq(stop=(")",))
            self.expect(")")
            return (Paren(inner),)
        if kind == "CALLNAME":
            self.expect("(")
            args = []
            if self.peek()[0] != ")":
                args.append(self.parse_seq(stop=(",", ")")))
                while self.peek()[0] == ",":
                    self.next()
                    args.append(self.parse_seq(stop=(",", ")")))
            self.expect(")")
            return (Call(val, tuple(args)),)
        raise LangError(f"unexpected token {val!r}", line, col)


def parse_expr(text: str) -> Seq:
    p = _Parser(text)
    seq = p.parse_seq(stop=("EOF",))
    p.expect("EOF")
    return seq


def parse_program(text: str, validate: bool = True) -> Program:
    prog = _Parser(text).parse_program()
    if validate:
        errors = [d for d in validate_program(prog) if d.startswith("error")]
        if errors:
            raise LangError("; ".join(errors))
    return prog


# ---------------------------------------------------------------------------
# Validation

RESERVED_MARKERS = ("Call", "Var")
RESERVED_CHARS = ("*", "=")


def _check_pattern(seq: Seq, fname: str, out: list):
    n = len(seq)
    for i, it in enumerate(seq):
        if isinstance(it, Call):
            out.append(f"error: function application in a pattern of {fname}")
        elif isinstance(it, (Bullet, Param)):
            out.append(f"error: non-pattern item {it!r} in a pattern of {fname}")
        elif isinstance(it, Var) and it.kind == "e" and i != n - 1:
            out.append(
                f"error: e-variable {it!r} not in tail position in a pattern of {fname}"
            )
        elif isinstance(it, Paren):
            _check_pattern(it.items, fname, out)


def validate_program(prog: Program) -> list:
    """Run the arity, rhs-variable and pattern checks; return diagnostics.

    Messages are prefixed ``error:`` or ``warning:``.
    """
    out: list[str] = []
    for d in prog.defs.values():
        for r in d.rules:
            if len(r.lhs) != d.arity:
                out.append(f"error: arity mismatch in a rule of {d.name}")
            for pat in r.lhs:
                _check_pattern(pat, d.name, out)
            lhs_vars = set()
            for pat in r.lhs:
                lhs_vars.update(v for v in vars_of(pat) if isinstance(v, Var))
            for v in vars_of(r.rhs):
                if isinstance(v, Var) and v not in lhs_vars:
                    out.append(f"error: free variable {v!r} in a rule of {d.name}")
            for it in iter_items(r.rhs):
                if isinstance(it, Call):
                    if it.fname not in prog.defs:
                        out.append(
                            f"error: call to undefined function {it.fname} in {d.name}"
                        )
                    elif len(it.args) != prog.defs[it.fname].arity:
                        out.append(
                            f"error: call to {it.fname} with wrong arity in {d.name}"
                        )
            for pat in r.lhs:
                for it in iter_items(pat):
                    if isinstance(it, Sym) and not it.char and it.name in RESERVED_MARKERS:
                        out.append(
                            f"warning: reserved marker symbol {it.name} used in {d.name}"
                        )
                    if isinstance(it, Sym) and it.char and it.name in RESERVED_CHARS:
                        out.append(
                            f"warning: reserved marker character {it.name!r} used in {d.name}"
                        )
    return out


# ---------------------------------------------------------------------------
# Printing


def _print_item(it: Item) -> str:
    if isinstance(it, Sym):
        return f"'{it.name}'" if it.char else it.name
    if isinstance(it, (Var, Param)):
        return f"{it.kind}.{it.name if isinstance(it, Var) else it.num}"
    if isinstance(it, Paren):
        return f"({print_seq(it.items)})"
    if isinstance(it, Call):
        return f"{it.fname}({', '.join(print_seq(a) for a in it.args)})"
    if isinstance(it, Bullet):
        return "•"
    raise TypeError(f"not an item: {it!r}")


def _seq_valued(it: Item) -> bool:
    return isinstance(it, Call) or (isinstance(it, (Var, Param)) and it.kind == "e")


def print_seq(seq: Seq) -> str:
    """Canonical text: terms juxtaposed, `++` at sequence-valued boundaries
    (calls anywhere, e-variables except as the final tail)."""
    if not seq:
        return "[]"
    parts = [_print_item(seq[0])]
    for i, it in enumerate(seq[1:], start=1):
        boundary = _seq_valued(seq[i - 1]) or (
            _seq_valued(it) and not (i == len(seq) - 1 and not isinstance(it, Call))
        )
        parts.append((" ++ " if boundary else " ") + _print_item(it))
    return "".join(parts)


def print_program(prog: Program) -> str:
    lines = []
    for d in prog.defs.values():
        lines.append(f"{d.name} {{")
        for r in d.rules:
            pats = ", ".join(print_seq(p) for p in r.lhs)
            lines.append(f"  {pats} => {print_seq(r.rhs)};")
        lines.append("}")
        lines.append("")
    return "\n".join(lines)
