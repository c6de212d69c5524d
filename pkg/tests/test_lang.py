import pytest

from scpv.corpus import synapse_model, SYNAPSE_SRC, INT_SRC
from scpv.lang import (
    LangError,
    Paren,
    Sym,
    Var,
    multiplicity,
    parse_expr,
    parse_program,
    print_program,
    print_seq,
    validate_program,
    vars_of,
)


def test_parse_append_rules():
    text = """
    Append {
      ([]) : (e.ys) => e.ys;
      (s.x : e.xs) : (e.ys) => s.x : Append((e.xs) : (e.ys));
    }
    """
    p = parse_program(text)
    assert list(p.defs) == ["Append"]
    assert p.arity("Append") == 1
    assert len(p.rules("Append")) == 2


def test_smallest_definition():
    p = parse_program("F { [] => []; }")
    (rule,) = p.rules("F")
    assert rule.lhs == ((),)
    assert rule.rhs == ()


def test_free_variable_rejected():
    with pytest.raises(LangError) as e:
        parse_program("F { e.x => e.y; }")
    assert "free variable" in str(e.value)


def test_call_undefined_function_rejected():
    with pytest.raises(LangError):
        parse_program("F { e.x => G(e.x); }")


def test_arity_mismatch_rejected():
    with pytest.raises(LangError):
        parse_program("F { e.x => []; e.x, e.y => []; }")


def test_pattern_call_rejected():
    with pytest.raises(LangError):
        parse_program("F { e.x => []; } G { F(e.q) => []; }")


def test_mid_evar_pattern_rejected():
    with pytest.raises(LangError):
        parse_program("F { e.x 'a' => []; }")


def test_roundtrip_corpus():
    for src in (SYNAPSE_SRC, INT_SRC):
        p = parse_program(src, validate=False)
        assert parse_program(print_program(p), validate=False) == p


def test_empty_program_prints_empty():
    from scpv.lang import Program

    assert print_program(Program()) == ""


def test_append_prints_infix():
    e = parse_expr("e.x ++ 'a' 'b'")
    assert "++" in print_seq(e)
    assert parse_expr(print_seq(e)) == e


def test_multiplicity_direct_count():
    e = parse_expr("s.x : e.xs ++ e.xs")
    assert multiplicity(Var("e", "xs"), e) == 2
    assert multiplicity(Var("s", "x"), e) == 1


def test_multiplicity_nil_zero():
    assert multiplicity(Var("e", "x"), ()) == 0


def test_fig2_patterns_linear():
    # every variable occurs at most once in every Synapse pattern
    syn = synapse_model()
    for d in syn.defs.values():
        for r in d.rules:
            for pat in r.lhs:
                for v in vars_of(pat):
                    assert multiplicity(v, pat) < 2


def test_validation_totality_on_random_texts():
    # every parsed program yields a clean validation or diagnostics, never a crash
    bad = "F { (e.x => []; }"
    with pytest.raises(LangError):
        parse_program(bad)
    warn = parse_program("F { Call => Call; }", validate=False)
    msgs = validate_program(warn)
    assert any("reserved" in m for m in msgs)


def test_juxtaposition_and_cons_agree():
    assert parse_expr("(Invalid I e.is)") == parse_expr("(Invalid : I : e.is)")


def test_chars_and_idents_distinct():
    assert parse_expr("'a'") != parse_expr("a")
    assert parse_expr("'a'") == (Sym("a", char=True),)


def test_paren_pattern_tail_normalized():
    # the trailing-paren normalization: (e.time) : (e.is) is two paren terms
    p = parse_program("Main { (e.time) : (e.is) => []; }")
    (rule,) = p.rules("Main")
    (pat,) = rule.lhs
    assert len(pat) == 2 and all(isinstance(t, Paren) for t in pat)
