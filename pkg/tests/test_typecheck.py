"""Judgment-level typechecking tests, including the shipped ill-typed battery."""

import json
from pathlib import Path

import pytest

from sill import ast as A
from sill.ast import NEG, POS
from sill.parser import SillSyntaxError, parse_process, parse_program, parse_term, parse_type
from sill.typecheck import (TypeCheckError, check_process, check_program,
                            check_term, infer_term, polarity_of,
                            subst_type_checked)

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "sill" / "fixtures"

BITS = parse_type("rho b. +{0: b, 1: b}")


def tparse(src):
    return parse_type(src, types={"bits": BITS})


# ---------------------------------------------------------------------------
# Session type formation


def test_unit_is_positive():
    assert polarity_of(A.Unit()) == POS


def test_bits_is_positive():
    assert polarity_of(BITS) == POS


def test_shift_polarity():
    assert polarity_of(tparse("down up 1")) == POS
    assert polarity_of(tparse("up 1")) == NEG


def test_choice_polarities():
    assert polarity_of(tparse("+{j: 1, k: bits}")) == POS
    assert polarity_of(tparse("&{j: up 1, k: up 1}")) == NEG


def test_value_type_polarities():
    assert polarity_of(tparse(r"{d : 1} /\ 1")) == POS
    assert polarity_of(tparse("{d : 1} => up 1")) == NEG


def test_down_of_positive_rejected():
    with pytest.raises(TypeCheckError) as err:
        polarity_of(tparse("down 1"))
    assert err.value.rule == "Cdown"


def test_unbound_type_variable_rejected():
    with pytest.raises(TypeCheckError) as err:
        polarity_of(A.TVar("zz"))
    assert err.value.kind == "unbound"


def test_rec_polarity_mismatch_rejected():
    # an upshift under an internal choice cannot be polarized either way
    with pytest.raises(TypeCheckError) as err:
        polarity_of(A.Rec("t", A.plus({"j": A.Up(A.TVar("t"))})))
    assert err.value.rule == "Crho"
    # a recursive type need not mention its variable
    assert polarity_of(A.Rec("t", A.Up(A.Unit()))) == NEG


# ---------------------------------------------------------------------------
# Terms


def test_var_rule():
    tau = A.ProcType("d", A.Unit(), ())
    assert infer_term({"x": tau}, A.Var("x")) == tau


def test_flip_has_its_stated_type():
    prog = parse_program((FIXTURES / "flip.sill").read_text())
    decl = prog.terms()["flip"]
    check_term({}, decl.term, decl.ty)


def test_application_mismatch_rejected():
    quit_ty = A.ProcType("d", A.Unit(), ())
    lam = parse_term(r"\x : {d : 1}. x")
    arg = parse_term(r"\y : {d : 1}. y")
    with pytest.raises(TypeCheckError) as err:
        infer_term({}, A.App(lam, arg))
    assert err.value.rule in ("F-Fun", "F-App")
    # and a well-typed application synthesizes
    quit = A.Anno(parse_term("{d <- close d}"), quit_ty)
    assert A.ftypes_equal(infer_term({}, A.App(lam, quit)), quit_ty)


# ---------------------------------------------------------------------------
# Processes


def test_close_at_unit():
    check_process({}, {}, parse_process("close a"), "a", A.Unit())


def test_example_51_process_types():
    proc = parse_process("a <- recv b; wait a; wait b; close c")
    check_process({}, {"b": tparse("1 * 1")}, proc, "c", A.Unit())


def test_linearity_violation_reported_with_channel():
    proc = parse_process("wait a; wait a; close c")
    with pytest.raises(TypeCheckError) as err:
        check_process({}, {"a": A.Unit()}, proc, "c", A.Unit())
    assert "'a'" in str(err.value)
    assert err.value.kind in ("unbound", "linear")


def test_all_fixture_programs_typecheck():
    for name in ("flip.sill", "example51.sill", "upshift.sill", "choice.sill"):
        prog = parse_program((FIXTURES / name).read_text())
        check_program(prog)


def test_ill_typed_battery_rejected_with_named_rule():
    manifest = json.loads((FIXTURES / "ill" / "manifest.json").read_text())
    assert len(manifest) >= 10
    for fname, rule in manifest.items():
        src = (FIXTURES / "ill" / fname).read_text()
        with pytest.raises(TypeCheckError) as err:
            check_program(parse_program(src))
        assert err.value.rule == rule, f"{fname}: {err.value}"


def test_noncontractive_type_rejected_at_parse():
    with pytest.raises(SillSyntaxError) as err:
        parse_program("type t = rho a. a")
    assert "contractive" in str(err.value)


def test_weakening_of_functional_context():
    # adding unused functional hypotheses preserves typing
    quit_ty = A.ProcType("d", A.Unit(), ())
    proc = parse_process("dd <- {x}; wait dd; close c")
    psi = {"x": quit_ty}
    check_process(psi, {}, proc, "c", A.Unit())
    check_process({**psi, "y": A.Arrow(quit_ty, quit_ty)}, {}, proc, "c", A.Unit())


def test_substitution_preserves_typing():
    # sigma : . -> {x : tau} well-typed, so [sigma]P checks in the empty context
    quit_ty = A.ProcType("d", A.Unit(), ())
    quit = A.Anno(parse_term("{d <- close d}"), quit_ty)
    proc = parse_process("dd <- {x}; wait dd; close c")
    check_process({"x": quit_ty}, {}, proc, "c", A.Unit())
    substituted = A.subst_term({"x": quit}, proc)
    check_process({}, {}, substituted, "c", A.Unit())


def test_case_label_coverage_is_exact():
    plus = tparse("+{j: 1, k: 1}")
    missing = parse_process("case a { j => wait a; close c }")
    with pytest.raises(TypeCheckError) as err:
        check_process({}, {"a": plus}, missing, "c", A.Unit())
    assert err.value.kind == "label"
    extra = parse_process(
        "case a { j => wait a; close c | k => wait a; close c | m => wait a; close c }"
    )
    with pytest.raises(TypeCheckError) as err:
        check_process({}, {"a": plus}, extra, "c", A.Unit())
    assert err.value.kind == "label"


def test_cut_requires_annotation_or_synthesis():
    proc = A.Cut("z", A.Close("z"), A.Wait("z", A.Close("c")))
    with pytest.raises(TypeCheckError) as err:
        check_process({}, {}, proc, "c", A.Unit())
    assert err.value.rule == "Cut"
    ok = A.Cut("z", A.Close("z"), A.Wait("z", A.Close("c")), A.Unit())
    check_process({}, {}, ok, "c", A.Unit())


def test_fwd_requires_equal_types():
    with pytest.raises(TypeCheckError) as err:
        check_process({}, {"a": A.Unit()}, A.Fwd("b", "a"), "b", tparse("down up 1"))
    assert err.value.rule == "Fwd"
    check_process({}, {"a": BITS}, A.Fwd("b", "a"), "b",
                  parse_type("rho z. +{0: z, 1: z}"))


def test_checked_substitution_respects_polarity():
    body = A.plus({"0": A.TVar("b"), "1": A.TVar("b")})
    assert subst_type_checked({"b": BITS}, body, {"b": POS}) == A.unfold_rec(BITS)
    with pytest.raises(TypeCheckError) as err:
        subst_type_checked({"b": tparse("up 1")}, body, {"b": POS})
    assert err.value.kind == "polarity" and err.value.rule == "S-S-T"


def test_upshift_provider_rule():
    # awaiting a shift at the provided channel needs an upshift type
    proc = parse_process("recv a shift; close a")
    check_process({}, {}, proc, "a", tparse("up 1"))
    with pytest.raises(TypeCheckError) as err:
        check_process({}, {}, proc, "a", A.Unit())
    assert err.value.rule == "upR"
