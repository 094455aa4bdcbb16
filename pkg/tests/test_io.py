import json
import math

import pytest

from mimfrelax.bench import build_relaxed_milp, generate_instance
from mimfrelax.io import (MpsError, SchemaError, dump_instance, instance_from_dict, instance_to_dict,
                          load_instance, read_mps, write_mps)
from mimfrelax.io.mps import NameCollision, sanitize
from mimfrelax.model import LinearExpr, LinearModel, ObjSense, Sense, VarKind
from mimfrelax.relaxations import Formulation
from mimfrelax.solver import solve_lp, solve_milp


def _tiny():
    m = LinearModel(name="tiny")
    x = m.add_variable("x", 0, 4)
    m.add_constraint(LinearExpr({x: 1.0}), Sense.GE, 1.0, "r")
    m.set_objective(LinearExpr({x: 2.0}))
    return m


def test_minimal_model_sections():
    text = write_mps(_tiny())
    heads = [ln.split()[0] for ln in text.splitlines() if not ln.startswith(" ")]
    assert heads == ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]
    assert write_mps(read_mps(text)) == text


@pytest.mark.parametrize("n", [1, 5, 20, 100])
@pytest.mark.parametrize("formulation", [Formulation.FLAMBDA, Formulation.FRMC])
def test_benchmark_models_round_trip(n, formulation):
    model = build_relaxed_milp(generate_instance(n, min(4, n), n), formulation).model
    text = write_mps(model)
    back = read_mps(text)
    assert back.structurally_equal(model)
    assert write_mps(back) == text


def test_round_trip_preserves_solution():
    model = build_relaxed_milp(generate_instance(8, 3, 0), Formulation.FLAMBDA).model
    back = read_mps(write_mps(model))
    assert solve_milp(back).objective == solve_milp(model).objective


def test_bound_kinds_objsense_and_constant():
    m = LinearModel(name="kinds")
    m.add_variable("free", -math.inf, math.inf)
    m.add_variable("neg", -math.inf, 3)
    m.add_variable("fixed", 2.5, 2.5)
    m.add_variable("lo", -1.25, math.inf)
    m.add_variable("b", 0, 1, VarKind.BINARY)
    m.add_variable("bfix", 1, 1, VarKind.BINARY)
    m.add_variable("c", 0, math.inf)
    m.add_constraint(LinearExpr({0: 1.0, 1: 0.1, 4: 3.0}), Sense.LE, 5.0, "r1")
    m.add_constraint(LinearExpr({2: 1.0, 3: -1.0, 6: 1.0}), Sense.EQ, 0.3, "r2")
    m.set_objective(LinearExpr({0: 1.0, 4: 2.0}, 7.5), ObjSense.MAX)
    text = write_mps(m)
    for tag in ("OBJSENSE", " FR BND free", " MI BND neg", " FX BND fixed 2.5", " BV BND b", "RHS OBJ -7.5"):
        assert tag in text
    back = read_mps(text)
    assert back.structurally_equal(m)
    assert back.sense is ObjSense.MAX and back.objective.constant == 7.5


def test_binary_columns_inside_markers():
    m = build_relaxed_milp(generate_instance(4, 2, 0), Formulation.FLAMBDA).model
    lines = write_mps(m).splitlines()
    start = next(i for i, ln in enumerate(lines) if "'INTORG'" in ln)
    end = next(i for i, ln in enumerate(lines) if "'INTEND'" in ln)
    cols = {ln.split()[0] for ln in lines[start + 1:end]}
    assert cols == {f"z_{i}" for i in range(4)}


def test_reals_round_trip_exactly():
    m = LinearModel()
    x = m.add_variable("x", 0.1, 1 / 3)
    m.add_constraint(LinearExpr({x: math.pi}), Sense.LE, math.e, "r")
    m.set_objective(LinearExpr({x: 1e-17}))
    back = read_mps(write_mps(m))
    assert back.variables[0].upper == 1 / 3
    assert back.constraints[0].expr.terms[0] == math.pi


def test_missing_endata_reports_line():
    text = write_mps(_tiny()).replace("ENDATA\n", "")
    with pytest.raises(MpsError) as exc:
        read_mps(text)
    assert exc.value.line == len(text.splitlines()) + 1
    assert "ENDATA" in str(exc.value)


@pytest.mark.parametrize("mutate, message", [
    (lambda t: t.replace("RHS r 1", "RHS nope 1"), "unknown row"),
    (lambda t: t.replace("ROWS", "WHATEVER"), "unknown section"),
    (lambda t: t.replace(" G  r", " X  r"), "unknown row type"),
    (lambda t: t.replace("    x r 1", "    x r abc"), "expected a number"),
    (lambda t: t.replace("RHS\n", "").replace("BOUNDS", "RHS\nBOUNDS", 1).replace("ROWS", "BOUNDS\nROWS"), "out of order"),
    (lambda t: t + "extra\n", "after ENDATA"),
])
def test_malformed_inputs(mutate, message):
    with pytest.raises(MpsError, match=message):
        read_mps(mutate(write_mps(_tiny())))


def test_name_sanitizing_and_collisions():
    assert sanitize("a b/c") == "a_b_c"
    assert sanitize("") == "_"
    m = LinearModel()
    m.add_variable("a b", 0, 1)
    m.add_variable("a_b", 0, 1)
    with pytest.raises(NameCollision):
        write_mps(m)


def test_objective_row_name_avoids_collision():
    m = _tiny()
    m.constraints[0] = m.constraints[0].__class__(**{**m.constraints[0].__dict__, "name": "OBJ"})
    text = write_mps(m)
    assert " N  OBJ_" in text
    assert read_mps(text).structurally_equal(m)


def test_lp_read_back_solves_the_same():
    m = _tiny()
    assert solve_lp(read_mps(write_mps(m))).objective == solve_lp(m).objective == 2.0


# --- instance JSON ---------------------------------------------------------------

def test_instance_json_round_trip():
    inst = generate_instance(7, 3, 11)
    assert load_instance(dump_instance(inst)) == inst
    assert instance_to_dict(inst)["version"] == "1"


def test_instance_json_missing_field_is_named():
    d = instance_to_dict(generate_instance(5, 2, 0))
    del d["demand"]
    with pytest.raises(SchemaError, match="demand"):
        instance_from_dict(d)


@pytest.mark.parametrize("patch, message", [
    ({"extra": 1}, "unknown field"),
    ({"version": "2"}, "version"),
    ({"n": 5.5}, "integer"),
    ({"c": "abc"}, "list"),
    ({"demand": float("nan")}, "finite"),
    ({"k": 9}, "n >= k"),
])
def test_instance_json_schema_errors(patch, message):
    d = instance_to_dict(generate_instance(5, 2, 0))
    d.update(patch)
    with pytest.raises(SchemaError, match=message):
        instance_from_dict(d)


def test_instance_json_bad_text():
    with pytest.raises(SchemaError):
        load_instance("{not json")
    with pytest.raises(SchemaError):
        load_instance(json.dumps([1, 2]))
