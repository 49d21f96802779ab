import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bundlereach.models import (BUILTINS, ModelDef, ModelError, builtin, covid, discretize,
                                load_model, parse_model, serialize_model)
from bundlereach.poly import MultiPoly, eval_map
from bundlereach.reach import simulate

IDENTITY_1D = {
    "name": "id", "dim": 1, "vars": ["x"], "map": "discrete",
    "dynamics": [[{"coeff": 1.0, "exps": [1]}]], "steps": 3, "initial_box": [[0, 1]],
}


def test_discretize_examples():
    m = ModelDef("z", 2, ("a", "b"), "euler", (MultiPoly(2), MultiPoly(2)), 1,
                 ((0, 1), (0, 1)), delta=0.5)
    assert discretize(m) == (MultiPoly.variable(0, 2), MultiPoly.variable(1, 2))
    x = MultiPoly.variable(0, 1)
    m = ModelDef("decay", 1, ("x",), "euler", (-x,), 1, ((0, 1),), delta=0.1)
    assert discretize(m)[0] == x.scale(0.9)
    f = covid().step_map()
    pt = np.array([0.7, 0.1, 0.14, 0.04, 0, 0, 0])
    assert eval_map(f, pt)[0] == pytest.approx(0.69685, abs=1e-12)


def test_discrete_passthrough():
    m = parse_model(json.dumps(IDENTITY_1D))
    assert discretize(m) == m.dynamics


def test_builtin_tables():
    sir = builtin("sir")
    assert (sir.delta, sir.default_steps) == (0.1, 150)
    assert sir.params == {"beta": 0.05, "gamma": 0.34}
    assert sir.initial_box == ((0.79, 0.8), (0.19, 0.2), (0.0, 0.0))
    vdp = builtin("vanderpol")
    assert (vdp.default_steps, vdp.delta) == (70, 0.08)
    assert vdp.initial_box == ((0.0, 0.1), (1.99, 2.0))
    c = builtin("covid")
    assert c.dim == 7
    assert c.initial_box == ((0.69, 0.7), (0.09, 0.1), (0.14, 0.15), (0.04, 0.05),
                             (0.0, 0.0), (0.0, 0.0), (0.0, 0.0))
    assert (c.delta, c.default_steps, c.params["beta"]) == (0.1, 200, 0.25)
    t = builtin("covid", covid_params="table")
    assert (t.delta, t.params["beta"], t.params["gamma"]) == (0.08, 0.05, 0.0)


def test_unknown_builtin_lists_models():
    with pytest.raises(ModelError) as e:
        builtin("nosuch")
    for name in BUILTINS:
        assert name in str(e.value)


def test_covid_printed_vs_corrected():
    pt = np.array([0.7, 0.1, 0.14, 0.04, 0.0, 0.0, 0.0])
    beta, gamma = 0.25, 0.02
    printed = eval_map(covid().dynamics, pt)[2]
    fixed = eval_map(covid(corrected=True).dynamics, pt)[2]
    assert printed == pytest.approx(beta * 0.1 * 0.18 - gamma * 0.04)
    assert fixed == pytest.approx(beta * 0.7 * 0.18 - gamma * 0.14)
    with pytest.raises(ModelError):
        covid("other")


@pytest.mark.parametrize("name", list(BUILTINS))
def test_builtin_trajectory_finite(name):
    m = builtin(name)
    center = np.mean(np.array(m.initial_box), axis=1)
    assert np.all(np.isfinite(simulate(m.step_map(), center, m.default_steps)))


@pytest.mark.parametrize("name", list(BUILTINS))
def test_roundtrip(name):
    m = builtin(name)
    assert parse_model(serialize_model(m).encode()) == m


@pytest.mark.parametrize("name", list(BUILTINS))
def test_discretize_matches_euler(name):
    m = builtin(name)
    pts = np.random.default_rng(3).uniform(-1, 1, size=(50, m.dim))
    want = pts + m.delta * eval_map(m.dynamics, pts)
    np.testing.assert_allclose(eval_map(m.step_map(), pts), want, atol=1e-12)


def test_parse_minimal_identity():
    m = parse_model(json.dumps(IDENTITY_1D).encode())
    assert m.dynamics == (MultiPoly.variable(0, 1),)
    assert m.delta is None


def test_parse_merges_duplicate_terms():
    doc = dict(IDENTITY_1D, dynamics=[[{"coeff": 1, "exps": [1]}, {"coeff": 2, "exps": [1]}]])
    assert parse_model(json.dumps(doc)).dynamics[0] == MultiPoly(1, {(1,): 3.0})


def _bad(doc, match):
    with pytest.raises(ModelError, match=match):
        parse_model(doc if isinstance(doc, (str, bytes)) else json.dumps(doc))


def test_parse_errors():
    two = {"name": "t", "dim": 2, "vars": ["a", "b"], "map": "discrete", "steps": 1,
           "initial_box": [[0, 1], [0, 1]],
           "dynamics": [[{"coeff": 1, "exps": [1, 0]}], [{"coeff": 1, "exps": [0, 1, 0]}]]}
    _bad(two, r"dynamics\[1\]\[0\]\.exps: length 3")
    _bad(dict(IDENTITY_1D, map="euler"), "delta")
    _bad(dict(IDENTITY_1D, dim=2), "vars")
    _bad(dict(IDENTITY_1D, initial_box=[[1, 0]]), "initial_box")
    _bad(dict(IDENTITY_1D, steps=-1), "steps")
    _bad({k: v for k, v in IDENTITY_1D.items() if k != "name"}, "name")
    _bad(dict(IDENTITY_1D, dynamics=[[{"coeff": "1", "exps": [1]}]]), r"coeff")
    _bad(dict(IDENTITY_1D, dynamics=[[{"coeff": 1, "exps": [-1]}]]), r"exps\[0\]")
    _bad(json.dumps(IDENTITY_1D).replace("1.0", "NaN"), "non-finite")
    _bad('{"name": "x",\n "dim": }', "line 2")
    _bad(b"\xff\xfe", "UTF-8")
    _bad("[1, 2]", "object")


def test_load_model(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(serialize_model(builtin("vanderpol")))
    assert load_model(p) == builtin("vanderpol")


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0))
def test_initial_set_scaling(scale):
    m = builtin("sir")
    P = m.initial_set(scale)
    mid = np.array([0.795, 0.195, 0.0])
    np.testing.assert_allclose((P.c_l + P.c_u) / 2, mid, atol=1e-12)
    np.testing.assert_allclose(P.c_u - P.c_l, np.array([0.01, 0.01, 0.0]) * scale, atol=1e-12)


def test_initial_set_rejects_nonpositive_scale():
    with pytest.raises(ModelError):
        builtin("sir").initial_set(0.0)
