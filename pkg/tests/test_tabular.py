import copy
import json

import numpy as np
import pytest

from gptc.errors import SpecInvalid, UnknownReference, UnsupportedTheory
from gptc.postulates import check_p3
from gptc.theories import bundled_tables, load_tabular_theory, theory_from_selector

BIT = {
    "name": "bit",
    "types": [{"label": "a", "N": 2, "K": 2}],
    "states": {"a": {"0": [1, 0], "1": [0, 1]}},
    "effects": {"a": {"0": [1, 0], "1": [0, 1], "u": [1, 1]}},
    "maximal_sets": {"a": [{"states": ["0", "1"], "effects": ["0", "1"]}]},
    "unit_effect": {"a": "u"},
}


def test_bundled_tables_load():
    assert {"gbit-square.thy", "rebit.thy", "classical-bit.thy"} <= set(bundled_tables())
    for name in ("gbit-square", "rebit.thy", "classical-bit"):
        th = load_tabular_theory(name)
        a = th.system("a")
        for m in th.maximal_sets(a):
            assert m.duality_residual() < 1e-9


def test_selector_and_json_string():
    assert theory_from_selector("tabular:gbit-square").system("a").K == 3
    th = load_tabular_theory(json.dumps(BIT))
    assert th.system("a").N == 2


def test_gbit_square_structure():
    g = load_tabular_theory("gbit-square")
    a = g.system("a")
    assert len(g.pure_states(a)) == 4
    assert len(g.maximal_sets(a)) == 8
    assert len(g.reversible_group(a)) == 8


def test_rebit_fails_local_tomography():
    r = load_tabular_theory("rebit")
    a = r.system("a")
    report = check_p3(r, a, r.ancilla(a))
    assert report.details["product_effect_rank"] == 9
    assert report.details["K_ab"] == 10
    assert not report.passed


def _broken(mutator):
    spec = copy.deepcopy(BIT)
    mutator(spec)
    return spec


@pytest.mark.parametrize("mutate, fragment", [
    (lambda s: s["types"][0].update(K=1), "K >= N"),
    (lambda s: s["types"][0].update(N=1, K=1), ""),
    (lambda s: s["states"]["a"].update({"0": [1, 0, 0]}), ""),
    (lambda s: s["effects"]["a"].update({"0": [1, 1]}), ""),
    (lambda s: s["effects"]["a"].update({"u": [1, 2]}), ""),
    (lambda s: s["maximal_sets"]["a"][0].update(effects=["1", "0"]), ""),
])
def test_loader_rejects_inconsistent_tables(mutate, fragment):
    with pytest.raises(SpecInvalid) as exc:
        load_tabular_theory(_broken(mutate))
    assert fragment in str(exc.value)


def test_missing_file():
    with pytest.raises(SpecInvalid):
        load_tabular_theory("no-such-table")


def test_no_composite_is_unsupported():
    th = load_tabular_theory(BIT)
    a = th.system("a")
    with pytest.raises(UnsupportedTheory):
        th.composite(a, th.ancilla(a))


def test_resolve_named_entries():
    th = load_tabular_theory(BIT)
    a = th.system("a")
    s = th.resolve("prep:1", (), (a,))
    e = th.resolve("effect:1", (a,), ())
    assert float(e.vector @ s.vector) == 1.0
    with pytest.raises(UnknownReference):
        th.resolve("prep:2", (), (a,))
    assert np.allclose(th.unit_effect(a), [1, 1])
