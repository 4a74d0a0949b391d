import json

import numpy as np
import pytest
from conftest import make_instance, unit

from ucfun.instance import (
    CommitmentMatrix,
    CommitmentShapeError,
    InstanceError,
    InstanceParseError,
    UcInstance,
    UnitSpec,
    load_instance,
    random_instance,
    store_instance,
    validate_commitment_shape,
)


def test_bundled_ten_unit(ten_unit):
    assert (ten_unit.n_units, ten_unit.n_periods) == (10, 24)
    a = ten_unit.arrays
    # the fleet can cover the peak
    assert a.p_max.sum() >= max(ten_unit.demand)
    assert list(a.merit) == list(np.argsort(a.cost_rate, kind="stable"))


def _doc(**over):
    doc = {
        "version": 1,
        "demand": [10.0, 20.0],
        "units": [{"id": 0, "p_min": 1, "p_max": 30, "cost_rate": 2, "min_up": 1, "min_down": 1}],
    }
    doc.update(over)
    return doc


def test_pmin_above_pmax_names_unit(tmp_path):
    doc = _doc(units=[
        {"id": 0, "p_min": 1, "p_max": 30, "cost_rate": 2, "min_up": 1, "min_down": 1},
        {"id": 1, "p_min": 50, "p_max": 30, "cost_rate": 2, "min_up": 1, "min_down": 1},
    ])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(InstanceError, match="unit 1"):
        load_instance(path)


def test_declared_periods_mismatch(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(_doc(demand=[5.0] * 23, periods=24)))
    with pytest.raises(InstanceError, match="23"):
        load_instance(path)


def test_malformed_json_reports_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"version": 1,,}')
    with pytest.raises(InstanceParseError, match="line 1"):
        load_instance(path)


@pytest.mark.parametrize("over, match", [
    ({"extra": 1}, "unknown"),
    ({"version": 9}, "version"),
    ({"demand": [1.0, -1.0]}, "demand"),
    ({"demand": []}, "period"),
    ({"units": []}, "unit"),
])
def test_invalid_documents(over, match):
    with pytest.raises(InstanceError, match=match):
        UcInstance.from_dict(_doc(**over))


def test_unit_ids_must_be_dense():
    with pytest.raises(InstanceError, match="ids"):
        UcInstance((unit(1),), (1.0,))


@pytest.mark.parametrize("kw", [
    {"p_min": -1.0}, {"cost_rate": -1.0}, {"min_up": 0}, {"min_down": 0}, {"initial_duration": 0},
    {"p_max": float("nan")},
])
def test_unit_invariants(kw):
    base = dict(id=0, p_min=1.0, p_max=10.0, cost_rate=1.0, min_up=1, min_down=1)
    base.update(kw)
    with pytest.raises(InstanceError):
        UnitSpec(**base)


def test_default_initial_duration_is_free():
    u = UnitSpec(0, 1.0, 2.0, 1.0, 3, 4)
    assert u.initial_state is False and u.initial_duration == 4


def test_round_trip(tmp_path):
    inst = random_instance(np.random.default_rng(5), 4, 6)
    path = tmp_path / "inst.json"
    store_instance(inst, path)
    assert load_instance(path) == inst


def test_random_instance_coverable_and_free():
    for seed in range(20):
        inst = random_instance(np.random.default_rng(seed), 3, 4)
        a = inst.arrays
        assert max(inst.demand) <= a.p_max.sum()
        req = np.where(a.init_on == 1, a.min_up, a.min_down)
        assert (a.init_dur >= req).all()


def test_commitment_shape(ten_unit):
    ok = validate_commitment_shape(ten_unit, np.zeros((10, 24)))
    assert ok.dtype == np.int8
    with pytest.raises(CommitmentShapeError, match="shape"):
        validate_commitment_shape(ten_unit, np.zeros((9, 24)))
    bad = np.zeros((10, 24), dtype=int)
    bad[3, 7] = 2
    with pytest.raises(CommitmentShapeError, match=r"\(3,7\)"):
        validate_commitment_shape(ten_unit, bad)


def test_commitment_matrix_immutable():
    m = CommitmentMatrix(np.array([[1, 0]]))
    with pytest.raises(ValueError):
        m.values[0, 0] = 0
    assert m == CommitmentMatrix([[1, 0]]) and hash(m) == hash(CommitmentMatrix([[1, 0]]))
    assert m.tolist() == [[1, 0]]


def test_instance_arrays_read_only():
    inst = make_instance([unit(0)], [5.0])
    with pytest.raises(ValueError):
        inst.arrays.demand[0] = 1.0
