import json

import pytest

from lib.errors import DataError
from lib.quantum import euler_spectrum, hypersurface_pattern_check
from lib.userdata import load_user_data, same_structure


def _write(tmp_path, doc, name="data.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc, indent=2), encoding="utf-8")
    return path


def _p1_doc(data_dir):
    return json.loads((data_dir / "P1.json").read_text(encoding="utf-8"))


def test_p1_matches_the_builtin(data_dir, p1):
    data = load_user_data(data_dir / "P1.json")
    assert data.valid
    assert data.q == (1,)
    assert data.tangent is not None
    assert same_structure(data.quantum, p1.quantum)


def test_same_structure_notices_a_changed_constant(tmp_path, data_dir, p1):
    doc = _p1_doc(data_dir)
    doc["quantum"] = [["p", "p", [[0, 2], 0]]]
    data = load_user_data(_write(tmp_path, doc), strict=False)
    assert not same_structure(data.quantum, p1.quantum)


def test_broken_associativity_is_reported(data_dir):
    data = load_user_data(data_dir / "broken_associativity.json", strict=False)
    assert not data.valid
    assert data.violations[0] == "quantum associativity: (p, p, p^2)"


def test_broken_associativity_is_fatal_when_strict(data_dir):
    with pytest.raises(DataError) as err:
        load_user_data(data_dir / "broken_associativity.json")
    assert err.value.field == "quantum"
    assert err.value.line is not None


def test_quadric_surface(pc, data_dir):
    data = load_user_data(data_dir / "quadric_surface.json")
    assert data.hypersurface == (3, 2)
    spec = euler_spectrum(data.quantum, data.q, pc)
    assert hypersurface_pattern_check(spec, *data.hypersurface, pc).passed


def test_invalid_json_has_a_line(tmp_path):
    with pytest.raises(DataError) as err:
        load_user_data(_write(tmp_path, '{\n  "name": "x",\n  oops\n}'))
    assert err.value.line == 3


def test_missing_field(tmp_path, data_dir):
    doc = _p1_doc(data_dir)
    del doc["pairing"]
    with pytest.raises(DataError) as err:
        load_user_data(_write(tmp_path, doc))
    assert err.value.field == "pairing"


def test_classical_data_has_no_quantum_product(tmp_path, data_dir):
    doc = _p1_doc(data_dir)
    del doc["quantum"]
    data = load_user_data(_write(tmp_path, doc))
    assert data.valid
    assert data.quantum is None


def test_unknown_label(tmp_path, data_dir):
    doc = _p1_doc(data_dir)
    doc["cup"].append(["x", "p", [0, 0]])
    with pytest.raises(DataError) as err:
        load_user_data(_write(tmp_path, doc))
    assert err.value.field == "cup"
    assert "'x'" in str(err.value)


def test_non_rational_entry(tmp_path, data_dir):
    doc = _p1_doc(data_dir)
    doc["c1"] = [0, "two"]
    with pytest.raises(DataError) as err:
        load_user_data(_write(tmp_path, doc))
    assert err.value.field == "c1"


def test_non_fano_hypersurface(tmp_path, data_dir):
    doc = _p1_doc(data_dir)
    doc["hypersurface"] = {"n": 3, "d": 5}
    with pytest.raises(DataError):
        load_user_data(_write(tmp_path, doc))


def test_tangent_c1_mismatch_is_a_violation(tmp_path, data_dir):
    doc = _p1_doc(data_dir)
    doc["c1"] = [0, 3]
    data = load_user_data(_write(tmp_path, doc), strict=False)
    assert "c1: does not match ch_1 of the tangent data" in data.violations


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_user_data(tmp_path / "nope.json")
