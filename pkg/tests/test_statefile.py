import json

import numpy as np
import pytest

from monoqt.states import DensityMatrix, PureState, cluster4, ghz_state
from monoqt.statefile import StateFileError, dumps_state, load_state, save_state, state_from_dict, state_to_dict

rng = np.random.default_rng(5)


def test_pure_round_trip_exact(tmp_path):
    psi = PureState.from_unnormalized((2, 3), rng.normal(size=6) + 1j * rng.normal(size=6))
    path = tmp_path / "psi.json"
    save_state(psi, path)
    back = load_state(path)
    assert isinstance(back, PureState) and back.dims == psi.dims
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) <= 1e-15


def test_mixed_round_trip_exact(tmp_path):
    v = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    m = v @ v.conj().T
    rho = DensityMatrix((2, 2), m / np.trace(m).real)
    path = tmp_path / "rho.json"
    save_state(rho, path)
    back = load_state(path)
    assert isinstance(back, DensityMatrix)
    assert np.max(np.abs(back.matrix - rho.matrix)) <= 1e-15


def test_dict_layout():
    d = state_to_dict(ghz_state(2))
    assert d["kind"] == "pure" and d["dims"] == [2, 2] and len(d["data"]) == 4
    assert d["data"][0] == [pytest.approx(2**-0.5), 0.0]
    assert json.loads(dumps_state(cluster4()))["dims"] == [2, 2, 2, 2]


@pytest.mark.parametrize("doc, field", [
    ([], "top level"),
    ({"dims": [2], "data": [[1, 0], [0, 0]]}, "kind"),
    ({"kind": "blob", "dims": [2], "data": []}, "kind"),
    ({"kind": "pure", "data": []}, "dims"),
    ({"kind": "pure", "dims": [2, 0], "data": []}, "dims"),
    ({"kind": "pure", "dims": [2]}, "data"),
    ({"kind": "pure", "dims": [2], "data": [[1, 0]]}, "data"),
    ({"kind": "pure", "dims": [2], "data": [[1, 0], [0]]}, "entry 1"),
    ({"kind": "pure", "dims": [2], "data": [[1, 0], [1, 0]]}, "data"),
    ({"kind": "mixed", "dims": [2], "data": [[1, 0], [1, 0], [0, 0], [0, 0]]}, "data"),
])
def test_malformed_documents_name_the_field(doc, field):
    with pytest.raises(StateFileError, match=field):
        state_from_dict(doc)


def test_invalid_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"kind": "pure",\n  "dims": [2,\n}')
    with pytest.raises(StateFileError, match="line 3"):
        load_state(path)
