import json

import numpy as np
import pytest

from strongneg import formats
from strongneg.errors import InputError
from strongneg.instances import demo_scheduling, random_bipartite
from strongneg.params import DEFAULT, ParameterSet


def test_round_trips(tmp_path):
    inst, sol = demo_scheduling()
    assert formats.instance_from_dict(formats.instance_to_dict(inst)) == inst
    again = formats.fractional_from_dict(json.loads(formats.dumps(formats.fractional_to_dict(sol))))
    assert np.array_equal(again.matrices, sol.matrices)
    bip = random_bipartite(3, 3, 0)
    assert formats.bipartite_from_dict(formats.bipartite_to_dict(bip)).edges == bip.edges
    assert formats.params_from_dict(formats.params_to_dict(DEFAULT)) == DEFAULT
    p = tmp_path / "inst.json"
    p.write_text(formats.dumps(formats.instance_to_dict(inst)))
    assert formats.read_instance(p) == inst


@pytest.mark.parametrize("text", ["{", "[]", '{"format": 2, "machines": 1, "jobs": []}',
                                  '{"machines": 2, "jobs": [{"w": 1, "p": [1]}]}',
                                  '{"machines": 1, "jobs": [{"p": [1]}]}',
                                  '{"machines": 1, "jobs": [{"w": 1, "p": [0]}]}'])
def test_malformed_instances(tmp_path, text):
    p = tmp_path / "bad.json"
    p.write_text(text)
    with pytest.raises(InputError):
        formats.read_instance(p)


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        formats.read_instance(tmp_path / "nope.json")


def test_bad_bipartite():
    with pytest.raises(InputError):
        formats.bipartite_from_dict({"left": ["a"], "right": ["b"], "edges": [{"u": "a", "v": "b"}]})
    with pytest.raises(InputError):
        formats.bipartite_from_dict({"left": [[1]], "right": ["b"], "edges": []})


def test_params_validation():
    with pytest.raises(InputError):
        ParameterSet.from_dict({"pi": 2.0})
    with pytest.raises(InputError):
        DEFAULT.with_(theta=0.7)
    with pytest.raises(InputError):
        DEFAULT.with_(pi=1.0)
    with pytest.raises(InputError):
        ParameterSet.from_dict({**DEFAULT.to_dict(), "beta": "x"})
