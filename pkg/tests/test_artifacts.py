import json

import numpy as np

from embdyn import ScalarField, make_grid
from embdyn.artifacts import (read_csv, read_field_csv, read_matrix_csv, write_csv, write_field_csv,
                              write_json, write_matrix_csv)


def test_csv_round_trip_is_exact(tmp_path, rng):
    a = rng.standard_normal(50) * 10.0 ** rng.integers(-300, 300, 50)
    b = np.array([0.1, 1 / 3, np.pi, 2 ** -1074, -0.0, 1e308] + [0.0] * 44)
    write_csv(tmp_path / "x.csv", ["a", "b"], [a, b])
    header, data = read_csv(tmp_path / "x.csv")
    assert header == ["a", "b"]
    np.testing.assert_array_equal(data[:, 0], a)
    np.testing.assert_array_equal(data[:, 1], b)


def test_field_and_matrix_round_trip(tmp_path, rng):
    g = make_grid(-0.3, 0.7, 17)
    f = ScalarField(g, rng.standard_normal(17))
    write_field_csv(tmp_path / "f.csv", f)
    np.testing.assert_array_equal(read_field_csv(tmp_path / "f.csv", g).values, f.values)
    t = np.linspace(0, 1, 4)
    rows = rng.standard_normal((4, 17))
    write_matrix_csv(tmp_path / "m.csv", t, rows, g.nodes)
    t2, rows2, x2 = read_matrix_csv(tmp_path / "m.csv")
    np.testing.assert_array_equal(t2, t)
    np.testing.assert_array_equal(rows2, rows)
    np.testing.assert_array_equal(x2, g.nodes)


def test_json_is_sorted_and_deterministic(tmp_path):
    obj = {"b": 1 / 3, "a": [1, 2], "c": {"z": 0.1, "y": None}}
    write_json(tmp_path / "1.json", obj)
    write_json(tmp_path / "2.json", dict(reversed(list(obj.items()))))
    text = (tmp_path / "1.json").read_text()
    assert text == (tmp_path / "2.json").read_text()
    assert json.loads(text)["b"] == 1 / 3
    assert text.index('"a"') < text.index('"b"')
