"""Deterministic text formats: floats, CSV, matrix dumps, interaction files."""

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latframe.lattice import LatticeParams, Site, build_chain, build_window
from latframe.interactions import density_density
from latframe.serialize import (
    SerializeError,
    fmt_float,
    interaction_lines,
    json_text,
    parse_interaction_lines,
    parse_site_token,
    read_csv,
    read_interaction,
    read_matrix_text,
    site_token,
    write_csv,
    write_interaction,
    write_matrix_text,
)


def test_fmt_float_basics():
    assert fmt_float(0.1) == "0.1"
    assert fmt_float(2.0) == "2"
    assert fmt_float(-0.0) == "0"
    assert fmt_float(math.pi) == "3.14159265358979"
    assert fmt_float(1e300) == "1e+300"


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
def test_fmt_float_rejects_non_finite(bad):
    with pytest.raises(SerializeError):
        fmt_float(bad)


@given(st.floats(min_value=-1e308, max_value=1e308, allow_nan=False))
def test_fmt_float_reparses_close(x):
    # 15 significant digits: reparse agrees to a relative 5e-15
    y = float(fmt_float(x))
    assert y == pytest.approx(x, rel=5e-15, abs=5e-305)


def test_csv_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    rows = [["a", 1, 0.25, True], ["b", -2, 1.5e-9, False]]
    write_csv(path, ["name", "n", "x", "flag"], rows)
    header, got = read_csv(path)
    assert header == ["name", "n", "x", "flag"]
    assert got == [["a", "1", "0.25", "true"], ["b", "-2", "1.5e-09", "false"]]


def test_csv_rejects_unserializable_cells(tmp_path):
    path = tmp_path / "t.csv"
    with pytest.raises(SerializeError):
        write_csv(path, ["a"], [["has,comma"]])
    with pytest.raises(SerializeError):
        write_csv(path, ["a"], [["line\nbreak"]])
    with pytest.raises(SerializeError):
        write_csv(path, ["a", "b"], [["only-one"]])


def test_matrix_text_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    m = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    path = tmp_path / "m.txt"
    write_matrix_text(path, m, "abcdef0123456789")
    back, tag = read_matrix_text(path)
    assert tag == "abcdef0123456789"
    assert back.shape == m.shape
    assert np.allclose(back, m, rtol=1e-13, atol=1e-300)
    first = path.read_text().splitlines()[0]
    assert first.split() == ["latframe-matrix", "4", "3", "abcdef0123456789"]


def test_matrix_text_rejects_corruption(tmp_path):
    path = tmp_path / "m.txt"
    write_matrix_text(path, np.eye(2, dtype=complex), "0" * 16)
    lines = path.read_text().splitlines()
    (tmp_path / "bad.txt").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(SerializeError):
        read_matrix_text(tmp_path / "bad.txt")
    (tmp_path / "bad2.txt").write_text("not-a-header 2 2 x\n")
    with pytest.raises(SerializeError):
        read_matrix_text(tmp_path / "bad2.txt")


def test_json_text_deterministic_and_sorted():
    a = json_text({"b": 1, "a": 0.1, "nest": {"y": True, "x": None}})
    b = json_text({"nest": {"x": None, "y": True}, "a": 0.1, "b": 1})
    assert a == b
    assert a.endswith("\n")
    assert json.loads(a) == {"a": 0.1, "b": 1, "nest": {"x": None, "y": True}}
    # floats go through the shared formatter
    assert '"a": 0.1' in a


def test_json_text_rejects_unknown_types():
    with pytest.raises(SerializeError):
        json_text({"x": object()})
    with pytest.raises(SerializeError):
        json_text({"x": float("nan")})


def test_site_token_round_trip():
    s = Site(1, -3, 12)
    assert site_token(s) == "1:-3:12"
    assert parse_site_token("1:-3:12") == (1, -3, 12)
    for bad in ("1:-3", "a:b:c", "1:2:3:4", ""):
        with pytest.raises(SerializeError):
            parse_site_token(bad)


def test_interaction_lines_round_trip(tmp_path):
    w = build_chain(LatticeParams(1.0, 1.0, 20.0), 4)
    inter = density_density(w, 0.8, 1.3)
    lines = interaction_lines(inter)
    assert len(lines) == 6  # 4 choose 2
    back = parse_interaction_lines(lines, w)
    assert len(back.terms) == len(inter.terms)
    for t1, t2 in zip(inter.terms, back.terms):
        assert t1.support == t2.support
        assert t1.k == t2.k
        assert t1.monomial.factors == t2.monomial.factors
        assert t2.coupling == pytest.approx(t1.coupling, rel=1e-14)
    path = tmp_path / "inter.txt"
    write_interaction(path, inter)
    again = read_interaction(path, w)
    assert len(again.terms) == len(inter.terms)


def test_interaction_lines_reject_malformed():
    w = build_chain(LatticeParams(1.0, 1.0, 20.0), 4)
    with pytest.raises(SerializeError):
        parse_interaction_lines(["2 1.0 0:9:0 0:9:0*;0:9:0"], w)  # site not in window
    with pytest.raises(SerializeError):
        parse_interaction_lines(["nonsense"], w)
    with pytest.raises(SerializeError):
        parse_interaction_lines(["2 notanumber 0:0:0;0:1:0 0:0:0*;0:0:0;0:1:0*;0:1:0"], w)


def test_read_interaction_missing_file(tmp_path):
    w = build_window(LatticeParams(1.0, 1.0, 2.0))
    with pytest.raises(SerializeError):
        read_interaction(tmp_path / "absent.txt", w)
