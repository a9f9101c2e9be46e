import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given

from conftest import graphons
from graphon_entropy import io as gio
from graphon_entropy import named
from graphon_entropy.core import ValidationError, density_report
from graphon_entropy.optimizer import ConstraintProblem, maximize_entropy
from graphon_entropy.spectral import spectrum
from graphon_entropy.verify import verify_e0

DATA = Path(__file__).parent / "data"


def doc(c, p, **extra):
    return json.dumps({"type": "graphon", "format_version": 1, "c": c, "p": p, **extra})


def test_golden_file():
    want = (DATA / "symmetric_bipodal_0.5_0.2.json").read_bytes()
    assert gio.write_graphon(named.symmetric_bipodal(0.5, 0.2)) == want


@given(graphons())
def test_round_trip_bit_exact(g):
    raw = gio.write_graphon(g)
    back = gio.read_graphon(raw)
    assert np.array_equal(back.c, g.c) and np.array_equal(back.p, g.p)
    assert gio.write_graphon(back) == raw


def test_idempotent_on_foreign_formatting():
    text = doc([0.25, 0.75], [[0.1, 0.2], [0.2, 0.3]])
    once = gio.write_graphon(gio.read_graphon(text))
    assert gio.write_graphon(gio.read_graphon(once)) == once


def test_asymmetry_named():
    with pytest.raises(ValidationError, match=r"\(0, 1\)"):
        gio.read_graphon(doc([0.5, 0.5], [[0.3, 0.7], [0.71, 0.3]]))


def test_mass_sum_rejected():
    with pytest.raises(ValidationError, match="sum"):
        gio.read_graphon(doc([0.5, 0.499], [[0.3, 0.7], [0.7, 0.3]]))


def test_nan_literal_rejected():
    with pytest.raises(ValidationError):
        gio.read_graphon('{"type": "graphon", "format_version": 1, "c": [1.0], "p": [[NaN]]}')


def test_nonfinite_refused_on_write():
    with pytest.raises(gio.SerializationError):
        gio.dumps({"x": math.inf})


@pytest.mark.parametrize(
    "text,match",
    [
        ("[1, 2]", "object"),
        ('{"type": "graphon", "format_version": 2, "c": [1.0], "p": [[0.5]]}', "format_version"),
        ('{"type": "graphon", "c": [1.0]}', "'p'"),
        ('{"type": "graphon", "c": [1.0], "p": [["x"]]}', r"p\[0\]\[0\]"),
        ('{"type": "graphon", "c": [0.5, 0.5], "p": [[0.5, 0.5]]}', "rows"),
        ("{not json", "parse"),
    ],
)
def test_malformed(text, match):
    with pytest.raises(ValidationError, match=match):
        gio.read_graphon(text)


def test_strict_and_lenient():
    text = doc([1.0], [[0.4]], comment="hi")
    with pytest.raises(ValidationError, match="unknown"):
        gio.read_graphon(text)
    d = gio.read_graphon_document(text, strict=False)
    assert d.extra == {"comment": "hi"}
    assert b'"comment": "hi"' in gio.write_graphon(d)


def test_metadata_kept():
    raw = gio.write_graphon(named.constant_graphon(0.3), {"label": "er"})
    assert gio.read_graphon_document(raw).metadata == {"label": "er"}


def test_float_format():
    assert gio.dumps(1.0) == "1.0\n"
    assert gio.dumps([0.1, 2, True, None]) == "[0.10000000000000001, 2, true, null]\n"
    assert gio.dumps({"b": 1, "a": {}}) == '{\n  "a": {},\n  "b": 1\n}\n'


def test_result_round_trip():
    r = maximize_entropy(ConstraintProblem(0.5, 0.117, pods=2, restarts=2))
    raw = gio.write_result(r)
    back = gio.read_result(raw)
    assert np.array_equal(back.graphon.p, r.graphon.p) and np.array_equal(back.graphon.c, r.graphon.c)
    assert back.restarts == r.restarts and back.multipliers == r.multipliers
    assert gio.write_result(back) == raw
    # graphon readers accept a result document
    assert np.array_equal(gio.read_graphon(raw).p, r.graphon.p)


def test_evaluation_round_trip():
    g = named.bipodal_series(0.6, 0.05)
    rep, spec = density_report(g), spectrum(g, 0.6)
    raw = gio.write_evaluation(rep, spec, {"center": 0.6, "values": [0.0, 1e-3]})
    rep2, spec2, mom = gio.read_evaluation(raw)
    assert rep2 == rep
    assert np.array_equal(spec2.eigenvalues, spec.eigenvalues)
    assert np.array_equal(spec2.eigvec_pod_values, spec.eigvec_pod_values)
    assert mom["values"] == [0.0, 1e-3]


def test_report_round_trip():
    rep = verify_e0()
    raw = gio.write_report(rep)
    back = gio.read_report(raw)
    assert gio.write_report(back) == raw
    many = gio.write_report([rep, rep])
    assert len(gio.read_report(many)) == 2
