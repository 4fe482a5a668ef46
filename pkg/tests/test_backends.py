"""The compiled kernels must be drop-in twins of the pure-Python reference."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leptonstore import kernels
from leptonstore.codec.api import decode_image, encode_image
from leptonstore.errors import CorruptStream, Overflow
from leptonstore.jpeg import parse_jpeg
from leptonstore.store import TableSet
from leptonstore.analysis import table_for

from helpers import coefficient_image, jpeg_bytes, random_blocks

pytestmark = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled extension not built")


@pytest.fixture
def both():
    yield kernels.get_backend("python"), kernels.get_backend("cython")
    kernels.use(None)


def _with(name, fn):
    kernels.use(name)
    try:
        return fn()
    finally:
        kernels.use(None)


def test_auto_selects_compiled():
    assert kernels.get_backend().name == "cython"
    assert kernels.get_backend("python").name == "python"
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_forces_python(monkeypatch):
    monkeypatch.setenv("LEPTONSTORE_BACKEND", "python")
    assert kernels.get_backend().name == "python"


def test_huffman_decode_equal(sample_paths):
    for p in sample_paths[:4]:
        data = p.read_bytes()
        a = _with("python", lambda: parse_jpeg(data))
        b = _with("cython", lambda: parse_jpeg(data))
        assert a.same_coefficients(b)
    rst = jpeg_bytes(np.random.default_rng(0).integers(0, 256, (40, 72, 3)), restart_marker_blocks=2)
    assert _with("python", lambda: parse_jpeg(rst)).same_coefficients(_with("cython", lambda: parse_jpeg(rst)))


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_encode_decode_equal(ncomp, hb, wb, seed):
    rng = np.random.default_rng(seed)
    img = coefficient_image([random_blocks(rng, hb, wb) for _ in range(ncomp)],
                            quant=rng.integers(1, 40, 64).astype(np.uint16))
    a = _with("python", lambda: encode_image(img).data)
    b = _with("cython", lambda: encode_image(img).data)
    assert a == b
    for name in ("python", "cython"):
        assert _with(name, lambda: decode_image(a)).same_coefficients(img)


def test_corpus_image_equal(sample_paths):
    img = parse_jpeg(sample_paths[1].read_bytes())
    a = _with("python", lambda: encode_image(img).data)
    b = _with("cython", lambda: encode_image(img).data)
    assert a == b


def test_bounded_overflow_records_equal(sample_paths, stat_hist):
    img = parse_jpeg(sample_paths[2].read_bytes())
    tables = TableSet({"exp_7x7_0": table_for(stat_hist, "exp_7x7_0", 256, 8),
                       "exp_edge_0": table_for(stat_hist, "exp_edge_0", 2048, 8)})
    out = {}
    for name in ("python", "cython"):
        kernels.use(name)
        try:
            encode_image(img, tables)
            out[name] = []
        except Overflow as exc:
            out[name] = exc.records
        finally:
            kernels.use(None)
    assert out["python"] == out["cython"] and out["python"]
    fb = {n: _with(n, lambda: encode_image(img, tables, fallback=True).data) for n in ("python", "cython")}
    assert fb["python"] == fb["cython"]


def test_both_reject_truncated_payload():
    rng = np.random.default_rng(1)
    img = coefficient_image([random_blocks(rng, 3, 3)])
    data = encode_image(img).data
    from leptonstore.codec.container import parse_container
    c = parse_container(data)
    quants = [np.ones(64, np.int64)]
    from leptonstore.store import ModelStore
    for name in ("python", "cython"):
        be = kernels.get_backend(name)
        with pytest.raises(CorruptStream):
            be.decode_blocks(c.payload[:5], c.shapes, quants, ModelStore(None))
