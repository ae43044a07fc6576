"""Network math, the model container, and verdict labeling."""

import struct

import numpy as np
import pytest

from threatlight import schema
from threatlight.nn.gradcheck import gradient_check
from threatlight.nn.model import (
    DEFAULT_DIMS,
    ModelBundle,
    NonFiniteInput,
    RequestContext,
    SchemaMismatch,
    classify,
    forward,
    init_model,
    label_verdict,
    sigmoid,
)
from threatlight.nn.modelio import (
    MAGIC,
    BadMagic,
    DimMismatch,
    ModelFormatError,
    TruncatedFile,
    VersionUnsupported,
    load_model,
    save_model,
)
from threatlight.types import AttackType

HASH = schema.schema_hash()


def randomized(model: ModelBundle, seed: int) -> ModelBundle:
    """Give the running statistics non-trivial values."""
    rng = np.random.default_rng(seed)
    for m, v in zip(model.run_mean, model.run_var):
        m[:] = rng.normal(0.0, 0.5, size=m.shape).astype(np.float32)
        v[:] = rng.uniform(0.5, 2.0, size=v.shape).astype(np.float32)
    model.invalidate()
    return model


def test_parameter_count_default_dims():
    model = init_model(HASH, seed=0)
    assert model.dims == DEFAULT_DIMS
    assert model.parameter_count == 67_521


def test_parameter_count_formula_small():
    model = init_model(HASH, seed=0, dims=(90, 4, 2, 1))
    # affine: 90*4+4 + 4*2+2 + 2*1+1 ; batch norm: 2*(4+2)
    assert model.parameter_count == (360 + 4) + (8 + 2) + (2 + 1) + 12


def test_forward_pure_and_deterministic(tiny_model):
    x = np.linspace(-1.0, 1.0, schema.INPUT_WIDTH)
    a = forward(tiny_model, x)
    b = forward(tiny_model, x)
    assert a == b
    assert 0.0 < a < 1.0


def test_forward_batch_matches_single(tiny_model):
    # blas may sum in a different order for matrix vs vector products,
    # so agreement is to rounding, while repeat batches are bit-identical
    rng = np.random.default_rng(0)
    X = rng.normal(size=(16, schema.INPUT_WIDTH))
    batch = forward(tiny_model, X)
    singles = np.array([forward(tiny_model, row) for row in X])
    np.testing.assert_allclose(batch, singles, rtol=1e-9, atol=0.0)
    assert np.array_equal(batch, forward(tiny_model, X))


def test_forward_output_strictly_inside_unit_interval(tiny_model):
    # saturating inputs must still come back inside (0,1)
    x = np.full(schema.INPUT_WIDTH, 1e6)
    p = forward(tiny_model, x)
    assert 0.0 < p < 1.0


def test_sigmoid_clamp_and_stability():
    z = np.array([-800.0, -40.0, 0.0, 40.0, 800.0])
    p = sigmoid(z)
    assert np.all(p > 0.0) and np.all(p < 1.0)
    assert p[0] == 1e-12 and p[-1] == 1.0 - 1e-12
    assert p[2] == 0.5


def test_forward_rejects_bad_input(tiny_model):
    with pytest.raises(SchemaMismatch):
        forward(tiny_model, np.zeros(7))
    with pytest.raises(NonFiniteInput):
        x = np.zeros(schema.INPUT_WIDTH)
        x[3] = np.nan
        forward(tiny_model, x)
    with pytest.raises(ValueError):
        forward(tiny_model, np.zeros(schema.INPUT_WIDTH), mode="banana")


def test_train_mode_uses_batch_statistics(tiny_model):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(32, schema.INPUT_WIDTH))
    assert not np.array_equal(forward(tiny_model, X, mode="train"), forward(tiny_model, X))


def test_gradient_check_small_models():
    for seed in range(3):
        model = randomized(init_model(HASH, seed=seed, dims=(12, 8, 6, 1)), seed)
        rng = np.random.default_rng(seed + 100)
        err = gradient_check(model, rng.normal(size=12), float(seed % 2), seed=seed)
        assert err < 1e-4, err


# --- container ------------------------------------------------------------


def test_save_load_roundtrip(tmp_path, tiny_model):
    p = tmp_path / "m.ssnn"
    n = save_model(tiny_model, p)
    assert p.stat().st_size == n
    back = load_model(p)
    assert back.dims == tiny_model.dims
    assert back.schema_hash == tiny_model.schema_hash
    for a, b in zip(back.weights, tiny_model.weights):
        assert np.array_equal(a, b)
    rng = np.random.default_rng(2)
    for _ in range(25):
        x = rng.normal(size=schema.INPUT_WIDTH)
        assert forward(back, x) == forward(tiny_model, x)


def test_default_container_size(tmp_path):
    # 64 header + 266,244 affine f32 + 7,680 batch-norm f32 + 16 footer
    model = init_model(HASH, seed=1)
    assert save_model(model, tmp_path / "d.ssnn") == 274_004


def test_magic_and_version_checks(tmp_path, tiny_model):
    p = tmp_path / "m.ssnn"
    save_model(tiny_model, p)
    raw = bytearray(p.read_bytes())

    bad = tmp_path / "bad.ssnn"
    bad.write_bytes(b"NOPE" + raw[4:])
    with pytest.raises(BadMagic):
        load_model(bad)

    v = bytearray(raw)
    v[4:6] = struct.pack("<H", 99)
    bad.write_bytes(v)
    with pytest.raises(VersionUnsupported):
        load_model(bad)


def test_truncated_file(tmp_path, tiny_model):
    p = tmp_path / "m.ssnn"
    save_model(tiny_model, p)
    raw = p.read_bytes()
    for cut in (3, 40, len(raw) // 2, len(raw) - 1):
        bad = tmp_path / "cut.ssnn"
        bad.write_bytes(raw[:cut])
        with pytest.raises(TruncatedFile):
            load_model(bad)


def test_trailing_garbage_rejected(tmp_path, tiny_model):
    p = tmp_path / "m.ssnn"
    save_model(tiny_model, p)
    p.write_bytes(p.read_bytes() + b"x")
    with pytest.raises(ModelFormatError):
        load_model(p)


def test_dim_mismatch(tmp_path, tiny_model):
    p = tmp_path / "m.ssnn"
    save_model(tiny_model, p)
    raw = bytearray(p.read_bytes())
    # first dim u32 sits right after the fixed header
    off = 4 + 2 + 32 + 2
    raw[off : off + 4] = struct.pack("<I", 0)
    p.write_bytes(raw)
    with pytest.raises(DimMismatch):
        load_model(p)


def test_magic_constant():
    assert MAGIC == b"SSNN"


# --- labeling ---------------------------------------------------------------


def ctx(**kw):
    base = dict(event_id="e", timestamp=1, source_ip="10.0.0.1")
    base.update(kw)
    return RequestContext(**base)


def http_vec(sqli=0.0, xss=0.0, trav=0.0):
    v = [0.0] * 12
    v[9], v[10], v[11] = sqli, xss, trav
    return v


def test_label_precedence():
    assert label_verdict(0.9, http_vec(1, 1, 1), ctx()).attack_type is AttackType.SQL_INJECTION
    assert label_verdict(0.9, http_vec(0, 1, 1), ctx()).attack_type is AttackType.XSS
    assert label_verdict(0.9, http_vec(0, 0, 1), ctx()).attack_type is AttackType.PATH_TRAVERSAL
    assert label_verdict(0.9, http_vec(), ctx(repeated_auth_failures=True)).attack_type is AttackType.BRUTE_FORCE
    assert label_verdict(0.9, http_vec(), ctx()).attack_type is AttackType.NETWORK_ANOMALY
    assert label_verdict(0.9, None, ctx()).attack_type is AttackType.NETWORK_ANOMALY


def test_label_benign_wins_over_flags():
    v = label_verdict(0.1, http_vec(1, 1, 1), ctx())
    assert not v.is_anomalous and v.attack_type is AttackType.BENIGN


def test_threshold_inclusive():
    assert label_verdict(0.5, http_vec(), ctx()).is_anomalous
    assert not label_verdict(0.499999, http_vec(), ctx()).is_anomalous


def test_classify_checks_schema_hash(tiny_model):
    with pytest.raises(SchemaMismatch):
        classify(tiny_model, None, http_vec(), ctx(), expected_schema_hash=b"\x00" * 32)
    v = classify(tiny_model, None, http_vec(), ctx(), expected_schema_hash=HASH)
    assert v.event_id == "e"
