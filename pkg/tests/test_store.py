import io

import numpy as np
import pytest

from snap.store import (
    ContainerParseError,
    LabeledEmbeddingSet,
    UtteranceRecord,
    ValidationError,
    read_container,
    read_text_table,
    stratified_split,
    write_container,
    write_text_table,
)

HEADER_LEN = 8 + 4 * 4  # magic + version/count/dim/flags


def make_set(n_records=6, dim=4, pooled=True, frames_per=1, seed=0):
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_records):
        t = 1 if pooled else frames_per
        # float32-valued data so container round trips are bit-exact
        frames = rng.standard_normal((t, dim)).astype(np.float32).astype(np.float64)
        records.append(UtteranceRecord(
            utt_id=f"utt{i:03d}",
            speaker_id=f"spk{i % 3}",
            label=i % 2,
            attack_id="A01" if i % 2 else "",
            frames=frames,
        ))
    return LabeledEmbeddingSet(dim=dim, pooled=pooled, records=tuple(records))


def roundtrip(eset):
    buf = io.BytesIO()
    write_container(eset, buf)
    buf.seek(0)
    return read_container(buf)


def assert_sets_equal(a, b):
    assert a.dim == b.dim and a.pooled == b.pooled and len(a) == len(b)
    for ra, rb in zip(a.records, b.records):
        assert (ra.utt_id, ra.speaker_id, ra.label, ra.attack_id) == \
               (rb.utt_id, rb.speaker_id, rb.label, rb.attack_id)
        assert ra.frames.shape == rb.frames.shape
        assert np.array_equal(ra.frames, rb.frames)  # bit-exact


def test_empty_set_header_only():
    eset = LabeledEmbeddingSet(dim=4, pooled=True, records=())
    buf = io.BytesIO()
    n = write_container(eset, buf)
    assert n == HEADER_LEN
    assert_sets_equal(read_container(io.BytesIO(buf.getvalue())), eset)


def test_roundtrip_identity_pooled_and_frames():
    for pooled, frames_per in ((True, 1), (False, 7)):
        eset = make_set(pooled=pooled, frames_per=frames_per)
        assert_sets_equal(roundtrip(eset), eset)


def test_write_is_deterministic():
    eset = make_set()
    a, b = io.BytesIO(), io.BytesIO()
    write_container(eset, a)
    write_container(eset, b)
    assert a.getvalue() == b.getvalue()


def test_duplicate_utt_id_rejected():
    rec = UtteranceRecord("same", "spk0", 0, "", np.zeros((1, 4)))
    eset = LabeledEmbeddingSet(dim=4, pooled=True, records=(rec, rec))
    with pytest.raises(ValidationError, match="same"):
        write_container(eset, io.BytesIO())


def test_nonfinite_value_rejected():
    rec = UtteranceRecord("bad", "spk0", 0, "", np.array([[1.0, np.nan]]))
    eset = LabeledEmbeddingSet(dim=2, pooled=True, records=(rec,))
    with pytest.raises(ValidationError, match="bad"):
        write_container(eset, io.BytesIO())


def test_pooled_flag_requires_single_frame():
    rec = UtteranceRecord("u0", "spk0", 0, "", np.zeros((3, 2)))
    eset = LabeledEmbeddingSet(dim=2, pooled=True, records=(rec,))
    with pytest.raises(ValidationError, match="pooled"):
        write_container(eset, io.BytesIO())


def test_bad_magic():
    with pytest.raises(ContainerParseError, match="magic"):
        read_container(b"XXXXXXXX" + b"\x00" * 16)


def test_unsupported_version():
    eset = make_set(n_records=0)
    buf = io.BytesIO()
    write_container(eset, buf)
    data = bytearray(buf.getvalue())
    data[8] = 99  # little-endian u32 version field
    with pytest.raises(ContainerParseError, match="version"):
        read_container(bytes(data))


def test_truncation_mid_record_cites_record_and_offset():
    eset = make_set(n_records=3, dim=4)
    buf = io.BytesIO()
    write_container(eset, buf)
    data = buf.getvalue()
    # compute the exact start of record 2's float payload, then cut inside it
    offset = HEADER_LEN
    for rec in eset.records[:2]:
        offset += (2 + len(rec.utt_id) + 2 + len(rec.speaker_id) + 1
                   + 2 + len(rec.attack_id) + 4 + rec.n_frames * rec.dim * 4)
    rec2 = eset.records[2]
    cut = (offset + 2 + len(rec2.utt_id) + 2 + len(rec2.speaker_id) + 1
           + 2 + len(rec2.attack_id) + 4 + 6)  # 6 bytes into the float payload
    with pytest.raises(ContainerParseError, match="record 2") as exc:
        read_container(data[:cut])
    assert exc.value.offset is not None


def test_trailing_garbage_rejected():
    eset = make_set(n_records=1)
    buf = io.BytesIO()
    write_container(eset, buf)
    with pytest.raises(ContainerParseError, match="trailing"):
        read_container(buf.getvalue() + b"\x00")


def test_text_table_roundtrip():
    eset = make_set(n_records=5, dim=3)
    buf = io.StringIO()
    write_text_table(eset, buf)
    parsed = read_text_table(buf.getvalue())
    assert_sets_equal(parsed, eset)


def test_stratified_split_8_to_2():
    # 10 records per stratum, fraction 0.8 -> exactly 8/2 per stratum
    records = []
    for label, attack in ((0, ""), (1, "A01")):
        for i in range(10):
            records.append(UtteranceRecord(
                f"u{label}{attack}{i}", f"spk{i}", label, attack, np.ones((1, 2))))
    eset = LabeledEmbeddingSet(dim=2, pooled=True, records=tuple(records))
    train, val = stratified_split(eset, 0.8, seed=7)
    for label, attack in ((0, ""), (1, "A01")):
        in_train = sum(1 for r in train.records
                       if (r.label, r.attack_id) == (label, attack))
        in_val = sum(1 for r in val.records
                     if (r.label, r.attack_id) == (label, attack))
        assert (in_train, in_val) == (8, 2)


def test_stratified_split_deterministic():
    eset = make_set(n_records=20)
    a = stratified_split(eset, 0.8, seed=3)
    b = stratified_split(eset, 0.8, seed=3)
    assert [r.utt_id for r in a[0].records] == [r.utt_id for r in b[0].records]
    assert [r.utt_id for r in a[1].records] == [r.utt_id for r in b[1].records]


def test_stratified_split_partition_oracle():
    # 100 mixed-strata records; brute-force group counts as the oracle
    rng = np.random.default_rng(11)
    records = []
    for i in range(100):
        label = int(rng.integers(2))
        attack = "" if label == 0 else f"A{rng.integers(3)}"
        records.append(UtteranceRecord(
            f"u{i:03d}", f"spk{i % 7}", label, attack,
            rng.standard_normal((1, 3))))
    eset = LabeledEmbeddingSet(dim=3, pooled=True, records=tuple(records))
    train, val = stratified_split(eset, 0.8, seed=5)

    train_ids = [r.utt_id for r in train.records]
    val_ids = [r.utt_id for r in val.records]
    all_ids = [r.utt_id for r in eset.records]
    assert sorted(train_ids + val_ids) == sorted(all_ids)
    assert not set(train_ids) & set(val_ids)

    strata = {}
    for rec in records:
        strata.setdefault((rec.label, rec.attack_id), []).append(rec.utt_id)
    for key, ids in strata.items():
        got = sum(1 for r in train.records if (r.label, r.attack_id) == key)
        assert abs(got - 0.8 * len(ids)) <= 1.0

    # stable: each split preserves input order
    pos = {uid: i for i, uid in enumerate(all_ids)}
    assert train_ids == sorted(train_ids, key=pos.get)
    assert val_ids == sorted(val_ids, key=pos.get)


def test_stratified_split_degenerate_inputs():
    eset = make_set()
    with pytest.raises(ValidationError):
        stratified_split(eset, 0.0, seed=0)
    with pytest.raises(ValidationError):
        stratified_split(eset, 1.0, seed=0)
    empty = LabeledEmbeddingSet(dim=2, pooled=True, records=())
    with pytest.raises(ValidationError):
        stratified_split(empty, 0.8, seed=0)
