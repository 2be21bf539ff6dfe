import numpy as np
import pytest

from deepclust.checkpoint import FORMAT_VERSION, CheckpointError, load_checkpoint, save_checkpoint
from deepclust.nn.network import Network


def _trained_net(seed=0):
    net = Network.build("mini", 1, 6, seed=seed)
    rng = np.random.default_rng(seed)
    for _, p in net.named_parameters():
        p += rng.normal(scale=0.05, size=p.shape).astype(p.dtype)
    for path in net.momentum:
        net.momentum[path] += rng.normal(scale=0.01, size=net.momentum[path].shape).astype(np.float32)
    for _, s in net.named_state():
        s += rng.normal(scale=0.1, size=s.shape).astype(np.float32)
    return net


def test_roundtrip_bit_exact(tmp_path):
    net = _trained_net()
    prev = np.arange(17, dtype=np.int64) % 6
    path = tmp_path / "ck.dcls"
    save_checkpoint(path, net, epoch=42, prev_assignments=prev, seed=99)
    loaded, epoch, assignments, seed = load_checkpoint(path)
    assert epoch == 42 and seed == 99
    np.testing.assert_array_equal(assignments, prev)
    for (pa, a), (_, b) in zip(net.named_parameters(), loaded.named_parameters()):
        np.testing.assert_array_equal(a, b, err_msg=pa)
        assert a.dtype == b.dtype
    for (pa, a), (_, b) in zip(net.named_state(), loaded.named_state()):
        np.testing.assert_array_equal(a, b, err_msg=pa)
    for path_ in net.momentum:
        np.testing.assert_array_equal(net.momentum[path_], loaded.momentum[path_], err_msg=path_)


def test_roundtrip_without_assignments(tmp_path):
    net = _trained_net()
    path = tmp_path / "ck.dcls"
    save_checkpoint(path, net, epoch=0, prev_assignments=None, seed=1)
    _, epoch, assignments, _ = load_checkpoint(path)
    assert epoch == 0 and assignments is None


def test_corrupted_byte_fails_checksum(tmp_path):
    net = _trained_net()
    path = tmp_path / "ck.dcls"
    save_checkpoint(path, net, epoch=3, prev_assignments=None, seed=0)
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0xFF  # flip one parameter byte
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="checksum"):
        load_checkpoint(path)


def test_future_version_names_both_versions(tmp_path):
    net = _trained_net()
    path = tmp_path / "ck.dcls"
    save_checkpoint(path, net)
    raw = bytearray(path.read_bytes())
    raw[4:6] = (FORMAT_VERSION + 7).to_bytes(2, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match=rf"version {FORMAT_VERSION + 7}.*version {FORMAT_VERSION}"):
        load_checkpoint(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "ck.dcls"
    path.write_bytes(b"NOPE" + bytes(64))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_truncated_rejected(tmp_path):
    net = _trained_net()
    path = tmp_path / "ck.dcls"
    save_checkpoint(path, net)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 3])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
