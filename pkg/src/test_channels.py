import json

import numpy as np
import pytest

from src import channels
from src.errors import ChannelError
from src.linalg_core import BipartiteShape, max_entangled, partial_trace, swap_operator


def test_identity_choi_is_max_entangled():
    j = channels.choi(channels.identity_channel(3))
    np.testing.assert_allclose(j.matrix, max_entangled(3), atol=1e-12)
    assert j.shape == BipartiteShape(3, 3)


@pytest.mark.parametrize("ch", [
    channels.identity_channel(2),
    channels.erasure_channel(3, 0.3),
    channels.werner_holevo(3),
    channels.nr_channel(0.2),
    channels.random_channel(2, 3, 2, seed=11),
])
def test_choi_marginal_is_identity(ch):
    j = channels.choi(ch)
    np.testing.assert_allclose(partial_trace(j.matrix, j.shape, "B"), np.eye(ch.dim_in), atol=1e-10)
    assert np.trace(j.matrix).real == pytest.approx(ch.dim_in)


def test_apply_matches_choi():
    ch = channels.random_channel(2, 2, 3, seed=5)
    j = channels.choi(ch)
    rho = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    via_choi = partial_trace(np.kron(rho.T, np.eye(2)) @ j.matrix, j.shape, "A")
    np.testing.assert_allclose(ch.apply(rho), via_choi, atol=1e-12)


def test_werner_holevo_action():
    d = 3
    ch = channels.werner_holevo(d)
    rho = np.diag([0.5, 0.3, 0.2]).astype(complex)
    rho[0, 1], rho[1, 0] = 0.1j, -0.1j
    np.testing.assert_allclose(ch.apply(rho), (np.eye(d) - rho.T) / (d - 1), atol=1e-10)
    j = channels.choi(ch).matrix
    np.testing.assert_allclose(j, (np.eye(d * d) - swap_operator(d)) / (d - 1), atol=1e-10)
    assert ch.is_real()


def test_erasure_channel_output():
    ch = channels.erasure_channel(2, 0.25)
    assert (ch.dim_in, ch.dim_out) == (2, 3)
    out = ch.apply(np.diag([1.0, 0.0]))
    np.testing.assert_allclose(out, np.diag([0.75, 0.0, 0.25]), atol=1e-12)
    assert len(channels.erasure_channel(2, 0.0).kraus) == 1
    assert len(channels.erasure_channel(2, 1.0).kraus) == 2


def test_nr_channel_range():
    ch = channels.nr_channel(0.5)
    assert (ch.dim_in, ch.dim_out) == (3, 2)
    with pytest.raises(ChannelError):
        channels.nr_channel(0.6)
    with pytest.raises(ChannelError):
        channels.nr_channel(-0.1)


def test_identity_channel_needs_two_levels():
    with pytest.raises(ChannelError):
        channels.identity_channel(1)


def test_non_trace_preserving_kraus_rejected():
    with pytest.raises(ChannelError) as info:
        channels.from_kraus([0.5 * np.eye(2)])
    assert info.value.residual == pytest.approx(0.75)
    with pytest.raises(ChannelError):
        channels.from_kraus([])


def test_kraus_from_choi_reproduces_choi():
    ch = channels.random_channel(3, 2, 2, seed=1)
    j = channels.choi(ch)
    again = channels.kraus_from_choi(j.matrix, j.shape)
    assert len(again.kraus) == 2
    np.testing.assert_allclose(channels.choi(again).matrix, j.matrix, atol=1e-10)


def test_tensor_channels_matches_choi_product():
    n = channels.nr_channel(0.3)
    m = channels.random_channel(2, 2, 2, seed=4)
    jn, jm = channels.choi(n), channels.choi(m)
    joint, shape = channels.choi_product(jn.matrix, jn.shape, jm.matrix, jm.shape)
    product = channels.tensor_channels(n, m)
    assert shape == product.shape
    np.testing.assert_allclose(channels.choi(product).matrix, joint, atol=1e-10)


def test_kraus_support_rank():
    assert channels.kraus_support(channels.identity_channel(3)).rank == 1
    # antisymmetric subspace of C^3 (x) C^3
    assert channels.kraus_support(channels.werner_holevo(3)).rank == 3
    ks = channels.kraus_support(channels.random_channel(2, 2, 3, seed=9))
    assert ks.rank == 3
    np.testing.assert_allclose(ks.projector @ ks.projector, ks.projector, atol=1e-10)


def test_kraus_support_ignores_unitary_remixing():
    ch = channels.random_channel(2, 2, 3, seed=9)
    u = channels.haar_isometry(3, 3, np.random.default_rng(1))
    remixed = channels.from_kraus([sum(u[i, j] * e for j, e in enumerate(ch.kraus)) for i in range(3)], "remixed")
    np.testing.assert_allclose(channels.kraus_support(remixed).projector,
                               channels.kraus_support(ch).projector, atol=1e-8)
    np.testing.assert_allclose(channels.choi(remixed).matrix, channels.choi(ch).matrix, atol=1e-10)


def test_random_channel_is_seeded():
    a = channels.random_channel(2, 2, 2, seed=21)
    b = channels.random_channel(2, 2, 2, seed=21)
    for e, f in zip(a.kraus, b.kraus):
        np.testing.assert_array_equal(e, f)
    with pytest.raises(ChannelError):
        channels.random_channel(2, 2, 5, seed=0)


def test_mixed_unitary_validation():
    x = np.array([[0, 1], [1, 0]])
    ch = channels.mixed_unitary([np.eye(2), x], [0.3, 0.7])
    np.testing.assert_allclose(ch.apply(np.diag([1.0, 0.0])), np.diag([0.3, 0.7]), atol=1e-12)
    with pytest.raises(ChannelError):
        channels.mixed_unitary([np.eye(2), x], [0.5, 0.6])
    with pytest.raises(ChannelError):
        channels.mixed_unitary([np.eye(2), 2 * x], [0.5, 0.5])


def test_channel_json_file(tmp_path):
    ch = channels.random_channel(2, 3, 2, seed=8)
    path = tmp_path / "channel.json"
    channels.save_channel(ch, path)
    loaded = channels.load_channel(path)
    assert (loaded.name, loaded.dim_in, loaded.dim_out) == (ch.name, 2, 3)
    np.testing.assert_allclose(channels.choi(loaded).matrix, channels.choi(ch).matrix, atol=1e-12)


def test_channel_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ChannelError):
        channels.load_channel(bad)
    wrong_shape = tmp_path / "shape.json"
    wrong_shape.write_text(json.dumps({"name": "x", "dim_in": 2, "dim_out": 2, "kraus": [[[[1, 0]]]]}))
    with pytest.raises(ChannelError):
        channels.load_channel(wrong_shape)
    with pytest.raises(ChannelError):
        channels.load_channel(tmp_path / "missing.json")
