import numpy as np
import pytest

from histoclahe.cnn import layers as L
from histoclahe.cnn.network import (
    ModelFileError,
    Network,
    NetworkSpec,
    conv,
    count_params,
    fc,
    gradient_check,
    load_params,
    maxpool,
    propagate_shapes,
    relu,
    save_params,
    softmax_output,
    tiny_vgg,
    vgg16_descriptor,
)

# (3*3*c_in + 1) * c_out summed over the 13 convs, (n_in + 1) * n_out over the 3 FCs
VGG16_PARAMS = 138_357_544


def vgg16_by_hand():
    convs = [(3, 64), (64, 64), (64, 128), (128, 128), (128, 256), (256, 256), (256, 256),
             (256, 512), (512, 512), (512, 512), (512, 512), (512, 512), (512, 512)]
    fcs = [(7 * 7 * 512, 4096), (4096, 4096), (4096, 1000)]
    return sum((9 * a + 1) * b for a, b in convs) + sum((a + 1) * b for a, b in fcs)


def test_vgg16_flatten_and_classes():
    spec = vgg16_descriptor()
    shapes = propagate_shapes(spec)
    first_fc = next(i for i, l in enumerate(spec.layers) if l.kind == "fully_connected")
    assert shapes[first_fc] == (512, 7, 7)
    assert int(np.prod(shapes[first_fc])) == 25088
    assert shapes[-1] == (1000,)
    assert spec.num_classes == 1000


def test_vgg16_block_boundaries():
    spec = vgg16_descriptor()
    shapes = propagate_shapes(spec)
    pooled = [shapes[i + 1][1] for i, l in enumerate(spec.layers) if l.kind == "maxpool"]
    assert [shapes[0][1]] + pooled == [224, 112, 56, 28, 14, 7]
    assert sum(l.kind == "conv" for l in spec.layers) == 13
    assert all(l.kernel == 3 for l in spec.layers if l.kind == "conv")


def test_vgg16_param_count():
    assert vgg16_by_hand() == VGG16_PARAMS
    assert count_params(vgg16_descriptor()) == VGG16_PARAMS
    assert 130e6 <= VGG16_PARAMS <= 145e6


def test_tiny_vgg_shapes():
    shapes = propagate_shapes(tiny_vgg())
    assert shapes[5] == (8, 14, 14)
    assert shapes[10] == (16, 5, 5)
    assert shapes[-1] == (2,)
    assert count_params(tiny_vgg()) == sum(int(np.prod(p.shape)) for p in Network(tiny_vgg()).params)


def test_inconsistent_spec_rejected():
    with pytest.raises(ValueError):
        NetworkSpec((1, 5, 5), (conv(2), maxpool()))
    with pytest.raises(ValueError):
        NetworkSpec((1, 8, 8), (fc(4), conv(2)))
    with pytest.raises(ValueError):
        NetworkSpec((1, 8, 8), (fc(3), softmax_output(), relu()))


def test_gradient_check_tiny_vgg(rng):
    net = Network(tiny_vgg(seed=3))
    x = rng.normal(size=(1, 32, 32))
    assert gradient_check(net, (x, 1), 1e-5) < 1e-4


def test_gradient_check_small_network_batch(rng):
    spec = NetworkSpec((2, 8, 8), (conv(3), relu(), maxpool(), fc(5), relu(), fc(3), softmax_output()), seed=4)
    x = rng.normal(size=(3, 2, 8, 8))
    assert gradient_check(Network(spec), (x, np.array([0, 2, 1])), 1e-5) < 1e-4


def test_gradient_check_detects_sign_flip(rng, monkeypatch):
    net = Network(tiny_vgg(seed=3))
    x = rng.normal(size=(1, 32, 32))
    original = L.relu_backward
    monkeypatch.setattr(L, "relu_backward", lambda d, x: -original(d, x))
    assert gradient_check(net, (x, 1), 1e-5) > 1e-1


def test_gradient_check_epsilon_range():
    with pytest.raises(ValueError):
        gradient_check(Network(tiny_vgg()), (np.zeros((1, 32, 32)), 0), 1e-2)


def test_zero_network_hidden_conv_gradients_vanish():
    net = Network(tiny_vgg())
    for p in net.params:
        p[...] = 0.0
    _, grads = net.loss_and_grads(np.zeros((1, 1, 32, 32)), np.array([1]))
    for g in grads[:8]:
        assert not g.any()


def test_param_file_round_trip(tmp_path):
    net = Network(tiny_vgg(seed=9))
    save_params(tmp_path / "m.bin", net)
    data = (tmp_path / "m.bin").read_bytes()
    assert data[:8] == b"HCLPARM1" and data[8:40] == tiny_vgg().fingerprint()
    assert len(data) == 40 + 8 * count_params(tiny_vgg())
    loaded = load_params(tmp_path / "m.bin", tiny_vgg())
    assert all(np.array_equal(a, b) for a, b in zip(net.params, loaded.params))


def test_param_file_wrong_architecture(tmp_path):
    save_params(tmp_path / "m.bin", Network(tiny_vgg(seed=1)))
    with pytest.raises(ModelFileError):
        load_params(tmp_path / "m.bin", tiny_vgg(input_size=16))
    (tmp_path / "bad.bin").write_bytes(b"nonsense")
    with pytest.raises(ModelFileError):
        load_params(tmp_path / "bad.bin", tiny_vgg())
