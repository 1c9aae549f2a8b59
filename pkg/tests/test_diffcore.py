import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dumbbench.diffcore import Tensor, backward, check_op_gradients, checkpoint, finite_difference_check, grad, grad_wrt_input, ops, trace
from dumbbench.errors import CheckpointError, NonScalarLossError, ShapeError

from helpers import random_images, random_network

finite = st.floats(-5, 5, allow_nan=False, width=64)


# ---- forward ops


def test_relu_values():
    assert ops.relu(np.array([-1.0, 0.0, 2.0])).data.tolist() == [0, 0, 2]


def test_softmax_symmetric_pair():
    np.testing.assert_allclose(ops.softmax(np.zeros((1, 2))).data, [[0.5, 0.5]])


@given(arrays(np.float64, (4, 3), elements=st.floats(-50, 50)))
def test_softmax_rows_sum_to_one(z):
    np.testing.assert_allclose(ops.softmax(z).data.sum(axis=1), 1.0, atol=1e-6)


def test_conv2d_all_ones():
    x = np.ones((1, 3, 3, 1))
    w = np.ones((2, 2, 1, 1))
    out = ops.conv2d(x, w, np.zeros(1)).data
    assert out.shape == (1, 2, 2, 1)
    assert np.all(out == 4)


def test_conv2d_matches_direct_loops():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 7, 6, 3))
    w = rng.normal(size=(3, 3, 3, 4))
    b = rng.normal(size=4)
    for stride, pad in ((1, 0), (2, 1), (1, 1)):
        got = ops.conv2d(x, w, b, stride=stride, padding=pad).data
        xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
        ho = (7 + 2 * pad - 3) // stride + 1
        wo = (6 + 2 * pad - 3) // stride + 1
        ref = np.zeros((2, ho, wo, 4))
        for n in range(2):
            for i in range(ho):
                for j in range(wo):
                    patch = xp[n, i * stride : i * stride + 3, j * stride : j * stride + 3, :]
                    for k in range(4):
                        ref[n, i, j, k] = np.sum(patch * w[..., k]) + b[k]
        np.testing.assert_allclose(got, ref, atol=1e-10)


def test_maxpool_values_and_first_max_tie():
    x = np.zeros((1, 2, 2, 1))
    x[0, 1, 1, 0] = 3.0
    assert ops.maxpool2d(x, 2).data.item() == 3.0
    t = Tensor(np.ones((1, 2, 2, 1)), requires_grad=True)
    (g,) = grad(ops.sum(ops.maxpool2d(t, 2)), [t])
    assert g[0, :, :, 0].tolist() == [[1, 0], [0, 0]]


def test_cross_entropy_is_scalar_mean():
    z = np.array([[0.0, 0.0], [0.0, 0.0]])
    loss = ops.cross_entropy(z, [0, 1])
    assert loss.data.shape == ()
    assert loss.data == pytest.approx(np.log(2))


@pytest.mark.parametrize(
    "call",
    [
        lambda: ops.dense(np.ones((2, 3)), np.ones((4, 2)), np.ones(2)),
        lambda: ops.conv2d(np.ones((1, 4, 4, 2)), np.ones((3, 3, 3, 1)), np.ones(1)),
        lambda: ops.conv2d(np.ones((1, 4, 4, 1)), np.ones((3, 3, 1, 1)), np.ones(1), stride=0),
        lambda: ops.maxpool2d(np.ones((1, 5, 5, 1)), 2),
        lambda: ops.add(np.ones(2), np.ones(3)),
        lambda: ops.cross_entropy(np.ones((2, 2)), [0, 1, 1]),
    ],
)
def test_shape_errors(call):
    with pytest.raises(ShapeError) as exc:
        call()
    assert exc.value.code == "shape-error"


# ---- backward


def test_sum_of_squares_gradient():
    x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    (g,) = grad(ops.sum(ops.square(x)), [x])
    assert g.tolist() == [2, -4, 6]


def test_constant_loss_gives_zero_gradient():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    c = ops.sum(Tensor(np.array([5.0])))
    (g,) = grad(c, [x])
    assert np.all(g == 0)


def test_non_scalar_loss():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(NonScalarLossError) as exc:
        backward(ops.square(x))
    assert exc.value.code == "non-scalar-loss"


def test_trace_is_topological():
    x = Tensor(np.ones((2, 3)), requires_grad=True)
    w = Tensor(np.ones((3, 2)), requires_grad=True)
    h = ops.relu(ops.dense(x, w, np.zeros(2)))
    loss = ops.cross_entropy(ops.add(h, h), [0, 1])
    order = trace(loss)
    pos = {id(n): i for i, n in enumerate(order)}
    assert len(pos) == len(order)  # acyclic: every node once
    for node in order:
        for p in node._parents:
            assert pos[id(p)] < pos[id(node)]


def test_backward_deterministic():
    model = random_network("arch-M", 8, seed=3)
    x = random_images(4, 8, seed=4)
    y = np.array([0, 1, 1, 0])
    a = model.loss_gradient(x, y)
    b = model.loss_gradient(x, y)
    assert a.tobytes() == b.tobytes()


def test_linear_cross_entropy_matches_finite_differences():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 5))
    w = rng.normal(size=(5, 2))
    b = rng.normal(size=2)
    y = np.array([0, 1, 1])
    reports = check_op_gradients(lambda x_, w_, b_: ops.cross_entropy(ops.dense(x_, w_, b_), y), [x, w, b])
    assert all(r.passed for r in reports)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_every_op_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(2, 4, 4, 2))
    w = rng.normal(size=(3, 3, 2, 3))
    b = rng.normal(size=3)
    dw = rng.normal(size=(12, 2))
    y = rng.integers(0, 2, 2)

    def f(x_, w_, b_, dw_):
        h = ops.maxpool2d(ops.relu(ops.conv2d(x_, w_, b_, stride=1, padding=1)), 2)
        z = ops.dense(ops.flatten(h), dw_, np.zeros(2))
        return ops.add(ops.cross_entropy(z, y), ops.sum(ops.mul(ops.softmax(z), ops.square(z))))

    for r in check_op_gradients(f, [x, w, b, dw]):
        assert r.passed, r


# ---- input gradients


def test_linear_squared_loss_input_gradient():
    rng = np.random.default_rng(2)
    w = rng.normal(size=6)
    x = rng.normal(size=6)
    t = 0.7
    xt = Tensor(x, requires_grad=True)
    s = ops.sum(ops.mul(xt, w))
    loss = ops.square(ops.sub(s, np.array(t)))
    (g,) = grad(loss, [xt])
    np.testing.assert_allclose(g, 2 * (w @ x - t) * w, rtol=1e-12)


class _IgnoreChannel:
    """Logits from channels 0 and 1 only."""

    def __init__(self):
        self.w = np.random.default_rng(0).normal(size=(8 * 8 * 2, 2))

    def forward(self, x):
        keep = np.zeros((1, 1, 1, 3))
        keep[..., :2] = 1
        masked = ops.mul(x, np.broadcast_to(keep, x.shape).copy())
        flat = ops.flatten(masked)
        full_w = np.zeros((8 * 8 * 3, 2))
        full_w.reshape(8, 8, 3, 2)[:, :, :2, :] = self.w.reshape(8, 8, 2, 2)
        return ops.dense(flat, full_w, np.zeros(2))


def test_dead_channel_has_zero_gradient():
    g = grad_wrt_input(_IgnoreChannel(), random_images(1, 8)[0].astype(np.float64), 1)
    assert np.all(g[..., 2] == 0)
    assert np.any(g[..., :2] != 0)


def test_grad_wrt_input_leaves_parameters_unchanged():
    model = random_network("arch-S", 8)
    before = model.parameter_hash()
    grad_wrt_input(model.network_, random_images(2, 8), [0, 1])
    assert model.parameter_hash() == before


@pytest.mark.parametrize("arch", ["arch-S", "arch-M", "arch-L"])
def test_random_cnn_finite_difference(arch):
    model = random_network(arch, 8, seed=11)
    x = random_images(1, 8, seed=12)[0]
    report = finite_difference_check(model, x, 1, step=1e-4, tolerance=1e-3)
    assert report.passed, report


class _Zero:
    def forward(self, x):
        return ops.dense(ops.flatten(x), np.zeros((8 * 8 * 3, 2)), np.zeros(2))


def test_zero_model_has_zero_deviation():
    report = finite_difference_check(_Zero(), random_images(1, 8)[0], 0)
    assert report.max_deviation == 0
    assert report.passed


class _BrokenRelu:
    """Network whose relu backward doubles the gradient: must be caught."""

    def __init__(self):
        self.inner = random_network("arch-S", 8, seed=5).astype(np.float64)

    def forward(self, x):
        orig = ops.relu

        def bad_relu(t):
            out = orig(t)
            if out._backward is not None:
                good = out._backward
                out._backward = lambda g: tuple(2 * v for v in good(g))
            return out

        ops.relu = bad_relu
        try:
            return self.inner.forward(x)
        finally:
            ops.relu = orig


def test_corrupted_backward_fails_check():
    report = finite_difference_check(_BrokenRelu(), random_images(1, 8, seed=6)[0], 1)
    assert not report.passed


def test_finite_difference_rejects_bad_step():
    with pytest.raises(ValueError):
        finite_difference_check(_Zero(), random_images(1, 8)[0], 0, step=0)


# ---- checkpoint


def test_checkpoint_roundtrip(tmp_path):
    params = {"a.weight": np.arange(6, dtype=np.float32).reshape(2, 3), "b": np.array([1.5], dtype=np.float32)}
    path = tmp_path / "m.dmb"
    checkpoint.save(path, params)
    blob = path.read_bytes()
    assert blob[:4] == b"DMB1"
    assert int.from_bytes(blob[4:8], "little") == 2
    back = checkpoint.load(path)
    assert list(back) == list(params)
    for k in params:
        assert back[k].dtype == np.float32
        np.testing.assert_array_equal(back[k], params[k])


@pytest.mark.parametrize("blob", [b"XXXX\x00\x00\x00\x00", b"DMB1\x01\x00\x00\x00\x01", b"DMB1\x00\x00\x00\x00extra"])
def test_checkpoint_rejects_corrupt(blob):
    with pytest.raises(CheckpointError):
        checkpoint.loads(blob)


def test_checkpoint_rejects_non_finite():
    with pytest.raises(CheckpointError):
        checkpoint.dumps({"w": np.array([np.nan], dtype=np.float32)})
