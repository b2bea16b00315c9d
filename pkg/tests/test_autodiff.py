import numpy as np
import pytest

from threadcurve.autodiff import Var, concat, stack, wrap


def numeric_grad(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    flat = x.ravel()
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + h
        plus = f(x)
        flat[k] = orig - h
        minus = f(x)
        flat[k] = orig
        g.ravel()[k] = (plus - minus) / (2 * h)
    return g


def check(build, x, atol=1e-6):
    """build(Var) -> scalar Var; compares backward() to central differences."""
    v = Var(np.array(x, dtype=float))
    out = build(v)
    out.backward()
    num = numeric_grad(lambda arr: float(build(Var(arr)).data), x)
    np.testing.assert_allclose(v.grad, num, atol=atol)


def test_add_mul_broadcasting():
    check(lambda v: ((v + np.array([1.0, 2.0, 3.0])) * 2.0).sum(),
          np.array([[0.5, -1.0, 2.0], [1.5, 0.0, -0.5]]))
    check(lambda v: (v * v + 3.0 * v - 1.0).sum(), np.array([1.0, -2.0, 0.5]))


def test_sub_div_neg():
    check(lambda v: ((1.0 - v) / (v + 3.0)).sum(), np.array([0.5, -1.0, 2.0]))
    check(lambda v: (-v / 2.0).sum(), np.array([4.0, -3.0]))
    check(lambda v: (2.0 / v).sum(), np.array([1.0, 4.0, -2.0]))


def test_matmul_all_rank_combinations():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 4))
    b = rng.normal(size=4)
    c = rng.normal(size=3)
    check(lambda v: (wrap(A) @ v).sum(), b)             # 2d @ 1d (rhs grad)
    check(lambda v: (v @ wrap(b)).sum(), A)             # 2d @ 1d (lhs grad)
    check(lambda v: (wrap(c) @ v).sum(), A)             # 1d @ 2d
    d = rng.normal(size=4)
    check(lambda v: (v @ wrap(d)), b)                   # 1d @ 1d -> scalar
    B = rng.normal(size=(4, 2))
    check(lambda v: (v @ wrap(B)).sum(), A)             # 2d @ 2d


def test_elementwise_ops():
    x = np.array([-1.5, -0.1, 0.2, 2.0])
    check(lambda v: v.relu().sum(), x)
    check(lambda v: v.sigmoid().sum(), x)
    check(lambda v: v.exp().sum(), x)
    check(lambda v: v.square().sum(), x)
    check(lambda v: v.log().sum(), np.array([0.5, 1.0, 3.0]))


def test_clip_blocks_gradient_outside_range():
    v = Var(np.array([-2.0, 0.5, 3.0]))
    out = v.clip(-1.0, 1.0).sum()
    out.backward()
    np.testing.assert_allclose(v.grad, [0.0, 1.0, 0.0])
    np.testing.assert_allclose(out.data, -1.0 + 0.5 + 1.0)


def test_sum_mean_axes():
    x = np.arange(6.0).reshape(2, 3)
    check(lambda v: v.sum(axis=0).square().sum(), x)
    check(lambda v: v.mean(axis=1).square().sum(), x)
    check(lambda v: v.mean().square(), x)


def test_indexing_accumulates():
    v = Var(np.array([1.0, 2.0, 3.0]))
    out = (v[0] * 2.0 + v[0] + v[2]).sum()
    out.backward()
    np.testing.assert_allclose(v.grad, [3.0, 0.0, 1.0])


def test_concat_and_stack():
    a = Var(np.array([1.0, 2.0]))
    b = Var(np.array([3.0]))
    out = (concat([a, b]) * np.array([1.0, 2.0, 3.0])).sum()
    out.backward()
    np.testing.assert_allclose(a.grad, [1.0, 2.0])
    np.testing.assert_allclose(b.grad, [3.0])

    c = Var(np.array([1.0, 2.0]))
    d = Var(np.array([3.0, 4.0]))
    out = (stack([c, d], axis=0)[1]).sum()
    out.backward()
    np.testing.assert_allclose(c.grad, [0.0, 0.0])
    np.testing.assert_allclose(d.grad, [1.0, 1.0])


def test_transpose():
    A = np.arange(6.0).reshape(2, 3)
    check(lambda v: (v.T @ wrap(np.array([1.0, 2.0]))).sum(), A)


def test_reused_node_accumulates_gradient():
    v = Var(np.array(2.0))
    y = v * v + v.exp() * v  # v appears on several paths
    y.backward()
    expected = 2 * 2.0 + np.exp(2.0) * (1 + 2.0)
    assert v.grad == pytest.approx(expected, rel=1e-12)


def test_backward_requires_scalar():
    v = Var(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        (v * 2.0).backward()


def test_sigmoid_saturation_is_finite():
    v = Var(np.array([-1000.0, 1000.0]))
    out = v.sigmoid()
    out.sum().backward()
    assert np.all(np.isfinite(out.data))
    np.testing.assert_allclose(out.data, [0.0, 1.0], atol=1e-12)
    assert np.all(np.isfinite(v.grad))
