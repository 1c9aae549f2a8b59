import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dumbbench.attacks import get_attack
from dumbbench.attacks.registry import NON_MATHEMATICAL, AttackOutput, AttackSpec, ParamGrid
from dumbbench.attacks.transforms import box_blur, invert
from dumbbench.errors import EmptyEvalError, EvalError
from dumbbench.synthdata import SOURCES, generate_dataset, get_task
from dumbbench.tuning import (
    STATUS_FIXED,
    STATUS_INFEASIBLE,
    STATUS_OK,
    GridEvaluation,
    TuningConfig,
    TuningResult,
    asr,
    evaluate_grid,
    select,
    tune,
    tune_per_class,
)

from helpers import random_images, random_network


@pytest.fixture(scope="module")
def task_images():
    ds = generate_dataset(get_task("easy", 32), SOURCES["A"], seed=1, per_class_count=50)
    return ds.X[::10], ds.y[::10]


class MeanModel:
    """Class 1 when the mean intensity exceeds 0.5."""

    def predict(self, X):
        return (np.asarray(X).mean(axis=(1, 2, 3)) > 0.5).astype(np.int64)


class Always:
    def __init__(self, label):
        self.label = label

    def predict(self, X):
        return np.full(len(X), self.label)


def _spec(runner, grid=ParamGrid(1, 4, 1, integer=True), name="Probe"):
    return AttackSpec(name, NON_MATHEMATICAL, "level", grid, (), runner)


def _dark(n=8, size=16, seed=0):
    return random_images(n, size, seed=seed, hi=0.4)


# ---- ASR


def test_asr_examples():
    X = np.zeros((4, 2, 2, 3))
    assert asr(Always(0), X, X, [0, 0, 1, 1]) == 0.5
    assert asr(Always(1), X, X, [1, 1, 1, 1]) == 0.0
    assert asr(Always(0), X, X, [1, 1, 1, 1]) == 1.0
    X10 = np.zeros((10, 2, 2, 3))
    assert asr(Always(0), X10, X10, [1, 1, 1] + [0] * 7) == pytest.approx(0.3)


def test_asr_errors():
    X = np.zeros((2, 2, 2, 3))
    with pytest.raises(EvalError):
        asr(Always(0), X, X[:1], [0, 0])
    with pytest.raises(EmptyEvalError):
        asr(Always(0), X[:0], X[:0], [])


# ---- selection


def test_identity_attack_picks_smallest_parameter():
    spec = _spec(lambda m, X, y, p, s: AttackOutput(np.asarray(X).copy()))
    res = tune(spec, MeanModel(), _dark(), np.zeros(8, dtype=int), TuningConfig(alpha=0.4, n_samples=8))
    assert res.status == STATUS_OK and res.gamma == 1
    assert all(t.mean_ssim == pytest.approx(1.0) and t.asr == 0 for t in res.trace)


def test_two_point_constraint(task_images):
    # level 1 blurs (similar, harmless), level 2 inverts (dissimilar, always wins)
    def runner(m, X, y, p, s):
        return AttackOutput(box_blur(X, 1) if p == 1 else invert(X))

    spec = _spec(runner, ParamGrid(1, 2, 1, integer=True))
    X = task_images[0]
    y = MeanModel().predict(X)
    res = tune(spec, MeanModel(), X, y, TuningConfig(alpha=0.4, n_samples=len(y)))
    assert [t.asr for t in res.trace] == [0.0, 1.0]
    assert res.trace[0].feasible and not res.trace[1].feasible
    assert res.gamma == 1
    assert res.label == "Probe, level = 1"


def test_infeasible_is_reported_not_relaxed():
    spec = _spec(lambda m, X, y, p, s: AttackOutput(invert(X)))
    res = tune(spec, MeanModel(), _dark(), np.zeros(8, dtype=int), TuningConfig(alpha=0.9, n_samples=8))
    assert res.status == STATUS_INFEASIBLE
    assert res.gamma is None and not res.runnable and not res.feasible
    assert res.best is None
    assert len(res.trace) == 4


def test_parameter_free_is_fixed():
    res = tune(get_attack("Invert"), MeanModel(), _dark(), np.zeros(8, dtype=int), TuningConfig(alpha=0.4, n_samples=8))
    assert res.status == STATUS_FIXED and res.gamma is None
    assert res.runnable and res.trace[0].asr == 1.0
    assert res.best is res.trace[0]
    assert res.feasible == res.trace[0].feasible


def _oracle_pick(trace, alpha):
    best = None
    for t in trace:  # ascending grid
        if t[2] >= alpha and (best is None or t[1] > best[1]):
            best = t
    return None if best is None else best[0]


@settings(max_examples=100, deadline=None)
@given(
    st.integers(1, 12),
    st.integers(1, 3),
    st.integers(1, 10),
    st.floats(0.05, 1.0),
    st.integers(0, 2**31),
)
def test_selection_is_optimal_over_trace(n_params, n_models, n_samples, alpha, seed):
    rng = np.random.default_rng(seed)
    params = list(range(1, n_params + 1))
    # coarse values make ASR ties common
    success = [rng.random((n_models, n_samples)) < rng.choice([0.0, 0.5, 1.0]) for _ in params]
    ssim = [rng.choice([0.2, 0.5, 0.9, 1.0], size=n_samples) for _ in params]
    ev = GridEvaluation(params, success, ssim, np.zeros(n_samples, dtype=int))
    res = select(_spec(None, ParamGrid(1, max(n_params, 2), 1, integer=True)), ev, alpha)
    trace = [(p, s.mean(axis=1).mean(), q.mean()) for p, s, q in zip(params, success, ssim)]
    for t, (p, a, m) in zip(res.trace, trace):
        assert t.param == p and t.asr == pytest.approx(a) and t.mean_ssim == pytest.approx(m)
    expected = _oracle_pick(trace, alpha)
    assert res.gamma == expected
    assert res.status == (STATUS_INFEASIBLE if expected is None else STATUS_OK)
    if expected is not None:
        assert res.best.mean_ssim >= alpha


def test_multi_model_asr_is_mean():
    spec = _spec(lambda m, X, y, p, s: AttackOutput(np.asarray(X).copy()), ParamGrid(1, 2, 1, integer=True))
    X = _dark()
    y = np.zeros(8, dtype=int)
    res = tune(spec, [Always(0), Always(1), Always(1), Always(1)], X, y, TuningConfig(n_samples=8))
    assert res.trace[0].asr == pytest.approx(0.75)


# ---- per class


def test_per_class_partition_and_weighted_mean():
    model = random_network("arch-S", 16, seed=2)
    X = random_images(12, 16, seed=3)
    y = np.array([0] * 5 + [1] * 7)
    cfg = TuningConfig(alpha=0.4, n_samples=12, grids={"FGSM": ParamGrid(0.02, 0.2, 0.06)})
    spec = get_attack("FGSM")
    per = tune_per_class(spec, model, X, y, cfg)
    whole = tune(spec, model, X, y, cfg)
    assert per[0].n_samples == 5 and per[1].n_samples == 7
    assert per[0].positive_class == 0 and per[1].positive_class == 1
    for k, t in enumerate(whole.trace):
        assert t.asr == pytest.approx((5 * per[0].trace[k].asr + 7 * per[1].trace[k].asr) / 12)
        assert t.mean_ssim == pytest.approx((5 * per[0].trace[k].mean_ssim + 7 * per[1].trace[k].mean_ssim) / 12)


def test_per_class_needs_both_classes():
    with pytest.raises(EvalError):
        tune_per_class(get_attack("Invert"), MeanModel(), _dark(4), np.zeros(4, dtype=int), TuningConfig(n_samples=4))


# ---- grids and serialisation


def test_ssim_falls_along_grids(task_images):
    X, y = task_images
    cfg = TuningConfig(n_samples=len(y), grids={"GaussianNoise": ParamGrid(0.01, 0.2, 0.03)})
    for name in ("BoxBlur", "GaussianNoise", "RandomBlackBox"):
        ev = evaluate_grid(get_attack(name), MeanModel(), X, y, cfg)
        means = [float(q.mean()) for q in ev.ssim]
        assert all(a >= b - 1e-12 for a, b in zip(means, means[1:])), (name, means)


def test_fgsm_tuning_respects_floor():
    model = random_network("arch-S", 16, seed=4)
    X = random_images(10, 16, seed=5)
    y = model.predict(X)
    res = tune(get_attack("FGSM"), model, X, y, TuningConfig(alpha=0.4, n_samples=10))
    assert res.status == STATUS_OK
    assert 0.01 <= res.gamma <= 0.3
    assert res.best.mean_ssim >= 0.4
    assert res.best.asr == max(t.asr for t in res.trace if t.feasible)


def test_result_roundtrip():
    res = tune(get_attack("Invert"), MeanModel(), _dark(), np.zeros(8, dtype=int), TuningConfig(n_samples=8))
    back = TuningResult.from_dict(res.to_dict())
    assert back.to_dict() == res.to_dict()


def test_config_validation():
    with pytest.raises(ValueError):
        TuningConfig(alpha=0)
    with pytest.raises(ValueError):
        TuningConfig(n_samples=1)
    assert TuningConfig().grid_values(get_attack("FGSM"))[-1] == 0.3
    assert TuningConfig().grid_values(get_attack("Grayscale")) == [None]
