import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dumbbench.attacks import ATTACKS, MATH_ATTACKS, NON_MATH_ATTACKS, AdversarialSet, AttackTransformer, get_attack
from dumbbench.attacks.deepfool import deepfool
from dumbbench.attacks.gradient import bim, fgsm, fgsm_sweep, gaussian_kernel, pgd, rfgsm, smooth, tifgsm
from dumbbench.attacks.registry import ParamGrid
from dumbbench.attacks.square import margin, p_schedule, square_attack
from dumbbench.attacks.transforms import box_blur, gaussian_noise, grayscale, invert, random_black_box, salt_pepper
from dumbbench.errors import MissingPrerequisiteError

from helpers import ConstantModel, LinearModel, random_images, random_labels, random_network

EPS_ATTACKS = ("FGSM", "BIM", "PGD", "RFGSM", "TIFGSM", "Square")


@pytest.fixture(scope="module")
def cnn():
    return random_network("arch-S", 8, seed=21)


def _linear(seed=0, size=8, positive=False):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(size, size, 3))
    return LinearModel(np.abs(w) if positive else w, 0.0)


# ---- gradient family


def test_fgsm_linear_moves_along_sign():
    model = _linear(positive=True)
    X = random_images(5, 8, seed=1)
    out = fgsm(model, X, np.zeros(5, dtype=int), 0.05)
    np.testing.assert_array_equal(out, np.clip(X + np.float32(0.05), 0, 1))


def test_fgsm_flips_past_linear_certificate():
    model = _linear(seed=3)
    X = random_images(200, 8, seed=4, lo=0.4, hi=0.6)
    y = model.predict(X)
    eps = 0.35
    ratio = np.abs(model.score(X)) / np.abs(model.w).sum()
    out = fgsm(model, X, y, eps)
    # x stays inside [0.05, 0.95] so no clamping interferes
    beyond = ratio * 1.01 < eps
    assert beyond.sum() > 50
    assert np.all(model.predict(out[beyond]) != y[beyond])


def test_degenerate_iterative_attacks_equal_fgsm(cnn):
    X = random_images(6, 8, seed=5)
    y = random_labels(6, seed=5)
    ref = fgsm(cnn, X, y, 0.07)
    assert bim(cnn, X, y, 0.07, steps=1, step_size=0.07).tobytes() == ref.tobytes()
    assert pgd(cnn, X, y, 0.07, steps=1, step_size=0.07, random_start=False).tobytes() == ref.tobytes()


def test_tifgsm_without_smoothing_or_momentum_is_bim(cnn):
    X = random_images(6, 8, seed=6)
    y = random_labels(6, seed=6)
    a = tifgsm(cnn, X, y, 0.05, steps=4, step_size=0.02, kernel_size=1, momentum=0.0)
    b = bim(cnn, X, y, 0.05, steps=4, step_size=0.02)
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("attack", [fgsm, bim, pgd, rfgsm, tifgsm])
def test_zero_eps_is_identity(cnn, attack):
    X = random_images(3, 8, seed=7)
    np.testing.assert_array_equal(attack(cnn, X, [0, 1, 0], 0.0), X)


def test_random_starts_are_seeded(cnn):
    X = random_images(4, 8, seed=8)
    y = random_labels(4, seed=8)
    for attack in (pgd, rfgsm):
        a, b = attack(cnn, X, y, 0.1, seed=3), attack(cnn, X, y, 0.1, seed=3)
        assert a.tobytes() == b.tobytes()


def test_fgsm_sweep_matches_fgsm(cnn):
    X = random_images(4, 8, seed=9)
    y = random_labels(4, seed=9)
    for eps, out in fgsm_sweep(cnn, X, y, [0.0, 0.03, 0.2]):
        np.testing.assert_array_equal(out, fgsm(cnn, X, y, eps))


def test_gradient_attack_errors(cnn):
    X = random_images(2, 8)
    with pytest.raises(ValueError):
        fgsm(cnn, X, [0, 1], -0.1)
    with pytest.raises(ValueError):
        bim(cnn, X, [0, 1], 0.1, steps=0)


def test_gaussian_kernel_and_smoothing():
    k = gaussian_kernel(5, 1.5)
    assert k.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(k, k.T)
    assert k[2, 2] == k.max()
    np.testing.assert_array_equal(gaussian_kernel(1, 1.5), [[1.0]])
    with pytest.raises(ValueError):
        gaussian_kernel(4, 1.0)
    field = np.full((1, 9, 9, 2), 0.3)
    out = smooth(field, k)
    np.testing.assert_allclose(out[0, 2:-2, 2:-2], 0.3, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(EPS_ATTACKS), st.floats(0, 0.3), st.integers(0, 10_000))
def test_eps_attacks_stay_in_ball_and_range(name, eps, seed):
    model = _linear(seed=seed % 17)
    X = random_images(4, 8, seed=seed)
    y = random_labels(4, seed=seed)
    out = get_attack(name).apply(model, X, y, eps, seed=seed)
    assert out.shape == X.shape and out.dtype == X.dtype
    assert np.abs(out.astype(np.float64) - X).max() <= eps + 1e-6
    assert out.min() >= 0 and out.max() <= 1


@pytest.mark.parametrize("name", EPS_ATTACKS)
def test_subnormal_eps_is_identity(name):
    X = random_images(2, 8, seed=4)
    out = get_attack(name).apply(_linear(seed=3), X, random_labels(2, seed=4), 5e-324, seed=0)
    assert np.array_equal(out, X)


# ---- DeepFool


def test_deepfool_linear_step_is_exact():
    model = _linear(seed=11)
    X = random_images(20, 8, seed=12, lo=0.3, hi=0.7).astype(np.float64)
    x_adv, flipped = deepfool(model, X, overshoot=0.02, max_iter=1)
    assert flipped.all()
    norms = np.sqrt(((x_adv - X) ** 2).sum(axis=(1, 2, 3)))
    np.testing.assert_allclose(norms, model.distance(X) * 1.02, atol=1e-4)


def test_deepfool_zero_overshoot_lands_on_boundary():
    model = _linear(seed=13)
    X = random_images(10, 8, seed=14, lo=0.3, hi=0.7).astype(np.float64)
    x_adv, _ = deepfool(model, X, overshoot=0.0, max_iter=3)
    assert np.abs(model.score(x_adv)).max() < 1e-6
    norms = np.sqrt(((x_adv - X) ** 2).sum(axis=(1, 2, 3)))
    np.testing.assert_allclose(norms, model.distance(X), atol=1e-4)


def test_deepfool_cannot_flip_constant_model():
    X = random_images(3, 8)
    x_adv, flipped = deepfool(ConstantModel(1.0), X, overshoot=0.5, max_iter=5)
    assert not flipped.any()
    np.testing.assert_array_equal(x_adv, X)


def test_deepfool_argument_checks():
    with pytest.raises(ValueError):
        deepfool(ConstantModel(), random_images(1), overshoot=-1)
    with pytest.raises(ValueError):
        deepfool(ConstantModel(), random_images(1), max_iter=0)


def test_deepfool_flips_cnn(cnn):
    X = random_images(8, 8, seed=15)
    before = cnn.predict(X)
    x_adv, flipped = deepfool(cnn, X, overshoot=0.02)
    assert np.all(cnn.predict(x_adv[flipped]) != before[flipped])
    assert flipped.mean() >= 0.5


# ---- Square


def test_square_budget_and_monotone_margin():
    model = _linear(seed=16)
    X = random_images(12, 8, seed=17)
    y = model.predict(X)
    clean = margin(model.predict_proba(X), y)
    model.queries = 0
    res = square_attack(model.predict_proba, X, y, 0.05, query_budget=40, seed=2)
    assert np.all(res.queries <= 40)
    assert model.queries == res.queries.sum()
    assert np.all(res.margins <= clean + 1e-12)
    np.testing.assert_allclose(res.margins, margin(model.predict_proba(res.x_adv), y), atol=1e-12)
    assert np.abs(res.x_adv - X).max() <= 0.05 + 1e-6


def test_square_deterministic_and_stops_early():
    model = _linear(seed=18)
    X = random_images(6, 8, seed=19)
    y = model.predict(X)
    a = square_attack(model.predict_proba, X, y, 0.2, query_budget=200, seed=5)
    b = square_attack(model.predict_proba, X, y, 0.2, query_budget=200, seed=5)
    assert a.x_adv.tobytes() == b.x_adv.tobytes()
    done = a.margins < 0
    # a misclassified sample is not queried again
    assert np.all(a.queries[done] < 200)


def test_square_budget_one_returns_clean():
    model = _linear(seed=20)
    X = random_images(3, 8)
    res = square_attack(model.predict_proba, X, model.predict(X), 0.1, query_budget=1)
    np.testing.assert_array_equal(res.x_adv, X)
    assert res.queries.tolist() == [1, 1, 1]


def test_square_schedule():
    assert p_schedule(0.8, 0, 500) == 0.8
    assert p_schedule(0.8, 499, 500) < 0.8 / 100
    values = [p_schedule(0.8, i, 500) for i in range(500)]
    assert values == sorted(values, reverse=True)


def test_margin_sign():
    proba = np.array([[0.7, 0.3], [0.2, 0.8]])
    np.testing.assert_allclose(margin(proba, np.array([0, 0])), [0.4, -0.6])


# ---- image transforms


def test_box_blur_center_value():
    x = np.zeros((1, 3, 3, 1))
    x[0, 1, 1, 0] = 9
    assert box_blur(x, 1)[0, 1, 1, 0] == pytest.approx(1.0)


def test_box_blur_matches_loops():
    X = random_images(2, 7, seed=22)
    r = 2
    got = box_blur(X, r)
    padded = np.pad(X.astype(np.float64), ((0, 0), (r, r), (r, r), (0, 0)), mode="edge")
    ref = np.zeros(X.shape)
    for i in range(7):
        for j in range(7):
            ref[:, i, j] = padded[:, i : i + 2 * r + 1, j : j + 2 * r + 1].mean(axis=(1, 2))
    np.testing.assert_allclose(got, ref, atol=1e-6)
    np.testing.assert_array_equal(box_blur(X, 0), X)
    np.testing.assert_allclose(box_blur(np.full((1, 5, 5, 3), 0.4), 3), 0.4, atol=1e-12)


def test_gaussian_noise_statistics():
    X = np.full((4, 32, 32, 3), 0.5, dtype=np.float64)
    out = gaussian_noise(X, 0.05, seed=1)
    d = out - X
    assert abs(d.mean()) < 4 * 0.05 / np.sqrt(d.size)
    assert d.std() == pytest.approx(0.05, rel=0.05)
    np.testing.assert_array_equal(gaussian_noise(X, 0.0), X)
    np.testing.assert_array_equal(out, gaussian_noise(X, 0.05, seed=1))
    assert gaussian_noise(random_images(2), 0.5).max() <= 1


def test_grayscale_examples():
    red = np.zeros((1, 2, 2, 3))
    red[..., 0] = 1
    np.testing.assert_allclose(grayscale(red), 0.299)
    gray = np.full((1, 2, 2, 3), 0.37)
    np.testing.assert_allclose(grayscale(gray), gray, atol=1e-12)
    out = grayscale(random_images(3))
    assert np.all(out[..., 0] == out[..., 1]) and np.all(out[..., 1] == out[..., 2])


def test_invert_examples():
    X = random_images(3)
    np.testing.assert_allclose(invert(invert(X)), X, atol=1e-7)
    np.testing.assert_array_equal(invert(np.zeros((1, 2, 2, 3))), 1)
    np.testing.assert_array_equal(invert(np.full((1, 2, 2, 3), 0.5)), 0.5)


@pytest.mark.parametrize("size", [1, 4, 8])
def test_black_box_zeroes_one_square(size):
    X = np.ones((20, 16, 16, 3), dtype=np.float32)
    out = random_black_box(X, size, seed=3)
    for img in out:
        zero = np.all(img == 0, axis=-1)
        assert zero.sum() == size * size
        rows, cols = np.nonzero(zero)
        assert rows.max() - rows.min() == size - 1 and cols.max() - cols.min() == size - 1
        cy, cx = rows.mean(), cols.mean()
        assert 16 / 4 - 1 <= cy <= 3 * 16 / 4 and 16 / 4 - 1 <= cx <= 3 * 16 / 4
    np.testing.assert_array_equal(out, random_black_box(X, size, seed=3))
    np.testing.assert_array_equal(random_black_box(X, 0), X)
    with pytest.raises(ValueError):
        random_black_box(X, 17)


def test_salt_pepper_counts():
    X = np.full((5, 10, 10, 3), 0.5, dtype=np.float32)
    out = salt_pepper(X, 0.25, seed=2)
    for img in out:
        changed = np.any(img != 0.5, axis=-1)
        assert changed.sum() == 25
        white = np.all(img == 1, axis=-1).sum()
        assert white == 12 and np.all(img == 0, axis=-1).sum() == 13
    full = salt_pepper(X, 1.0)
    assert np.isin(full, [0, 1]).all()
    np.testing.assert_array_equal(salt_pepper(X, 0.0), X)
    with pytest.raises(ValueError):
        salt_pepper(X, 1.5)


# ---- registry


def test_registry_families():
    assert set(ATTACKS) == set(MATH_ATTACKS) | set(NON_MATH_ATTACKS)
    assert len(MATH_ATTACKS) == 7 and len(NON_MATH_ATTACKS) == 6
    for name, spec in ATTACKS.items():
        assert spec.is_mathematical == (name in MATH_ATTACKS)
    assert get_attack("Grayscale").grid_values() == [None]
    assert get_attack("FGSM").describe(0.1) == "FGSM, ε = 0.1"
    assert get_attack("Invert").describe(None) == "Invert"
    with pytest.raises(KeyError):
        get_attack("Nope")


def test_param_grid():
    assert ParamGrid(0.01, 0.3, 0.01).values()[:3] == [0.01, 0.02, 0.03]
    assert len(ParamGrid(0.01, 0.3, 0.01).values()) == 30
    assert ParamGrid(10, 100, 1, integer=True).values()[-1] == 100
    assert ParamGrid(0.0, 1.0, 0.3).values() == [0.0, 0.3, 0.6, 0.9]
    g = ParamGrid(2, 24, 2, integer=True)
    assert ParamGrid.from_dict(g.to_dict()) == g
    for bad in ((0.3, 0.1, 0.1), (0.1, 0.3, 0)):
        with pytest.raises(ValueError):
            ParamGrid(*bad)


def test_spec_overrides():
    spec = get_attack("BIM").with_fixed(steps=3)
    assert spec.fixed_params["steps"] == 3
    with pytest.raises(ValueError):
        spec.with_fixed(bogus=1)
    with pytest.raises(ValueError):
        spec.generate(None, random_images(1), [0])


# ---- estimator and adversarial set


def test_transformer_matches_function(cnn):
    X = random_images(4, 8, seed=23)
    y = random_labels(4, seed=23)
    t = AttackTransformer("FGSM", param=0.05, model=cnn).fit()
    np.testing.assert_array_equal(t.transform(X, y), fgsm(cnn, X, y, 0.05))
    np.testing.assert_array_equal(t.transform(X), fgsm(cnn, X, cnn.predict(X), 0.05))
    with pytest.raises(ValueError):
        AttackTransformer("PGD", param=0.1).fit()
    with pytest.raises(ValueError):
        AttackTransformer("BoxBlur", model=cnn).fit()
    np.testing.assert_array_equal(AttackTransformer("Invert").fit_transform(X), 1 - X)


def test_adversarial_set_roundtrip(tmp_path):
    X = np.round(random_images(3, 16, seed=24) * 255) / 255
    adv = box_blur(X, 1)
    s = AttackTransformer("BoxBlur", param=1, random_state=4).fit().generate(X, [0, 1, 1], {"source_model": "easy-A-arch-S-weak"})
    np.testing.assert_array_equal(s.perturbed, adv)
    assert s.max_deviation() > 0
    path = s.save(tmp_path / "set")
    manifest = json.loads(path.read_text())
    assert manifest["provenance"]["attack"] == "BoxBlur" and manifest["provenance"]["param"] == 1
    assert manifest["provenance"]["source_model"] == "easy-A-arch-S-weak"
    back = AdversarialSet.load(tmp_path / "set")
    np.testing.assert_allclose(back.originals, X, atol=1e-6)
    np.testing.assert_allclose(back.perturbed, adv, atol=0.5 / 255 + 1e-6)
    assert back.labels.tolist() == [0, 1, 1]
    assert np.all(s.ssim <= 1)
    with pytest.raises(MissingPrerequisiteError):
        AdversarialSet.load(tmp_path / "nothing")
