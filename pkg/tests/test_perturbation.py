import numpy as np
import pytest

import retinacode as rc
from retinacode.errors import UndefinedCentroidError

from conftest import SMALL_W, zero_params


@pytest.fixture(scope="module")
def model_and_stimuli(trained_small, small_corpus):
    params, _ = trained_small
    stimuli = rc.render_centered(small_corpus, range(10), retina_width=SMALL_W)
    return params, stimuli


# ---------------------------------------------------------------------------
# Modulation sweeps
# ---------------------------------------------------------------------------

def test_modulate_identity_injection_bit_exact(model_and_stimuli):
    params, stimuli = model_and_stimuli
    record = rc.forward(params, stimuli[0])
    own = float(record.encoding[4])
    sweep = rc.modulate(params, stimuli[:1], neuron_id=4,
                        value_grid=[0.0, own, 1.0])
    assert np.array_equal(sweep.reconstructions[0, 1], record.reconstruction)
    assert sweep.optimal_values[0] == own


def test_modulate_grid_shape(model_and_stimuli, small_corpus):
    params, _ = model_and_stimuli
    trials = rc.sample_trial_set(small_corpus, "x", 9, rng_seed=1,
                                 retina_width=SMALL_W, pin_instance=3)
    sweep = rc.modulate(params, trials.stimuli, neuron_id=0,
                        value_grid=[0.0, 0.25, 0.5, 0.75, 1.0])
    assert sweep.reconstructions.shape == (9, 5, SMALL_W, SMALL_W)


def test_modulate_validation(model_and_stimuli):
    params, stimuli = model_and_stimuli
    with pytest.raises(ValueError):
        rc.modulate(params, stimuli[:1], neuron_id=40, value_grid=[0.5])
    with pytest.raises(ValueError):
        rc.modulate(params, stimuli[:1], neuron_id=0, value_grid=[1.5])


def test_modulate_continuity(model_and_stimuli):
    """Adjacent grid values 0.01 apart stay within the sampled Lipschitz bound."""
    params, stimuli = model_and_stimuli
    unit = 2

    # directional Lipschitz estimate along the unit's axis
    rng = np.random.default_rng(0)
    worst_slope = 0.0
    for _ in range(200):
        enc = rng.random(32)
        v = enc[unit]
        v2 = min(1.0, v + 1e-4)
        bumped = enc.copy()
        bumped[unit] = v2
        if v2 == v:
            continue
        a = rc.decode_from_encoding(params, enc).pixels
        b = rc.decode_from_encoding(params, bumped).pixels
        worst_slope = max(worst_slope, np.linalg.norm(a - b) / (v2 - v))
    lipschitz = 2.0 * worst_slope       # safety margin over the sampled max

    grid = np.round(np.arange(0.0, 1.0001, 0.01), 10)
    sweep = rc.modulate(params, stimuli[:3], neuron_id=unit, value_grid=grid)
    for i in range(3):
        for j in range(len(grid) - 1):
            dist = np.linalg.norm(sweep.reconstructions[i, j + 1]
                                  - sweep.reconstructions[i, j])
            assert dist <= lipschitz * 0.01 + 1e-12


# ---------------------------------------------------------------------------
# Lesions
# ---------------------------------------------------------------------------

def test_lesion_silent_unit_zero_damage(small_spec, small_pool):
    params = rc.init_params(small_spec, seed=1)
    unit = 6
    params.biases[small_spec.encoding_index - 1][unit] = -1000.0   # exact 0 activity
    stimuli = [rc.RetinaImage(pixels=row.reshape(SMALL_W, SMALL_W),
                              props=rc.StimulusProps(identity=0))
               for row in small_pool[:4]]
    assert rc.forward(params, stimuli[0]).encoding[unit] == 0.0
    report = rc.lesion(params, stimuli, neuron_id=unit)
    assert np.all(report.damage == 0.0)


def test_lesion_all_units_closed_path(model_and_stimuli):
    params, stimuli = model_and_stimuli
    stim = stimuli[3]
    zero_decode = rc.decode_from_encoding(params, np.zeros(32))
    expected_mse = rc.reconstruction_loss(zero_decode.pixels, stim)

    # clamping every unit to zero must equal decoding the zero vector
    record = rc.forward(params, stim)
    enc = np.zeros(32)
    full_ablation = rc.decode_from_encoding(params, enc)
    assert np.array_equal(full_ablation.pixels, zero_decode.pixels)
    baseline = rc.reconstruction_loss(record, stim)
    damage = expected_mse - baseline
    assert np.isfinite(damage)


def test_lesion_per_identity_grouping(model_and_stimuli):
    params, stimuli = model_and_stimuli
    report = rc.lesion(params, stimuli, neuron_id=1)
    assert set(report.per_identity) == set(range(10))
    assert report.baseline_mse.min() >= 0.0
    assert report.lesioned_mse.min() >= 0.0


# ---------------------------------------------------------------------------
# Centroids
# ---------------------------------------------------------------------------

def test_centroid_point_mass():
    img = np.zeros((32, 32))
    img[20, 10] = 1.0
    assert rc.centroid(img) == (10.0, 20.0)


def test_centroid_uniform():
    cx, cy = rc.centroid(np.full((17, 17), 0.3))
    assert cx == pytest.approx(8.0)
    assert cy == pytest.approx(8.0)


def test_centroid_matches_double_loop():
    rng = np.random.default_rng(1)
    img = rng.random((12, 12))
    cx, cy = rc.centroid(img)
    total = sx = sy = 0.0
    for i in range(12):
        for j in range(12):
            total += img[i, j]
            sx += img[i, j] * j
            sy += img[i, j] * i
    assert abs(cx - sx / total) < 1e-12
    assert abs(cy - sy / total) < 1e-12


def test_centroid_zero_image():
    with pytest.raises(UndefinedCentroidError):
        rc.centroid(np.zeros((8, 8)))


# ---------------------------------------------------------------------------
# Position invariance check
# ---------------------------------------------------------------------------

def test_invariance_check_runs_on_random_decoder(small_spec, small_pool):
    params = rc.init_params(small_spec, seed=9)
    stimuli = [rc.RetinaImage(pixels=row.reshape(SMALL_W, SMALL_W),
                              props=rc.StimulusProps(identity=0))
               for row in small_pool[:3]]
    check = rc.position_invariance_check(params, stimuli, neuron_id=0,
                                         value_grid=np.linspace(0, 1, 5))
    assert np.isfinite(check.max_shift)


def test_invariance_identity_grid_zero_shift(model_and_stimuli):
    params, stimuli = model_and_stimuli
    stim = stimuli[2]
    own = float(rc.forward(params, stim).encoding[11])
    check = rc.position_invariance_check(params, [stim], neuron_id=11,
                                         value_grid=[own])
    assert check.max_shift == 0.0


def test_input_translation_shift_positive(model_and_stimuli):
    params, stimuli = model_and_stimuli
    shift = rc.input_translation_shift(params, stimuli[:4], dx_fraction=0.1)
    assert shift > 0.0
    assert np.isfinite(shift)
