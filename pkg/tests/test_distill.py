"""Pair-ancilla purification: coefficient algebra, circuits, and cost calculus."""

import math

import numpy as np
import pytest

from toffsim.core import QuantumState, fidelity, tensor
from toffsim.distill import (
    PAIR_VECTOR,
    CostParams,
    MixedAncilla,
    combine,
    combine_states,
    combined_after_rounds,
    distill_tree,
    expected_ops,
    expected_ops_recurrence,
    fidelity_after_rounds,
    measurement_majority_repeats,
    pair_supply,
    success_probability,
)
from toffsim.rng import master_rng, trial_rng


def physical_tuples(rng, count):
    """Random PSD coefficient tuples: a2 = conj(a1), a3 >= |a1|^2."""
    out = []
    for _ in range(count):
        a1 = rng.standard_normal() * 0.4 + 1j * rng.standard_normal() * 0.4
        a3 = abs(a1) ** 2 + rng.random() * 1.5
        out.append(MixedAncilla(a1, np.conj(a1), a3))
    return out


# -- the coefficient container -----------------------------------------------------

def test_ideal_is_the_pure_pair():
    ideal = MixedAncilla.ideal()
    assert (ideal.a1, ideal.a2, ideal.a3) == (0, 0, 0)
    assert ideal.weight == pytest.approx(3.0)
    assert ideal.fidelity_to_pair() == pytest.approx(1.0)
    assert ideal.is_physical()


def test_phase_angle_projector_signs():
    # |psi2> + i tan(s)|11> projects to (-i t, +i t, t^2), which is PSD
    t = math.tan(0.3)
    m = MixedAncilla.from_phase_angle(0.3)
    assert m.a1 == pytest.approx(-1j * t)
    assert m.a2 == pytest.approx(+1j * t)
    assert m.a3 == pytest.approx(t * t)
    assert m.is_physical()


def test_sign_flipped_companion_is_not_a_state():
    t = math.tan(0.3)
    companion = MixedAncilla(1j * t, 1j * t, -t * t)
    assert not companion.is_physical()


def test_excess_weight_constructor_and_fidelity():
    m = MixedAncilla.from_excess_weight(0.5)
    assert m.weight == pytest.approx(3.5)
    assert m.fidelity_to_pair() == pytest.approx(3.0 / 3.5)


def test_to_state_embeds_the_coefficients():
    m = MixedAncilla(0.2 - 0.1j, 0.2 + 0.1j, 0.3)
    s = m.to_state()
    psi = np.array([1, 1, 1, 0], dtype=complex)
    e11 = np.array([0, 0, 0, 1], dtype=complex)
    want = (np.outer(psi, psi) + m.a1 * np.outer(psi, e11)
            + m.a2 * np.outer(e11, psi) + m.a3 * np.outer(e11, e11))
    np.testing.assert_allclose(s.data, want, atol=1e-14)


def test_from_state_round_trip_reports_scale():
    m = MixedAncilla(0.1 + 0.05j, 0.1 - 0.05j, 0.4)
    scaled = QuantumState.from_density(("a", "b"), 2.5 * m.to_state().data)
    back, scale = MixedAncilla.from_state(scaled)
    assert scale == pytest.approx(2.5)
    assert complex(back.a1) == pytest.approx(complex(m.a1))
    assert complex(back.a3) == pytest.approx(complex(m.a3))


def test_from_state_rejects_states_outside_the_family():
    junk = QuantumState.from_density(("a", "b"), np.diag([1.0, 2.0, 3.0, 4.0]))
    with pytest.raises(ValueError):
        MixedAncilla.from_state(junk)


def test_pair_vector_constant():
    np.testing.assert_array_equal(PAIR_VECTOR, [1, 1, 1, 0])


# -- combining two ancillas ---------------------------------------------------------

def test_combine_is_componentwise_product():
    x = MixedAncilla(0.2j, -0.2j, 0.5)
    y = MixedAncilla(0.1, 0.1, 0.3)
    out, prob = combine(x, y)
    assert complex(out.a1) == pytest.approx(0.02j)
    assert complex(out.a2) == pytest.approx(-0.02j)
    assert complex(out.a3) == pytest.approx(0.15)
    assert prob == pytest.approx((3 + 0.5 * 0.3) / ((3 + 0.5) * (3 + 0.3)))


def test_combine_ideal_probability_is_one_third():
    _, prob = combine(MixedAncilla.ideal(), MixedAncilla.ideal())
    assert prob == pytest.approx(1.0 / 3.0)
    assert success_probability(MixedAncilla.ideal(), MixedAncilla.ideal()) == pytest.approx(1 / 3)


def test_success_probability_floor_on_equal_inputs():
    grid = np.linspace(0.0, 50.0, 501)
    probs = [success_probability(MixedAncilla.from_excess_weight(a),
                                 MixedAncilla.from_excess_weight(a)) for a in grid]
    assert min(probs) >= 0.25 - 1e-15
    # equality exactly at a3 = 1
    assert success_probability(MixedAncilla.from_excess_weight(1.0),
                               MixedAncilla.from_excess_weight(1.0)) == pytest.approx(0.25)


def test_combine_states_agrees_with_algebra():
    rng = master_rng(42)
    for x, y in zip(physical_tuples(rng, 8), physical_tuples(rng, 8)):
        want, want_prob = combine(x, y)
        state, prob = combine_states(x.to_state(("a", "b")), y.to_state(("c", "d")))
        got, _ = MixedAncilla.from_state(state)
        assert prob == pytest.approx(want_prob, abs=1e-12)
        assert complex(got.a1) == pytest.approx(complex(want.a1), abs=1e-12)
        assert complex(got.a2) == pytest.approx(complex(want.a2), abs=1e-12)
        assert complex(got.a3) == pytest.approx(complex(want.a3), abs=1e-12)


def test_combine_states_on_the_fully_corrupted_corner():
    # two |11> ancillas pass both parity checks with certainty
    x = tensor(QuantumState.basis(("a", "b"), "11"),
               QuantumState.basis(("c", "d"), "11"))
    _, prob = combine_states(QuantumState.basis(("a", "b"), "11"),
                             QuantumState.basis(("c", "d"), "11"))
    assert prob == pytest.approx(1.0)
    del x


def test_squaring_law_on_equal_inputs():
    m = MixedAncilla(0.3j, -0.3j, 0.7)
    out, _ = combine(m, m)
    assert complex(out.a1) == pytest.approx(complex(m.a1) ** 2)
    assert complex(out.a3) == pytest.approx(complex(m.a3) ** 2)


def test_combined_after_rounds_powers():
    m = MixedAncilla(0.2, 0.2, 0.6)
    three = combined_after_rounds(m, 3)
    assert complex(three.a3) == pytest.approx(0.6**8)
    step = m
    for _ in range(3):
        step, _ = combine(step, step)
    assert complex(step.a3) == pytest.approx(complex(three.a3))


@pytest.mark.parametrize("a3", [-0.9, -0.5, 0.1, 0.5, 0.9])
@pytest.mark.parametrize("rounds", [0, 1, 2, 3])
def test_fidelity_after_rounds_formula(a3, rounds):
    want = 3.0 / (3.0 + a3 ** (2**rounds))
    assert fidelity_after_rounds(a3, rounds) == pytest.approx(want, abs=1e-12)


def test_fidelity_after_rounds_rejects_complex_residue():
    with pytest.raises(ValueError):
        fidelity_after_rounds(1j, 0)


# -- sampled purification trees ------------------------------------------------------

def test_distill_tree_output_is_deterministic_in_value():
    # outcome randomness affects only the attempt ledger; all leaves are equal
    raw = MixedAncilla.from_excess_weight(0.5)
    out = distill_tree(pair_supply(raw), 2, rng=master_rng(0))
    assert complex(out.ancilla.a3) == pytest.approx(0.5**4)
    assert out.level == 2


def test_distill_tree_counter_consistency():
    raw = MixedAncilla.from_excess_weight(0.3)
    out = distill_tree(pair_supply(raw), 3, rng=master_rng(5))
    assert out.combine_attempts >= out.combine_successes >= 2**3 - 1
    assert out.leaves_used % 2 == 0
    assert out.leaves_used >= 2**3


def test_distill_tree_level_zero_is_a_plain_draw():
    raw = MixedAncilla.from_excess_weight(0.7)
    out = distill_tree(pair_supply(raw), 0)
    assert out.leaves_used == 1
    assert out.combine_attempts == 0
    assert complex(out.ancilla.a3) == pytest.approx(0.7)


def test_distill_tree_requires_rng_beyond_level_zero():
    with pytest.raises(ValueError):
        distill_tree(pair_supply(), 1)


def test_distill_tree_finite_supply_exhaustion():
    supply = [MixedAncilla.ideal() for _ in range(3)]  # a level-2 tree needs >= 4
    with pytest.raises(RuntimeError, match="exhausted"):
        distill_tree(supply, 2, rng=master_rng(1))


def test_distill_tree_attempt_budget():
    raw = MixedAncilla.from_excess_weight(0.5)
    with pytest.raises(RuntimeError, match="attempts"):
        distill_tree(pair_supply(raw), 3, rng=master_rng(2), max_attempts=3)


def test_distill_tree_mean_leaves():
    # ideal inputs: every combine succeeds w.p. 1/3, so a level-2 tree
    # consumes 36 leaves on average ((2/P)^2)
    total = 0
    for t in range(800):
        total += distill_tree(pair_supply(), 2, rng=trial_rng(31, t)).leaves_used
    assert total / 800 == pytest.approx(36.0, rel=0.1)


# -- operation-count calculus ---------------------------------------------------------

def test_expected_ops_frozen_values():
    assert expected_ops(0) == pytest.approx(1.0)
    assert expected_ops(1) == pytest.approx(8.0)
    assert expected_ops(2) == pytest.approx(50.0)
    assert expected_ops(3) == pytest.approx(302.0)


@pytest.mark.parametrize("rounds", range(9))
def test_closed_form_matches_recurrence(rounds):
    for params in (CostParams(), CostParams(0.25, 2.0), CostParams(0.4, 3.5)):
        assert expected_ops(rounds, params) == pytest.approx(
            expected_ops_recurrence(rounds, params), rel=1e-12)


def test_growth_ratio_approaches_eight_at_quarter_success():
    params = CostParams(success_probability=0.25)
    ratio = expected_ops(12, params) / expected_ops(11, params)
    assert ratio == pytest.approx(8.0, abs=1e-6)


def test_cost_params_validation():
    with pytest.raises(ValueError):
        CostParams(success_probability=0.0)
    with pytest.raises(ValueError):
        CostParams(success_probability=1.5)
    with pytest.raises(ValueError):
        CostParams(measurement_ratio=-1.0)


def test_majority_repeat_counts():
    assert measurement_majority_repeats(1e-9, 1e-3) == 3
    assert measurement_majority_repeats(1e-8, 1e-2) == 5
    assert measurement_majority_repeats(0.5, 1e-3) == 1


def test_majority_repeats_are_odd():
    for eps in (1e-3, 1e-5, 1e-7, 1e-11):
        for eps_m in (1e-2, 1e-3):
            assert measurement_majority_repeats(eps, eps_m) % 2 == 1
