import json
import math
import random
from dataclasses import replace

import pytest

from shufflelab.bigint_group import SecurityParams, mod_exp, rng_stream, sample_prime_in_range
from shufflelab.shuffle_proof import (
    MalformedTranscript,
    ProofMode,
    ProverState,
    ShuffleInstance,
    ShuffleProver,
    Transcript,
    aggregate_exponent,
    check_sum_product,
    commit_phase,
    default_range_rounds,
    honest_instance,
    make_setup,
    msbmt_mask_window,
    respond,
    response_modulus_bits,
    run_protocol,
    sample_state,
    verify,
)


def zero_state(N, r=None):
    z = [0] * N
    return ProverState(list(z), list(z), list(z), list(z), list(r or z), 0, 0, 0)


# -- respond arithmetic ---------------------------------------------------------


def test_respond_mp2_is_plain_integer_arithmetic(desk_K):
    out = respond(zero_state(1, [5]), [11], 0, 12, "MP2", desk_K, 101)
    assert out["d"] == [137]


def test_respond_original_reduces_modulo_power_of_two(desk_K):
    assert response_modulus_bits(desk_K, 1)["d"] == 14
    out = respond(zero_state(1, [16300]), [11], 0, 12, "ORIGINAL", desk_K, 101)
    assert out["d"] == [16432 % 16384] == [48]
    out = respond(zero_state(1, [5]), [11], 0, 12, "ORIGINAL", desk_K, 101)
    assert out["d"] == [137]


def test_response_modulus_bits_at_desk_params(desk_K):
    assert response_modulus_bits(desk_K, 4) == {
        "e_i": 8 + 4 + 12,
        "e_prime_i": 24,
        "d": 14,
        "e": 8 + 4 * 4 + 4 + 6 + 2,
        "e_prime": 8 + 6 + 2,
    }
    assert response_modulus_bits(desk_K, 1)["e"] == 8 + 4 + 4 + 6


def test_respond_other_families(desk_K):
    st = ProverState(t=[2, 3], t_prime=[5, 7], s=[1, 1], s_prime=[2, 2], r=[0, 0], s_prod=9, s_sum=4, s_batch=10)
    out = respond(st, [11, 13], 6, 8, "MP2", desk_K, 101)
    assert out["e_i"] == [8 * 2 + 1, 8 * 3 + 1]
    assert out["e_prime_i"] == [8 * 5 + 2, 8 * 7 + 2]
    assert out["e"] == 8 * (2 * 13 + 3) + 9
    assert out["e_prime"] == 8 * 12 + 4
    assert out["f_u"] == out["f_v"] == (10 - 8 * 6) % 101


def test_aggregate_exponent():
    assert aggregate_exponent([2, 3, 5], [7, 11, 13]) == 2 * 11 * 13 + 3 * 13 + 5
    assert aggregate_exponent([], []) == 0


# -- commitments ---------------------------------------------------------------------


def test_commit_phase_single_index_zero_randomness(setup):
    inst, _, _ = honest_instance(setup, 1, 0)
    tr = commit_phase(inst, [13], [13], zero_state(1), "MP2")
    g = setup.group
    assert tr.b == [mod_exp(g.g_c, 13, g.modulus)]
    assert tr.b_prime == tr.b


def test_chain_telescopes_to_product(setup):
    inst, _, _ = honest_instance(setup, 4, 0)
    rho = [11, 13, 13, 11]
    tr = commit_phase(inst, rho, rho, zero_state(4), "MP2")
    g = setup.group
    assert tr.b[-1] == mod_exp(g.g_c, math.prod(rho), g.modulus)


def test_chain_with_randomness_matches_aggregate_exponent(setup):
    inst, _, _ = honest_instance(setup, 4, 0)
    rho = [11, 13, 13, 11]
    st = sample_state(inst.K, 4, inst.elgamal.q, random.Random(1))
    tr = commit_phase(inst, rho, rho, st, "MP2")
    g = setup.group
    assert tr.b[-1] == g.commit(math.prod(rho), aggregate_exponent(st.t, rho))


def test_commit_phase_length_mismatch(setup):
    inst, _, _ = honest_instance(setup, 3, 0)
    with pytest.raises(ValueError, match="rho length mismatch"):
        commit_phase(inst, [11, 13], [11, 13, 11], zero_state(2), "MP2")


def test_recompute_commitments_from_serialized_transcript(setup):
    inst, w, _ = honest_instance(setup, 5, 4)
    run = run_protocol(inst, w, "MP2", 4)
    tr = Transcript.from_json(json.loads(json.dumps(run.transcript.to_json())))
    v = rng_stream(4, "verifier")
    primes = [sample_prime_in_range(inst.K.K3, v) for _ in range(5)]
    assert primes == run.primes
    rho = w.with_primes(primes).rho
    st = sample_state(inst.K, 5, inst.elgamal.q, rng_stream(4, "prover"))
    g = setup.group
    prev = g.g_c
    for i in range(5):
        prev = mod_exp(g.h, st.t[i], g.modulus) * mod_exp(prev, rho[i], g.modulus) % g.modulus
        assert tr.b[i] == prev
        assert tr.b_prime[i] == g.commit(rho[i], st.t_prime[i])


# -- sum/product semantics -------------------------------------------------------------


def test_check_sum_product_known_vectors():
    assert check_sum_product([2] * 10, [4, 4, 4, 4, 2, 2, 1, 1, -1, -1])
    assert check_sum_product([2, 2, 3, 3, 5, 5, 7, 7, 11, 11], [22, 22, 15, 15, -7, -7, -1, -1, -1, -1])


def test_check_sum_product_permutations_and_perturbations():
    p = [2, 3, 5, 7]
    assert check_sum_product(p, [7, 5, 3, 2])
    assert not check_sum_product(p, [3, 3, 5, 7])
    with pytest.raises(ValueError):
        check_sum_product(p, [1])


# -- end to end ---------------------------------------------------------------------


@pytest.mark.parametrize("mode", ["MP2", "MSBMT", "FIXED"])
def test_honest_runs_accept(setup, mode):
    for seed in range(20):
        inst, w, _ = honest_instance(setup, 4, seed)
        run = run_protocol(inst, w, mode, seed)
        assert run.verdict.accepted, run.verdict.failed


@pytest.mark.slow
@pytest.mark.parametrize("mode", ["MP2", "MSBMT", "FIXED"])
def test_completeness_1000_runs_at_desk_params(setup, mode):
    accepted = 0
    for seed in range(1000):
        inst, w, _ = honest_instance(setup, 4, seed)
        accepted += run_protocol(inst, w, mode, seed).verdict.accepted
    assert accepted == 1000


@pytest.mark.parametrize("mode", list(ProofMode))
def test_honest_runs_accept_with_wide_masks(wide_setup, mode):
    for seed in range(20):
        inst, w, _ = honest_instance(wide_setup, 4, seed)
        assert run_protocol(inst, w, mode, seed).verdict.accepted


def test_honest_verdict_lists_every_named_check(setup):
    inst, w, _ = honest_instance(setup, 3, 0)
    checks = run_protocol(inst, w, "FIXED", 0).verdict.checks
    assert set(checks) == {
        "CHALLENGE", "PRODUCT", "SUM", "BATCH",
        *(f"{name}_{i}" for name in ("CHAIN", "PERINDEX", "RANGEPROOF") for i in range(3)),
    }
    checks = run_protocol(inst, w, "MSBMT", 0).verdict.checks
    assert {"RANGE_0", "RANGE_1", "RANGE_2"} <= set(checks)


def test_same_seed_same_transcript(setup):
    inst, w, _ = honest_instance(setup, 4, 9)
    a = run_protocol(inst, w, "FIXED", 9)
    b = run_protocol(inst, w, "FIXED", 9)
    assert a.to_json() == b.to_json()
    assert run_protocol(inst, w, "FIXED", 10).to_json() != a.to_json()


def test_original_rejects_exactly_when_a_response_was_reduced():
    setup = make_setup(SecurityParams(K5=2), seed=1)
    saw_d_reduction = False
    for seed in range(60):
        inst, w, _ = honest_instance(setup, 4, seed)
        orig = run_protocol(inst, w, "ORIGINAL", seed)
        plain = run_protocol(inst, w, "MP2", seed)
        assert plain.verdict.accepted
        reduced = [
            name for name in ("d", "e_i", "e_prime_i", "e", "e_prime")
            if getattr(orig.transcript, name) != getattr(plain.transcript, name)
        ]
        assert orig.verdict.accepted == (not reduced)
        for i, (a, b) in enumerate(zip(orig.transcript.d, plain.transcript.d)):
            if a != b:
                saw_d_reduction = True
                assert not orig.verdict.checks[f"CHAIN_{i}"]
                assert not orig.verdict.checks[f"PERINDEX_{i}"]
    assert saw_d_reduction


def test_msbmt_mask_window_keeps_d_below_the_bound(desk_K):
    # largest honest d: 15 * 13 + (16384 - 15 * 15 - 1) = 16353 < 16384
    assert msbmt_mask_window(desk_K) == 16384 - 225
    assert 15 * 13 + msbmt_mask_window(desk_K) - 1 < desk_K.monotone_bound


def test_msbmt_rejects_exactly_on_large_d(setup):
    bound = setup.K.monotone_bound
    for seed in range(100):
        inst, w, _ = honest_instance(setup, 4, seed)
        run = run_protocol(inst, w, "MSBMT", seed)
        assert run.verdict.accepted and all(d < bound for d in run.transcript.d)
        tr = Transcript.from_json(run.transcript.to_json())
        tr.d[0] += bound
        assert not verify(inst, run.primes, tr, "MSBMT").checks["RANGE_0"]


@pytest.mark.parametrize(
    "field, check",
    [("e", "PRODUCT"), ("e_prime", "SUM"), ("f_u", "BATCH")],
)
def test_tampered_scalar_response_fails_its_check(setup, field, check):
    inst, w, _ = honest_instance(setup, 3, 2)
    run = run_protocol(inst, w, "MP2", 2)
    tr = replace(run.transcript, **{field: getattr(run.transcript, field) + 1})
    verdict = verify(inst, run.primes, tr, "MP2")
    assert not verdict.accepted and check in verdict.failed


def test_tampered_d_fails_chain_perindex_and_batch(setup):
    inst, w, _ = honest_instance(setup, 3, 2)
    run = run_protocol(inst, w, "MP2", 2)
    d = list(run.transcript.d)
    d[1] += 1
    failed = verify(inst, run.primes, replace(run.transcript, d=d), "MP2").failed
    assert {"CHAIN_1", "PERINDEX_1", "BATCH"} <= set(failed)


def test_challenge_out_of_range_is_rejected(setup):
    inst, w, _ = honest_instance(setup, 3, 2)
    run = run_protocol(inst, w, "MP2", 2)
    verdict = verify(inst, run.primes, replace(run.transcript, c=3), "MP2")
    assert not verdict.checks["CHALLENGE"]


def test_wrong_primes_are_rejected(setup):
    inst, w, _ = honest_instance(setup, 3, 2)
    run = run_protocol(inst, w, "MP2", 2)
    other = [13 if p == 11 else 11 for p in run.primes]
    assert not verify(inst, other, run.transcript, "MP2").accepted


def test_outputs_not_a_shuffle_are_rejected(setup):
    inst, w, _ = honest_instance(setup, 3, 2)
    bad = replace(inst, outputs=(inst.outputs[0], inst.outputs[0], inst.outputs[2]))
    assert not run_protocol(bad, w, "MP2", 2).verdict.accepted


def test_malformed_transcript_is_an_error_not_a_rejection(setup):
    inst, w, _ = honest_instance(setup, 3, 2)
    run = run_protocol(inst, w, "MP2", 2)
    with pytest.raises(MalformedTranscript):
        verify(inst, run.primes, replace(run.transcript, d=run.transcript.d[:2]), "MP2")
    with pytest.raises(MalformedTranscript):
        verify(inst, run.primes, replace(run.transcript, e=None), "MP2")
    with pytest.raises(MalformedTranscript):
        verify(inst, run.primes, run.transcript, "FIXED")
    with pytest.raises(MalformedTranscript):
        Transcript.from_json({"b": ["1"]})


def test_transcript_and_instance_json_round_trip(setup):
    inst, w, _ = honest_instance(setup, 3, 2)
    run = run_protocol(inst, w, "FIXED", 2)
    doc = json.loads(json.dumps(run.transcript.to_json()))
    assert all(isinstance(x, str) for x in doc["d"])
    tr = Transcript.from_json(doc)
    assert tr == run.transcript
    assert verify(inst, run.primes, tr, "FIXED").accepted
    assert ShuffleInstance.from_json(json.loads(json.dumps(inst.to_json()))) == inst


def test_fixed_mode_demands_K_equal_K3(setup):
    inst, w, _ = honest_instance(setup, 2, 0)
    inst = replace(inst, K=SecurityParams(K=5))
    w = w.with_primes([11, 13])
    with pytest.raises(ValueError, match="K = K3"):
        ShuffleProver(inst, [11, 13], w.rho, 0, "FIXED", random.Random(0))


def test_fixed_mode_demands_the_configured_rounds(setup):
    inst, w, _ = honest_instance(setup, 2, 0)
    run = run_protocol(inst, w, "FIXED", 0, range_rounds=2)
    assert verify(inst, run.primes, run.transcript, "FIXED", range_rounds=2).accepted
    assert not verify(inst, run.primes, run.transcript, "FIXED").accepted


def test_default_range_rounds():
    assert default_range_rounds(SecurityParams()) == 7
    assert default_range_rounds(SecurityParams(K4=21)) == 1


def test_instance_length_mismatch(setup):
    inst, _, _ = honest_instance(setup, 2, 0)
    with pytest.raises(ValueError):
        ShuffleInstance(inst.elgamal, inst.group, inst.K, inst.inputs, inst.outputs[:1])
