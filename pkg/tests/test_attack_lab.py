import itertools
import json
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from shufflelab.attack_lab import (
    ALL_TWOS,
    KNOWN_VECTORS,
    PAIRED_PRIMES,
    AttackNotApplicable,
    AttackReport,
    AttackVector,
    attempt_fixed_forgery,
    canonical_order,
    correctness_failure_experiment,
    d_distribution,
    dilemma_diagnostics,
    extend_counterexample,
    forge_transcript,
    monotone_attack_bounded,
    monotone_attack_upper,
    overflow_probability,
    permutation_forcing_check,
    search_counterexamples,
    statistical_distance,
    tamper_demo,
    theorem1_experiment,
)
from shufflelab.bigint_group import SecurityParams, primes_in_range
from shufflelab.shuffle_core import plaintext_multiset
from shufflelab.shuffle_proof import honest_instance, response_modulus_bits, verify

# -- vectors and search ---------------------------------------------------------------


def brute_force(p):
    """Every non-permutation multiset of +-divisors of prod(p) passing the check."""
    P, N, S = math.prod(p), len(p), sum(p)
    divs = [d for d in range(1, P + 1) if P % d == 0]
    vals = divs + [-d for d in divs]
    out = set()
    for rho in itertools.combinations_with_replacement(vals, N):
        if sum(rho) == S and math.prod(rho) == P and Counter(rho) != Counter(p):
            out.add(canonical_order(rho))
    return out


def test_attack_vector_invariants():
    assert not ALL_TWOS.is_permutation and not PAIRED_PRIMES.is_permutation
    assert AttackVector((2, 3), (3, 2)).is_permutation
    with pytest.raises(ValueError):
        AttackVector((2, 3), (2, 2))


def test_search_finds_the_known_vectors():
    for vec in KNOWN_VECTORS.values():
        found = {v.rho for v in search_counterexamples(vec.p, 10**6)}
        assert canonical_order(vec.rho) in found


def test_search_frozen_counts():
    # derived by the exhaustive search itself, cross-checked below against brute force at small N
    assert len(search_counterexamples(ALL_TWOS.p, 10**6)) == 14
    assert len(search_counterexamples(PAIRED_PRIMES.p, 10**6)) == 2017


def test_search_results_are_valid_and_distinct():
    found = search_counterexamples(PAIRED_PRIMES.p, 10**6)
    assert len({v.rho for v in found}) == len(found)
    for v in found:
        assert v.p == PAIRED_PRIMES.p and not v.is_permutation
        assert v.rho == canonical_order(v.rho)


def test_search_empty_case():
    assert search_counterexamples((11, 13, 11), 100) == []


@pytest.mark.parametrize(
    "p", [(2, 2, 2, 2), (2, 2, 2, 3), (2, 3, 5), (3, 3, 3, 3), (2, 2, 3, 3), (11, 13, 11), (2, 2, 2, 2, 2)]
)
def test_search_equals_brute_force_oracle(p):
    assert {v.rho for v in search_counterexamples(p, 10**6)} == brute_force(p)


def test_search_budget():
    assert len(search_counterexamples(PAIRED_PRIMES.p, 5)) == 5
    with pytest.raises(ValueError):
        search_counterexamples((2, 2), 0)


def test_extend_counterexample():
    v = extend_counterexample(ALL_TWOS, (3,))
    assert v.N == 11 and not v.is_permutation
    assert extend_counterexample(ALL_TWOS, ()) == ALL_TWOS
    extra = (13, 17, 19, 23, 29, 31, 37, 41, 43, 47)
    v = extend_counterexample(PAIRED_PRIMES, extra)
    assert v.N == 20 and sum(v.rho) == sum(v.p) and math.prod(v.rho) == math.prod(v.p)


# -- forgery ----------------------------------------------------------------------------


@pytest.mark.parametrize("name", list(KNOWN_VECTORS))
@pytest.mark.parametrize("mode", ["ORIGINAL", "MP2", "MSBMT"])
def test_forged_transcript_is_accepted_and_outputs_are_tampered(setup, name, mode):
    vec = KNOWN_VECTORS[name]
    inst, _, messages = honest_instance(setup, vec.N, 3)
    forgery = forge_transcript(inst, vec, mode, 5)
    assert forgery.verdict.accepted, forgery.verdict.failed
    out = plaintext_multiset(setup.elgamal, setup.secret_key, forgery.instance.outputs)
    assert out != Counter(messages)
    assert forgery.injected in out
    assert forgery.instance.inputs == inst.inputs
    # an independent verifier call agrees
    assert verify(forgery.instance, vec.p, forgery.transcript, mode).accepted


def test_forgery_in_original_keeps_every_response_below_its_modulus(setup):
    inst, _, _ = honest_instance(setup, 10, 3)
    for seed in range(10):
        tr = forge_transcript(inst, PAIRED_PRIMES, "ORIGINAL", seed).transcript
        bits = response_modulus_bits(inst.K, 10)
        assert all(0 <= d < 2 ** bits["d"] for d in tr.d)
        assert 0 <= tr.e < 2 ** bits["e"] and 0 <= tr.e_prime < 2 ** bits["e_prime"]


def test_forgery_refuses_fixed_mode(setup):
    inst, _, _ = honest_instance(setup, 10, 3)
    with pytest.raises(AttackNotApplicable, match="attack not applicable"):
        forge_transcript(inst, ALL_TWOS, "FIXED", 1)


@pytest.mark.parametrize("name", list(KNOWN_VECTORS))
def test_fixed_mode_rejects_forgery(setup, name):
    vec = KNOWN_VECTORS[name]
    inst, _, _ = honest_instance(setup, vec.N, 3)
    forgery = attempt_fixed_forgery(inst, vec, 5)
    assert not forgery.verdict.accepted
    bad = {i for i, x in enumerate(vec.rho) if not 0 <= x < 2 ** max(vec.p).bit_length()}
    assert {f"RANGEPROOF_{i}" for i in bad} == set(forgery.verdict.failed)


def test_fixed_forgery_on_all_twos_uses_K3_2(setup):
    inst, _, _ = honest_instance(setup, 10, 3)
    assert attempt_fixed_forgery(inst, ALL_TWOS, 1).instance.K.K3 == 2


def test_forgery_with_wrong_primes_is_rejected(setup):
    from shufflelab.attack_lab import _forge

    inst, _, _ = honest_instance(setup, 4, 0)
    vec = AttackVector((2, 2, 2, 2), (8, 2, -1, -1))
    assert _forge(inst, vec, "MSBMT", 1).verdict.accepted
    assert not _forge(inst, vec, "MSBMT", 1, primes=[2, 3, 2, 2]).verdict.accepted


def test_tamper_demo_rates(setup):
    # primes {2, 3}; 11 of the 16 prime vectors admit a counterexample
    hits = sum(bool(search_counterexamples(ps, 1)) for ps in itertools.product((2, 3), repeat=4))
    assert hits == 11
    first = tamper_demo(setup, 300, 1, primes_first=True)
    assert first.analytic_bound == 11 / 16
    assert abs(first.rate - 11 / 16) < 4 * (11 / 16 * 5 / 16 / 300) ** 0.5
    later = tamper_demo(setup, 300, 1, primes_first=False)
    assert later.analytic_bound == 1 / 16
    assert abs(later.rate - 1 / 16) < 4 * (1 / 16 * 15 / 16 / 300) ** 0.5


# -- monotone test attacks --------------------------------------------------------------


def test_monotone_upper_example(desk_K):
    assert 15 * 17 + 16000 == 16255 < 16384
    report = monotone_attack_upper(desk_K, 17, 50, 0, r=16000)
    assert report.rate == 1.0


@pytest.mark.parametrize("rho", [16, 17, 100, 1023])
def test_monotone_upper_always_wins(desk_K, rho):
    report = monotone_attack_upper(desk_K, rho, 1000, rho)
    assert report.successes == 1000
    assert report.details["r_window"] == [0, 16384 - 16 * rho - 1]


def test_monotone_upper_preconditions(desk_K):
    with pytest.raises(ValueError, match="rho too large for attack window"):
        monotone_attack_upper(desk_K, 1024)
    with pytest.raises(ValueError):
        monotone_attack_upper(desk_K, 13)
    with pytest.raises(ValueError):
        monotone_attack_upper(desk_K, 17, r=16112)


def test_monotone_bounded_window_arithmetic(desk_K):
    report = monotone_attack_bounded(desk_K, 20, 10, 0)
    assert report.details["r_window"] == [-160, 16083]
    assert (8 * 20 - 160, 8 * 20 + 16083) == (0, 16243)
    assert (15 * 20 - 160, 15 * 20 + 16083) == (140, 16383)


@pytest.mark.parametrize("rho", [16, 20, 500, 2340])
def test_monotone_bounded_always_wins(desk_K, rho):
    assert monotone_attack_bounded(desk_K, rho, 1000, rho).successes == 1000


def test_monotone_bounded_empty_window(desk_K):
    # 7 * rho <= 16383 is the window condition
    with pytest.raises(ValueError, match="rho too large"):
        monotone_attack_bounded(desk_K, 2341)
    with pytest.raises(ValueError):
        monotone_attack_bounded(desk_K, 0)


# -- width experiment ---------------------------------------------------------------------


def test_theorem1_attack_branch_at_the_bound(desk_K):
    report = theorem1_experiment(desk_K, 0, 112, 1000, 0)
    assert report.details["branch"] == "attack"
    assert report.details["r_window"] == [-128, -128]
    assert (8 * 16 - 128, 15 * 16 - 128) == (0, 112)
    assert report.rate == 1.0


def test_theorem1_attack_branch_above_the_bound(desk_K):
    assert theorem1_experiment(desk_K, 5000, 5500, 1000, 0).rate == 1.0


def test_theorem1_honest_branch_below_the_bound(desk_K):
    report = theorem1_experiment(desk_K, 0, 100, 10**5, 0)
    assert report.details["branch"] == "honest"
    assert report.analytic_bound == 101 / 16384
    assert report.rate <= report.details["three_sigma_limit"]
    mid = theorem1_experiment(desk_K, 8000, 8056, 10**5, 0)
    assert mid.rate <= mid.details["three_sigma_limit"]


def test_theorem1_full_support_honest(desk_K):
    # honest d overshoots 2**14 - 1 with probability E[c * rho] / 2**14
    report = theorem1_experiment(desk_K, 0, 16383, 20000, 0, branch="honest")
    assert report.analytic_bound == 1.0
    overshoot = (11.5 * 12) / 16384
    assert abs((1 - report.rate) - overshoot) < 4 * (overshoot / 20000) ** 0.5


def test_theorem1_bad_interval(desk_K):
    with pytest.raises(ValueError):
        theorem1_experiment(desk_K, 5, 4, 10, 0)
    with pytest.raises(ValueError):
        theorem1_experiment(desk_K, 0, 50, 10, 0, branch="attack")


# -- honest rejection in ORIGINAL -------------------------------------------------------


def overflow_by_enumeration(K, N):
    """Exact rejection probability by summing over (c, rho, t, t') explicitly."""
    bits = response_modulus_bits(K, N)
    Md, M1, Me, M2 = (2 ** bits[k] for k in ("d", "e_i", "e", "e_prime"))
    primes = primes_in_range(*K.prime_range)
    lo, hi = K.challenge_range
    tv = range(2**K.K2)
    total = Fraction(0)
    for c in range(lo, hi + 1):
        for rho in itertools.product(primes, repeat=N):
            pd = math.prod(Fraction(Md - c * x, Md) for x in rho)
            pa = Fraction(0)
            for t in itertools.product(tv, repeat=N):
                T = sum(t[i] * math.prod(rho[i + 1 :]) for i in range(N))
                pa += math.prod(Fraction(M1 - c * x, M1) for x in t) * Fraction(Me - c * T, Me)
            pb = Fraction(0)
            for t in itertools.product(tv, repeat=N):
                S = sum(t)
                pb += math.prod(Fraction(M1 - c * x, M1) for x in t) * Fraction(max(0, M2 - c * S), M2)
            size = len(tv) ** N
            total += pd * pa / size * pb / size
    count = (hi - lo + 1) * len(primes) ** N
    return 1 - total / count


@pytest.mark.parametrize(
    "K, N",
    [(SecurityParams(K2=3, K3=3, K4=3, K5=1), 2), (SecurityParams(K2=2, K3=3, K4=2, K5=1), 3)],
)
def test_overflow_probability_matches_enumeration(K, N):
    assert overflow_probability(K, N)["reject"] == pytest.approx(float(overflow_by_enumeration(K, N)), abs=1e-12)


def test_overflow_probability_frozen_desk_values():
    # frozen from the exact computation, cross-checked by enumeration above
    assert overflow_probability(SecurityParams(K5=2), 4)["reject"] == pytest.approx(0.9752268897708262, abs=1e-12)
    assert overflow_probability(SecurityParams(K5=6), 4)["reject"] == pytest.approx(0.12029648013564509, abs=1e-12)
    assert overflow_probability(SecurityParams(K5=50), 4)["reject"] < 1e-11


def test_correctness_experiment_small(setup):
    K = SecurityParams(K5=2)
    report = correctness_failure_experiment(K, 400, 3, setup=setup)
    assert report.details["mp2_rejections"] == 0
    p = report.analytic_bound
    assert abs(report.rate - p) < 4 * (p * (1 - p) / 400) ** 0.5
    assert set(report.details["reduction_frequency"]) == {"d", "e_i", "e_prime_i", "e", "e_prime"}


def test_correctness_experiment_wide_masks(setup):
    report = correctness_failure_experiment(SecurityParams(K5=50), 200, 3, setup=setup)
    assert report.successes == 0 and report.details["mp2_rejections"] == 0


# -- dilemma ---------------------------------------------------------------------------


def test_d_distribution_against_counting():
    K = SecurityParams(K2=2, K3=3, K4=3, K5=1)
    start, probs = d_distribution(K, 7)
    counts = Counter(c * 7 + r for c in range(4, 8) for r in range(2**7))
    assert start == min(counts)
    assert np.allclose(probs, [counts[start + i] / (4 * 128) for i in range(len(probs))])


def test_statistical_distance_against_counting():
    K = SecurityParams(K2=2, K3=3, K4=3, K5=1)
    a = Counter(c * 5 + r for c in range(4, 8) for r in range(128))
    b = Counter(c * 7 + r for c in range(4, 8) for r in range(128))
    exact = Fraction(sum(abs(a[d] - b[d]) for d in set(a) | set(b)), 2 * 512)
    assert statistical_distance(K, 5, 7) == pytest.approx(float(exact), abs=1e-12)
    assert statistical_distance(K, 5, 5) == 0


def test_dilemma_diagnostics():
    report = dilemma_diagnostics(SecurityParams(K5=2), 10**5, 0)
    d = report.details
    assert d["monotone_in_rho"]
    assert d["mask_chi2"] < d["mask_chi2_limit"]
    assert d["tail_mass_empirical"] < d["tail_mass_uniform"]
    assert d["tail_mass_exact"] < d["tail_mass_uniform"]
    # wider masks shrink the leak
    assert statistical_distance(SecurityParams(K5=10), 11, 13) < d["statistical_distance"]


# -- permutation forcing -------------------------------------------------------------------


@pytest.mark.parametrize("K3", [2, 3])
@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_range_bound_forces_permutation(K3, N):
    assert permutation_forcing_check(K3, N) == []


def test_permutation_forcing_positive_control():
    assert ((2, 2, 2, 2), (-1, -1, 2, 8)) in permutation_forcing_check(2, 4, bound=8)


# -- report ----------------------------------------------------------------------------


def test_attack_report_json(desk_K):
    doc = monotone_attack_upper(desk_K, 20, 10, 0).to_json()
    assert set(doc) == {"attack_name", "params", "trials", "successes", "rate", "analytic_bound", "seed", "details"}
    json.dumps(doc)
    with pytest.raises(ValueError):
        AttackReport("x", desk_K, 1, 2, 0)
