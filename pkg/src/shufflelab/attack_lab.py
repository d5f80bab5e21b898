"""Attacks on the sum/product shuffle proof and the experiments around them.

* counterexample search: non-permutation ``rho`` with ``sum rho == sum p`` and
  ``prod rho == prod p``, built from signed products of sub-multisets of ``p``
  plus ``+-1`` fillers;
* transcript forgery with such a ``rho`` (accepted by ORIGINAL, MP2, MSBMT) and
  the matching attempt against FIXED (rejected);
* the two attacks on the monotone test, the window-width experiment, and the
  honest-rejection measurement for ORIGINAL with its exact analytic value.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .bigint_group import SecurityParams, primes_in_range, rng_stream, sample_prime_in_range
from .range_proofs import BitsProver, Challenger, NonBitForger, monotone_test
from .shuffle_core import Ciphertext, encode_message, encrypt, plaintext_multiset
from .shuffle_proof import (
    ProofMode,
    ProtocolRun,
    ProverState,
    ShuffleInstance,
    ShuffleProver,
    Setup,
    aggregate_exponent,
    check_sum_product,
    honest_instance,
    make_setup,
    response_modulus_bits,
    run_interaction,
    run_protocol,
)

__all__ = [
    "AttackVector",
    "AttackReport",
    "AttackNotApplicable",
    "ALL_TWOS",
    "PAIRED_PRIMES",
    "KNOWN_VECTORS",
    "search_counterexamples",
    "extend_counterexample",
    "canonical_order",
    "tamper_outputs",
    "forger_state",
    "Forgery",
    "forge_transcript",
    "attempt_fixed_forgery",
    "tamper_demo",
    "monotone_attack_upper",
    "monotone_attack_bounded",
    "theorem1_experiment",
    "overflow_probability",
    "correctness_failure_experiment",
    "dilemma_diagnostics",
    "d_distribution",
    "statistical_distance",
    "permutation_forcing_check",
]


class AttackNotApplicable(ValueError):
    pass


def canonical_order(rho) -> tuple[int, ...]:
    """Largest magnitude first, positive before negative on ties."""
    return tuple(sorted(rho, key=lambda x: (-abs(x), -x)))


@dataclass(frozen=True)
class AttackVector:
    p: tuple[int, ...]
    rho: tuple[int, ...]
    is_permutation: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(self.p))
        object.__setattr__(self, "rho", tuple(self.rho))
        if not check_sum_product(self.p, self.rho):
            raise ValueError("rho fails the sum/product check against p")
        object.__setattr__(self, "is_permutation", Counter(self.p) == Counter(self.rho))

    @property
    def N(self) -> int:
        return len(self.p)

    def to_json(self) -> dict:
        return {"p": list(self.p), "rho": list(self.rho), "is_permutation": self.is_permutation}


ALL_TWOS = AttackVector((2,) * 10, (4, 4, 4, 4, 2, 2, 1, 1, -1, -1))
PAIRED_PRIMES = AttackVector((2, 2, 3, 3, 5, 5, 7, 7, 11, 11), (22, 22, 15, 15, -7, -7, -1, -1, -1, -1))
KNOWN_VECTORS = {"all-twos": ALL_TWOS, "paired-primes": PAIRED_PRIMES}


@dataclass
class AttackReport:
    attack_name: str
    params: SecurityParams
    trials: int
    successes: int
    seed: int
    details: dict = field(default_factory=dict)
    analytic_bound: float | None = None

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    def to_json(self) -> dict:
        return {
            "attack_name": self.attack_name,
            "params": self.params.to_json(),
            "trials": self.trials,
            "successes": self.successes,
            "rate": self.rate,
            "analytic_bound": self.analytic_bound,
            "seed": self.seed,
            "details": self.details,
        }


# -- counterexample search --------------------------------------------------------


def _blocks(rem, maxb):
    """Sub-multisets containing the first remaining element, lex <= ``maxb``."""
    i0 = next(i for i, r in enumerate(rem) if r)
    ranges = [range(0)] * len(rem)
    for i, r in enumerate(rem):
        ranges[i] = range(1, r + 1) if i == i0 else range(r + 1) if i > i0 else range(1)
    for b in itertools.product(*ranges):
        if b <= maxb:
            yield b


def _multiset_partitions(counts, max_blocks):
    """Each multiset partition once, blocks in non-increasing lex order."""

    def rec(rem, maxb, room):
        if not any(rem):
            yield ()
            return
        if room == 0:
            return
        for b in _blocks(rem, maxb):
            left = tuple(r - x for r, x in zip(rem, b))
            for rest in rec(left, b, room - 1):
                yield (b,) + rest

    top = tuple(counts)
    yield from rec(top, top, max_blocks)


def _signings(values):
    """``(signed values, negative count)`` for every sign pattern, up to reordering."""
    groups = sorted(Counter(values).items(), reverse=True)

    def rec(i):
        if i == len(groups):
            yield (), 0
            return
        v, cnt = groups[i]
        for rest, neg in rec(i + 1):
            for j in range(cnt + 1):
                yield (v,) * (cnt - j) + (-v,) * j + rest, neg + j

    yield from rec(0)


def search_counterexamples(p, budget: int) -> list[AttackVector]:
    """Non-permutation sum/product solutions over the signed-product space.

    Entries are ``+-1`` or ``+-`` the product of a sub-multiset of ``p``; the
    product-bearing entries partition ``p``.  The search is exhaustive over
    that space and stops after ``budget`` distinct vectors (as multisets, each
    returned in :func:`canonical_order`).
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    p = tuple(p)
    N = len(p)
    primes = sorted(set(p))
    counts = [p.count(q) for q in primes]
    target = sum(p)
    seen, out = set(), []
    for blocks in _multiset_partitions(counts, N):
        values = [math.prod(q**e for q, e in zip(primes, b)) for b in blocks]
        spare = N - len(values)
        for signed, neg in _signings(values):
            diff = target - sum(signed)  # = (#(+1)) - (#(-1))
            if abs(diff) > spare or (spare - diff) % 2:
                continue
            minus = (spare - diff) // 2
            if (neg + minus) % 2:
                continue
            rho = canonical_order(signed + (1,) * (spare - minus) + (-1,) * minus)
            if rho in seen or Counter(rho) == Counter(p):
                continue
            seen.add(rho)
            out.append(AttackVector(p, rho))
            if len(out) >= budget:
                return out
    return out


def extend_counterexample(vec: AttackVector, p_extra) -> AttackVector:
    """Pad both sides with the same primes; the identity covers the extension."""
    extra = tuple(p_extra)
    return AttackVector(vec.p + extra, vec.rho + extra)


# -- transcript forgery -----------------------------------------------------------


def tamper_outputs(instance: ShuffleInstance, p, rho, rng: random.Random, injected: int | None = None):
    """Output batch whose ``rho``-weighted product matches the ``p``-weighted input product.

    Output 0 carries a fresh encryption of ``injected``, the middle outputs
    are re-randomised copies of the inputs, and the last output absorbs the
    correction through a ``rho_k``-th root taken in the exponent (mod q).
    Returns ``(outputs, batch_exponent, injected)``.
    """
    eg = instance.elgamal
    P, q = eg.p_mod, eg.q
    N = instance.N
    k = N - 1
    if N < 2 or rho[k] % q == 0:
        raise AttackNotApplicable("attack not applicable: cannot absorb the correction")
    if injected is None:
        injected = encode_message(eg, rng.randint(1, q))
    outputs = [encrypt(eg, injected, rng.randrange(q))]
    for i in range(1, k):
        outputs.append(instance.inputs[i].mul(encrypt(eg, 1, rng.randrange(q)), P))
    X = Ciphertext(1, 1)
    for c, e in zip(instance.inputs, p):
        X = X.mul(c.pow(e, P), P)
    Y = Ciphertext(1, 1)
    for c, e in zip(outputs, rho):
        Y = Y.mul(c.pow(e, P), P)
    a = rng.randrange(q)
    root = pow(rho[k], -1, q)
    outputs.append(X.mul(Y.pow(-1, P), P).pow(root, P).mul(encrypt(eg, 1, a), P))
    return outputs, rho[k] * a % q, injected


def _window(x: int, bits: int, K: SecurityParams) -> tuple[int, int]:
    """Masks ``s`` with ``c*x + s`` in ``[0, 2**bits)`` for every challenge ``c``."""
    lo_c, hi_c = K.challenge_range
    ext = (lo_c * x, hi_c * x)
    return -min(ext), (1 << bits) - 1 - max(ext)


def _draw(rng, x, bits, K):
    lo, hi = _window(x, bits, K)
    if lo > hi:
        raise AttackNotApplicable("rho too large for attack window")
    return rng.randint(lo, hi)


def forger_state(K: SecurityParams, rho, q: int, rng: random.Random) -> ProverState:
    """Prover randomness chosen so no response leaves its honest range.

    That keeps every ORIGINAL reduction a no-op and every MSBMT bound
    satisfied, whatever the challenge.  ``t'`` falls back to zero when the
    sum response has no room for it.
    """
    N = len(rho)
    bits = response_modulus_bits(K, N)
    t = [rng.getrandbits(K.K2) for _ in range(N)]
    t_prime = [rng.getrandbits(K.K2) for _ in range(N)]
    if _window(sum(t_prime), bits["e_prime"], K)[0] > _window(sum(t_prime), bits["e_prime"], K)[1]:
        t_prime = [0] * N
    return ProverState(
        t=t,
        t_prime=t_prime,
        s=[_draw(rng, x, bits["e_i"], K) for x in t],
        s_prime=[_draw(rng, x, bits["e_prime_i"], K) for x in t_prime],
        r=[_draw(rng, x, bits["d"], K) for x in rho],
        s_prod=_draw(rng, aggregate_exponent(t, rho), bits["e"], K),
        s_sum=_draw(rng, sum(t_prime), bits["e_prime"], K),
        s_batch=rng.randrange(q),
    )


@dataclass
class Forgery:
    """A tampered output batch together with the run that tried to justify it."""

    instance: ShuffleInstance
    vector: AttackVector
    mode: ProofMode
    run: ProtocolRun
    injected: int

    @property
    def transcript(self):
        return self.run.transcript

    @property
    def verdict(self):
        return self.run.verdict

    def to_json(self) -> dict:
        return {
            "vector": self.vector.to_json(),
            "mode": self.mode.value,
            "instance": self.instance.to_json(),
            "injected": str(self.injected),
            **self.run.to_json(),
        }


def _forge(instance, vec, mode, seed, primes=None, range_prover=None, range_rounds=None) -> Forgery:
    rng = rng_stream(seed, "forger")
    outputs, R, injected = tamper_outputs(instance, vec.p, vec.rho, rng)
    forged = replace(instance, outputs=tuple(outputs))
    state = forger_state(forged.K, vec.rho, forged.elgamal.q, rng)
    primes = list(vec.p) if primes is None else list(primes)
    prover = ShuffleProver(
        forged, primes, vec.rho, R, mode, rng, range_prover=range_prover, range_rounds=range_rounds, state=state
    )
    run = run_interaction(forged, primes, prover, rng_stream(seed, "verifier"), range_rounds)
    return Forgery(forged, vec, ProofMode(mode), run, injected)


def forge_transcript(instance: ShuffleInstance, vec: AttackVector, mode, seed: int) -> Forgery:
    """Tamper with the outputs of ``instance`` and prove the tampered shuffle with ``rho``.

    The verifier's primes are taken to be ``vec.p``.  FIXED mode raises
    :class:`AttackNotApplicable`; use :func:`attempt_fixed_forgery`.
    """
    mode = ProofMode(mode)
    if mode is ProofMode.FIXED:
        raise AttackNotApplicable("attack not applicable: the range proof rejects out-of-range rho")
    if len(vec.p) != instance.N:
        raise ValueError("vector length does not match the instance")
    return _forge(instance, vec, mode, seed)


def _fixed_range_prover(group, K, x, r, bits, rng):
    if 0 <= x < (1 << bits):
        return BitsProver(group, K, x, r, bits, rng)
    return NonBitForger(group, K, x, r, bits, rng)


def attempt_fixed_forgery(instance: ShuffleInstance, vec: AttackVector, seed: int, range_rounds=None) -> Forgery:
    """Best effort against FIXED: simulated bit proofs for every out-of-range entry.

    ``K3`` (and ``K``) are set to the smallest value whose prime range
    contains every ``p_i``.
    """
    K3 = max(vec.p).bit_length()
    inst = replace(instance, K=instance.K.replace(K3=K3, K=K3))
    return _forge(inst, vec, ProofMode.FIXED, seed, range_prover=_fixed_range_prover, range_rounds=range_rounds)


def _sample_primes(K3, N, rng):
    return [sample_prime_in_range(K3, rng) for _ in range(N)]


def tamper_demo(
    setup: Setup,
    trials: int,
    seed: int,
    primes_first: bool = True,
    mode=ProofMode.MSBMT,
    N: int = 4,
    guess: AttackVector | None = None,
) -> AttackReport:
    """End to end: honest inputs, tampered outputs, accepted proof.

    The harness plays both message sender and shuffler with ``K3 = 2``, so
    primes repeat.  With ``primes_first`` the shuffler sees the primes before
    publishing outputs and searches for a usable ``rho``; otherwise it commits
    to outputs built for the guessed ``guess.p`` and wins only if the primes
    match.  Success means the verifier accepted and the decrypted output
    multiset differs from the input one.
    """
    K = setup.K.replace(K3=2, K=2)
    setup = replace(setup, K=K)
    if guess is None and not primes_first:
        found = search_counterexamples((2,) * N, 1)
        if not found:
            raise AttackNotApplicable(f"no counterexample for N = {N} to guess")
        guess = found[0]
    prime_set = primes_in_range(*K.prime_range)
    successes, wins = 0, []
    for trial in range(trials):
        trng = rng_stream(seed, f"tamper-{trial}")
        inst, _, messages = honest_instance(setup, N, trng.getrandbits(64))
        tseed = trng.getrandbits(64)
        if primes_first:
            primes = _sample_primes(K.K3, N, trng)
            usable = search_counterexamples(primes, 1)
            if not usable:
                continue
            forgery = _forge(inst, usable[0], mode, tseed)
        else:
            forgery = _forge(inst, guess, mode, tseed, primes=_sample_primes(K.K3, N, trng))
        out = plaintext_multiset(setup.elgamal, setup.secret_key, forgery.instance.outputs)
        tampered = out != Counter(messages)
        if forgery.verdict.accepted and tampered:
            successes += 1
            if len(wins) < 3:
                wins.append({"trial": trial, "primes": forgery.run.primes, "rho": list(forgery.vector.rho)})
    if primes_first:
        hit = sum(bool(search_counterexamples(ps, 1)) for ps in itertools.product(prime_set, repeat=N))
        bound = hit / len(prime_set) ** N
    else:
        bound = math.prod(Fraction(1, len(prime_set)) if x in prime_set else 0 for x in guess.p)
    details = {"primes_first": primes_first, "mode": ProofMode(mode).value, "N": N, "examples": wins}
    if not primes_first:
        details["guess"] = guess.to_json()
    return AttackReport("tamper-demo", K, trials, successes, seed, details, float(bound))


# -- monotone test ------------------------------------------------------------------


def monotone_attack_upper(K: SecurityParams, rho: int, trials: int = 1000, seed: int = 0, r: int | None = None) -> AttackReport:
    """``r`` below ``2**(K3+K4+K5) - rho * 2**K4`` keeps ``d`` under the bound for every ``c``."""
    if rho <= (1 << K.K3) - 1:
        raise ValueError("rho is within the honest range; nothing to attack")
    window = K.monotone_bound - rho * (1 << K.K4)
    if window <= 0:
        raise ValueError("rho too large for attack window")
    if r is not None and not 0 <= r < window:
        raise ValueError("r outside the attack window")
    rng = rng_stream(seed, "monotone-upper")
    challenger = Challenger(K, rng)
    successes = 0
    for _ in range(trials):
        rr = r if r is not None else rng.randrange(window)
        _, ok = monotone_test(rho, rr, challenger.challenge(), K)
        successes += ok
    return AttackReport("monotone-upper", K, trials, successes, seed, {"rho": rho, "r_window": [0, window - 1]}, 1.0)


def monotone_attack_bounded(K: SecurityParams, rho: int, trials: int = 1000, seed: int = 0) -> AttackReport:
    """Signed ``r`` keeping ``d`` inside ``[0, 2**(K3+K4+K5) - 1]`` for every ``c``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    lo, hi = _window(rho, K.K3 + K.K4 + K.K5, K)
    if lo > hi:
        raise ValueError("rho too large for attack window")
    rng = rng_stream(seed, "monotone-bounded")
    challenger = Challenger(K, rng)
    successes = 0
    for _ in range(trials):
        d = challenger.challenge() * rho + rng.randint(lo, hi)
        successes += 0 <= d < K.monotone_bound
    details = {"rho": rho, "r_window": [lo, hi], "rho_in_honest_range": rho <= (1 << K.K3) - 1}
    return AttackReport("monotone-bounded", K, trials, successes, seed, details, 1.0)


def theorem1_width(K: SecurityParams) -> int:
    """Smallest interval width for which an out-of-range ``rho`` always lands inside."""
    return (1 << K.K3) * ((1 << K.K4) - 1 - (1 << (K.K4 - 1)))


def theorem1_experiment(
    K: SecurityParams, A: int, B: int, trials: int, seed: int, branch: str | None = None
) -> AttackReport:
    """Acceptance interval ``[A, B]`` for ``d``: wide enough means forgeable.

    ``branch`` is chosen from the width unless given: ``"attack"`` runs
    ``rho = 2**K3`` with ``r`` from the forced window, ``"honest"`` measures
    how often an honest ``d`` lands in ``[A, B]``.
    """
    if A > B:
        raise ValueError("A must not exceed B")
    width = theorem1_width(K)
    branch = branch or ("attack" if B - A >= width else "honest")
    rng = rng_stream(seed, f"theorem1-{branch}")
    challenger = Challenger(K, rng)
    M = K.monotone_bound
    successes = 0
    details = {"A": A, "B": B, "width": B - A, "width_bound": width, "branch": branch}
    if branch == "attack":
        rho = 1 << K.K3
        lo, hi = A - (1 << (K.K4 - 1)) * rho, B - ((1 << K.K4) - 1) * rho
        if lo > hi:
            raise ValueError("interval narrower than the attack needs")
        for _ in range(trials):
            d = challenger.challenge() * rho + rng.randint(lo, hi)
            successes += A <= d <= B
        details.update(rho=rho, r_window=[lo, hi])
        bound = 1.0
    elif branch == "honest":
        for _ in range(trials):
            d = challenger.challenge() * sample_prime_in_range(K.K3, rng) + rng.randrange(M)
            successes += A <= d <= B
        bound = min(1.0, (B - A + 1) / M)
        details["three_sigma_limit"] = bound + 3 * math.sqrt(bound * (1 - bound) / trials)
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return AttackReport("theorem1", K, trials, successes, seed, details, bound)


# -- honest rejections in ORIGINAL mode --------------------------------------------


def _weighted_sum_dist(weights, N):
    out = np.ones(1)
    for _ in range(N):
        out = np.convolve(out, weights)
    return out


def overflow_probability(K: SecurityParams, N: int) -> dict:
    """Exact probability that an honest ORIGINAL run reduces some response.

    Any reduction flips a verification equation (the group orders are odd),
    so this is the honest rejection probability.  The challenge is uniform,
    the ``rho`` vector is i.i.d. uniform over the prime range, and the masks
    are uniform over their ranges.  Conditioned on ``(c, rho)`` the ``d``,
    ``(e_i, e)`` and ``(e'_i, e')`` families are independent; ``e`` couples to
    ``e_i`` through ``T`` and is handled in closed form, ``e'`` through the
    sum of the ``t'_i`` by convolution.  Also returns per-family marginals.
    """
    bits = response_modulus_bits(K, N)
    Md, M1, Me, M2 = (1 << bits[k] for k in ("d", "e_i", "e", "e_prime"))
    primes = primes_in_range(*K.prime_range)
    if len(primes) ** N > 200_000:
        raise ValueError("too many rho vectors for exact enumeration")
    T_range = 1 << K.K2
    t = np.arange(T_range, dtype=float)
    lo, hi = K.challenge_range
    vectors = list(itertools.product(primes, repeat=N))
    tails = [sum(math.prod(v[j + 1 :]) for j in range(N)) for v in vectors]
    fam = {k: Fraction(0) for k in ("d", "e_i", "e_prime_i", "e")}
    fam_sum = 0.0
    acc_float = 0.0
    mean_t = Fraction(T_range - 1, 2)
    for c in range(lo, hi + 1):
        if c * (T_range - 1) > M1 or c * max(primes) > Md:
            raise ValueError("masks too small for the closed form")
        m0 = Fraction(sum(M1 - c * x for x in range(T_range)), T_range * M1)
        m1 = Fraction(sum(x * (M1 - c * x) for x in range(T_range)), T_range * M1)
        w = (1.0 - c * t / M1) / T_range
        S = np.arange(N * (T_range - 1) + 1, dtype=float)
        clip = np.maximum(0.0, 1.0 - c * S / M2)
        B = float(np.dot(_weighted_sum_dist(w, N), clip))
        fam_sum += float(np.dot(_weighted_sum_dist(np.full(T_range, 1.0 / T_range), N), clip))
        fam["e_i"] += m0**N
        fam["e_prime_i"] += m0**N
        for v, tail in zip(vectors, tails):
            dfac = math.prod(Fraction(Md - c * x, Md) for x in v)
            A = m0**N - Fraction(c, Me) * m1 * m0 ** (N - 1) * tail
            acc_float += float(dfac * A) * B
            fam["d"] += dfac
            fam["e"] += 1 - Fraction(c, Me) * mean_t * tail
    n_c, n_v = hi - lo + 1, len(vectors)
    marg = {
        "d": 1 - float(fam["d"] / (n_c * n_v)),
        "e_i": 1 - float(fam["e_i"] / n_c),
        "e_prime_i": 1 - float(fam["e_prime_i"] / n_c),
        "e": 1 - float(fam["e"] / (n_c * n_v)),
        "e_prime": 1 - fam_sum / n_c,
    }
    tot = 1 - acc_float / (n_c * n_v)
    return {"reject": tot, "families": marg}


_FAMILIES = ("d", "e_i", "e_prime_i", "e", "e_prime")


def correctness_failure_experiment(K: SecurityParams, runs: int, seed: int, N: int = 4, setup: Setup | None = None) -> AttackReport:
    """Honest ORIGINAL runs against MP2 runs with identical coins.

    A family counts as reduced in a run when any of its ORIGINAL responses
    differs from the MP2 one.  ``successes`` counts ORIGINAL rejections.
    """
    setup = replace(setup or make_setup(K, seed), K=K)
    rejected = mp2_rejected = 0
    reduced = Counter()
    failed = Counter()
    for i in range(runs):
        rs = rng_stream(seed, f"run-{i}").getrandbits(64)
        inst, w, _ = honest_instance(setup, N, rs)
        orig = run_protocol(inst, w, ProofMode.ORIGINAL, rs)
        ctrl = run_protocol(inst, w, ProofMode.MP2, rs)
        rejected += not orig.verdict.accepted
        mp2_rejected += not ctrl.verdict.accepted
        failed.update(orig.verdict.failed)
        for name in _FAMILIES:
            if getattr(orig.transcript, name) != getattr(ctrl.transcript, name):
                reduced[name] += 1
    analytic = overflow_probability(K, N)
    details = {
        "N": N,
        "rejection_rate": rejected / runs,
        "mp2_rejections": mp2_rejected,
        "reduction_frequency": {k: reduced[k] / runs for k in _FAMILIES},
        "analytic_reduction": analytic["families"],
        "failed_checks": dict(sorted(failed.items())),
    }
    return AttackReport("correctness", K, runs, rejected, seed, details, analytic["reject"])


# -- the correctness / zero-knowledge tension -----------------------------------------


def d_distribution(K: SecurityParams, rho: int) -> tuple[int, np.ndarray]:
    """Exact law of ``d = c*rho + r`` (honest ``r``): ``(offset, probabilities)``."""
    lo, hi = K.challenge_range
    M = K.monotone_bound
    start, stop = min(lo * rho, hi * rho), max(lo * rho, hi * rho) + M
    probs = np.zeros(stop - start)
    for c in range(lo, hi + 1):
        probs[c * rho - start : c * rho - start + M] += 1.0
    return start, probs / probs.sum()


def statistical_distance(K: SecurityParams, rho_a: int, rho_b: int) -> float:
    sa, pa = d_distribution(K, rho_a)
    sb, pb = d_distribution(K, rho_b)
    start, stop = min(sa, sb), max(sa + len(pa), sb + len(pb))
    full_a, full_b = np.zeros(stop - start), np.zeros(stop - start)
    full_a[sa - start : sa - start + len(pa)] = pa
    full_b[sb - start : sb - start + len(pb)] = pb
    return 0.5 * float(np.abs(full_a - full_b).sum())


# chi-square 0.999 quantile, 15 degrees of freedom
_CHI2_15_999 = 37.697


def dilemma_diagnostics(K: SecurityParams, samples: int, seed: int, rho: int | None = None) -> AttackReport:
    """Unreduced ``d`` leaks ``rho``; reducing it breaks completeness.

    Reports: strict monotonicity of ``d`` in ``rho`` over a grid of
    ``(c, r)``; a chi-square check that ``d - c*rho`` is uniform; the mass of
    ``d`` in the outer deciles of its support next to the uniform 0.2 (both
    empirical and exact); and the exact statistical distance between the
    ``d`` laws of the smallest and largest prime.  ``successes`` counts samples
    in the outer deciles.
    """
    primes = primes_in_range(*K.prime_range)
    rho = rho or primes[-1]
    lo, hi = K.challenge_range
    M = K.monotone_bound
    gen = np.random.default_rng(rng_stream(seed, "dilemma").getrandbits(64))
    r_grid = np.linspace(0, M - 1, 33).astype(np.int64)
    rho_grid = np.arange(-(1 << K.K3), (1 << (K.K3 + 1)) + 1, dtype=np.int64)
    monotone = all(
        bool(np.all(np.diff(c * rho_grid + r) > 0)) for c in range(lo, hi + 1) for r in r_grid
    )
    c = gen.integers(lo, hi + 1, samples)
    r = gen.integers(0, M, samples)
    d = c * rho + r
    mask = d - c * rho
    hist = np.bincount(mask * 16 // M, minlength=16)
    expected = samples / 16
    chi2 = float(((hist - expected) ** 2 / expected).sum())
    start, probs = d_distribution(K, rho)
    size = len(probs)
    cut = size // 10
    in_tails = (d - start < cut) | (d - start >= size - cut)
    exact_tail = float(probs[:cut].sum() + probs[size - cut :].sum())
    details = {
        "rho": rho,
        "monotone_in_rho": monotone,
        "mask_chi2": chi2,
        "mask_chi2_limit": _CHI2_15_999,
        "support": [start, start + size - 1],
        "decile_width": cut,
        "tail_mass_empirical": float(in_tails.mean()),
        "tail_mass_exact": exact_tail,
        "tail_mass_uniform": 2 * cut / size,
        "statistical_distance": statistical_distance(K, primes[0], primes[-1]),
        "distance_pair": [primes[0], primes[-1]],
    }
    return AttackReport("dilemma", K, samples, int(in_tails.sum()), seed, details, exact_tail)


# -- why a range bound suffices --------------------------------------------------------


def permutation_forcing_check(K3: int, N: int, bound: int | None = None) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All non-permutation ``rho`` with ``|rho_i| <= bound`` passing the sum/product check.

    ``bound`` defaults to ``2**K3 - 1``, the range FIXED mode enforces.
    Exhaustive over prime multisets ``p`` from the ``K3`` prime range and
    ``rho`` multisets (the check is order-free, so multisets cover all
    vectors).
    """
    primes = primes_in_range(1 << (K3 - 1), (1 << K3) - 1)
    bound = (1 << K3) - 1 if bound is None else bound
    values = [v for v in range(-bound, bound + 1) if v]
    found = []
    for p in itertools.combinations_with_replacement(primes, N):
        s, prod = sum(p), math.prod(p)
        for rho in itertools.combinations_with_replacement(values, N):
            if sum(rho) == s and math.prod(rho) == prod and Counter(rho) != Counter(p):
                found.append((p, rho))
    return found
