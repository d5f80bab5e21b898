"""Three-move proof of shuffle based on sum and product of challenge primes.

The verifier picks random primes ``p_1..p_N`` in ``[2**(K3-1), 2**K3 - 1]``.
The prover commits to exponents ``rho_i`` (honestly ``rho_i = p[perm[i]]``)
in the hidden-order group, both as a chain ``b_i = h**t_i * b_{i-1}**rho_i``
(so ``b_N`` carries the product) and per index ``b'_i = h**t'_i * g_c**rho_i``
(so the product of the ``b'_i`` carries the sum).  One challenge ``c`` is
answered with ``d_i = c*rho_i + r_i`` and matching randomness responses, and
``d_i`` is reused by the ElGamal batch check
``prod (u'_i, v'_i)**rho_i == prod (u_i, v_i)**p_i`` up to re-encryption.

Four modes differ only in the responses and the extra checks:

``ORIGINAL``  responses reduced modulo fixed powers of two
``MP2``       responses computed over the integers
``MSBMT``     MP2 plus the upper-bound test ``d_i < 2**(K3+K4+K5)``
``FIXED``     MP2 plus a bit-decomposition range proof on every ``b'_i``
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

from .bigint_group import (
    CommitmentGroup,
    ElGamalParams,
    HiddenOrderGroup,
    SecurityParams,
    gen_elgamal_params,
    gen_hidden_order_group,
    mod_exp,
    params_from_json,
    params_to_json,
    rng_stream,
    sample_prime_in_range,
)
from .range_proofs import BitsProver, BitsRangeProof, Challenger, verify_range_bits
from .shuffle_core import (
    Ciphertext,
    ShuffleWitness,
    ciphertexts_from_json,
    ciphertexts_to_json,
    encode_message,
    encrypt,
    keygen,
    random_witness,
    shuffle,
)

__all__ = [
    "ProofMode",
    "MalformedTranscript",
    "ShuffleInstance",
    "ProverState",
    "Transcript",
    "Verdict",
    "ProtocolRun",
    "Setup",
    "make_setup",
    "honest_instance",
    "response_modulus_bits",
    "msbmt_mask_window",
    "sample_state",
    "commit_phase",
    "respond",
    "verify",
    "check_sum_product",
    "run_protocol",
    "default_range_rounds",
    "aggregate_exponent",
]


class ProofMode(str, Enum):
    ORIGINAL = "ORIGINAL"
    MP2 = "MP2"
    MSBMT = "MSBMT"
    FIXED = "FIXED"


class MalformedTranscript(ValueError):
    """The transcript cannot be evaluated at all (as opposed to rejected)."""


@dataclass(frozen=True)
class ShuffleInstance:
    elgamal: ElGamalParams
    group: CommitmentGroup
    K: SecurityParams
    inputs: tuple[Ciphertext, ...]
    outputs: tuple[Ciphertext, ...]

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if len(self.inputs) != len(self.outputs):
            raise ValueError("input and output batches differ in length")

    @property
    def N(self) -> int:
        return len(self.inputs)

    def to_json(self) -> dict:
        return {
            "params": params_to_json(self.elgamal, self.group, self.K),
            "inputs": ciphertexts_to_json(self.inputs),
            "outputs": ciphertexts_to_json(self.outputs),
        }

    @classmethod
    def from_json(cls, doc) -> ShuffleInstance:
        elgamal, group, K = params_from_json(doc["params"])
        return cls(elgamal, group, K, ciphertexts_from_json(doc["inputs"]), ciphertexts_from_json(doc["outputs"]))


def log2_ceil(N: int) -> int:
    return (N - 1).bit_length() if N > 1 else 0


def response_modulus_bits(K: SecurityParams, N: int) -> dict[str, int]:
    """Bit sizes of the power-of-two moduli applied by ``ORIGINAL``."""
    lg = log2_ceil(N)
    return {
        "e_i": K.K2 + K.K4 + 2 * K.K5,
        "e_prime_i": K.K2 + K.K4 + 2 * K.K5,
        "d": K.K3 + K.K4 + K.K5,
        "e": K.K2 + N * K.K3 + K.K4 + K.K5 + lg,
        "e_prime": K.K2 + K.K5 + lg,
    }


def default_range_rounds(K: SecurityParams) -> int:
    """Repetitions giving range-proof soundness error at most ``2**-20``."""
    return math.ceil(20 / (K.K4 - 1)) if K.K4 > 1 else 20


@dataclass
class ProverState:
    """Prover randomness for one run.

    Ranges: ``t_i, t'_i`` in ``[0, 2**K2)``, ``r_i`` in ``[0, 2**(K3+K4+K5))`` (MSBMT:
    ``[0, msbmt_mask_window(K))``),
    ``s_i, s'_i, s, s'`` uniform below their response moduli, and the batch
    mask ``s_batch`` in ``[0, q)``.
    """

    t: list[int]
    t_prime: list[int]
    s: list[int]
    s_prime: list[int]
    r: list[int]
    s_prod: int
    s_sum: int
    s_batch: int
    range_provers: list = field(default_factory=list, repr=False)


def msbmt_mask_window(K: SecurityParams) -> int:
    """Honest ``r_i`` range in MSBMT mode, short enough that ``d_i`` never hits the bound."""
    return K.monotone_bound - ((1 << K.K4) - 1) * ((1 << K.K3) - 1)


def sample_state(K: SecurityParams, N: int, q: int, rng: random.Random, r_values=None, mode=None) -> ProverState:
    bits = response_modulus_bits(K, N)
    t = [rng.getrandbits(K.K2) for _ in range(N)]
    t_prime = [rng.getrandbits(K.K2) for _ in range(N)]
    s = [rng.getrandbits(bits["e_i"]) for _ in range(N)]
    s_prime = [rng.getrandbits(bits["e_prime_i"]) for _ in range(N)]
    if r_values is not None:
        r = list(r_values)
    elif mode is not None and ProofMode(mode) is ProofMode.MSBMT:
        r = [rng.randrange(msbmt_mask_window(K)) for _ in range(N)]
    else:
        r = [rng.getrandbits(bits["d"]) for _ in range(N)]
    if len(r) != N:
        raise ValueError("r_values length mismatch")
    return ProverState(t, t_prime, s, s_prime, r, rng.getrandbits(bits["e"]), rng.getrandbits(bits["e_prime"]), rng.randrange(q))


@dataclass
class Transcript:
    # first move
    b: list[int]
    b_prime: list[int]
    gamma: list[int]
    gamma_prime: list[int]
    gamma_prod: int
    gamma_sum: int
    prod_ann: int  # ElGamal batch announcement, u-components
    sum_ann: int  # ElGamal batch announcement, v-components
    # challenge
    c: int | None = None
    # responses
    d: list[int] | None = None
    e_i: list[int] | None = None
    e_prime_i: list[int] | None = None
    e: int | None = None
    e_prime: int | None = None
    f_u: int | None = None
    f_v: int | None = None
    range_proofs: list[BitsRangeProof] | None = None

    _LISTS = ("b", "b_prime", "gamma", "gamma_prime", "d", "e_i", "e_prime_i")
    _SCALARS = ("gamma_prod", "gamma_sum", "prod_ann", "sum_ann", "c", "e", "e_prime", "f_u", "f_v")

    def to_json(self) -> dict:
        out = {}
        for name in self._LISTS:
            value = getattr(self, name)
            out[name] = None if value is None else [str(v) for v in value]
        for name in self._SCALARS:
            value = getattr(self, name)
            out[name] = None if value is None else str(value)
        out["range_proofs"] = None if self.range_proofs is None else [p.to_json() for p in self.range_proofs]
        return out

    @classmethod
    def from_json(cls, doc) -> Transcript:
        try:
            kw = {}
            for name in cls._LISTS:
                v = doc[name]
                kw[name] = None if v is None else [int(x) for x in v]
            for name in cls._SCALARS:
                v = doc[name]
                kw[name] = None if v is None else int(v)
            rp = doc.get("range_proofs")
            kw["range_proofs"] = None if rp is None else [BitsRangeProof.from_json(p) for p in rp]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedTranscript(f"cannot parse transcript: {exc}") from exc
        return cls(**kw)


@dataclass
class Verdict:
    checks: dict[str, bool]

    @property
    def accepted(self) -> bool:
        return all(self.checks.values())

    @property
    def failed(self) -> list[str]:
        return [name for name, ok in self.checks.items() if not ok]

    def to_json(self) -> dict:
        return {"accepted": self.accepted, "checks": dict(self.checks), "failed": self.failed}


def check_sum_product(p, rho) -> bool:
    """``prod p == prod rho`` and ``sum p == sum rho`` over the integers."""
    if len(p) != len(rho):
        raise ValueError("length mismatch")
    return sum(p) == sum(rho) and math.prod(p) == math.prod(rho)


def aggregate_exponent(t, rho) -> int:
    """``T`` with ``b_N = h**T * g_c**prod(rho)``: sum of ``t_i * prod_{j>i} rho_j``."""
    T, tail = 0, 1
    for ti, rj in zip(reversed(t), reversed(rho)):
        T += ti * tail
        tail *= rj
    return T


def _ext_product(bases, exps, p):
    out = 1
    for a, e in zip(bases, exps):
        out = out * mod_exp(a, e, p) % p
    return out


def commit_phase(instance: ShuffleInstance, rho, primes, state: ProverState, mode, range_rounds=None) -> Transcript:
    """First prover message.  ``primes`` is unused by the commitments but fixes N."""
    mode = ProofMode(mode)
    N = instance.N
    if len(rho) != N or len(primes) != N:
        raise ValueError("rho length mismatch")
    grp, eg = instance.group, instance.elgamal
    n, h, g_c = grp.modulus, grp.h, grp.g_c
    b, b_prime, gamma, gamma_prime = [], [], [], []
    prev = g_c
    for i in range(N):
        gamma.append(mod_exp(h, state.s[i], n) * mod_exp(prev, state.r[i], n) % n)
        prev = mod_exp(h, state.t[i], n) * mod_exp(prev, rho[i], n) % n
        b.append(prev)
        b_prime.append(grp.commit(rho[i], state.t_prime[i]))
        gamma_prime.append(grp.commit(state.r[i], state.s_prime[i]))
    p = eg.p_mod
    prod_ann = mod_exp(eg.g, state.s_batch, p) * _ext_product([c.u for c in instance.outputs], state.r, p) % p
    sum_ann = mod_exp(eg.y, state.s_batch, p) * _ext_product([c.v for c in instance.outputs], state.r, p) % p
    transcript = Transcript(
        b, b_prime, gamma, gamma_prime, mod_exp(h, state.s_prod, n), mod_exp(h, state.s_sum, n), prod_ann, sum_ann
    )
    if mode is ProofMode.FIXED:
        rounds = range_rounds or default_range_rounds(instance.K)
        if not state.range_provers:
            raise ValueError("FIXED mode needs range provers in the state; use ShuffleProver")
        for rp in state.range_provers:
            rp.announce_rounds(rounds)
    return transcript


def respond(state: ProverState, rho, batch_exponent: int, c: int, mode, K: SecurityParams, q: int, range_challenges=None):
    """Responses for challenge ``c``.  Returns a dict of transcript fields."""
    mode = ProofMode(mode)
    N = len(rho)
    d = [c * x + r for x, r in zip(rho, state.r)]
    e_i = [c * t + s for t, s in zip(state.t, state.s)]
    e_prime_i = [c * t + s for t, s in zip(state.t_prime, state.s_prime)]
    e = c * aggregate_exponent(state.t, rho) + state.s_prod
    e_prime = c * sum(state.t_prime) + state.s_sum
    f = (state.s_batch - c * batch_exponent) % q
    if mode is ProofMode.ORIGINAL:
        bits = response_modulus_bits(K, N)
        d = [x % (1 << bits["d"]) for x in d]
        e_i = [x % (1 << bits["e_i"]) for x in e_i]
        e_prime_i = [x % (1 << bits["e_prime_i"]) for x in e_prime_i]
        e %= 1 << bits["e"]
        e_prime %= 1 << bits["e_prime"]
    out = dict(c=c, d=d, e_i=e_i, e_prime_i=e_prime_i, e=e, e_prime=e_prime, f_u=f, f_v=f)
    if mode is ProofMode.FIXED:
        out["range_proofs"] = [rp.respond(range_challenges) for rp in state.range_provers]
    return out


def _check_shape(instance: ShuffleInstance, primes, tr: Transcript, mode: ProofMode):
    N = instance.N
    if len(primes) != N:
        raise MalformedTranscript("prime vector length does not match the instance")
    for name in Transcript._LISTS:
        value = getattr(tr, name)
        if value is None or len(value) != N or not all(isinstance(v, int) for v in value):
            raise MalformedTranscript(f"field {name!r} missing or not a list of {N} integers")
    for name in Transcript._SCALARS:
        if not isinstance(getattr(tr, name), int):
            raise MalformedTranscript(f"field {name!r} missing or not an integer")
    if mode is ProofMode.FIXED and (tr.range_proofs is None or len(tr.range_proofs) != N):
        raise MalformedTranscript("FIXED mode transcript needs one range proof per index")


def verify(instance: ShuffleInstance, primes, transcript: Transcript, mode, range_rounds=None) -> Verdict:
    """Evaluate every verification equation; each is a named check."""
    mode = ProofMode(mode)
    tr = transcript
    _check_shape(instance, primes, tr, mode)
    K, grp, eg = instance.K, instance.group, instance.elgamal
    n, h, g_c = grp.modulus, grp.h, grp.g_c
    N, c = instance.N, tr.c
    checks: dict[str, bool] = {}
    lo, hi = K.challenge_range
    checks["CHALLENGE"] = lo <= c <= hi

    prev = g_c
    for i in range(N):
        lhs = mod_exp(tr.b[i], c, n) * tr.gamma[i] % n
        rhs = mod_exp(h, tr.e_i[i], n) * mod_exp(prev, tr.d[i], n) % n
        checks[f"CHAIN_{i}"] = lhs == rhs
        prev = tr.b[i]
    for i in range(N):
        lhs = mod_exp(tr.b_prime[i], c, n) * tr.gamma_prime[i] % n
        rhs = mod_exp(h, tr.e_prime_i[i], n) * mod_exp(g_c, tr.d[i], n) % n
        checks[f"PERINDEX_{i}"] = lhs == rhs

    prod_base = mod_exp(g_c, -math.prod(primes), n) * tr.b[-1] % n
    checks["PRODUCT"] = mod_exp(prod_base, c, n) * tr.gamma_prod % n == mod_exp(h, tr.e, n)
    sum_base = mod_exp(g_c, -sum(primes), n)
    for bp in tr.b_prime:
        sum_base = sum_base * bp % n
    checks["SUM"] = mod_exp(sum_base, c, n) * tr.gamma_sum % n == mod_exp(h, tr.e_prime, n)

    p = eg.p_mod
    U = _ext_product([ct.u for ct in instance.inputs], primes, p)
    V = _ext_product([ct.v for ct in instance.inputs], primes, p)
    ok_u = mod_exp(U, c, p) * tr.prod_ann % p == mod_exp(eg.g, tr.f_u, p) * _ext_product(
        [ct.u for ct in instance.outputs], tr.d, p
    ) % p
    ok_v = mod_exp(V, c, p) * tr.sum_ann % p == mod_exp(eg.y, tr.f_v, p) * _ext_product(
        [ct.v for ct in instance.outputs], tr.d, p
    ) % p
    checks["BATCH"] = ok_u and ok_v and (tr.f_u - tr.f_v) % eg.q == 0

    if mode is ProofMode.MSBMT:
        for i, d in enumerate(tr.d):
            checks[f"RANGE_{i}"] = d < K.monotone_bound
    elif mode is ProofMode.FIXED:
        rounds = range_rounds or default_range_rounds(K)
        for i, (bp, proof) in enumerate(zip(tr.b_prime, tr.range_proofs)):
            enough = all(len(bpf.challenges) == rounds for bpf in proof.bit_proofs)
            checks[f"RANGEPROOF_{i}"] = enough and verify_range_bits(grp, K, bp, proof, K.K)
    return Verdict(checks)


# -- orchestration ----------------------------------------------------------------


@dataclass(frozen=True)
class Setup:
    """Trusted setup plus the decryption key: harness-side material only."""

    elgamal: ElGamalParams
    secret_key: int
    hidden: HiddenOrderGroup
    K: SecurityParams

    @property
    def group(self) -> CommitmentGroup:
        return self.hidden.public


@lru_cache(maxsize=32)
def _groups(elgamal_bits, group_bits, seed):
    eg, x = keygen(gen_elgamal_params(elgamal_bits, seed), seed)
    return eg, x, gen_hidden_order_group(group_bits, seed)


def make_setup(K: SecurityParams | None = None, seed: int = 0, elgamal_bits: int = 64, group_bits: int = 64) -> Setup:
    eg, x, hidden = _groups(elgamal_bits, group_bits, seed)
    return Setup(eg, x, hidden, K or SecurityParams())


def honest_instance(setup: Setup, N: int, seed: int):
    """Fresh messages, their encryptions and an honest shuffle of them.

    Returns ``(instance, witness, messages)``.
    """
    rng = rng_stream(seed, "instance")
    eg = setup.elgamal
    messages = [encode_message(eg, rng.randint(1, eg.q)) for _ in range(N)]
    inputs = [encrypt(eg, m, rng.randrange(eg.q)) for m in messages]
    witness = random_witness(eg, N, rng)
    outputs = shuffle(eg, inputs, witness)
    return ShuffleInstance(eg, setup.group, setup.K, inputs, outputs), witness, messages


@dataclass
class ProtocolRun:
    primes: list[int]
    transcript: Transcript
    verdict: Verdict

    def to_json(self) -> dict:
        return {
            "primes": [str(p) for p in self.primes],
            "transcript": self.transcript.to_json(),
            "verdict": self.verdict.to_json(),
        }


class ShuffleProver:
    """Drives :func:`commit_phase` / :func:`respond` for a given ``rho``.

    ``rho`` need not be a permutation of the primes; attack code uses this
    class with forged exponents.  ``range_prover`` builds the FIXED-mode
    proof for index ``i`` and defaults to the honest :class:`BitsProver`;
    ``state`` replaces the honestly sampled randomness.
    """

    def __init__(
        self, instance, primes, rho, batch_exponent, mode, rng, r_values=None, range_prover=None, range_rounds=None, state=None
    ):
        self.instance, self.primes, self.rho = instance, list(primes), list(rho)
        self.batch_exponent = batch_exponent
        self.mode = ProofMode(mode)
        K = instance.K
        if self.mode is ProofMode.FIXED and K.K != K.K3:
            raise ValueError("FIXED mode requires K = K3")
        self.state = state or sample_state(K, instance.N, instance.elgamal.q, rng, r_values, self.mode)
        self.range_rounds = range_rounds or default_range_rounds(K)
        if self.mode is ProofMode.FIXED:
            make = range_prover or BitsProver
            self.state.range_provers = [
                make(instance.group, K, x, t, K.K, rng) for x, t in zip(self.rho, self.state.t_prime)
            ]

    def commit(self) -> Transcript:
        self.transcript = commit_phase(self.instance, self.rho, self.primes, self.state, self.mode, self.range_rounds)
        return self.transcript

    def respond(self, c: int, range_challenges=None) -> Transcript:
        K, eg = self.instance.K, self.instance.elgamal
        fields_ = respond(self.state, self.rho, self.batch_exponent, c, self.mode, K, eg.q, range_challenges)
        for name, value in fields_.items():
            setattr(self.transcript, name, value)
        return self.transcript


def run_interaction(instance, primes, prover: ShuffleProver, verifier_rng: random.Random, range_rounds=None) -> ProtocolRun:
    prover.commit()
    challenger = Challenger(instance.K, verifier_rng)
    c = challenger.challenge()
    range_challenges = None
    if prover.mode is ProofMode.FIXED:
        range_challenges = challenger.challenges(range_rounds or prover.range_rounds)
    transcript = prover.respond(c, range_challenges)
    return ProtocolRun(list(primes), transcript, verify(instance, primes, transcript, prover.mode, range_rounds))


def run_protocol(instance: ShuffleInstance, witness: ShuffleWitness, mode, seed: int, range_rounds=None) -> ProtocolRun:
    """Verifier samples primes, honest prover commits, challenge, response, verify."""
    verifier_rng = rng_stream(seed, "verifier")
    primes = [sample_prime_in_range(instance.K.K3, verifier_rng) for _ in range(instance.N)]
    w = witness.with_primes(primes)
    prover = ShuffleProver(
        instance,
        primes,
        w.rho,
        w.aggregate_randomness(instance.elgamal.q),
        mode,
        rng_stream(seed, "prover"),
        range_rounds=range_rounds,
    )
    return run_interaction(instance, primes, prover, verifier_rng, range_rounds)
