"""Integer arithmetic, primes and the two groups used by the shuffle.

Two algebraic settings are provided:

* :class:`ElGamalParams` -- the order-``q`` subgroup of ``Z_p^*`` for a safe
  prime ``p = 2q + 1``.  Ciphertexts live here.
* :class:`HiddenOrderGroup` -- the squares modulo ``n = P*Q`` (``P``, ``Q``
  distinct safe primes).  Integer commitments live here.  Only the trusted
  setup holds the group order; protocol code receives the
  :class:`CommitmentGroup` view, which has no order field at all.

Every exponentiation performed by protocol code goes through :func:`mod_exp`
so that cost can be measured with :func:`count_exponentiations`.
"""

from __future__ import annotations

import contextlib
import hashlib
import random
from contextvars import ContextVar
from dataclasses import dataclass, field, fields

import gmpy2

__all__ = [
    "NoInverseError",
    "EmptyPrimeRangeError",
    "ExpCounter",
    "count_exponentiations",
    "mod_exp",
    "inverse",
    "rng_stream",
    "is_probable_prime",
    "primes_in_range",
    "sample_prime_in_range",
    "random_safe_prime",
    "SecurityParams",
    "ElGamalParams",
    "CommitmentGroup",
    "HiddenOrderGroup",
    "gen_elgamal_params",
    "gen_hidden_order_group",
    "params_to_json",
    "params_from_json",
]

MR_ROUNDS = 40
SMALL_LIMIT = 1 << 16


class NoInverseError(ValueError):
    pass


class EmptyPrimeRangeError(ValueError):
    pass


# -- exponentiation accounting ------------------------------------------------


class ExpCounter:
    """Accumulates the number of modular exponentiations in a ``with`` block."""

    def __init__(self):
        self.count = 0

    def __repr__(self):
        return f"ExpCounter(count={self.count})"


_active_counters: ContextVar[tuple[ExpCounter, ...]] = ContextVar("_active_counters", default=())


@contextlib.contextmanager
def count_exponentiations():
    counter = ExpCounter()
    token = _active_counters.set(_active_counters.get() + (counter,))
    try:
        yield counter
    finally:
        _active_counters.reset(token)


def mod_exp(base: int, exponent: int, modulus: int) -> int:
    """``base**exponent mod modulus``; negative exponents go through the inverse."""
    if modulus < 2:
        raise ValueError("modulus must be >= 2")
    for counter in _active_counters.get():
        counter.count += 1
    try:
        return pow(base, exponent, modulus)
    except ValueError:
        raise NoInverseError("no inverse") from None


def inverse(a: int, modulus: int) -> int:
    # Not an exponentiation for accounting purposes.
    try:
        return pow(a, -1, modulus)
    except ValueError:
        raise NoInverseError("no inverse") from None


# -- randomness ---------------------------------------------------------------


def rng_stream(seed: int, label: str) -> random.Random:
    """Independent, reproducible substream of a master seed.

    The substream seed is a keyed BLAKE2b digest of ``label`` under the master
    seed, so distinct labels give unrelated streams.
    """
    key = int(seed).to_bytes(32, "big", signed=True)
    digest = hashlib.blake2b(label.encode(), key=key, digest_size=32).digest()
    return random.Random(int.from_bytes(digest, "big"))


# -- primes -------------------------------------------------------------------


def _small_sieve(limit: int) -> bytearray:
    sieve = bytearray([1]) * limit
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(limit**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, limit, i)))
    return sieve


_SIEVE = _small_sieve(SMALL_LIMIT)
_TRIAL_PRIMES = [i for i in range(3, 2000) if _SIEVE[i]]


def is_probable_prime(n: int) -> bool:
    """Exact below 2**16, Miller-Rabin with 40 rounds above."""
    if n < SMALL_LIMIT:
        return n >= 2 and bool(_SIEVE[n])
    return bool(gmpy2.is_prime(n, MR_ROUNDS))


def primes_in_range(lo: int, hi: int) -> list[int]:
    """All primes in ``[lo, hi]`` by enumeration (meant for small ranges)."""
    return [n for n in range(max(lo, 2), hi + 1) if is_probable_prime(n)]


def sample_prime_in_range(K3: int, seed: int | random.Random) -> int:
    """Uniform prime from ``[2**(K3-1), 2**K3 - 1]``.

    Small ranges are enumerated and sampled directly; large ones use rejection
    sampling of uniform integers, which is also uniform over the primes.
    """
    rng = seed if isinstance(seed, random.Random) else rng_stream(seed, "prime-range")
    if K3 < 2:
        raise EmptyPrimeRangeError("empty prime range")
    lo, hi = 1 << (K3 - 1), (1 << K3) - 1
    if K3 <= 16:
        candidates = _prime_table(K3)
        if not candidates:
            raise EmptyPrimeRangeError("empty prime range")
        return candidates[rng.randrange(len(candidates))]
    while True:
        n = rng.randint(lo, hi)
        if is_probable_prime(n):
            return n


_PRIME_TABLES: dict[int, list[int]] = {}


def _prime_table(K3: int) -> list[int]:
    if K3 not in _PRIME_TABLES:
        _PRIME_TABLES[K3] = primes_in_range(1 << (K3 - 1), (1 << K3) - 1)
    return _PRIME_TABLES[K3]


def _sieve_ok(n: int) -> bool:
    for sp in _TRIAL_PRIMES:
        if n % sp == 0:
            return n == sp
    return True


def random_safe_prime(bits: int, rng: random.Random) -> int:
    """Random safe prime ``p = 2q + 1`` with exactly ``bits`` bits."""
    if bits < 3:
        raise ValueError("bits must be >= 3")
    lo, hi = 1 << (bits - 2), (1 << (bits - 1)) - 1
    while True:
        q = rng.randint(lo, hi) | 1
        if q > hi:
            continue
        p = 2 * q + 1
        if not (_sieve_ok(q) and _sieve_ok(p)):
            continue
        if is_probable_prime(q) and is_probable_prime(p):
            return p


# -- parameter containers -----------------------------------------------------


@dataclass(frozen=True)
class SecurityParams:
    """Bit-length parameters ``K2..K5`` and the range bound exponent ``K``.

    ``K`` defaults to ``K3``, which is what the fixed and monotone-test modes
    require.
    """

    K2: int = 8
    K3: int = 4
    K4: int = 4
    K5: int = 6
    K: int | None = None

    def __post_init__(self):
        if self.K is None:
            object.__setattr__(self, "K", self.K3)
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise ValueError(f"{f.name} must be a positive integer")
        if self.K3 < 2:
            raise EmptyPrimeRangeError("empty prime range")

    @property
    def monotone_bound(self) -> int:
        """``2**(K3+K4+K5)``: the width of the honest ``r_i`` window."""
        return 1 << (self.K3 + self.K4 + self.K5)

    @property
    def challenge_range(self) -> tuple[int, int]:
        return 1 << (self.K4 - 1), (1 << self.K4) - 1

    @property
    def prime_range(self) -> tuple[int, int]:
        return 1 << (self.K3 - 1), (1 << self.K3) - 1

    def replace(self, **changes) -> SecurityParams:
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        if "K3" in changes and "K" not in changes and values["K"] == values["K3"]:
            values["K"] = None
        values.update(changes)
        return SecurityParams(**values)

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ElGamalParams:
    p_mod: int
    q: int
    g: int
    y: int = 1

    def in_subgroup(self, a: int) -> bool:
        return 0 < a < self.p_mod and pow(a, self.q, self.p_mod) == 1

    def check(self) -> None:
        if self.p_mod != 2 * self.q + 1:
            raise ValueError("p_mod must equal 2q + 1")
        if not (is_probable_prime(self.p_mod) and is_probable_prime(self.q)):
            raise ValueError("p_mod and q must be prime")
        if self.g == 1 or not self.in_subgroup(self.g):
            raise ValueError("g must generate the order-q subgroup")
        if not self.in_subgroup(self.y):
            raise ValueError("y must lie in the order-q subgroup")


@dataclass(frozen=True)
class CommitmentGroup:
    """Public view of the hidden-order group: what provers and verifiers get."""

    modulus: int
    h: int
    g_c: int

    def commit(self, value: int, randomness: int) -> int:
        """``h**randomness * g_c**value``, binding over the integers."""
        n = self.modulus
        return mod_exp(self.h, randomness, n) * mod_exp(self.g_c, value, n) % n


@dataclass(frozen=True)
class HiddenOrderGroup:
    """Trusted-setup output: modulus ``P*Q`` plus secrets.

    ``secret_order`` is the order of the group of squares, ``P'Q'`` where
    ``P = 2P' + 1`` and ``Q = 2Q' + 1``.  ``log_h_gc`` is the discrete log of
    ``g_c`` to base ``h``.  Neither is reachable from :attr:`public`.
    """

    modulus: int
    h: int
    g_c: int
    secret_order: int = field(repr=False)
    factors: tuple[int, int] = field(repr=False)
    log_h_gc: int = field(repr=False)

    @property
    def public(self) -> CommitmentGroup:
        return CommitmentGroup(self.modulus, self.h, self.g_c)


def gen_elgamal_params(bits: int, seed: int) -> ElGamalParams:
    """Safe-prime group with a generator of the order-``q`` subgroup.

    ``y`` is left at 1; use :func:`shufflelab.shuffle_core.keygen` to attach a
    public key.
    """
    if bits < 8:
        raise ValueError("bits must be >= 8")
    rng = rng_stream(seed, "elgamal-group")
    p = random_safe_prime(bits, rng)
    q = (p - 1) // 2
    while True:
        g = pow(rng.randrange(2, p - 1), 2, p)
        if g != 1:
            return ElGamalParams(p, q, g, 1)


def gen_hidden_order_group(bits: int, seed: int) -> HiddenOrderGroup:
    """Squares modulo a product of two distinct safe primes.

    ``h`` is a random square of maximal order ``P'Q'``; ``g_c = h**x`` for a
    secret ``x``.
    """
    if bits < 12:
        raise ValueError("bits must be >= 12")
    rng = rng_stream(seed, "hidden-order-group")
    b1 = bits // 2
    b2 = bits - b1
    P = random_safe_prime(b1, rng)
    while True:
        Q = random_safe_prime(b2, rng)
        if Q != P:
            break
    n = P * Q
    p1, q1 = (P - 1) // 2, (Q - 1) // 2
    order = p1 * q1
    while True:
        h = pow(rng.randrange(2, n - 1), 2, n)
        if gmpy2.gcd(h, n) != 1:
            continue
        if pow(h, p1, n) != 1 and pow(h, q1, n) != 1:
            break
    while True:
        x = rng.randrange(2, order)
        g_c = pow(h, x, n)
        if g_c not in (1, h):
            break
    return HiddenOrderGroup(n, h, g_c, order, (P, Q), x)


# -- serialisation ------------------------------------------------------------

_INT_FIELDS = ("p_mod", "q", "g", "y", "modulus", "h", "g_c")
_K_FIELDS = ("K2", "K3", "K4", "K5", "K")


def params_to_json(
    elgamal: ElGamalParams | None = None,
    group: CommitmentGroup | HiddenOrderGroup | None = None,
    K: SecurityParams | None = None,
) -> dict:
    """Flat JSON document; big integers as decimal strings, K values as ints."""
    out: dict = {}
    if elgamal is not None:
        out.update(p_mod=str(elgamal.p_mod), q=str(elgamal.q), g=str(elgamal.g), y=str(elgamal.y))
    if group is not None:
        out.update(modulus=str(group.modulus), h=str(group.h), g_c=str(group.g_c))
    if K is not None:
        out.update(K.to_json())
    return out


def params_from_json(doc: dict) -> tuple[ElGamalParams | None, CommitmentGroup | None, SecurityParams | None]:
    elgamal = group = K = None
    if "p_mod" in doc:
        elgamal = ElGamalParams(int(doc["p_mod"]), int(doc["q"]), int(doc["g"]), int(doc.get("y", 1)))
    if "modulus" in doc:
        group = CommitmentGroup(int(doc["modulus"]), int(doc["h"]), int(doc["g_c"]))
    if "K3" in doc:
        K = SecurityParams(**{k: int(doc[k]) for k in _K_FIELDS if k in doc})
    return elgamal, group, K
