"""ElGamal over the order-q subgroup and the plain re-encryption shuffle.

Permutations are 0-based: ``perm[i] = j`` means output ``i`` is a
re-encryption of input ``j``.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, replace

from .bigint_group import ElGamalParams, inverse, mod_exp, rng_stream

__all__ = [
    "Ciphertext",
    "Permutation",
    "ShuffleWitness",
    "keygen",
    "encode_message",
    "encrypt",
    "decrypt",
    "reencrypt",
    "shuffle",
    "random_permutation",
    "random_witness",
    "ciphertexts_to_json",
    "ciphertexts_from_json",
]


@dataclass(frozen=True)
class Ciphertext:
    u: int
    v: int

    def mul(self, other: Ciphertext, p_mod: int) -> Ciphertext:
        return Ciphertext(self.u * other.u % p_mod, self.v * other.v % p_mod)

    def pow(self, e: int, p_mod: int) -> Ciphertext:
        return Ciphertext(mod_exp(self.u, e, p_mod), mod_exp(self.v, e, p_mod))


@dataclass(frozen=True)
class Permutation:
    map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(self.map))
        if sorted(self.map) != list(range(len(self.map))):
            raise ValueError("not a permutation of 0..N-1")

    def __len__(self):
        return len(self.map)

    def __getitem__(self, i):
        return self.map[i]

    def apply(self, items):
        return [items[j] for j in self.map]

    def then(self, other: Permutation) -> Permutation:
        """Permutation equal to shuffling by ``self`` and then by ``other``."""
        return Permutation(tuple(self.map[j] for j in other.map))

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(tuple(range(n)))


@dataclass(frozen=True)
class ShuffleWitness:
    """Secret data of one shuffle.

    ``rho`` is empty until challenge primes are known; :meth:`with_primes`
    fills it in the honest way (``rho[i] = p[perm[i]]``).
    """

    perm: Permutation
    reenc: tuple[int, ...]
    rho: tuple[int, ...] = ()

    def with_primes(self, primes) -> ShuffleWitness:
        if len(primes) != len(self.perm):
            raise ValueError("prime vector length does not match the permutation")
        return replace(self, rho=tuple(primes[j] for j in self.perm.map))

    def aggregate_randomness(self, q: int) -> int:
        """``sum rho_i * reenc_i mod q``, the exponent linking the batch products."""
        if len(self.rho) != len(self.reenc):
            raise ValueError("rho length mismatch")
        return sum(r * s for r, s in zip(self.rho, self.reenc)) % q


def keygen(params: ElGamalParams, seed: int) -> tuple[ElGamalParams, int]:
    rng = rng_stream(seed, "elgamal-key")
    x = rng.randint(1, params.q - 1)
    return replace(params, y=mod_exp(params.g, x, params.p_mod)), x


def encode_message(params: ElGamalParams, raw: int) -> int:
    """Map a raw value in ``[1, q]`` into the subgroup by squaring."""
    if not 1 <= raw <= params.q:
        raise ValueError("raw message must lie in [1, q]")
    return raw * raw % params.p_mod


def encrypt(params: ElGamalParams, m: int, r: int) -> Ciphertext:
    if not params.in_subgroup(m):
        raise ValueError("message not in G_q")
    p = params.p_mod
    return Ciphertext(mod_exp(params.g, r, p), m * mod_exp(params.y, r, p) % p)


def decrypt(params: ElGamalParams, x: int, c: Ciphertext) -> int:
    p = params.p_mod
    return c.v * inverse(mod_exp(c.u, x, p), p) % p


def reencrypt(params: ElGamalParams, c: Ciphertext, r: int) -> Ciphertext:
    p = params.p_mod
    return Ciphertext(c.u * mod_exp(params.g, r, p) % p, c.v * mod_exp(params.y, r, p) % p)


def shuffle(params: ElGamalParams, inputs, witness: ShuffleWitness) -> list[Ciphertext]:
    n = len(inputs)
    if len(witness.perm) != n or len(witness.reenc) != n:
        raise ValueError(f"length mismatch: {n} inputs, witness for {len(witness.perm)}")
    return [reencrypt(params, inputs[j], r) for j, r in zip(witness.perm.map, witness.reenc)]


def random_permutation(n: int, rng: random.Random) -> Permutation:
    m = list(range(n))
    rng.shuffle(m)
    return Permutation(tuple(m))


def random_witness(params: ElGamalParams, n: int, rng: random.Random) -> ShuffleWitness:
    perm = random_permutation(n, rng)
    return ShuffleWitness(perm, tuple(rng.randrange(params.q) for _ in range(n)))


def plaintext_multiset(params: ElGamalParams, x: int, cts) -> Counter:
    return Counter(decrypt(params, x, c) for c in cts)


def ciphertexts_to_json(cts) -> list[dict]:
    return [{"u": str(c.u), "v": str(c.v)} for c in cts]


def ciphertexts_from_json(doc) -> list[Ciphertext]:
    return [Ciphertext(int(c["u"]), int(c["v"])) for c in doc]
