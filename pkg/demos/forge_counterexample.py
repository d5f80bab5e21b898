"""Tamper with a shuffle and still pass verification.

Both known sum/product counterexamples are used against the three
monotone-test modes, then against FIXED, which rejects them.
Groups are 512-bit.
"""

import math

from shufflelab.attack_lab import KNOWN_VECTORS, attempt_fixed_forgery, forge_transcript
from shufflelab.bigint_group import SecurityParams
from shufflelab.shuffle_core import plaintext_multiset
from shufflelab.shuffle_proof import honest_instance, make_setup


def main():
    setup = make_setup(SecurityParams(), seed=7, elgamal_bits=512, group_bits=512)
    for name, vec in KNOWN_VECTORS.items():
        print(f"{name}: p = {vec.p}")
        print(f"  rho = {vec.rho}")
        print(f"  sums {sum(vec.p)} = {sum(vec.rho)}, products {math.prod(vec.p)} = {math.prod(vec.rho)}")
        inst, _, _ = honest_instance(setup, vec.N, 1)
        for mode in ("ORIGINAL", "MP2", "MSBMT"):
            f = forge_transcript(inst, vec, mode, 1)
            out = plaintext_multiset(setup.elgamal, setup.secret_key, f.instance.outputs)
            changed = sum((out - plaintext_multiset(setup.elgamal, setup.secret_key, inst.inputs)).values())
            print(f"  {mode:8s} accepted={f.verdict.accepted}  plaintexts replaced: {changed}")
        fixed = attempt_fixed_forgery(inst, vec, 1)
        print(f"  FIXED    accepted={fixed.verdict.accepted}  failed: {', '.join(fixed.verdict.failed)}")


if __name__ == "__main__":
    main()
