"""Honest provers fail ORIGINAL mode once masks are short; MP2 never does."""

from shufflelab.attack_lab import correctness_failure_experiment, overflow_probability
from shufflelab.bigint_group import SecurityParams
from shufflelab.shuffle_proof import make_setup


def main():
    setup = make_setup(SecurityParams(), seed=3, elgamal_bits=512, group_bits=512)
    print(" K5  analytic  observed  MP2 rejections")
    for k5 in (2, 6, 20):
        K = SecurityParams(K5=k5)
        r = correctness_failure_experiment(K, 300, 0, setup=setup)
        print(f"{k5:3d}  {r.analytic_bound:8.4f}  {r.rate:8.4f}  {r.details['mp2_rejections']}")
    fams = overflow_probability(SecurityParams(K5=2), 4)["families"]
    print("per-response overflow at K5=2:", {k: round(v, 4) for k, v in fams.items()})


if __name__ == "__main__":
    main()
