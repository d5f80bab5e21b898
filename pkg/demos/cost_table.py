"""Extra exponentiations each range-proof technique adds to one shuffle proof."""

from shufflelab.bigint_group import SecurityParams
from shufflelab.range_proofs import Technique, cost_model, measure_cost
from shufflelab.shuffle_proof import make_setup


def main():
    N, K3 = 10, 8
    setup = make_setup(SecurityParams(K3=K3), seed=5, elgamal_bits=512, group_bits=512)
    print(f"N={N}, K3={K3}")
    print(f"{'technique':14s} {'model':>8s} {'counted':>8s}")
    for tech in Technique:
        model = cost_model(tech, N, K3).extra_over_monotone
        counted = measure_cost(tech, setup.group, setup.K, N, K3)
        print(f"{tech.name:14s} {model:8d} {'-' if counted is None else counted:>8}")


if __name__ == "__main__":
    main()
