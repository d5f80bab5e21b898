"""The monotone test cannot bound rho: both attacks and the width threshold."""

from shufflelab.attack_lab import (
    monotone_attack_bounded,
    monotone_attack_upper,
    theorem1_experiment,
    theorem1_width,
)
from shufflelab.bigint_group import SecurityParams


def main():
    K = SecurityParams()
    print(f"K2={K.K2} K3={K.K3} K4={K.K4} K5={K.K5}; honest rho < {2 ** K.K3}, d must lie below {K.monotone_bound}")
    for rho in (17, 100, 1000):
        up = monotone_attack_upper(K, rho, 1000, rho)
        lo = monotone_attack_bounded(K, rho, 1000, rho)
        print(f"rho={rho:5d}: upper-bound attack {up.rate:.3f}, two-sided attack {lo.rate:.3f}")
    w = theorem1_width(K)
    wide = theorem1_experiment(K, 0, w, 1000, 0)
    narrow = theorem1_experiment(K, 8000, 8000 + w // 2, 10**5, 0)
    print(f"interval width {w}: forged rho={wide.details['rho']} passes {wide.rate:.3f}")
    print(f"interval width {w // 2}: honest pass rate {narrow.rate:.5f} (ceiling {narrow.analytic_bound:.5f}, 3-sigma limit {narrow.details['three_sigma_limit']:.5f})")


if __name__ == "__main__":
    main()
