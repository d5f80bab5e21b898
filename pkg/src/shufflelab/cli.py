"""Command-line harness: ``shufflelab {prove,verify,attack,search,bench,experiment}``.

Exit codes: 0 when a proof is accepted or an attack/experiment behaves as
predicted, 1 otherwise, 2 for a bad configuration (nothing is written).
Reports are canonical JSON (sorted keys) written atomically; ``bench`` also
writes a CSV next to the JSON file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .attack_lab import (
    KNOWN_VECTORS,
    AttackNotApplicable,
    attempt_fixed_forgery,
    correctness_failure_experiment,
    dilemma_diagnostics,
    forge_transcript,
    monotone_attack_bounded,
    monotone_attack_upper,
    permutation_forcing_check,
    search_counterexamples,
    tamper_demo,
    theorem1_experiment,
)
from .bigint_group import SecurityParams
from .range_proofs import Technique, cost_model, measure_cost
from .shuffle_proof import (
    MalformedTranscript,
    ProofMode,
    ShuffleInstance,
    Transcript,
    honest_instance,
    make_setup,
    run_protocol,
    verify,
)

ATTACKS = ("sum-product", "monotone-upper", "monotone-bounded", "theorem1", "correctness")
EXPERIMENTS = ("completeness", "correctness", "dilemma", "permutation-forcing", "tamper")

# flag name -> (default, type)
_DEFAULTS = {
    "mode": ("MP2", str),
    "k2": (8, int),
    "k3": (4, int),
    "k4": (4, int),
    "k5": (6, int),
    "n": (4, int),
    "trials": (1000, int),
    "seed": (0, int),
    "out": (None, str),
    "bits": (64, int),
    "attack": ("sum-product", str),
    "experiment": ("completeness", str),
    "example": ("all-twos", str),
    "rho": (None, int),
    "A": (None, int),
    "B": (None, int),
    "p": (None, str),
    "budget": (10**6, int),
    "range_rounds": (None, int),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    params: SecurityParams
    N: int
    mode: ProofMode
    seed: int
    trials: int
    output_path: str | None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "params": self.params.to_json(),
            "N": self.N,
            "mode": self.mode.value,
            "seed": self.seed,
            "trials": self.trials,
            **{k: v for k, v in self.extra.items() if v is not None},
        }


def build_config(args) -> RunConfig:
    """Merge defaults, the ``--config`` file and explicit flags (flags win)."""
    file_values = {}
    if getattr(args, "config", None):
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_values) - set(_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = {}
    for key, (default, typ) in _DEFAULTS.items():
        value = getattr(args, key, None)
        if value is None:
            value = file_values.get(key, default)
        try:
            merged[key] = None if value is None else typ(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    for key in ("n", "trials", "bits", "budget"):
        if merged[key] < 1:
            raise ConfigError(f"{key} must be positive")
    if merged["seed"] < 0:
        raise ConfigError("seed must be non-negative")
    try:
        K = SecurityParams(K2=merged["k2"], K3=merged["k3"], K4=merged["k4"], K5=merged["k5"])
        mode = ProofMode(merged["mode"].upper())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    extra = {k: merged[k] for k in ("bits", "attack", "experiment", "example", "rho", "A", "B", "p", "budget", "range_rounds")}
    return RunConfig(args.command, K, merged["n"], mode, merged["seed"], merged["trials"], merged["out"], extra)


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_atomic(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(cfg: RunConfig, doc: dict, extra_files: dict[str, str] | None = None) -> None:
    text = canonical_json(doc)
    if cfg.output_path:
        write_atomic(cfg.output_path, text)
        for path, body in (extra_files or {}).items():
            write_atomic(path, body)
    else:
        sys.stdout.write(text)


# -- commands ------------------------------------------------------------------


def _setup(cfg: RunConfig):
    return make_setup(cfg.params, cfg.seed, elgamal_bits=cfg.extra["bits"], group_bits=cfg.extra["bits"])


def cmd_prove(cfg: RunConfig):
    setup = _setup(cfg)
    instance, witness, _ = honest_instance(setup, cfg.N, cfg.seed)
    run = run_protocol(instance, witness, cfg.mode, cfg.seed, cfg.extra["range_rounds"])
    doc = {"config": cfg.to_json(), "instance": instance.to_json(), **run.to_json()}
    return doc, 0 if run.verdict.accepted else 1


def cmd_verify(cfg: RunConfig, path: str, mode_given: bool):
    try:
        doc = json.loads(Path(path).read_text())
        instance = ShuffleInstance.from_json(doc["instance"])
        primes = [int(p) for p in doc["primes"]]
        transcript = Transcript.from_json(doc["transcript"])
        mode = cfg.mode if mode_given else ProofMode(doc["config"]["mode"])
        rounds = cfg.extra["range_rounds"] or doc.get("config", {}).get("range_rounds")
        verdict = verify(instance, primes, transcript, mode, rounds)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, MalformedTranscript) as exc:
        raise ConfigError(f"cannot verify {path}: {exc}") from exc
    out = {"transcript_file": Path(path).name, "mode": mode.value, "verdict": verdict.to_json()}
    return out, 0 if verdict.accepted else 1


def _sum_product(cfg: RunConfig):
    if cfg.extra["example"] not in KNOWN_VECTORS:
        raise ConfigError(f"unknown example {cfg.extra['example']!r}; choose from {sorted(KNOWN_VECTORS)}")
    vec = KNOWN_VECTORS[cfg.extra["example"]]
    setup = _setup(cfg)
    instance, _, _ = honest_instance(setup, vec.N, cfg.seed)
    if cfg.mode is ProofMode.FIXED:
        forgery = attempt_fixed_forgery(instance, vec, cfg.seed, cfg.extra["range_rounds"])
        predicted = not forgery.verdict.accepted
    else:
        forgery = forge_transcript(instance, vec, cfg.mode, cfg.seed)
        predicted = forgery.verdict.accepted
    doc = {
        "attack_name": "sum-product",
        "example": cfg.extra["example"],
        "mode": cfg.mode.value,
        "params": forgery.instance.K.to_json(),
        "seed": cfg.seed,
        "vector": vec.to_json(),
        "primes": [str(p) for p in forgery.run.primes],
        "verdict": forgery.verdict.to_json(),
        "behaved_as_predicted": predicted,
    }
    return doc, 0 if predicted else 1


def _binomial_ok(rate, p, trials, floor=0.0):
    return abs(rate - p) <= max(floor, 4 * math.sqrt(p * (1 - p) / trials))


def cmd_attack(cfg: RunConfig):
    name, K, x = cfg.extra["attack"], cfg.params, cfg.extra
    if name not in ATTACKS:
        raise ConfigError(f"unknown attack {name!r}; choose from {ATTACKS}")
    if name == "sum-product":
        return _sum_product(cfg)
    if name in ("monotone-upper", "monotone-bounded"):
        rho = x["rho"] if x["rho"] is not None else (1 << K.K3) + 1
        fn = monotone_attack_upper if name == "monotone-upper" else monotone_attack_bounded
        report = fn(K, rho, cfg.trials, cfg.seed)
        ok = report.rate == 1.0
    elif name == "theorem1":
        A = x["A"] if x["A"] is not None else 0
        B = x["B"] if x["B"] is not None else A + (1 << K.K3) * ((1 << K.K4) - 1 - (1 << (K.K4 - 1)))
        report = theorem1_experiment(K, A, B, cfg.trials, cfg.seed)
        if report.details["branch"] == "attack":
            ok = report.rate == 1.0
        else:
            ok = report.rate <= report.details["three_sigma_limit"]
    else:
        report = correctness_failure_experiment(K, cfg.trials, cfg.seed, cfg.N, _setup(cfg))
        ok = report.details["mp2_rejections"] == 0 and _binomial_ok(report.rate, report.analytic_bound, cfg.trials, 0.02)
    doc = report.to_json()
    doc["behaved_as_predicted"] = ok
    return doc, 0 if ok else 1


def _parse_primes(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad prime list {text!r}") from exc


def cmd_search(cfg: RunConfig):
    if cfg.extra["p"]:
        p = _parse_primes(cfg.extra["p"])
    elif cfg.extra["example"] in KNOWN_VECTORS:
        p = list(KNOWN_VECTORS[cfg.extra["example"]].p)
    else:
        raise ConfigError(f"unknown example {cfg.extra['example']!r}")
    found = search_counterexamples(p, cfg.extra["budget"])
    doc = {"p": p, "budget": cfg.extra["budget"], "count": len(found), "vectors": [list(v.rho) for v in found]}
    return doc, 0


def cmd_bench(cfg: RunConfig):
    K3 = cfg.params.K3
    setup = _setup(cfg)
    rows = []
    for tech in Technique:
        profile = cost_model(tech, cfg.N, K3)
        measured = measure_cost(tech, setup.group, cfg.params, cfg.N, K3, seed=cfg.seed)
        rows.append({**profile.to_json(), "instrumented": measured})
    doc = {"N": cfg.N, "K3": K3, "rows": rows}
    buf = io.StringIO()
    writer = csv.DictWriter(buf, ["technique", "exponentiations", "extra_over_monotone", "instrumented"], lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    extra = {}
    if cfg.output_path:
        extra[str(Path(cfg.output_path).with_suffix(".csv"))] = buf.getvalue()
    ok = all(r["instrumented"] in (None, r["exponentiations"]) for r in rows)
    return doc, 0 if ok else 1, extra


def cmd_experiment(cfg: RunConfig):
    name, K = cfg.extra["experiment"], cfg.params
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
    if name == "completeness":
        setup = _setup(cfg)
        accepted = 0
        for i in range(cfg.trials):
            instance, witness, _ = honest_instance(setup, cfg.N, cfg.seed * 1_000_003 + i)
            accepted += run_protocol(instance, witness, cfg.mode, cfg.seed * 1_000_003 + i, cfg.extra["range_rounds"]).verdict.accepted
        doc = {"experiment": name, "mode": cfg.mode.value, "params": K.to_json(), "trials": cfg.trials, "accepted": accepted}
        return doc, 0 if accepted == cfg.trials else 1
    if name == "correctness":
        report = correctness_failure_experiment(K, cfg.trials, cfg.seed, cfg.N, _setup(cfg))
        ok = report.details["mp2_rejections"] == 0 and _binomial_ok(report.rate, report.analytic_bound, cfg.trials, 0.02)
    elif name == "dilemma":
        report = dilemma_diagnostics(K, cfg.trials, cfg.seed, cfg.extra["rho"])
        d = report.details
        ok = d["monotone_in_rho"] and d["mask_chi2"] < d["mask_chi2_limit"] and d["tail_mass_empirical"] < d["tail_mass_uniform"]
    elif name == "permutation-forcing":
        found = permutation_forcing_check(K.K3, cfg.N)
        doc = {"experiment": name, "K3": K.K3, "N": cfg.N, "solutions": [[list(p), list(r)] for p, r in found]}
        return doc, 0 if not found else 1
    else:
        report = tamper_demo(_setup(cfg), cfg.trials, cfg.seed, mode=cfg.mode, N=cfg.N)
        ok = _binomial_ok(report.rate, report.analytic_bound, cfg.trials)
    doc = report.to_json()
    doc["behaved_as_predicted"] = ok
    return doc, 0 if ok else 1


# -- argument parsing --------------------------------------------------------------


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", help="ORIGINAL, MP2, MSBMT or FIXED (default MP2)")
    for k in ("k2", "k3", "k4", "k5"):
        parser.add_argument(f"--{k}", type=int)
    parser.add_argument("--n", type=int, help="batch size N")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="report path (stdout when omitted)")
    parser.add_argument("--config", help="JSON file with any of the flag values")
    parser.add_argument("--bits", type=int, help="modulus size of both groups")
    parser.add_argument("--range-rounds", dest="range_rounds", type=int, help="FIXED mode range-proof repetitions")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shufflelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("prove", help="run the protocol on a fresh honest shuffle"))
    p = sub.add_parser("verify", help="re-verify a transcript written by prove")
    _common(p)
    p.add_argument("transcript")
    p = sub.add_parser("attack", help="run one attack")
    _common(p)
    p.add_argument("--attack", choices=ATTACKS)
    p.add_argument("--example", help=f"sum-product vector: {', '.join(KNOWN_VECTORS)}")
    p.add_argument("--rho", type=int)
    p.add_argument("--A", dest="A", type=int)
    p.add_argument("--B", dest="B", type=int)
    p = sub.add_parser("search", help="search sum/product counterexamples")
    _common(p)
    p.add_argument("--p", help="comma-separated primes (default: --example)")
    p.add_argument("--example")
    p.add_argument("--budget", type=int)
    _common(sub.add_parser("bench", help="range-proof cost table"))
    p = sub.add_parser("experiment", help="run one experiment")
    _common(p)
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--rho", type=int)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    extra_files = None
    try:
        cfg = build_config(args)
        if cfg.command == "prove":
            doc, code = cmd_prove(cfg)
        elif cfg.command == "verify":
            doc, code = cmd_verify(cfg, args.transcript, args.mode is not None)
        elif cfg.command == "attack":
            doc, code = cmd_attack(cfg)
        elif cfg.command == "search":
            doc, code = cmd_search(cfg)
        elif cfg.command == "bench":
            doc, code, extra_files = cmd_bench(cfg)
        else:
            doc, code = cmd_experiment(cfg)
    except (ConfigError, AttackNotApplicable, ValueError) as exc:
        print(f"shufflelab: error: {exc}", file=sys.stderr)
        return 2
    _emit(cfg, doc, extra_files)
    return code


if __name__ == "__main__":
    sys.exit(main())
