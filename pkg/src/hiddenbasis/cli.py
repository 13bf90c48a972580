"""Command-line experiment harness.

Every subcommand prints (or writes) one deterministic report. Exit codes:
0 when every check passes, 1 when a check fails, 2 on configuration errors.

Parameters may come from a JSON config file (``--config``); explicit flags
override it. Randomness is drawn from per-experiment substreams derived
from ``--seed`` and a fixed label, so experiments never share a stream.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import zlib
from math import comb

import numpy as np

from . import phase_invariant as pi
from . import protocol, squashing
from .core import CHAIN_ATOL, MAX_DENSE_DIM, random_state
from .hidden_basis import HiddenBasisSpec, WeightBlockOperator, embed, weight_indices
from .phase_reference import GateSpec, H, ReferenceExhausted, make_reference, run_circuit

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "seed": 0,
    "format": "json",
    "output": None,
    "tol": CHAIN_ATOL,
    "n": 2,
    "w": 1,
    "d0": 2,
    "d1": 2,
    "trials": 10,
    "samples": 10_000,
    "t": 200,
    "l": 1,
    "theta": 0.0,
    "alpha": 1 / np.sqrt(2),
    "M": 8,
    "epsilon": 1 / 3,
    "r": 4,
    "s": 10,
    "prover": "honest",
    "r_primes": [4, 8, 16, 32, 64, 128, 256, 512],
    "blocks": None,
    "spec": None,
}


class ConfigError(ValueError):
    pass


def substream(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(label.encode())]))


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


# -- commands --------------------------------------------------------------------


def cmd_lift(cfg: dict) -> tuple[dict, bool]:
    rng = substream(cfg["seed"], "lift")
    if cfg["spec"]:
        with open(cfg["spec"]) as fh:
            spec = HiddenBasisSpec.from_json(fh.read())
    else:
        _require(cfg["d0"] >= 1 and cfg["d1"] >= 1, "d0 and d1 must be positive")
        spec = HiddenBasisSpec.random(cfg["d0"], cfg["d1"], rng)
    if cfg["blocks"]:
        with open(cfg["blocks"]) as fh:
            ops = [WeightBlockOperator.from_json(fh.read())]
        _require(ops[0].is_unitary(), "supplied weight blocks are not unitary")
        n = ops[0].n
    else:
        n = cfg["n"]
        _require(n >= 1, "n must be at least 1")
        ops = [WeightBlockOperator.random_unitary(n, rng) for _ in range(cfg["trials"])]
    _require(spec.d**n <= MAX_DENSE_DIM, f"(d0+d1)^n must not exceed {MAX_DENSE_DIM}")

    max_dev = max_unit = 0.0
    basis = np.eye(2**n, dtype=complex)
    for V in ops:
        lifted = pi.lift_unitary(V, spec).matrix
        max_unit = max(max_unit, float(np.abs(lifted @ lifted.conj().T - np.eye(lifted.shape[0])).max()))
        for col in basis:
            dev = np.linalg.norm(lifted @ embed(spec, col).amplitudes - embed(spec, V.apply(col)).amplitudes)
            max_dev = max(max_dev, float(dev))
    ok = max_dev <= cfg["tol"] and max_unit <= cfg["tol"]
    report = {
        "command": "lift",
        "n": n,
        "d0": spec.d0,
        "d1": spec.d1,
        "seed": cfg["seed"],
        "operators": len(ops),
        "max_deviation": max_dev,
        "max_unitarity_error": max_unit,
        "pass": ok,
    }
    return report, ok


def cmd_prep(cfg: dict) -> tuple[dict, bool]:
    n, w = cfg["n"], cfg["w"]
    _require(1 <= n <= 12, "n must lie in 1..12")
    _require(0 <= w <= n, "w must lie in 0..n")
    rng = substream(cfg["seed"], "prep")
    size = comb(n, w)
    min_fid = 1.0
    copies_ok = True
    for k in range(cfg["trials"] + 1):
        eta = np.full(size, 1 / np.sqrt(size), dtype=complex) if k == 0 else random_state(size, rng)
        circuit = pi.prepare_weight_state(eta, n, w)
        out = circuit.simulate().amplitudes[weight_indices(n, w)]
        min_fid = min(min_fid, abs(np.vdot(eta, out)))
        copies_ok &= circuit.copies == (n - w, w)

    sample_rng = substream(cfg["seed"], "prep-mixture")
    mixture = pi.binomial_mixture(n)
    counts = np.zeros(n + 1, dtype=int)
    ensemble = pi.phase_invariant_ensemble(mixture)
    probs = np.array([p for p, _, _ in ensemble])
    picks = sample_rng.choice(len(ensemble), size=cfg["samples"], p=probs / probs.sum())
    for idx in picks:
        counts[ensemble[idx][1]] += 1
    expected = np.array([comb(n, k) / 2**n for k in range(n + 1)]) * cfg["samples"]
    sigma = np.sqrt(expected * (1 - expected / cfg["samples"]))
    z = np.where(sigma > 0, np.abs(counts - expected) / np.where(sigma > 0, sigma, 1), 0.0)
    hist_ok = bool(z.max() <= 3.0)

    ok = min_fid >= 1 - cfg["tol"] and copies_ok and hist_ok
    report = {
        "command": "prep",
        "n": n,
        "w": w,
        "seed": cfg["seed"],
        "targets": cfg["trials"] + 1,
        "min_fidelity": float(min_fid),
        "copies": {"zero": n - w, "one": w},
        "copies_ok": bool(copies_ok),
        "mixture_samples": cfg["samples"],
        "weight_histogram": counts.tolist(),
        "max_z_score": float(z.max()),
        "histogram_ok": hist_ok,
        "symmetric_circuit": pi.prepare_weight_state(np.full(size, 1 / np.sqrt(size)), n, w).to_dict(),
        "pass": bool(ok),
    }
    return report, bool(ok)


def cmd_hadamard_chain(cfg: dict) -> tuple[dict, bool]:
    t, l = cfg["t"], cfg["l"]
    _require(t >= 3, "t must be at least 3")
    _require(l >= 0, "l must be non-negative")
    _require(2 * l < t, f"reference exhausted: need t > 2l (t={t}, l={l})")
    _require(0 <= cfg["alpha"] <= 1, "alpha must lie in [0, 1]")
    gates = []
    for k in range(l):
        if k:
            gates.append(GateSpec("Z", (0,)))
        gates.append(H(0, cfg["alpha"]))
    try:
        rep = run_circuit(np.array([1, 0], dtype=complex), gates, make_reference(cfg["theta"], t))
    except ReferenceExhausted as exc:
        raise ConfigError(str(exc)) from exc
    report = {"command": "hadamard-chain", **rep.to_dict()}
    ok = rep.final_fidelity >= rep.bound - 1e-12
    report["pass"] = bool(ok)
    return report, bool(ok)


def cmd_id_protocol(cfg: dict) -> tuple[dict, bool]:
    r, s, prover = cfg["r"], cfg["s"], cfg["prover"]
    _require(prover in protocol.PROVERS, f"prover must be one of {protocol.PROVERS}")
    _require(s >= 1, "s must be positive")
    _require(r >= (4 if prover == "eve" else 1), "r must be at least 4 when Eve attacks (r' = r - 1 >= 3)")
    rep = protocol.run_session(r, s, prover)
    report = {"command": "id-protocol", **rep.to_dict()}
    if prover == "honest":
        ok = abs(rep.accept_prob - 1.0) <= 1e-12
    else:
        ok = rep.kernel_pass_prob < 1.0 and abs(rep.accept_prob - rep.kernel_pass_prob**s) <= 1e-12
    report["pass"] = bool(ok)
    return report, bool(ok)


def cmd_attack_sweep(cfg: dict) -> tuple[dict, bool]:
    r_primes = [int(r) for r in cfg["r_primes"]]
    _require(len(r_primes) >= 2 and min(r_primes) >= 3, "need at least two r' values, each >= 3")
    curve = protocol.attack_curve(r_primes)
    passes = [p for _, p in curve]
    slope = protocol.failure_slope(curve)
    ok = all(p < 1 for p in passes) and all(a < b for a, b in zip(passes, passes[1:])) and -1.3 <= slope <= -0.7
    report = {
        "command": "attack-sweep",
        "rows": [{"r_prime": r, "pass_prob": p} for r, p in curve],
        "loglog_slope": slope,
        "pass": bool(ok),
    }
    return report, bool(ok)


def cmd_squash(cfg: dict) -> tuple[dict, bool]:
    M, t, eps = cfg["M"], cfg["t"], cfg["epsilon"]
    _require(M > 4, "M must exceed 4")
    _require(0 < eps < 0.5, "epsilon must lie in (0, 1/2)")
    _require(t >= 1, "t must be positive")
    _require(M**t <= MAX_DENSE_DIM, f"M^t must not exceed {MAX_DENSE_DIM}")
    rep = squashing.verify_chain(M, t, eps)
    ok = rep.dense_check_pass and abs(rep.target_distance - 1) <= 1e-10
    report = {"command": "squash", **rep.to_dict(), "pass": bool(ok)}
    report["_csv"] = squashing.chain_csv([rep])
    return report, bool(ok)


def cmd_forge(cfg: dict) -> tuple[dict, bool]:
    n = cfg["n"]
    _require(1 <= n <= 8, "n must lie in 1..8")
    rep = protocol.forge_signature_mixture(protocol.product_signature(n), n)
    ok = rep.max_invariant_gap <= 1e-10 and rep.control_gap >= 0.1
    report = {"command": "forge", **rep.to_dict(), "pass": bool(ok)}
    return report, bool(ok)


COMMANDS = {
    "lift": cmd_lift,
    "prep": cmd_prep,
    "hadamard-chain": cmd_hadamard_chain,
    "id-protocol": cmd_id_protocol,
    "attack-sweep": cmd_attack_sweep,
    "squash": cmd_squash,
    "forge": cmd_forge,
}


# -- plumbing ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiddenbasis", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with parameters; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--output", help="write the report here instead of stdout")
        p.add_argument("--tol", type=float, help="tolerance override for exact checks")

    p = sub.add_parser("lift", help="check the physical lift of phase-invariant unitaries")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--d0", type=int)
    p.add_argument("--d1", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--blocks", help="WeightBlockOperator JSON to lift instead of random ones")
    p.add_argument("--spec", help="HiddenBasisSpec JSON instead of a random spec")

    p = sub.add_parser("prep", help="exact weight-state preparation and the binomial mixture")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--w", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("hadamard-chain", help="l reference-driven Hadamards alternating with Z")
    common(p)
    p.add_argument("--t", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--alpha", type=float)

    p = sub.add_parser("id-protocol", help="identification session with an honest or attacking prover")
    common(p)
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--prover", choices=protocol.PROVERS)

    p = sub.add_parser("attack-sweep", help="Eve's kernel pass probability against r'")
    common(p)
    p.add_argument("--r-primes", dest="r_primes", type=int, nargs="+")

    p = sub.add_parser("squash", help="A2 trace-distance chain and copy bound")
    common(p)
    p.add_argument("--M", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--epsilon", type=float)

    p = sub.add_parser("forge", help="phase-invariant forgery of a product signature")
    common(p)
    p.add_argument("--n", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            cfg[key] = value
    return cfg


def _csv_text(report: dict) -> str:
    if "_csv" in report:
        return report["_csv"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if "rows" in report:
        cols = list(report["rows"][0])
        writer.writerow(cols)
        for row in report["rows"]:
            writer.writerow([squashing._fmt(row[c]) for c in cols])
        return buf.getvalue()
    flat = {k: v for k, v in report.items() if not isinstance(v, (dict, list))}
    writer.writerow(list(flat))
    writer.writerow([squashing._fmt(v) for v in flat.values()])
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "csv":
        return _csv_text(report)
    clean = {k: v for k, v in report.items() if not k.startswith("_")}
    return json.dumps(clean, indent=2, sort_keys=False) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        report, ok = COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, OSError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "command": args.command}) + "\n")
        return EXIT_CONFIG
    text = render(report, cfg["format"])
    if cfg["output"]:
        with open(cfg["output"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
