"""Command-line front end.

Config files are JSON documents::

    {"vectors": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "r": 0.0, "seed": 0, "trials": 100000}

Exit codes: 0 success/feasible, 1 infeasible, 2 degenerate, 3 parse or usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateTriple, Infeasible, KingError, ROutOfRange
from .povm import (
    LABELS,
    PATTERN_NAMES,
    SIGNS,
    TABLE_ROWS,
    CoefficientSet,
    PovmSet,
    VectorTriple,
    build_povm,
    feasibility,
    random_triples,
    tilted_planar_triple,
    verify_povm,
)
from .protocol import (
    ProtocolConfig,
    alice_measure,
    bob_outcome_probability,
    infer,
    run,
    streams,
)
from .states import bob_post_state

EXIT_OK, EXIT_INFEASIBLE, EXIT_DEGENERATE, EXIT_USAGE = 0, 1, 2, 3

DEFAULT_TRIALS = 100_000

SWEEP_HEADER = (
    ["n1x", "n1y", "n1z", "n2x", "n2y", "n2z", "n3x", "n3y", "n3z"]
    + [f"norm{p}" for p in PATTERN_NAMES]
    + ["feasible", "fcon1", "r_lo", "r_hi"]
)


class ConfigError(Exception):
    pass


@dataclass
class RunConfigFile:
    triple: VectorTriple
    r: float = 0.0
    seed: int = 0
    trials: int = DEFAULT_TRIALS


def _number(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{what} must be a finite number, got {value!r}")
    return value


def parse_config(text: str) -> RunConfigFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "vectors" not in doc:
        raise ConfigError("config must be an object with a 'vectors' key")
    vecs = doc["vectors"]
    if not (isinstance(vecs, list) and len(vecs) == 3 and all(isinstance(v, list) and len(v) == 3 for v in vecs)):
        raise ConfigError("'vectors' must be three numeric triples")
    vecs = [[_number(x, "vector component") for x in v] for v in vecs]
    try:
        triple = VectorTriple(vecs)
    except KingError as exc:
        raise ConfigError(str(exc)) from None
    r = float(_number(doc.get("r", 0.0), "r"))
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    trials = doc.get("trials", DEFAULT_TRIALS)
    if isinstance(trials, bool) or not isinstance(trials, int) or trials <= 0:
        raise ConfigError("trials must be a positive integer")
    return RunConfigFile(triple, r, seed, trials)


def load_config(path: str) -> RunConfigFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _write(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------- POVM files


def povm_to_dict(p: PovmSet) -> dict:
    diag = verify_povm(p)
    return {
        "vectors": p.triple.vectors.tolist(),
        "r": p.r,
        "basis": ["++", "+-", "-+", "--"],
        "elements": [
            {
                "label": label,
                "C": float(p.coefficients.c[i]),
                "S": SIGNS[i].tolist(),
                "matrix": [[float(z.real), float(z.imag)] for z in p.elements[i].ravel()],
            }
            for i, label in enumerate(LABELS)
        ],
        "metadata": {
            "completeness_residual": diag.completeness_residual,
            "min_eigenvalues": dict(zip(LABELS, diag.min_eigenvalues.tolist())),
        },
    }


def emit_povm(p: PovmSet) -> str:
    return _dumps(povm_to_dict(p))


def parse_povm(text: str) -> PovmSet:
    """Rebuild a PovmSet from :func:`emit_povm` output (matrices are taken as
    stored, not recomputed)."""
    doc = json.loads(text)
    records = doc["elements"]
    if [rec["label"] for rec in records] != list(LABELS):
        raise ValueError("POVM file must list elements A..H in order")
    elements = np.array(
        [np.array([complex(re, im) for re, im in rec["matrix"]]).reshape(4, 4) for rec in records]
    )
    triple = VectorTriple(doc["vectors"])
    coeffs = CoefficientSet(r=float(doc["r"]), c=np.array([rec["C"] for rec in records], dtype=float))
    return PovmSet(triple=triple, coefficients=coeffs, elements=elements)


# ---------------------------------------------------------------- commands


def _feasible_povm(cfg: RunConfigFile) -> PovmSet:
    return build_povm(cfg.triple, cfg.r)


def _report_text(report) -> str:
    lines = [
        f"degeneracy: {report.degeneracy}",
        "sign norms: " + ", ".join(f"|n1{p[0]}n2{p[1]}n3| = {v:.12g}" for p, v in zip(PATTERN_NAMES, report.sign_norms)),
        f"min sign norm: {report.min_sign_norm:.12g}",
        f"fcon1 (sum of |n_i.n_j| < 1): {report.fcon1_holds}",
        "r interval: " + (f"[{report.r_interval[0]:.12g}, {report.r_interval[1]:.12g}]" if report.r_interval else "empty"),
        f"feasible: {report.feasible}",
    ]
    return "\n".join(lines) + "\n"


def _exit_for(report) -> int:
    if report.degeneracy != "independent":
        return EXIT_DEGENERATE
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_check(args) -> int:
    cfg = _load(args)
    report = feasibility(cfg.triple)
    if args.json:
        _write(_dumps({"vectors": cfg.triple.vectors.tolist(), **report.as_dict()}), args.out)
    else:
        _write(_report_text(report), args.out)
    return _exit_for(report)


def cmd_povm(args) -> int:
    cfg = _load(args)
    p = _feasible_povm(cfg)
    _write(emit_povm(p), args.out)
    return EXIT_OK


def simulation_document(cfg: RunConfigFile, bob_choice: Optional[int] = None) -> dict:
    stats, _ = run(ProtocolConfig(cfg.triple, cfg.r, cfg.seed, cfg.trials, bob_choice))
    empirical = stats.empirical()
    rows = []
    for k, beta in TABLE_ROWS:
        b = 0 if beta == 1 else 1
        rows.append(
            {
                "k": k,
                "beta": beta,
                "trials": int(stats.cell_totals()[k - 1, b]),
                "counts": dict(zip(LABELS, stats.counts[k - 1, b].tolist())),
                "exact": dict(zip(LABELS, stats.exact[k - 1, b].tolist())),
                "empirical": dict(
                    zip(LABELS, [None if math.isnan(v) else v for v in empirical[k - 1, b].tolist()])
                ),
            }
        )
    return {
        "seed": cfg.seed,
        "trials": cfg.trials,
        "r": cfg.r,
        "bob_choice": bob_choice,
        "vectors": cfg.triple.vectors.tolist(),
        "accuracy": stats.accuracy,
        "max_z_score": float(np.max(stats.z_scores())),
        "within_5_sigma": stats.within_binomial_bounds(5.0),
        "table": rows,
    }


def cmd_simulate(args) -> int:
    cfg = _load(args)
    _feasible_povm(cfg)
    _write(_dumps(simulation_document(cfg, args.k)), args.out)
    return EXIT_OK


def parse_eps_range(spec: str) -> np.ndarray:
    try:
        a, b, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ConfigError(f"--eps-range must be A:B:STEP, got {spec!r}") from None
    if step <= 0 or b < a:
        raise ConfigError("--eps-range needs STEP > 0 and B >= A")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(count)


def sweep_rows(triples) -> list[list]:
    rows = []
    for t in triples:
        rep = feasibility(t)
        lo, hi = rep.r_interval if rep.r_interval else ("", "")
        rows.append(
            [repr(float(x)) for x in np.asarray(t.vectors).ravel()]
            + [repr(v) for v in rep.sign_norms]
            + [int(rep.feasible), int(rep.fcon1_holds)]
            + [repr(lo) if lo != "" else "", repr(hi) if hi != "" else ""]
        )
    return rows


def sweep_csv(triples) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    writer.writerows(sweep_rows(triples))
    return buf.getvalue()


def sweep_triples(family: str, eps_range: str = "0:0.5:0.05", count: int = 1000, seed: int = 0) -> list[VectorTriple]:
    if family == "tilted-planar":
        return [tilted_planar_triple(eps) for eps in parse_eps_range(eps_range)]
    if family == "random-uniform":
        (rng,) = streams(seed, 1)
        return [VectorTriple(v) for v in random_triples(rng, count)]
    raise ConfigError(f"unknown sweep family {family!r} (use tilted-planar or random-uniform)")


def cmd_sweep(args) -> int:
    if args.count is not None and args.count <= 0:
        raise ConfigError("--count must be positive")
    triples = sweep_triples(
        args.family,
        eps_range=args.eps_range,
        count=args.count if args.count is not None else 1000,
        seed=args.seed if args.seed is not None else 0,
    )
    _write(sweep_csv(triples), args.out)
    return EXIT_OK


PLAY_HELP = "enter k (1-3), optionally followed by a forced beta (+1/-1); 'quit' to leave"


def play_session(cfg: RunConfigFile, stdin, stdout) -> int:
    """Interactive rounds: the user is Bob, the program is Alice."""
    povm = _feasible_povm(cfg)
    rng = streams(cfg.seed, 1)[0]
    stdout.write(f"Alice holds her POVM (r = {cfg.r}). {PLAY_HELP}\n")
    rounds = 0
    while True:
        stdout.write("bob> ")
        stdout.flush()
        line = stdin.readline()
        if not line:
            stdout.write("\n")
            return EXIT_OK
        words = line.split()
        if not words:
            continue
        if words[0].lower() in ("q", "quit", "exit"):
            stdout.write(f"bye after {rounds} round(s)\n")
            return EXIT_OK
        try:
            k = int(words[0])
            forced = int(float(words[1])) if len(words) > 1 else None
        except ValueError:
            stdout.write(f"not a number. {PLAY_HELP}\n")
            continue
        if k not in (1, 2, 3) or forced not in (None, 1, -1) or len(words) > 2:
            stdout.write(f"out of range. {PLAY_HELP}\n")
            continue
        n = povm.triple.vectors[k - 1]
        if forced is None:
            beta = 1 if rng.random() < bob_outcome_probability(n, 1) else -1
        else:
            beta = forced
        label = alice_measure(bob_post_state(n, beta), povm, rng)
        guess = infer(label, k)
        rounds += 1
        stdout.write(
            f"Bob measured n{k}.sigma and got {beta:+d}; Alice's outcome: {label}\n"
            f"told k = {k}, Alice infers beta = {guess:+d}: {'correct' if guess == beta else 'WRONG'}\n"
        )


def cmd_play(args) -> int:
    cfg = _load(args)
    return play_session(cfg, sys.stdin, sys.stdout)


# ---------------------------------------------------------------- entry point


def _load(args) -> RunConfigFile:
    if args.config is None:
        raise ConfigError("--config PATH is required")
    cfg = load_config(args.config)
    if getattr(args, "r", None) is not None:
        cfg.r = args.r
    if getattr(args, "seed", None) is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    if getattr(args, "trials", None) is not None:
        if args.trials <= 0:
            raise ConfigError("--trials must be positive")
        cfg.trials = args.trials
    return cfg


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="meanking", description="King's problem with non-orthogonal spin observables.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, r=True, seed=True, trials=False, out=True):
        p.add_argument("--config", metavar="PATH")
        if out:
            p.add_argument("--out", metavar="PATH")
        if r:
            p.add_argument("--r", type=float)
        if seed:
            p.add_argument("--seed", type=int)
        if trials:
            p.add_argument("--trials", type=int)

    p = sub.add_parser("check", help="feasibility report")
    common(p, r=False, seed=False)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("povm", help="emit the eight POVM elements")
    common(p, seed=False)
    p.set_defaults(func=cmd_povm)

    p = sub.add_parser("simulate", help="Monte Carlo run of the protocol")
    common(p, trials=True)
    p.add_argument("--k", type=int, choices=(1, 2, 3), help="fix Bob's choice")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="CSV feasibility sweep over a family of triples")
    p.add_argument("--family", required=True, metavar="NAME")
    p.add_argument("--eps-range", default="0:0.5:0.05", metavar="A:B:STEP")
    p.add_argument("--count", type=int, metavar="N")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("play", help="interactive round: you are Bob")
    common(p, out=False)
    p.set_defaults(func=cmd_play)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except DegenerateTriple as exc:
        sys.stderr.write(f"degenerate: {exc}\n")
        return EXIT_DEGENERATE
    except Infeasible as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except ROutOfRange as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
