"""Command line front end: benchmark runs, guarantee verification, single traces.

Subcommands:
  bench   run the Monte Carlo comparison and write error/level tables plus
          boxplot statistics of the sequential rule (CSV or JSON)
  verify  run the identity, ordering, frequency, and bound checks and write a
          pass/fail report; exit status is nonzero when any check fails
  single  run one replicate and dump its full diagnostics, including the
          per-m trace of the residual rule

Output files carry a comment header with the full configuration, numbers are
written with shortest round-trip precision, and reruns with identical flags
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .montecarlo import (
    ExperimentConfig,
    ExperimentSummary,
    counterexample_tail_prob,
    example1_frequency,
    prop2_check,
    run_experiment,
    summarize,
    theorem_frequency,
)
from .problems import PROBLEM_NAMES, ProblemSpec, make_problem
from .rules import (
    RULE_NAMES,
    RuleConfig,
    balancing,
    combined,
    constants,
    det_strong,
    det_weak,
    dp_at_m,
    dp_modified,
    early_stop,
    lepski_direct,
    oracle_strong,
    oracle_weak,
    select_all,
)
from .sequence_model import NoiseModel, NoisyObservation, observe

PRESETS = {"paper": (5000, 1000), "desk": (1024, 200)}

ERRORS_HEADER = "delta,rule,mean_error,std_error"
KS_HEADER = "delta,rule,mean_k,std_k"
BOXPLOT_HEADER = "delta,median,q25,q75,whisker_lo,whisker_hi,n_outliers"


def _fmt(x) -> str:
    """Shortest decimal that round-trips the value."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# verification checks


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_lepski_dp_identity(
    instances: int = 1000, D: int = 256, delta: float = 0.1, fudge: float = 1.5,
    seed: int = 424242,
) -> CheckResult:
    """The comparison rule and the maximized residual rule must coincide when
    all singular values are one and the fudge parameters agree."""
    p = make_problem(ProblemSpec("direct", D))
    model = NoiseModel("gaussian")
    agree = 0
    for i in range(instances):
        obs = observe(p, delta, model, seed + i)
        agree += lepski_direct(obs, fudge, p.sigma) == dp_modified(obs, fudge, D).k
    return CheckResult(
        "lepski_dp_identity",
        agree == instances,
        f"{agree}/{instances} exact agreements (D={D}, delta={delta}, fudge={fudge})",
    )


def dp_modified_bruteforce(y_obs: np.ndarray, delta: float, tau: float, m_cap: int) -> int:
    """Literal per-m evaluation of the maximized residual rule.

    For every m the suffix sums of the first m squared coefficients are built
    from scratch and the smallest admissible k is taken; only the scan over k
    is vectorized. Quadratic work, kept as the oracle for the fast version.
    """
    sq = y_obs * y_obs
    best = 0
    for m in range(1, m_cap + 1):
        tails = np.concatenate([np.cumsum(sq[m - 1 :: -1])[::-1], [0.0]])
        k = int(np.argmax(np.sqrt(tails) <= tau * math.sqrt(m) * delta))
        best = max(best, k)
    return best


def check_dp_bruteforce(instances: int = 500, max_D: int = 128, seed: int = 90210) -> CheckResult:
    """Fast implementation against the quadratic scan, random sizes and scales."""
    rng = np.random.default_rng(seed)
    agree = 0
    for _ in range(instances):
        D = int(rng.integers(2, max_D + 1))
        delta = float(10.0 ** rng.uniform(-2, 0))
        tau = float(rng.uniform(1.05, 3.0))
        scale = float(10.0 ** rng.uniform(-1, 1))
        y = scale * rng.standard_normal(D)
        obs = NoisyObservation(y, np.zeros(D), y / delta, delta, 0)
        agree += dp_modified(obs, tau, D).k == dp_modified_bruteforce(y, delta, tau, D)
    return CheckResult(
        "dp_bruteforce_equivalence", agree == instances, f"{agree}/{instances} exact agreements"
    )


def check_scaling_invariance(instances: int = 200, D: int = 64, seed: int = 5150) -> CheckResult:
    """All selectors must be unchanged when data, clean data, truth, and noise
    level are rescaled by a common positive factor."""
    rng = np.random.default_rng(seed)
    model = NoiseModel("gaussian")
    violations = 0
    for i in range(instances):
        q = float(rng.uniform(0.5, 3.0))
        s = float(rng.uniform(0.6, 2.0))
        delta = float(10.0 ** rng.uniform(-3, -0.5))
        from .problems import build_synthetic

        p = build_synthetic(D, "poly", q=q, truth_power=s)
        obs = observe(p, delta, model, seed + i)
        base = _all_eight(p, obs)
        for c in (1e-3, 1e3):
            p2 = type(p)(p.name, p.sigma, c * p.x_true, p.ill_posedness)
            y_clean2 = c * obs.y_clean
            obs2 = NoisyObservation(
                y_clean2 + (c * delta) * obs.z, y_clean2, obs.z, c * delta, obs.seed
            )
            if _all_eight(p2, obs2) != base:
                violations += 1
                break
    return CheckResult(
        "scaling_invariance",
        violations == 0,
        f"{violations}/{instances} instances changed under rescaling by 1e-3 or 1e3",
    )


def _all_eight(p, obs) -> tuple:
    D = p.size
    return (
        dp_at_m(obs, 1.5, max(1, D // 2)),
        dp_modified(obs, 1.5, D).k,
        lepski_direct(obs, 1.5),
        balancing(p, obs, 4.0, D),
        early_stop(obs, D),
        combined(obs, 1.5, 1.0, D).k,
        oracle_weak(p, obs),
        oracle_strong(p, obs),
    )


def check_oracle_inequalities(
    replicates: int = 10000, D: int = 256, delta: float = 1e-2, seed: int = 1729
) -> CheckResult:
    """Per-realization facts: weak oracle at most strong oracle, the balanced
    levels are near-minimizers (squared-error factor 2), the capped rule never
    exceeds the uncapped one, and no rule beats the realized optimum."""
    from .problems import build_synthetic
    from .sequence_model import strong_error_sq_profile, weak_error_sq_profile

    p = build_synthetic(D, "poly", q=2.0, truth_power=1.0)
    model = NoiseModel("gaussian")
    cfg = RuleConfig(tau=1.5, kappa=4.0)
    bad = 0
    for i in range(replicates):
        obs = observe(p, delta, model, seed + i)
        ks = select_all(p, obs, cfg)
        strong_sq = strong_error_sq_profile(p, obs)
        weak_sq = weak_error_sq_profile(p, obs)
        ok = ks["pr"] <= ks["st"] and ks["com"] <= ks["dp"]
        ok = ok and strong_sq[ks["opt"]] == strong_sq.min()
        if ks["pr"] >= 1:
            ok = ok and 2.0 * weak_sq.min() >= min(weak_sq[ks["pr"]], weak_sq[ks["pr"] - 1])
        if ks["st"] >= 1:
            ok = ok and 2.0 * strong_sq.min() >= min(strong_sq[ks["st"]], strong_sq[ks["st"] - 1])
        bad += not ok
    return CheckResult(
        "oracle_orderings", bad == 0, f"{bad}/{replicates} replicates violated an exact inequality"
    )


def check_thm1_frequency(
    size: int = 1024, delta: float = 1e-4, replicates: int = 200, tau: float = 1.5,
    seed: int = 31337, threshold: float = 0.95,
) -> CheckResult:
    """Image-space guarantee should hold in essentially every replicate."""
    cfg = ExperimentConfig(
        ProblemSpec("phillips", size), deltas=(delta,), rules=RuleConfig(tau=tau),
        replicates=replicates, base_seed=seed,
    )
    freq = theorem_frequency(run_experiment(cfg), "thm1", constants(tau))
    return CheckResult(
        "thm1_frequency", freq >= threshold, f"frequency {freq:.3f} (required >= {threshold})"
    )


def check_cor1_efficiency(
    D: int = 2048, delta: float = 1e-4, replicates: int = 200, tau: float = 1.5,
    seed: int = 271828,
) -> CheckResult:
    """Solution-space efficiency on the polynomial spectrum: the selected level's
    error within a small factor of the optimum at the median, and within the
    guarantee constant at the 95th percentile."""
    cfg = ExperimentConfig(
        ProblemSpec("synthetic-poly", D, q=2.0, truth_power=1.0), deltas=(delta,),
        rules=RuleConfig(tau=tau), replicates=replicates, base_seed=seed,
    )
    records = run_experiment(cfg)
    ratios = np.array(
        [r.e_strong_by_rule["dp"] / r.e_strong_by_rule["opt"] for r in records]
    )
    c_cor = constants(tau, q=2.0, c_q=1.0, C_q=1.0).c_tau_cor
    med = float(np.median(ratios))
    p95 = float(np.percentile(ratios, 95.0))
    return CheckResult(
        "cor1_efficiency",
        med <= 3.0 and p95 <= c_cor,
        f"median ratio {med:.3f} (<= 3), 95th pct {p95:.3f} (<= {c_cor:.1f})",
    )


def check_example1(
    kappa: float = 1.05, delta: float = 1e-3, replicates: int = 100000, seed: int = 6174
) -> CheckResult:
    """Exponential-spectrum failure mode of the solution-space comparison rule:
    the empirical failure probability must reach half the Gaussian tail bound."""
    freq = example1_frequency(kappa, delta, replicates, seed)
    p_kappa = counterexample_tail_prob(kappa)
    return CheckResult(
        "example1_counterexample",
        freq >= 0.5 * p_kappa,
        f"empirical {freq:.5f} vs tail bound {p_kappa:.5f} (required >= half the bound)",
    )


def check_moment_bounds(replicates: int = 10000, seed: int = 8128) -> CheckResult:
    """Fourth-moment bound sqrt(8/kappa) on the mean absolute running-mean
    deviation, plus the maximal-inequality check at epsilon = 1/3."""
    model = NoiseModel("gaussian")
    rng = np.random.default_rng(seed)
    details = []
    ok = True
    for kappa in (10, 100, 1000):
        z = rng.standard_normal((replicates, kappa))
        est = float(np.mean(np.abs(np.mean(z * z - 1.0, axis=1))))
        bound = math.sqrt(8.0 / kappa)
        ok = ok and est <= 1.05 * bound
        details.append(f"kappa={kappa}: {est:.4f} <= {bound:.4f}")
    emp, bound = prop2_check(model, 10000, 100, 1.0 / 3.0, 1000, seed)
    ok = ok and emp <= bound
    details.append(f"sup-deviation: P={emp:.3f} <= bound {bound:.3f}")
    return CheckResult("moment_bounds", ok, "; ".join(details))


def verification_battery(quick: bool = False) -> list[CheckResult]:
    """The full check suite; `quick` shrinks replicate counts for smoke runs."""
    f = 50 if quick else 1
    return [
        check_lepski_dp_identity(instances=max(20, 1000 // f)),
        check_dp_bruteforce(instances=max(20, 500 // f)),
        check_scaling_invariance(instances=max(10, 200 // f)),
        check_oracle_inequalities(replicates=max(100, 10000 // f)),
        check_thm1_frequency(size=256 if quick else 1024, replicates=max(50, 200 // f)),
        check_cor1_efficiency(D=256 if quick else 2048, replicates=max(50, 200 // f)),
        check_example1(replicates=max(2000, 100000 // f)),
        check_moment_bounds(replicates=max(500, 10000 // f)),
    ]


# ---------------------------------------------------------------------------
# output writers


def _metadata(args) -> dict:
    keys = (
        "problem", "size", "depth", "kappa_heat", "q", "truth_power", "deltas",
        "tau", "kappa", "tau_min", "replicates", "seed", "noise",
    )
    meta = {}
    for key in keys:
        val = getattr(args, key, None)
        if val is None:
            continue
        meta[key] = ",".join(_fmt(v) for v in val) if isinstance(val, list) else val
    return meta


def _header_lines(meta: dict) -> list[str]:
    return [f"# speccut {key}={meta[key]}" for key in meta]


def _write_table(path: Path, header: str, rows: list[list], meta: dict, fmt: str):
    if fmt == "json":
        cols = header.split(",")
        payload = {
            "metadata": meta,
            "rows": [dict(zip(cols, row)) for row in rows],
        }
        path.write_text(json.dumps(payload, indent=2) + "\n")
        return
    lines = _header_lines(meta) + [header]
    for row in rows:
        lines.append(",".join(str(c) if isinstance(c, (str, int)) else _fmt(c) for c in row))
    path.write_text("\n".join(lines) + "\n")


def _summary_tables(summary: ExperimentSummary):
    err_rows, k_rows, box_rows = [], [], []
    for delta in summary.deltas:
        for rule in summary.rules:
            err_rows.append(
                [delta, rule, summary.mean_error[(delta, rule)], summary.std_error[(delta, rule)]]
            )
            k_rows.append(
                [delta, rule, summary.mean_k[(delta, rule)], summary.std_k[(delta, rule)]]
            )
        b = summary.boxplot_k_es[delta]
        box_rows.append(
            [delta, b.median, b.q25, b.q75, b.whisker_lo, b.whisker_hi, len(b.outliers)]
        )
    return err_rows, k_rows, box_rows


# ---------------------------------------------------------------------------
# subcommands


def _problem_spec(args) -> ProblemSpec:
    return ProblemSpec(
        name=args.problem, size=args.size, depth=args.depth,
        kappa_heat=args.kappa_heat, q=args.q, truth_power=args.truth_power,
    )


def _experiment_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        problem=_problem_spec(args),
        deltas=tuple(args.deltas),
        rules=RuleConfig(tau=args.tau, kappa=args.kappa, tau_min=args.tau_min),
        noise=NoiseModel(args.noise),
        replicates=args.replicates,
        base_seed=args.seed,
    )


def run_bench(args) -> int:
    cfg = _experiment_config(args)
    records = run_experiment(cfg)
    summary = summarize(records)
    meta = _metadata(args)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        err_rows, k_rows, box_rows = _summary_tables(summary)
        ext = args.format
        _write_table(out / f"errors.{ext}", ERRORS_HEADER, err_rows, meta, ext)
        _write_table(out / f"ks.{ext}", KS_HEADER, k_rows, meta, ext)
        _write_table(out / f"boxplot.{ext}", BOXPLOT_HEADER, box_rows, meta, ext)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return 1
    print(f"wrote errors.{ext}, ks.{ext}, boxplot.{ext} to {out}")
    return 0


def run_verify(args) -> int:
    results = verification_battery(quick=args.quick)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
    if args.out is not None:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            report = [
                {"name": r.name, "passed": r.passed, "detail": r.detail} for r in results
            ]
            (out / "verify_report.json").write_text(json.dumps(report, indent=2) + "\n")
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return 1
    return 0 if all(r.passed for r in results) else 1


def run_single(args) -> int:
    p = make_problem(_problem_spec(args))
    delta = args.deltas[0]
    obs = observe(p, delta, NoiseModel(args.noise), args.seed)
    D = p.size
    result = dp_modified(obs, args.tau, D, keep_trace=True)
    cfg = RuleConfig(tau=args.tau, kappa=args.kappa, tau_min=args.tau_min)
    ks = select_all(p, obs, cfg)
    from .sequence_model import strong_error, weak_error

    print(f"problem={p.name} D={D} delta={_fmt(delta)} seed={args.seed}")
    print("per-m trace of the residual rule (m: k):")
    trace = result.trace
    for start in range(0, D, 16):
        chunk = trace[start : start + 16]
        print("  m=%-5d %s" % (start + 1, " ".join(f"{int(k):d}" for k in chunk)))
    com = combined(obs, args.tau, args.tau_min, D)
    print(f"m_max (inner threshold {args.tau_min}): {com.m_max}")
    print("selected levels and errors:")
    for rule in RULE_NAMES:
        k = ks[rule]
        print(
            f"  {rule:4s} k={k:<6d} strong={_fmt(strong_error(p, obs, k))} "
            f"weak={_fmt(weak_error(p, obs, k))}"
        )
    print(f"deterministic oracle levels: weak={det_weak(p, delta)} strong={det_strong(p, delta)}")
    if args.out is not None:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            payload = {
                "problem": p.name,
                "delta": delta,
                "seed": args.seed,
                "trace": [int(k) for k in trace],
                "m_max": com.m_max,
                "k_by_rule": ks,
                "e_strong_by_rule": {r: strong_error(p, obs, k) for r, k in ks.items()},
                "e_weak_by_rule": {r: weak_error(p, obs, k) for r, k in ks.items()},
                "det_weak": det_weak(p, delta),
                "det_strong": det_strong(p, delta),
            }
            (out / "single.json").write_text(json.dumps(payload, indent=2) + "\n")
        except OSError as exc:
            print(f"error: cannot write record: {exc}", file=sys.stderr)
            return 1
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _parse_deltas(text: str) -> list[float]:
    try:
        deltas = [float(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad delta list {text!r}") from exc
    if not deltas or any(d <= 0 for d in deltas):
        raise argparse.ArgumentTypeError("deltas must be positive")
    return deltas


def _add_common(sub):
    sub.add_argument("--problem", choices=PROBLEM_NAMES, default="phillips")
    sub.add_argument("--size", type=int, default=None, help="discretization dimension D")
    sub.add_argument("--depth", type=float, default=0.25, help="gravity source depth")
    sub.add_argument("--kappa-heat", dest="kappa_heat", type=float, default=1.0)
    sub.add_argument("--q", type=float, default=2.0, help="polynomial spectrum decay exponent")
    sub.add_argument("--truth-power", dest="truth_power", type=float, default=1.0)
    sub.add_argument("--deltas", type=_parse_deltas, default=[1e0, 1e-2, 1e-4, 1e-6])
    sub.add_argument("--tau", type=float, default=1.5)
    sub.add_argument("--kappa", type=float, default=4.0)
    sub.add_argument("--tau-min", dest="tau_min", type=float, default=1.0)
    sub.add_argument("--replicates", type=int, default=None)
    sub.add_argument("--seed", type=int, default=20240717)
    sub.add_argument("--noise", choices=("gaussian", "rademacher"), default="gaussian")
    sub.add_argument("--out", default="results")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--preset", choices=tuple(PRESETS), default="paper")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speccut",
        description="Spectral cut-off regularization benchmarks and rule verification.",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)
    bench = subs.add_parser("bench", help="Monte Carlo comparison tables")
    _add_common(bench)
    verify = subs.add_parser("verify", help="identity/frequency/bound checks")
    verify.add_argument("--quick", action="store_true", help="reduced replicate counts")
    verify.add_argument("--out", default=None)
    single = subs.add_parser("single", help="one replicate with full diagnostics")
    _add_common(single)
    return parser


def _apply_preset(args):
    size, replicates = PRESETS[args.preset]
    if args.size is None:
        args.size = size
    if args.replicates is None:
        args.replicates = replicates


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.subcommand == "bench":
        _apply_preset(args)
        return run_bench(args)
    if args.subcommand == "verify":
        return run_verify(args)
    _apply_preset(args)
    args.replicates = 1
    return run_single(args)


if __name__ == "__main__":
    sys.exit(main())
