"""Command-line front end: policies, experiments, and oracle verification."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .baselines import BaselineKind, baseline_policy
from .deterministic import (
    NEVER,
    clamp_threshold,
    expected_cost_threshold,
    is_never,
    optimal_threshold,
    robust_consistent_bound,
)
from .distributions import DayDistribution, parse_distribution, total_variation, wasserstein1
from .errors import InvalidParamsError, SkirentError
from .evaluation import consistency, run_consistency_table, run_perturbation_sweep
from .oracle import brute_force_threshold, lp_instance_from_cost, lp_solve
from .randomized import (
    build_cost_function,
    check_robustness,
    expected_policy_cost,
    geometric_cdf,
    parse_policy,
    realized_worst_ratio,
    water_fill,
)

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_CONFIG = 2


def _log(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message, file=sys.stderr)


def _emit(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _threshold_json(t) -> int | str:
    return "never" if is_never(t) else int(t)


def _load_dist(source: str) -> DayDistribution:
    """Accept inline JSON or a path to a JSON file."""
    text = source
    if os.path.exists(source):
        with open(source) as fh:
            text = fh.read()
    return parse_distribution(text)


def _apply_config_file(args: argparse.Namespace) -> None:
    """Fill unset flags from a JSON config file (flags always win)."""
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        conf = json.load(fh)
    mapping = {"b": "b", "r": "r", "lambda": "lam", "epsilon": "epsilon", "seed": "seed",
               "dist": "dist", "out": "out", "format": "format", "etas": "etas",
               "trials": "trials"}
    for key, attr in mapping.items():
        if key in conf and getattr(args, attr, None) is None and hasattr(args, attr):
            setattr(args, attr, conf[key])


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("SKIRENT_SEED")
    return int(env) if env else 0


def _require(args, *names: str) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            flag = "--" + name.replace("_", "-").replace("lam", "lambda")
            raise InvalidParamsError(f"missing required option {flag}")


def _validate_common(args) -> None:
    if getattr(args, "b", None) is not None and args.b < 2:
        raise InvalidParamsError("--b must be >= 2")
    if getattr(args, "r", None) is not None and args.r <= 1:
        raise InvalidParamsError("--r must exceed 1")
    if getattr(args, "lam", None) is not None and not 0 < args.lam < 1:
        raise InvalidParamsError("--lambda must lie in (0, 1)")
    if getattr(args, "epsilon", None) is not None and args.epsilon <= 0:
        raise InvalidParamsError("--epsilon must be > 0")


def cmd_threshold(args) -> int:
    p_hat = _load_dist(args.dist)
    t_star, cost = optimal_threshold(p_hat, args.b)
    payload = {"t_star": _threshold_json(t_star), "cost": cost}
    if args.lam is not None:
        eta = args.eta if args.eta is not None else 0.0
        report = robust_consistent_bound(p_hat, args.b, args.lam, eta, metric=args.metric)
        payload["clamped_t"] = report.clamped_t
        payload["bound_report"] = {
            "robust_term": report.robust_term,
            "consistent_term": report.consistent_term,
            "binding": report.binding,
            "theta": report.theta,
            "rho_hat": report.rho_hat,
        }
    _emit(args, payload)
    return EXIT_OK


def cmd_clamp(args) -> int:
    t_hat = NEVER if str(args.t_hat).lower() == "never" else int(args.t_hat)
    clamped = clamp_threshold(t_hat, args.b, args.lam)
    _emit(args, {"t_hat": _threshold_json(t_hat), "clamped_t": clamped,
                 "b": args.b, "lambda": args.lam})
    return EXIT_OK


def cmd_waterfill(args) -> int:
    p_hat = _load_dist(args.dist)
    g = build_cost_function(p_hat, args.b)
    policy, objective = water_fill(g, args.b, args.r, args.epsilon,
                                   exact=not args.published)
    report = check_robustness(policy, args.b, args.r)
    payload = policy.to_json_dict(b=args.b, r=args.r, objective=objective)
    payload["robustness"] = {"feasible": report.feasible, "worst_slack": report.worst(),
                             "tail_slack": report.tail_slack}
    _emit(args, payload)
    return EXIT_OK if report.feasible else EXIT_COMPUTE


def cmd_baseline(args) -> int:
    p_hat = _load_dist(args.dist)
    kind = (BaselineKind.MAJORITY_BRANCH if args.kind == "majority"
            else BaselineKind.MIXTURE)
    policy = baseline_policy(p_hat, args.b, args.r, kind)
    g = build_cost_function(p_hat, args.b)
    payload = policy.to_json_dict(b=args.b, r=args.r,
                                  objective=expected_policy_cost(policy, g))
    _emit(args, payload)
    return EXIT_OK


def cmd_metrics(args) -> int:
    p = _load_dist(args.dist)
    payload: dict = {}
    if args.dist2 is not None:
        q = _load_dist(args.dist2)
        payload["wasserstein1"] = wasserstein1(p, q)
        payload["total_variation"] = total_variation(p, q)
    if args.policy is not None:
        _require(args, "b")
        with open(args.policy) as fh:
            policy = parse_policy(json.load(fh))
        payload["consistency"] = consistency(p, policy, args.b)
        g = build_cost_function(p, args.b)
        payload["expected_cost"] = expected_policy_cost(policy, g)
        horizon = max(policy.max_day, 5 * args.b)
        payload["worst_ratio"] = realized_worst_ratio(policy, args.b, horizon)
    if not payload:
        raise InvalidParamsError("metrics needs --dist2 and/or --policy")
    _emit(args, payload)
    return EXIT_OK


def cmd_experiment(args) -> int:
    seed = _resolve_seed(args)
    b = args.b if args.b is not None else 50
    r = args.r if args.r is not None else 1.7
    if args.which == "table":
        _log(args, f"running consistency table at (b, R) = ({b}, {r})")
        result = run_consistency_table(b=b, R=r, epsilon=args.epsilon)
    else:
        etas = None
        if args.etas is not None:
            etas = [float(x) for x in str(args.etas).split(",") if x != ""]
        trials = args.trials if args.trials is not None else 25
        _log(args, f"running perturbation sweep at (b, R) = ({b}, {r}), seed {seed}")
        result = run_perturbation_sweep(b=b, R=r, eta_grid=etas, n_trials=trials,
                                        seed=seed, epsilon=args.epsilon)
    fmt = args.format or "csv"
    text = result.to_csv() if fmt == "csv" else result.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        _log(args, f"wrote {args.out}")
    print(text, end="" if text.endswith("\n") else "\n")
    return EXIT_OK


def _verify_policy_file(args) -> int:
    _require(args, "b", "r")
    with open(args.policy) as fh:
        policy = parse_policy(json.load(fh))
    report = check_robustness(policy, args.b, args.r)
    if report.feasible:
        print(f"[PASS] policy satisfies robustness at R={args.r}")
        return EXIT_OK
    print(f"[FAIL] constraint violated at x={report.violated_index()} "
          f"(worst slack {report.worst():.3e})")
    return EXIT_COMPUTE


def _verify_onehot(args) -> int:
    from .randomized import onehot_exact

    _require(args, "b")
    b = args.b
    r = args.r if args.r is not None else 2.0
    failures = 0
    for y in range(1, 3 * b + 1):
        p = DayDistribution((y,), (1.0,))
        g = build_cost_function(p, b)
        exact = expected_policy_cost(onehot_exact(b, r, y), g)
        _, lp_value = lp_solve(lp_instance_from_cost(g, b, r))
        if abs(exact - lp_value) > 1e-6:
            failures += 1
            print(f"[FAIL] y={y}: closed form {exact:.9f} vs LP {lp_value:.9f}")
    if failures == 0:
        print(f"[PASS] closed-form one-hot optimum matches LP for y in 1..{3*b} "
              f"(b={b}, R={r})")
        return EXIT_OK
    return EXIT_COMPUTE


def cmd_verify(args) -> int:
    if args.policy is not None:
        return _verify_policy_file(args)
    if args.onehot:
        return _verify_onehot(args)

    seed = _resolve_seed(args)
    rng = np.random.default_rng(seed)
    b_max = args.b_max
    n_inst = args.instances
    failures = 0

    mismatch = 0
    for _ in range(n_inst):
        b = int(rng.integers(2, b_max + 1))
        max_day = int(rng.integers(max(3, b), 4 * b + 1))
        n = int(rng.integers(1, min(12, max_day) + 1))
        days = np.sort(rng.choice(np.arange(1, max_day + 1), size=n, replace=False))
        p = DayDistribution(tuple(int(d) for d in days), tuple(rng.dirichlet(np.ones(n))))
        fast = optimal_threshold(p, b)
        slow = brute_force_threshold(p, b)
        if fast[0] != slow[0] or abs(fast[1] - slow[1]) > 1e-9:
            mismatch += 1
    if mismatch == 0:
        print(f"[PASS] streaming threshold matches exhaustive scan on {n_inst} instances")
    else:
        print(f"[FAIL] threshold mismatch on {mismatch}/{n_inst} instances")
        failures += 1

    mismatch = 0
    compared = 0
    for _ in range(max(10, n_inst // 10)):
        b = int(rng.integers(4, b_max + 1))
        r = float(rng.choice([1.7, 2.0, 2.5]))
        max_day = int(rng.integers(b, 4 * b + 1))
        n = int(rng.integers(1, min(10, max_day) + 1))
        days = np.sort(rng.choice(np.arange(1, max_day + 1), size=n, replace=False))
        p = DayDistribution(tuple(int(d) for d in days), tuple(rng.dirichlet(np.ones(n))))
        g = build_cost_function(p, b)
        try:
            _, wf_obj = water_fill(g, b, r, epsilon=1e-9 * g.max_value())
        except SkirentError:
            continue
        _, lp_obj = lp_solve(lp_instance_from_cost(g, b, r))
        compared += 1
        if abs(wf_obj - lp_obj) > 1e-6:
            mismatch += 1
    if mismatch == 0:
        print(f"[PASS] water filling matches the LP oracle on {compared} instances")
    else:
        print(f"[FAIL] water filling off the LP optimum on {mismatch}/{compared} instances")
        failures += 1

    mismatch = 0
    for b in range(2, b_max + 1):
        for r in (1.7, 2.0, 2.5):
            try:
                policy = geometric_cdf(b, r)
            except SkirentError:
                continue
            if not check_robustness(policy, b, r).feasible:
                mismatch += 1
    if mismatch == 0:
        print("[PASS] closed-form stopping distributions satisfy their constraints")
    else:
        print(f"[FAIL] {mismatch} closed-form distributions violate constraints")
        failures += 1

    return EXIT_OK if failures == 0 else EXIT_COMPUTE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skirent",
        description="Robust and consistent ski-rental policies from distributional advice",
    )
    parser.add_argument("--version", action="version", version=f"skirent {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, dist=False):
        sp.add_argument("--config", help="JSON config file; flags override its values")
        sp.add_argument("--b", type=int, help="buy cost (integer >= 2)")
        sp.add_argument("--out", help="also write the result to this path")
        sp.add_argument("--quiet", action="store_true", help="suppress progress logs")
        if dist:
            sp.add_argument("--dist", help="distribution as inline JSON or a file path")

    sp = sub.add_parser("threshold", help="optimal buy day, optionally clamped and bounded")
    common(sp, dist=True)
    sp.add_argument("--lambda", dest="lam", type=float, help="clamp parameter in (0, 1)")
    sp.add_argument("--eta", type=float, help="assumed prediction error for the bound")
    sp.add_argument("--metric", choices=["wasserstein", "tv"], default="wasserstein")
    sp.set_defaults(func=cmd_threshold, needs=("dist", "b"))

    sp = sub.add_parser("clamp", help="clamp a buy day to the safe interval")
    common(sp)
    sp.add_argument("--t-hat", dest="t_hat", required=True,
                    help="predicted buy day (integer or 'never')")
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.set_defaults(func=cmd_clamp, needs=("b", "lam"))

    sp = sub.add_parser("waterfill", help="robust randomized stopping distribution")
    common(sp, dist=True)
    sp.add_argument("--r", type=float, help="robustness level (> 1)")
    sp.add_argument("--epsilon", type=float, help="water-level bisection tolerance")
    sp.add_argument("--published", action="store_true",
                    help="level-restricted policy without exact redistribution")
    sp.set_defaults(func=cmd_waterfill, needs=("dist", "b", "r"))

    sp = sub.add_parser("baseline", help="point-prediction baseline policies")
    common(sp, dist=True)
    sp.add_argument("--r", type=float)
    sp.add_argument("--kind", choices=["majority", "mixture"], required=True)
    sp.set_defaults(func=cmd_baseline, needs=("dist", "b", "r"))

    sp = sub.add_parser("metrics", help="distances between distributions, policy scores")
    common(sp, dist=True)
    sp.add_argument("--dist2", help="second distribution for distance metrics")
    sp.add_argument("--policy", help="policy JSON file to score under --dist")
    sp.set_defaults(func=cmd_metrics, needs=("dist",))

    sp = sub.add_parser("experiment", help="run the consistency table or the error sweep")
    common(sp)
    sp.add_argument("which", choices=["table", "sweep"])
    sp.add_argument("--r", type=float)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--seed", type=int, help="master seed (or env SKIRENT_SEED)")
    sp.add_argument("--etas", help="comma-separated perturbation budgets")
    sp.add_argument("--trials", type=int, help="random transports per budget")
    sp.add_argument("--format", choices=["csv", "json"])
    sp.set_defaults(func=cmd_experiment, needs=())

    sp = sub.add_parser("verify", help="cross-check fast paths against brute-force oracles")
    common(sp)
    sp.add_argument("--r", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--b-max", dest="b_max", type=int, default=12)
    sp.add_argument("--instances", type=int, default=200)
    sp.add_argument("--onehot", action="store_true",
                    help="sweep the closed-form one-hot optimum against the LP")
    sp.add_argument("--policy", help="verify a policy JSON file against --b/--r")
    sp.set_defaults(func=cmd_verify, needs=())

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        _validate_common(args)
        _require(args, *args.needs)
    except (InvalidParamsError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except InvalidParamsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SkirentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
