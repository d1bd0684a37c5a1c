"""Command line interface.

Exit codes: 0 success, 1 usage/input error, 2 constraints infeasible,
3 a policy failed exact verification.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import automata, ltl
from .automata import Ldba
from .lp import LongRunSpec, Objective, SteadyState, build_lp, solve_lp
from .mdp import Mdp, format_rational, parse_mdp, parse_rational
from .mec import accepting_mecs, compute_mecs
from .policy import PolicyError, dump_policy, extract_policy, policy_from_dict, project_policy
from .product import ProductMdp, build_product, product_to_dict
from .verify import ChainError, analyze_chain, check_spec, induced_chain, simulate

log = logging.getLogger("lrsynth")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_UNSOUND = 0, 1, 2, 3


@dataclass
class RunConfig:
    mdp: str
    ltl: str | None = None
    hoa: str | None = None
    theta: Fraction = Fraction(0)
    sss: tuple[SteadyState, ...] = ()
    reward_thresholds: tuple[Fraction, ...] = ()
    objective: Objective = field(default_factory=Objective)
    delta: Fraction = Fraction(1, 100)
    check_delta: Fraction | None = None
    freq_bound: Fraction | None = None
    per_mec: bool = False
    out: str | None = None
    seed: int = 0
    simulate_steps: int = 0
    dump_lp: str | None = None
    policy: str | None = None

    def spec(self) -> LongRunSpec:
        has_ltl = self.ltl is not None or self.hoa is not None
        return LongRunSpec(
            theta=self.theta if has_ltl else Fraction(0),
            sss=self.sss,
            reward_thresholds=self.reward_thresholds,
            objective=self.objective,
            freq_bound=self.freq_bound,
            per_mec=self.per_mec,
            ltl=self.ltl if self.ltl is not None else (Path(self.hoa).name if self.hoa else None),
        )


def load_automaton(cfg: RunConfig) -> Ldba:
    if cfg.ltl is not None and cfg.hoa is not None:
        raise ValueError("give at most one of --ltl and --hoa")
    if cfg.hoa is not None:
        return automata.parse_hoa(Path(cfg.hoa).read_text())
    if cfg.ltl is not None:
        return automata.ltl_automaton(ltl.parse_ltl(cfg.ltl))
    return automata.builtin_ldba("true")


def load_product(cfg: RunConfig) -> tuple[Mdp, Ldba, ProductMdp]:
    m = parse_mdp(Path(cfg.mdp).read_text())
    a = load_automaton(cfg)
    return m, a, build_product(m, a)


def _q(x: Fraction | None) -> str | None:
    return None if x is None else format_rational(x)


def _analysis_dict(an, p: ProductMdp) -> dict[str, Any]:
    m = p.mdp
    return {
        "ltl_probability": _q(an.ltl_probability),
        "ap_frequency": {k: _q(v) for k, v in sorted(an.ap_frequency.items())},
        "lra": [_q(v) for v in an.lra],
        "action_frequency": {m.actions[a].name: _q(v) for a, v in sorted(an.action_frequency.items())},
        "bsccs": len(an.bsccs),
    }


def _write(cfg: RunConfig, name: str, text: str) -> None:
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def run_synthesize(cfg: RunConfig) -> tuple[int, dict[str, Any]]:
    """parse -> automaton -> product -> MECs -> LP -> policy -> exact verification."""
    spec = cfg.spec()
    m, aut, p = load_product(cfg)
    mecs = compute_mecs(p)
    amecs = accepting_mecs(p, mecs)
    lp = build_lp(p, mecs, amecs, spec)
    if cfg.dump_lp:
        Path(cfg.dump_lp).write_text(lp.dump())
    sol = solve_lp(lp)
    report: dict[str, Any] = {
        "product": {"states": p.mdp.num_states, "actions": p.mdp.num_actions,
                    "mecs": len(mecs), "accepting_mecs": len(amecs)},
        "lp": {"status": sol.status, "variables": len(lp.variables),
               "constraints": len(lp.constraints), "objective": _q(sol.objective)},
    }
    if not sol.feasible:
        report["result"] = "infeasible"
        return EXIT_INFEASIBLE, report

    sp = extract_policy(sol, p, mecs, spec, cfg.delta)
    an = analyze_chain(induced_chain(p, sp))
    check_delta = cfg.delta if cfg.check_delta is None else cfg.check_delta
    verdict = check_spec(an, spec, check_delta)
    report["policy"] = {"delta": _q(sp.delta), "epsilon": _q(sp.epsilon)}
    report["analysis"] = _analysis_dict(an, p)
    report["verification"] = verdict.to_dict()
    if cfg.simulate_steps:
        report["simulation"] = simulate(p, sp, cfg.simulate_steps, cfg.seed).to_dict(p.mdp)

    _write(cfg, "policy.json", dump_policy(sp, p.mdp) + "\n")
    _write(cfg, "projected_policy.json", dump_policy(project_policy(sp, p), m, aut.states) + "\n")
    if not verdict.passed:
        report["result"] = "verification-failed"
        return EXIT_UNSOUND, report
    report["result"] = "verified"
    return EXIT_OK, report


def run_check(cfg: RunConfig) -> tuple[int, dict[str, Any]]:
    """Re-verify a stored policy against the specification."""
    spec = cfg.spec()
    _, _, p = load_product(cfg)
    sp = policy_from_dict(json.loads(Path(cfg.policy).read_text()), p.mdp)
    an = analyze_chain(induced_chain(p, sp))
    delta = cfg.delta if cfg.check_delta is None else cfg.check_delta
    verdict = check_spec(an, spec, delta)
    report = {"analysis": _analysis_dict(an, p), "verification": verdict.to_dict(),
              "result": "pass" if verdict.passed else "fail"}
    return (EXIT_OK if verdict.passed else EXIT_UNSOUND), report


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _sss(text: str) -> SteadyState:
    try:
        ap, lo, hi = text.rsplit(":", 2)
        return SteadyState(ap, parse_rational(lo), parse_rational(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected p:lower:upper, got {text!r}") from None


def _objective(text: str) -> Objective:
    try:
        return Objective.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrsynth", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, spec=True):
        sp.add_argument("--mdp", required=True, help="MDP JSON file")
        group = sp.add_mutually_exclusive_group()
        group.add_argument("--ltl", help="LTL formula of a builtin family, e.g. 'G F p'")
        group.add_argument("--hoa", help="LDBA in HOA format")
        if spec:
            sp.add_argument("--theta", type=_rational, default=Fraction(0))
            sp.add_argument("--sss", type=_sss, action="append", default=[], metavar="P:L:U")
            sp.add_argument("--reward-threshold", type=_rational, action="append", default=[])
            sp.add_argument("--delta", type=_rational, default=Fraction(1, 100))
            sp.add_argument("--check-delta", type=_rational, default=None,
                            help="tolerance used when verifying (default: --delta)")

    syn = sub.add_parser("synthesize", help="decide satisfiability and synthesize a policy")
    common(syn)
    syn.add_argument("--objective", type=_objective, default=Objective())
    syn.add_argument("--freq-bound", type=_rational, default=None)
    syn.add_argument("--per-mec", action="store_true")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--simulate", type=int, default=0, metavar="STEPS")
    syn.add_argument("--out", help="directory for policy.json and report.json")
    syn.add_argument("--dump-lp", metavar="FILE")

    chk = sub.add_parser("check", help="verify a stored policy")
    common(chk)
    chk.add_argument("--policy", required=True)

    prod = sub.add_parser("product", help="print the product MDP")
    common(prod, spec=False)

    mec = sub.add_parser("mecs", help="print the MEC decomposition")
    common(mec, spec=False)

    sim = sub.add_parser("simulate", help="simulate a stored policy")
    common(sim, spec=False)
    sim.add_argument("--policy", required=True)
    sim.add_argument("--steps", type=int, default=100000)
    sim.add_argument("--seed", type=int, default=0)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        mdp=args.mdp,
        ltl=args.ltl,
        hoa=args.hoa,
        theta=getattr(args, "theta", Fraction(0)),
        sss=tuple(getattr(args, "sss", ())),
        reward_thresholds=tuple(getattr(args, "reward_threshold", ())),
        objective=getattr(args, "objective", Objective()),
        delta=getattr(args, "delta", Fraction(1, 100)),
        check_delta=getattr(args, "check_delta", None),
        freq_bound=getattr(args, "freq_bound", None),
        per_mec=getattr(args, "per_mec", False),
        out=getattr(args, "out", None),
        seed=getattr(args, "seed", 0),
        simulate_steps=getattr(args, "simulate", 0),
        dump_lp=getattr(args, "dump_lp", None),
        policy=getattr(args, "policy", None),
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    cfg = _config(args)
    try:
        if args.command == "synthesize":
            code, report = run_synthesize(cfg)
            _write(cfg, "report.json", json.dumps(report, indent=2) + "\n")
        elif args.command == "check":
            code, report = run_check(cfg)
        elif args.command == "product":
            _, _, p = load_product(cfg)
            code, report = EXIT_OK, product_to_dict(p)
        elif args.command == "mecs":
            _, _, p = load_product(cfg)
            m = p.mdp
            mecs = compute_mecs(p)
            acc = {c.states for c in accepting_mecs(p, mecs)}
            code, report = EXIT_OK, {"mecs": [
                {"states": [m.states[s] for s in sorted(c.states)],
                 "actions": [m.actions[a].name for a in sorted(c.actions)],
                 "accepting": c.states in acc}
                for c in mecs
            ]}
        else:
            _, _, p = load_product(cfg)
            sp = policy_from_dict(json.loads(Path(cfg.policy).read_text()), p.mdp)
            code, report = EXIT_OK, simulate(p, sp, args.steps, args.seed).to_dict(p.mdp)
    except (OSError, ValueError, ChainError, PolicyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(report, indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
