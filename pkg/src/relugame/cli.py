"""Command-line entry point.

Every subcommand prints a sequence of records.  With ``--format records``
each record is one line of space-separated ``key=value`` pairs; the first
pair is always ``record=<type>``, floats are printed with ``repr`` (round
trip exact), vectors as comma-separated floats, and strings containing
blanks or quotes as JSON string literals.  ``--format human``
prints the same records in an aligned, rounded layout.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bounds as bnd
from . import certify as cert
from . import entropic as ent
from . import network as net
from . import paths as pth
from . import value as val
from .game import GameState, build_game, export_dot, terminal_reward_from_input

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# library operation -> subcommand that exposes it
COVERAGE = {
    "validate": "validate",
    "forward_relu": "eval",
    "forward_softplus": "softplus eval",
    "random_network": "random",
    "save_network": "random",
    "build_game": "game export",
    "export_dot": "game export",
    "shapley_value": "eval",
    "check_game_equivalence": "validate",
    "fixed_policy_value_max": "policy",
    "fixed_policy_value_min": "policy",
    "policy_pair_value": "paths value",
    "optimal_policies": "policy",
    "policy_fingerprint": "policy",
    "lipschitz_bound": "lipschitz",
    "enumerate_paths": "paths enumerate",
    "path_probability": "paths enumerate",
    "path_reward": "paths enumerate",
    "value_by_enumeration": "paths value",
    "maxmin_bruteforce": "paths bruteforce",
    "monte_carlo_value": "mc",
    "value_with_boundary": "bounds",
    "boundary": "bounds",
    "interval_propagate": "bounds",
    "certify_accept": "certify emit",
    "certify_reject": "certify emit",
    "classify": "certify",
    "check_certificate": "certify check",
    "cell_membership": "certify cell",
    "reject_cell_membership": "certify cell",
    "entropic_value": "softplus eval",
    "entropic_value_given_policy": "softplus eval",
    "gibbs_policies": "softplus policy",
    "free_energy_report": "softplus policy",
    "tau_limit_report": "softplus limit",
}


class UsageError(ValueError):
    pass


# -- output --------------------------------------------------------------------

def _fmt_value(v, human: bool) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}" if human else repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(_fmt_value(e, human) for e in np.ravel(np.asarray(v, dtype=object)))
    text = str(v)
    if not human and any(c in text for c in ' "\t\n'):
        return json.dumps(text)
    return text


class Printer:
    def __init__(self, fmt: str, stream=None):
        self.human = fmt == "human"
        self.stream = stream if stream is not None else sys.stdout

    def __call__(self, record: str, **fields):
        if self.human:
            body = "  ".join(f"{k}: {_fmt_value(v, True)}" for k, v in fields.items())
            self.stream.write(f"{record:<12} {body}\n".rstrip() + "\n")
        else:
            parts = [f"record={record}"] + [f"{k}={_fmt_value(v, False)}" for k, v in fields.items()]
            self.stream.write(" ".join(parts) + "\n")

    def text(self, text: str):
        self.stream.write(text)


# -- argument helpers ----------------------------------------------------------

def parse_vector(text: str) -> np.ndarray:
    try:
        out = np.array([float(t) for t in text.split(",") if t.strip() != ""])
    except ValueError as exc:
        raise UsageError(f"cannot parse vector {text!r}") from exc
    if out.size == 0:
        raise UsageError("empty vector")
    return out


def parse_state(text: str) -> GameState:
    """``"l,i+"`` or ``"l,i-"``."""
    text = text.strip()
    try:
        sign = {"+": 1, "-": -1}[text[-1]]
        l, i = (int(t) for t in text[:-1].split(","))
    except (KeyError, ValueError, IndexError) as exc:
        raise UsageError(f"cannot parse state {text!r}; expected e.g. 1,1+") from exc
    return GameState(l, i, sign)


def _load(args):
    spec = net.load_network(args.net)
    graph = build_game(spec, strict=args.mode == "strict")
    return spec, graph


def _input(args, spec):
    if args.input is None:
        raise UsageError("--input is required")
    x = parse_vector(args.input)
    if x.size != spec.n_inputs:
        raise UsageError(f"input has length {x.size}, network expects {spec.n_inputs}")
    return x


def _default_start(args, graph) -> GameState:
    s = parse_state(args.start) if args.start else GameState(1, 1, 1)
    if not 1 <= s.layer <= graph.depth or not 1 <= s.neuron <= graph.width(s.layer):
        raise UsageError(f"state {s.label} is not in the game")
    return s


# -- handlers ------------------------------------------------------------------

def cmd_eval(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    y, ys = net.forward_relu(spec, x)
    table = val.shapley_value(graph, terminal_reward_from_input(graph, x))
    out("output", values=y)
    for l in range(1, spec.depth + 1):
        out("layer", layer=l, activation=ys[l - 1], value_plus=table.plus[l - 1],
            value_minus=table.minus[l - 1])
    return EXIT_OK


def cmd_validate(args, out):
    spec = net.load_network(args.net, check=False)
    problems = net.validate(spec)
    for p in problems:
        out("violation", message=p)
    status = EXIT_OK if not problems else EXIT_FAIL
    if args.input is not None and not problems:
        rep = val.check_game_equivalence(spec, _input(args, spec), tol=args.tol,
                                         strict=args.mode == "strict")
        out("equivalence", max_value_error=rep.max_value_error,
            max_antisymmetry=rep.max_antisymmetry, tolerance=rep.tolerance, passed=rep.passed)
        if not rep.passed:
            status = EXIT_FAIL
    out("validate", ok=status == EXIT_OK)
    return status


def cmd_random(args, out):
    widths = [int(k) for k in args.widths.split(",")]
    spec = net.random_network(args.seed, len(widths), widths, args.weight_scale)
    if args.out:
        net.save_network(spec, args.out)
        out("random", path=args.out, widths=",".join(map(str, widths)), seed=args.seed,
            sha256=spec.digest())
    else:
        out.text(json.dumps(spec.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_game_export(args, out):
    _, graph = _load(args)
    text = export_dot(graph)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        out("export", path=args.out, states=len(graph.states()))
    else:
        out.text(text)
    return EXIT_OK


def cmd_policy(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    terminal = terminal_reward_from_input(graph, x)
    table = val.shapley_value(graph, terminal)
    pair = val.optimal_policies(graph, terminal, table)
    out("policy", fingerprint=val.policy_fingerprint(graph, terminal), pi=pair.pi_bits,
        sigma=pair.sigma_bits, value=table.output)
    if args.pi:
        v = val.fixed_policy_value_max(graph, terminal, val.split_bits(graph, args.pi))
        out("max_fixed", pi=args.pi, value=v.output)
    if args.sigma:
        v = val.fixed_policy_value_min(graph, terminal, val.split_bits(graph, args.sigma))
        out("min_fixed", sigma=args.sigma, value=v.output)
    return EXIT_OK


def cmd_lipschitz(args, out):
    spec = net.load_network(args.net)
    out("lipschitz", bound=val.lipschitz_bound(spec))
    return EXIT_OK


def _pair(args, graph):
    if not args.policy:
        raise UsageError("--policy is required (pi bits/sigma bits)")
    return val.PolicyPair.parse(graph, args.policy)


def cmd_paths_enumerate(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    terminal = terminal_reward_from_input(graph, x)
    pair = _pair(args, graph)
    start = _default_start(args, graph)
    for alpha in pth.enumerate_paths(graph, pair, start, cap=args.cap):
        out("path", states=">".join(s.label for s in alpha.states),
            ending=alpha.ending, probability=pth.path_probability(graph, alpha),
            reward=pth.path_reward(graph, alpha, terminal))
    return EXIT_OK


def cmd_paths_value(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    terminal = terminal_reward_from_input(graph, x)
    pair = _pair(args, graph)
    start = _default_start(args, graph)
    by_paths = pth.value_by_enumeration(graph, pair, start, terminal, cap=args.cap)
    recursion = val.policy_pair_value(graph, terminal, pair)[start]
    out("pair_value", start=start.label, enumeration=by_paths, recursion=recursion,
        difference=abs(by_paths - recursion))
    return EXIT_OK


def cmd_paths_bruteforce(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    terminal = terminal_reward_from_input(graph, x)
    start = _default_start(args, graph)
    res = pth.maxmin_bruteforce(graph, start, terminal, bit_limit=args.bit_limit)
    out("bruteforce", start=start.label, maxmin=res.value, minmax=res.minmax,
        policy=res.pair.bits, pairs=res.pairs_evaluated,
        shapley=val.shapley_value(graph, terminal)[start])
    return EXIT_OK


def cmd_mc(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    terminal = terminal_reward_from_input(graph, x)
    pair = _pair(args, graph)
    start = _default_start(args, graph)
    res = pth.monte_carlo_value(graph, pair, start, terminal, args.samples, args.seed, args.workers)
    out("mc", start=start.label, estimate=res.estimate, stderr=res.stderr,
        samples=res.samples, seed=res.seed)
    return EXIT_OK


def cmd_bounds(args, out):
    spec, graph = _load(args)
    box = bnd.IntervalVector(parse_vector(args.lower), parse_vector(args.upper))
    layers = bnd.interval_propagate(graph, box)
    for i, (lo, hi) in enumerate(zip(layers.output.lower, layers.output.upper), start=1):
        out("bound", neuron=i, lower=lo, upper=hi)
    if args.layers:
        for l in range(1, spec.depth + 1):
            iv = layers.layers[l - 1]
            out("layer", layer=l, lower=iv.lower, upper=iv.upper)
    return EXIT_OK


def _emit_certificate(args, out, c):
    if isinstance(c, cert.Refusal):
        out("refusal", kind=c.kind, threshold=c.threshold, value=c.value)
        return
    out("certificate", kind=c.kind, threshold=c.threshold, policy=c.policy,
        certified_value=c.certified_value)
    if getattr(args, "out", None):
        c.save(args.out)
        out("written", path=args.out)


def cmd_certify(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    if args.alpha is None or args.beta is None:
        raise UsageError("certify needs --alpha and --beta")
    verdict, c = cert.classify(graph, x, args.alpha, args.beta, spec.digest())
    if verdict == "unclassified":
        out("verdict", verdict=verdict, value=c)
        return EXIT_OK
    out("verdict", verdict=verdict)
    _emit_certificate(args, out, c)
    return EXIT_OK


def cmd_certify_emit(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    if args.kind == cert.ACCEPT:
        c = cert.certify_accept(graph, x, args.threshold, spec.digest())
    else:
        c = cert.certify_reject(graph, x, args.threshold, spec.digest())
    _emit_certificate(args, out, c)
    return EXIT_OK if isinstance(c, cert.Certificate) else EXIT_FAIL


def cmd_certify_check(args, out):
    spec, graph = _load(args)
    c = cert.Certificate.load(args.cert)
    digest_ok = not c.net_digest or c.net_digest == spec.digest()
    ok = digest_ok and cert.check_certificate(graph, c)
    out("check", kind=c.kind, threshold=c.threshold, policy=c.policy,
        net_matches=digest_ok, valid=ok)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_certify_cell(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    if args.kind == cert.ACCEPT:
        member = cert.cell_membership(graph, args.policy, args.threshold, x)
    else:
        member = cert.reject_cell_membership(graph, args.policy, args.threshold, x)
    value = cert.one_sided_value(graph, args.kind, args.policy, x)
    out("cell", kind=args.kind, policy=args.policy, threshold=args.threshold,
        value=value, member=member)
    return EXIT_OK


def _tau(args, spec):
    tau = args.tau if args.tau is not None else spec.tau
    if tau is None:
        raise UsageError("--tau is required (the network file has none)")
    return float(tau)


def cmd_softplus_eval(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    tau = _tau(args, spec)
    terminal = terminal_reward_from_input(graph, x)
    table = ent.entropic_value(graph, terminal, tau)
    _, ys = net.forward_softplus(spec, x, tau)
    given = ent.entropic_value_given_policy(graph, terminal, tau,
                                            ent.gibbs_policies(graph, terminal, tau, table))
    out("output", tau=tau, values=table.output)
    for l in range(1, spec.depth + 1):
        out("layer", layer=l, value_plus=table.plus[l - 1], value_minus=table.minus[l - 1],
            forward=ys[l - 1], gibbs_policy_value=given.plus[l - 1])
    return EXIT_OK


def cmd_softplus_limit(args, out):
    spec = net.load_network(args.net)
    x = _input(args, spec)
    taus = parse_vector(args.taus)
    for row in ent.tau_limit_report(spec, x, taus, strict=args.mode == "strict"):
        out("limit", tau=row.tau, deviation=row.deviation, envelope=row.envelope,
            finite=row.finite)
    return EXIT_OK


def cmd_softplus_policy(args, out):
    spec, graph = _load(args)
    x = _input(args, spec)
    tau = _tau(args, spec)
    terminal = terminal_reward_from_input(graph, x)
    for row in ent.free_energy_report(graph, terminal, tau):
        out("gibbs", state=GameState(row.layer, row.neuron, row.sign).label, q=row.q,
            p_continue=row.p_continue, entropy=row.entropy,
            expected_reward=row.expected_reward, value=row.value)
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _common(p, need_net=True, need_input=False):
    p.add_argument("--net", required=need_net, help="network file (JSON, layers input-first)")
    p.add_argument("--input", required=need_input, default=None,
                   help="comma-separated input; write --input=-1,2 for a leading minus")
    p.add_argument("--format", choices=("human", "records"), default="human")
    p.add_argument("--mode", choices=("strict", "lenient"), default="strict",
                   help="strict rejects all-zero weight rows")


def _policy_args(p):
    p.add_argument("--policy", help="policy pair as <pi bits>/<sigma bits>")
    p.add_argument("--start", help="start state, e.g. 1,1+ (default)")
    p.add_argument("--cap", type=int, default=pth.DEFAULT_PATH_CAP, help="path-count cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relugame",
                                     description="Neural networks as zero-sum stopping games.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="forward pass and game value")
    _common(p, need_input=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("validate", help="check a network file, optionally the game equivalence at --input")
    _common(p)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("random", help="write a random network")
    p.add_argument("--widths", required=True, help="input-first widths, e.g. 2,3,1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weight-scale", type=float, default=1.0)
    p.add_argument("--out")
    p.add_argument("--format", choices=("human", "records"), default="human")
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("game", help="game graph operations")
    gsub = p.add_subparsers(dest="game_command", required=True)
    q = gsub.add_parser("export", help="Graphviz export")
    _common(q)
    q.add_argument("--dot", action="store_true", help="dot output (the only format)")
    q.add_argument("--out")
    q.set_defaults(func=cmd_game_export)

    p = sub.add_parser("policy", help="optimal policies, fingerprint and one-sided values")
    _common(p, need_input=True)
    p.add_argument("--pi", help="evaluate Max policy bits against Min's best response")
    p.add_argument("--sigma", help="evaluate Min policy bits against Max's best response")
    p.set_defaults(func=cmd_policy)

    p = sub.add_parser("lipschitz", help="product of layer discounts")
    _common(p)
    p.set_defaults(func=cmd_lipschitz)

    p = sub.add_parser("paths", help="trajectory sums for a fixed policy pair")
    psub = p.add_subparsers(dest="paths_command", required=True)
    q = psub.add_parser("enumerate")
    _common(q, need_input=True)
    _policy_args(q)
    q.set_defaults(func=cmd_paths_enumerate)
    q = psub.add_parser("value")
    _common(q, need_input=True)
    _policy_args(q)
    q.set_defaults(func=cmd_paths_value)
    q = psub.add_parser("bruteforce")
    _common(q, need_input=True)
    q.add_argument("--start")
    q.add_argument("--bit-limit", type=int, default=pth.DEFAULT_BIT_LIMIT)
    q.set_defaults(func=cmd_paths_bruteforce)

    p = sub.add_parser("mc", help="Monte Carlo estimate of a pair value")
    _common(p, need_input=True)
    _policy_args(p)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("bounds", help="interval bounds for an input box")
    _common(p)
    p.add_argument("--lower", required=True)
    p.add_argument("--upper", required=True)
    p.add_argument("--layers", action="store_true", help="also print every layer")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("certify", help="classify with --alpha/--beta, or emit/check/cell")
    _common(p, need_net=False)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--out", help="write the certificate here")
    p.set_defaults(func=cmd_certify)
    csub = p.add_subparsers(dest="certify_command")
    q = csub.add_parser("emit")
    _common(q, need_input=True)
    q.add_argument("--kind", choices=(cert.ACCEPT, cert.REJECT), required=True)
    q.add_argument("--threshold", type=float, required=True)
    q.add_argument("--out")
    q.set_defaults(func=cmd_certify_emit)
    q = csub.add_parser("check")
    _common(q)
    q.add_argument("--cert", required=True)
    q.set_defaults(func=cmd_certify_check)
    q = csub.add_parser("cell")
    _common(q, need_input=True)
    q.add_argument("--kind", choices=(cert.ACCEPT, cert.REJECT), required=True)
    q.add_argument("--policy", required=True, help="bits of the certifying player")
    q.add_argument("--threshold", type=float, required=True)
    q.set_defaults(func=cmd_certify_cell)

    p = sub.add_parser("softplus", help="entropy-regularised game")
    ssub = p.add_subparsers(dest="softplus_command", required=True)
    q = ssub.add_parser("eval")
    _common(q, need_input=True)
    q.add_argument("--tau", type=float)
    q.set_defaults(func=cmd_softplus_eval)
    q = ssub.add_parser("limit")
    _common(q, need_input=True)
    q.add_argument("--taus", default="1,0.1,0.01")
    q.set_defaults(func=cmd_softplus_limit)
    q = ssub.add_parser("policy")
    _common(q, need_input=True)
    q.add_argument("--tau", type=float)
    q.set_defaults(func=cmd_softplus_policy)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.func is cmd_certify and args.net is None:
        stderr.write("error: certify needs --net\n")
        return EXIT_USAGE
    out = Printer(getattr(args, "format", "human"), stdout)
    try:
        return args.func(args, out)
    except (ValueError, OSError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
