"""Batch front-end: ``design``, ``simulate``, ``pareto`` and ``optlayer``.

Configuration comes from an INI file (``--config``) with sections
``[experiment]``, ``[channel]``, ``[gops]``, ``[aggregate]`` and ``[mdp]``;
command-line flags override file values.  Results are CSV, optionally with a
JSON mirror carrying full metadata.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, channel, mdp, optimize, packetize
from ._backend import BACKEND
from .core import ChannelSpec, ContractViolation, GopLayout, ResourceLimitError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3

SCHEME_KEYS = {"feedback_free_rlnc": "rlnc", "full_feedback_mdp": "mdp", "uncoded": "uncoded"}


class ConfigError(ValueError):
    def __init__(self, field_name: str, problem: str):
        super().__init__(f"{field_name}: {problem}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    scheme: str = "feedback_free_rlnc"
    layers: str = "auto"  # auto | 1..4 | opt
    weights: str = "frame"
    pes: tuple[float, ...] = (0.1,)
    budgets: tuple[int, ...] = (13,)
    packets: tuple[tuple[int, ...], ...] = ()
    trace: str | None = None
    packet_len: int = packetize.DEFAULT_PACKET_LEN
    header_len: int = packetize.DEFAULT_HEADER_LEN
    aggregate: str = "mean"
    user_weights: tuple[float, ...] = ()
    lam: float = 1.0
    lambdas: tuple[float, ...] = optimize.DEFAULT_LAMBDAS
    trials: int = 100
    seed: int = 0
    mdp_cap: int = mdp.DEFAULT_CAP
    out: str | None = None
    json_out: str | None = None

    def canonical(self) -> dict:
        d = asdict(self)
        for k in ("out", "json_out"):
            d.pop(k)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _floats(text: str, name: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(name, f"expected numbers, got {text!r}") from None


def _ints(text: str, name: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(name, f"expected integers, got {text!r}") from None


def parse_budget(text: str) -> tuple[int, ...]:
    """``13``, ``10,13,16`` or an inclusive range ``10:30`` / ``10:30:2``."""
    text = text.strip()
    if ":" in text:
        parts = _ints(text.replace(":", " "), "budget")
        if len(parts) not in (2, 3):
            raise ConfigError("budget", f"range must be start:stop[:step], got {text!r}")
        step = parts[2] if len(parts) == 3 else 1
        if step < 1:
            raise ConfigError("budget", "range step must be >= 1")
        return tuple(range(parts[0], parts[1] + 1, step))
    return _ints(text, "budget")


def parse_lambdas(text: str) -> tuple[float, ...]:
    """``0.5``, ``0,0.5,1`` or ``start:stop:step`` (inclusive)."""
    text = text.strip()
    if ":" in text:
        a, b, step = _floats(text.replace(":", " "), "lambdas")
        count = int(round((b - a) / step)) + 1
        return tuple(round(a + i * step, 10) for i in range(count))
    return _floats(text, "lambdas")


def parse_packets(text: str) -> tuple[tuple[int, ...], ...]:
    """Layouts separated by ``;``, packet counts by ``,`` or spaces."""
    return tuple(_ints(chunk, "packets") for chunk in text.split(";") if chunk.strip())


_FILE_KEYS = {
    ("experiment", "scheme"): ("scheme", str),
    ("experiment", "layers"): ("layers", str),
    ("experiment", "weights"): ("weights", str),
    ("experiment", "budget"): ("budgets", parse_budget),
    ("experiment", "trials"): ("trials", int),
    ("experiment", "seed"): ("seed", int),
    ("experiment", "out"): ("out", str),
    ("experiment", "json"): ("json_out", str),
    ("channel", "pe"): ("pes", lambda t: _floats(t, "pe")),
    ("gops", "packets"): ("packets", parse_packets),
    ("gops", "trace"): ("trace", str),
    ("gops", "packet_len"): ("packet_len", int),
    ("gops", "header_len"): ("header_len", int),
    ("aggregate", "kind"): ("aggregate", str),
    ("aggregate", "weights"): ("user_weights", lambda t: _floats(t, "aggregate.weights")),
    ("aggregate", "lambda"): ("lam", float),
    ("aggregate", "lambdas"): ("lambdas", parse_lambdas),
    ("mdp", "cap"): ("mdp_cap", int),
}


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if not parser.read(path):
        raise ConfigError("config", f"cannot read {path}")
    cfg = ExperimentConfig()
    for section in parser.sections():
        for key, raw in parser.items(section):
            spec = _FILE_KEYS.get((section, key))
            if spec is None:
                raise ConfigError(f"{section}.{key}", "unknown setting")
            attr, conv = spec
            try:
                setattr(cfg, attr, conv(raw))
            except ConfigError:
                raise
            except ValueError:
                raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}") from None
    if cfg.trace and not Path(cfg.trace).is_absolute():
        cfg.trace = str((Path(path).parent / cfg.trace).resolve())
    return cfg


def validate(cfg: ExperimentConfig, command: str) -> None:
    """Check every precondition before any computation starts."""
    if cfg.scheme not in SCHEME_KEYS:
        raise ConfigError("scheme", f"must be one of {sorted(SCHEME_KEYS)}")
    if cfg.layers not in ("auto", "opt", "1", "2", "3", "4"):
        raise ConfigError("layers", "must be auto, opt or 1..4")
    if cfg.weights not in ("frame", "throughput"):
        raise ConfigError("weights", "must be frame or throughput")
    if not cfg.pes:
        raise ConfigError("pe", "need at least one user")
    try:
        ChannelSpec(cfg.pes, cfg.seed)
    except ContractViolation as exc:
        raise ConfigError("pe/seed", str(exc)) from None
    if not cfg.budgets or any(n < 0 for n in cfg.budgets):
        raise ConfigError("budget", "need one or more nonnegative budgets")
    if bool(cfg.packets) == bool(cfg.trace):
        raise ConfigError("gops", "give exactly one of packets or trace")
    if cfg.packets:
        for k in cfg.packets:
            if not k or any(v < 1 for v in k):
                raise ConfigError("packets", f"layout {k} needs >= 1 packet per layer")
        if cfg.layers not in ("auto", "opt") and any(len(k) != int(cfg.layers) for k in cfg.packets):
            raise ConfigError("layers", "fixed layer count disagrees with packets")
    else:
        if cfg.layers == "auto":
            raise ConfigError("layers", "a trace source needs layers = 1..4 or opt")
        if not Path(cfg.trace).is_file():
            raise ConfigError("trace", f"no such file {cfg.trace}")
    if cfg.packet_len - cfg.header_len < 1:
        raise ConfigError("header_len", "must leave at least one payload byte")
    if cfg.aggregate not in ("mean", "linear", "jain", "weighted_sum"):
        raise ConfigError("aggregate", "must be mean, linear, jain or weighted_sum")
    try:
        agg = aggregate_of(cfg)
    except ContractViolation as exc:
        raise ConfigError("aggregate", str(exc)) from None
    if agg.kind == "linear" and len(agg.weights) != len(cfg.pes):
        raise ConfigError("aggregate.weights", "need one weight per user")
    if cfg.scheme == "full_feedback_mdp":
        if agg.kind not in ("mean", "linear"):
            raise ConfigError("aggregate", "full_feedback_mdp needs a linear aggregate")
        if command == "pareto":
            raise ConfigError("scheme", "pareto sweeps are defined for feedback-free schemes")
    if any(not 0.0 <= x <= 1.0 for x in cfg.lambdas) or not cfg.lambdas:
        raise ConfigError("lambdas", "must be a nonempty subset of [0, 1]")
    if cfg.trials < 1:
        raise ConfigError("trials", "must be >= 1")
    if cfg.mdp_cap < 1:
        raise ConfigError("mdp.cap", "must be >= 1")


def aggregate_of(cfg: ExperimentConfig) -> optimize.AggregateSpec:
    if cfg.aggregate == "linear":
        return optimize.AggregateSpec.linear(cfg.user_weights)
    if cfg.aggregate == "weighted_sum":
        return optimize.AggregateSpec.weighted_sum(cfg.lam)
    return optimize.AggregateSpec(cfg.aggregate)


def gop_candidates(cfg: ExperimentConfig, force_opt: bool = False) -> list[list[GopLayout]]:
    """Candidate layouts per GOP (one candidate unless opt-layer)."""
    opt = force_opt or cfg.layers == "opt"
    if cfg.packets:
        def mk(k):
            return GopLayout.with_throughput_weights(k) if cfg.weights == "throughput" else GopLayout(k)
        layouts = [mk(k) for k in cfg.packets]
        return [layouts] if opt else [[lay] for lay in layouts]
    out = []
    for g, frames in enumerate(packetize.read_trace(cfg.trace, cfg.packet_len, cfg.header_len)):
        if opt:
            cands = packetize.candidate_layouts(frames, cfg.weights)
        else:
            try:
                cands = [packetize.layout_for(frames, int(cfg.layers), cfg.weights)]
            except packetize.InvalidLayoutError as exc:
                raise ConfigError("trace", f"GOP {g}: {exc}") from None
        out.append(cands)
    return out


def _policy_text(policy) -> str:
    if isinstance(policy, mdp.MdpSolution):
        return "mdp"
    return "-".join(str(n) for n in policy.allocation)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(round(x, 12))
    return str(x)


DESIGN_COLUMNS = ["gop", "user", "N_t", "lambda", "scheme", "L", "policy", "eta", "eta_tot",
                  "config_hash", "seed"]
SIMULATE_COLUMNS = ["gop", "user", "N_t", "lambda", "scheme", "L", "policy", "analytic_eta",
                    "sim_mean", "std_error", "within_3se", "trials", "config_hash", "seed"]
PARETO_COLUMNS = ["gop", "user", "N_t", "lambda", "L", "policy", "eta", "mean_eta", "fairness",
                  "nondominated", "config_hash", "seed"]
OPTLAYER_COLUMNS = ["gop", "user", "N_t", "lambda", "scheme", "L", "policy", "eta", "eta_tot",
                    "eta_tot_L1", "eta_tot_L2", "eta_tot_L3", "eta_tot_L4", "config_hash", "seed"]


def _sort(rows: list[dict]) -> list[dict]:
    def key(r):
        lam = r.get("lambda")
        return (r["gop"], r["user"], r["N_t"], -1.0 if lam in ("", None) else float(lam))
    return sorted(rows, key=key)


def _designs(cfg: ExperimentConfig, cands: list[GopLayout], n_t: int):
    scheme = SCHEME_KEYS[cfg.scheme]
    agg = aggregate_of(cfg)
    per = [optimize.design(c, cfg.pes, n_t, agg, scheme, cfg.mdp_cap) for c in cands]
    chosen = per[optimize._pick_layout([p.eta for p in per], cands)]
    return chosen, per


def run_design(cfg: ExperimentConfig) -> list[dict]:
    validate(cfg, "design")
    h, rows = cfg.digest(), []
    for g, cands in enumerate(gop_candidates(cfg)):
        for n_t in cfg.budgets:
            chosen, _ = _designs(cfg, cands, n_t)
            for u in range(len(cfg.pes)):
                rows.append(dict(gop=g, user=u, N_t=n_t, **{"lambda": ""}, scheme=cfg.scheme,
                                 L=chosen.layout.layer_count, policy=_policy_text(chosen.policy),
                                 eta=float(chosen.per_user[u]), eta_tot=float(chosen.eta),
                                 config_hash=h, seed=cfg.seed))
    return _sort(rows)


def run_simulate(cfg: ExperimentConfig) -> list[dict]:
    validate(cfg, "simulate")
    h, rows = cfg.digest(), []
    spec = ChannelSpec(cfg.pes, cfg.seed)
    scheme = SCHEME_KEYS[cfg.scheme]
    gops = gop_candidates(cfg)
    for n_t in cfg.budgets:
        slots = cfg.trials * len(gops) * n_t
        delivered = np.stack([
            channel.generate_pattern(spec, u, slots, stream=n_t).reshape(cfg.trials, len(gops), n_t)
            for u in range(spec.user_count)])
        for g, cands in enumerate(gops):
            chosen, _ = _designs(cfg, cands, n_t)
            lay = chosen.layout
            levels = channel.replay_levels(lay, chosen.policy, delivered[:, :, g, :], scheme)
            c = np.concatenate(([0.0], lay.weights))
            for u in range(spec.user_count):
                x = c[levels[u]]
                se = float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
                mean = float(x.mean())
                ana = float(chosen.per_user[u])
                rows.append(dict(gop=g, user=u, N_t=n_t, **{"lambda": ""}, scheme=cfg.scheme,
                                 L=lay.layer_count, policy=_policy_text(chosen.policy),
                                 analytic_eta=ana, sim_mean=mean, std_error=se,
                                 within_3se=int(abs(mean - ana) <= 3 * max(se, 1.0 / x.size)),
                                 trials=cfg.trials, config_hash=h, seed=cfg.seed))
    return _sort(rows)


def run_pareto(cfg: ExperimentConfig) -> list[dict]:
    validate(cfg, "pareto")
    h, rows = cfg.digest(), []
    scheme = SCHEME_KEYS[cfg.scheme]
    for g, cands in enumerate(gop_candidates(cfg)):
        for n_t in cfg.budgets:
            points, front = optimize.pareto_sweep(cands, cfg.pes, n_t, cfg.lambdas, scheme)
            on_front = {id(p) for p in front}
            dedup = {}
            for p in points:
                dedup.setdefault((p.layer_count, p.policy.allocation), p)
            for p in points:
                rep = dedup[(p.layer_count, p.policy.allocation)]
                for u, e in enumerate(p.per_user_eta):
                    rows.append(dict(gop=g, user=u, N_t=n_t, **{"lambda": p.lam},
                                     L=p.layer_count, policy=_policy_text(p.policy), eta=float(e),
                                     mean_eta=p.mean_eta, fairness=p.fairness,
                                     nondominated=int(id(rep) in on_front),
                                     config_hash=h, seed=cfg.seed))
    return _sort(rows)


def run_optlayer(cfg: ExperimentConfig) -> list[dict]:
    validate(cfg, "optlayer")
    h, rows = cfg.digest(), []
    for g, cands in enumerate(gop_candidates(cfg, force_opt=True)):
        for n_t in cfg.budgets:
            chosen, per = _designs(cfg, cands, n_t)
            by_l = {p.layout.layer_count: p.eta for p in per}
            for u in range(len(cfg.pes)):
                row = dict(gop=g, user=u, N_t=n_t, **{"lambda": ""}, scheme=cfg.scheme,
                           L=chosen.layout.layer_count, policy=_policy_text(chosen.policy),
                           eta=float(chosen.per_user[u]), eta_tot=float(chosen.eta),
                           config_hash=h, seed=cfg.seed)
                for L in range(1, 5):
                    row[f"eta_tot_L{L}"] = by_l.get(L, "")
                rows.append(row)
    return _sort(rows)


COMMANDS = {
    "design": (run_design, DESIGN_COLUMNS),
    "simulate": (run_simulate, SIMULATE_COLUMNS),
    "pareto": (run_pareto, PARETO_COLUMNS),
    "optlayer": (run_optlayer, OPTLAYER_COLUMNS),
}


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def to_json(rows: list[dict], cfg: ExperimentConfig, command: str) -> str:
    meta = dict(command=command, config=cfg.canonical(), config_hash=cfg.digest(),
                seed=cfg.seed, rng=channel.RNG_NAME, backend=BACKEND, version=__version__)
    return json.dumps(dict(meta=meta, rows=rows), sort_keys=True, indent=1, default=float)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ewrlnc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="INI experiment file")
        s.add_argument("--scheme", choices=sorted(SCHEME_KEYS))
        s.add_argument("--layers", help="auto, opt or 1..4")
        s.add_argument("--weights", choices=["frame", "throughput"])
        s.add_argument("--pe", help="per-user packet error rates, comma separated")
        s.add_argument("--budget", help="N_t: 13, 10,13,16 or 10:30[:step]")
        s.add_argument("--packets", help="explicit layouts, e.g. '4,6;4,2,2,2'")
        s.add_argument("--trace", help="GOP trace file (8 frame sizes per line)")
        s.add_argument("--packet-len", type=int)
        s.add_argument("--header-len", type=int)
        s.add_argument("--aggregate", choices=["mean", "linear", "jain", "weighted_sum"])
        s.add_argument("--user-weights", help="linear aggregate weights")
        s.add_argument("--lambda", dest="lam", type=float)
        s.add_argument("--lambdas", help="pareto grid, e.g. 0:1:0.02")
        s.add_argument("--trials", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--mdp-cap", type=int)
        s.add_argument("--out", help="CSV output path (default stdout)")
        s.add_argument("--json", dest="json_out", help="optional JSON mirror path")
    return p


def config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    simple = ["scheme", "layers", "weights", "trace", "packet_len", "header_len", "aggregate",
              "lam", "trials", "seed", "mdp_cap", "out", "json_out"]
    for name in simple:
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    if args.pe is not None:
        cfg.pes = _floats(args.pe, "pe")
    if args.budget is not None:
        cfg.budgets = parse_budget(args.budget)
    if args.packets is not None:
        cfg.packets = parse_packets(args.packets)
        if args.trace is None:
            cfg.trace = None
    if args.trace is not None and args.packets is None:
        cfg.packets = ()
    if args.user_weights is not None:
        cfg.user_weights = _floats(args.user_weights, "user_weights")
    if args.lambdas is not None:
        cfg.lambdas = parse_lambdas(args.lambdas)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        run, columns = COMMANDS[args.command]
        rows = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ContractViolation as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = to_csv(rows, columns)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.json_out:
        Path(cfg.json_out).write_text(to_json(rows, cfg, args.command))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
