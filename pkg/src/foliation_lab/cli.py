"""foliation-lab command line."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import COMMANDS, ConfigError, RunConfig, parse_config, parse_point
from .cone import estimate_foliation_cone, is_transversal_type
from .domain import DomainError, convergence_experiment
from .eta import (
    EtaError,
    completeness_probe,
    discontinuity_scan,
    eta_at,
    eta_sequence_limits,
    ex32_bounds_check,
)
from .field import Polydisc
from .report import fmt, parallel_map, point_columns, point_values, render_report, run_report, write_csv
from .scenarios import Scenario, get_scenario, scenario_ids


def _scenario(cfg):
    if cfg.scenario:
        return get_scenario(cfg.scenario)
    c = cfg.custom
    return Scenario("custom", "custom field", c.field, c.E)


def _point(cfg, default=None):
    p = cfg.params.get("point")
    if p is None:
        if default is None:
            raise ConfigError("this command needs --point")
        p = default
    return np.asarray(p, dtype=complex)


def _rng(cfg):
    return np.random.default_rng(cfg.seed)


def _table(cfg, header, rows):
    if cfg.format == "csv":
        return write_csv(header, rows)
    widths = [len(h) for h in header]
    cells = [[r if isinstance(r, str) else fmt(r) for r in row] for row in rows]
    for row in cells:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _with_echo(cfg, text):
    if cfg.format == "csv":
        return text
    return "\n".join(cfg.echo()) + "\n" + text


def cmd_cone(cfg):
    sc = _scenario(cfg)
    t = cfg.tolerances
    cone = estimate_foliation_cone(sc.field, sc.E, _point(cfg), rng=_rng(cfg),
                                   eps=t["density_eps"], residual_tol=t["residual_tol"])
    rows = [point_values(d) + [s] for d, s in zip(cone.directions, cone.scales)]
    out = _table(cfg, point_columns(sc.n) + ["scale"], rows)
    if cfg.format == "text":
        rels = [] if cone.relations is None else cone.relations
        out = "\n".join(f"# relation {fmt(np.round(r, 12))}" for r in rels) + "\n" + out if len(rels) else out
        dim = 0 if cone.span_hint is None else cone.span_hint.shape[1]
        out = f"# span_dim = {dim}\n" + out
    return _with_echo(cfg, out), 0


def cmd_transversal(cfg):
    sc = _scenario(cfg)
    v = is_transversal_type(sc.field, sc.E, _point(cfg), theta_min=cfg.tolerances["theta_min"],
                            rng=_rng(cfg))
    wit = ""
    if v.witness is not None:
        z, d, q, e = v.witness
        wit = fmt(np.round(d, 12))
    return _with_echo(cfg, _table(cfg, ["verdict", "min_angle", "witness"],
                                  [[v.verdict, v.min_angle, wit]])), 0


def _eta_rows(samples):
    rows = []
    for smp in samples:
        flag = "" if smp.kind == "exact" else f"[{fmt(smp.lower)}, {fmt(smp.upper)}]"
        rows.append(point_values(smp.point) + [smp.s, smp.eta, smp.kind, smp.leaf_ref, flag])
    return rows


def cmd_eta(cfg):
    sc = _scenario(cfg)
    head = None
    if "sequence" in cfg.params:
        rep = eta_sequence_limits(sc, cfg.params["sequence"], horizon=cfg.params.get("horizon", 1000))
        samples = rep.samples
        head = f"# limit = {fmt(rep.limit)}  expected = {fmt(rep.expected)}"
    else:
        samples = [eta_at(sc, _point(cfg), safety=cfg.tolerances["safety"])]
    out = _table(cfg, point_columns(sc.n) + ["s", "eta", "kind", "leaf_ref", "flag"], _eta_rows(samples))
    if head and cfg.format == "text":
        out = head + "\n" + out
    return _with_echo(cfg, out), 0


def cmd_scan(cfg):
    sc = _scenario(cfg)
    res = discontinuity_scan(sc, grid=cfg.params.get("grid", 12),
                             gap_tol=cfg.tolerances.get("gap_tol"), gap_frac=cfg.tolerances["gap_frac"])
    rows = []
    for i, q in enumerate(res.points):
        if res.n_probes[i] == 0:
            continue
        fams = "+".join(sorted({f for f, _, _ in res.witnesses.get(i, [])}))
        rows.append(point_values(q) + [res.s_max[i], res.s_max[i] ** 2,
                                       "spread" if res.n_probes[i] > 1 else "single",
                                       fams, int(res.flags[i])])
    out = _table(cfg, point_columns(sc.n) + ["s", "eta", "kind", "leaf_ref", "flag"], rows)
    if cfg.format == "text":
        out = (f"# flags = {int(res.flags.sum())}  largest_cluster = {res.largest_flag_cluster()}"
               f"  skipped = {res.skipped}\n") + out
    return _with_echo(cfg, out), 0


def cmd_complete(cfg):
    sc = _scenario(cfg)
    rep = completeness_probe(sc, _point(cfg))
    rows = [[label, k + 1, d, L, v] for label, Ls, v in rep.rays
            for k, (d, L) in enumerate(zip(rep.ladder, Ls))]
    out = _table(cfg, ["ray", "k", "delta", "length", "ray_verdict"], rows)
    if cfg.format == "text":
        out = f"# verdict = {rep.verdict}\n" + out
    return _with_echo(cfg, out), 0


def cmd_converge(cfg):
    sc = _scenario(cfg)
    U = Polydisc((0,) * sc.n, (0.5,) * sc.n)
    steps = cfg.params.get("steps", (8, 16, 32, 64))
    rep = convergence_experiment(sc, U, family=cfg.params.get("family", "shrink"), steps=steps,
                                 include_E=bool(sc.params.get("transversal", False)))
    labels = [lab.replace(" ", "_") for lab, _ in rep.compacts]
    rows = [[r.n, r.rho, *r.sup_gaps] for r in rep.rows]
    out = _table(cfg, ["n", "rho"] + [f"sup_gap_{lab}" for lab in labels], rows)
    if cfg.format == "text":
        out = f"# monotone_from_8 = {fmt(rep.monotone_from(8))}\n" + out
    return _with_echo(cfg, out), 0


def cmd_ex32(cfg):
    sc = _scenario(cfg)
    if "k" not in sc.params:
        raise ConfigError(f"{sc.id} is not a comparison-density scenario")
    lo, hi = ex32_bounds_check(sc.field, sc.params["k"], sc.params["rho"])
    return _with_echo(cfg, _table(cfg, ["k", "rho", "C_low", "C_high"],
                                  [[sc.params["k"], sc.params["rho"], lo, hi]])), 0


def cmd_report(cfg):
    ids = [cfg.scenario] if cfg.scenario else list(scenario_ids())
    scs = [get_scenario(i) for i in ids]
    results = parallel_map(lambda sc: run_report(sc, cfg.seed, cfg.tolerances), scs)
    parts, failed = [], False
    for i, (sc, res) in enumerate(zip(scs, results)):
        header = cfg.echo() if i == 0 and cfg.format == "text" else ()
        text = render_report(sc, res, cfg.format, header)
        if cfg.format == "csv" and i > 0:
            text = text.split("\n", 1)[1]
        parts.append(text)
        failed |= any(not r.passed for r in res)
    return "".join(parts), int(failed)


def cmd_list(cfg):
    rows = [[sid, get_scenario(sid).title, len(get_scenario(sid).expectations)] for sid in scenario_ids()]
    return _table(cfg, ["id", "title", "expectations"], rows), 0


HANDLERS = {
    "cone": cmd_cone,
    "transversal": cmd_transversal,
    "eta": cmd_eta,
    "scan": cmd_scan,
    "complete": cmd_complete,
    "converge": cmd_converge,
    "ex32": cmd_ex32,
    "report": cmd_report,
    "list-scenarios": cmd_list,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="foliation-lab",
                                     description="Experiments on singular holomorphic foliations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path)
        p.add_argument("--scenario")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path)
        p.add_argument("--format", choices=("csv", "text"))
        if name in ("cone", "transversal", "eta", "complete"):
            p.add_argument("--point", help="e.g. '(0, 0.5, -0.3i)'")
        if name == "eta":
            p.add_argument("--sequence")
            p.add_argument("--horizon", type=int)
        if name == "scan":
            p.add_argument("--grid", type=int)
        if name == "converge":
            p.add_argument("--family", choices=("shrink", "translate"))
            p.add_argument("--steps", type=int, help="largest n of the ladder 8, 16, ..., N")
    return parser


def make_config(args):
    base = parse_config(args.config.read_text(encoding="utf-8"), validate=False) if args.config else RunConfig()
    cfg = base.with_overrides(command=args.command, scenario=args.scenario, seed=args.seed,
                              out=str(args.out) if args.out else None, format=args.format)
    params = dict(cfg.params)
    if getattr(args, "point", None):
        params["point"] = parse_point(args.point)
    for key in ("sequence", "horizon", "grid", "family"):
        if getattr(args, key, None) is not None:
            params[key] = getattr(args, key)
    if getattr(args, "steps", None):
        top, steps, n = args.steps, [], 8
        while n <= top:
            steps.append(n)
            n *= 2
        params["steps"] = tuple(steps or [top])
    return RunConfig(cfg.scenario, cfg.command, cfg.seed, cfg.out, cfg.format, cfg.tolerances,
                     params, cfg.custom).validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        text, status = HANDLERS[cfg.command](cfg)
    except (ConfigError, DomainError, EtaError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            sys.stderr.close()
    return status


if __name__ == "__main__":
    sys.exit(main())
