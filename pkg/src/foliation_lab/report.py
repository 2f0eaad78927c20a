"""Expectation runner and table emission."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cone import estimate_foliation_cone, is_transversal_type
from .domain import convergence_experiment
from .eta import (
    completeness_probe,
    discontinuity_scan,
    eta_sequence_limits,
    ex32_bounds_check,
)
from .field import Polydisc
from .variety import projective_angle, subspaces_equal

THREADS_ENV = "FOLIATION_LAB_THREADS"


def fmt(x):
    """17 significant digits, '.' separator; complex as re/im pairs elsewhere."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, complex):
        return f"{fmt(x.real)}{'+' if x.imag >= 0 else '-'}{fmt(abs(x.imag))}i"
    if isinstance(x, (tuple, list, np.ndarray)):
        return "(" + ", ".join(fmt(v) for v in x) + ")"
    return str(x)


def max_workers():
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def parallel_map(fn, items):
    """Ordered map, capped by FOLIATION_LAB_THREADS."""
    items = list(items)
    workers = min(max_workers(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def point_columns(n):
    return [c for j in range(n) for c in (f"re{j + 1}", f"im{j + 1}")]


def point_values(p):
    return [v for z in np.asarray(p, dtype=complex) for v in (fmt(z.real), fmt(z.imag))]


def write_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([r if isinstance(r, str) else fmt(r) for r in row])
    return buf.getvalue()


# -- expectation checks -------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    index: int
    kind: str
    target: str
    expected: str
    passed: bool
    measured: str
    citation: str

    @property
    def status(self):
        return "PASS" if self.passed else "FAIL"


def _point(exp):
    return np.asarray(exp.target["point"], dtype=complex)


def check_cone(sc, exp, rng, tols):
    cone = estimate_foliation_cone(sc.field, sc.E, _point(exp), rng=rng,
                                   eps=tols["density_eps"], residual_tol=tols["residual_tol"])
    want = exp.expected
    dim = 0 if cone.span_hint is None else cone.span_hint.shape[1]
    nrel = 0 if cone.relations is None else len(cone.relations)
    if cone.relations is not None and len(cone.directions):
        res = float(np.max(np.abs(cone.directions @ cone.relations.T)))
    else:
        res = 0.0
    measured = f"directions={len(cone.directions)} relations={nrel} span_dim={dim} residual={fmt(res)}"
    if want.get("dense"):
        return dim == sc.n and nrel == 0, measured
    span_ok = cone.span_hint is not None and subspaces_equal(cone.span_hint, np.array(want["span"]).T)
    rel_ok = nrel == len(want["relations"]) and (nrel == 0 or subspaces_equal(
        cone.relations.conj().T, np.array(want["relations"], dtype=complex).T))
    return span_ok and rel_ok and res <= exp.tol, measured


def check_transversal(sc, exp, rng, tols):
    v = is_transversal_type(sc.field, sc.E, _point(exp), theta_min=tols["theta_min"], rng=rng)
    measured = f"verdict={v.verdict} min_angle={fmt(v.min_angle)}"
    if exp.expected == "transversal":
        return v.verdict == "transversal" and v.min_angle >= exp.tol, measured
    if v.verdict != "not_transversal":
        return False, measured
    z, d, q, e = v.witness
    ang = float(projective_angle(d, e))
    measured += f" witness_dir={fmt(np.round(e, 12))} witness_angle={fmt(ang)}"
    return ang <= exp.tol, measured


def check_eta_sequence(sc, exp, rng, tols):
    seq = sc.sequences[exp.target["sequence"]]
    rep = eta_sequence_limits(sc, seq, horizon=exp.target.get("horizon", 10_000))
    etas = rep.etas
    if exp.expected is None:
        spread = float(np.ptp(etas))
        measured = f"eta_first={fmt(etas[0])} spread={fmt(spread)} n_max={int(rep.ns[-1])}"
        return spread <= exp.tol and etas[0] > 0, measured
    want = float(exp.expected)
    if want == 0.0:
        near = np.array([np.linalg.norm(seq(int(n)) - np.asarray(seq.target)) <= 1e-3 for n in rep.ns])
        worst = float(np.max(etas[near])) if near.any() else float("inf")
        measured = f"max_eta_within_1e-3={fmt(worst)} last={fmt(etas[-1])}"
        return worst <= exp.tol, measured
    err = float(np.max(np.abs(etas - want)))
    measured = f"max_abs_err={fmt(err)} n_max={int(rep.ns[-1])}"
    return err <= exp.tol, measured


def check_eta_gap(sc, exp, rng, tols):
    a, b = exp.target["sequences"]
    h = exp.target.get("horizon", 10_000)
    la = eta_sequence_limits(sc, sc.sequences[a], horizon=h).limit
    lb = eta_sequence_limits(sc, sc.sequences[b], horizon=h).limit
    gap = abs(la - lb)
    return gap >= float(exp.expected), f"gap={fmt(gap)} limits=({fmt(la)}, {fmt(lb)})"


def check_scan(sc, exp, rng, tols):
    frac = tols.get("gap_frac", exp.tol)
    res = discontinuity_scan(sc, grid=exp.target.get("grid", 12), gap_tol=tols.get("gap_tol"),
                             gap_frac=frac)
    nflag = int(res.flags.sum())
    measured = f"flags={nflag} skipped={res.skipped} gap_tol={fmt(res.gap_tol)}"
    if exp.expected == "no_flags":
        return nflag == 0, measured
    spacing = 2 * 0.9 * float(np.max(sc.domain.r)) / exp.target.get("grid", 12)
    dist = sc.E.distance(res.flagged) if nflag else np.zeros(0)
    cluster = res.largest_flag_cluster()
    measured += f" largest_cluster={cluster} max_dist_to_E={fmt(float(dist.max()) if nflag else 0.0)}"
    return nflag > 0 and cluster >= 5 and bool(np.all(dist <= spacing)), measured


def check_complete(sc, exp, rng, tols):
    rep = completeness_probe(sc, _point(exp))
    gains = [L[-1] - L[0] for _, L, _ in rep.rays]
    return rep.verdict == exp.expected, f"verdict={rep.verdict} rays={len(rep.rays)} min_gain={fmt(min(gains))}"


def check_converge(sc, exp, rng, tols):
    r = float(exp.target.get("U", 0.5))
    U = Polydisc((0,) * sc.n, (r,) * sc.n)
    rep = convergence_experiment(sc, U, steps=tuple(exp.target.get("steps", (8, 16, 32, 64))))
    gaps = [max(row.sup_gaps) for row in rep.rows]
    mono = rep.monotone_from(8)
    measured = f"sup_gaps={fmt(gaps)} monotone={fmt(mono)}"
    return mono and gaps[-1] <= exp.tol, measured


def check_ex32(sc, exp, rng, tols):
    lo, hi = ex32_bounds_check(sc.field, sc.params["k"], sc.params["rho"])
    want_lo, want_hi = exp.expected
    ok = abs(lo - want_lo) <= exp.tol and abs(hi - want_hi) <= exp.tol
    return ok, f"C_low={fmt(lo)} C_high={fmt(hi)}"


CHECKS = {
    "cone": check_cone,
    "transversal": check_transversal,
    "eta_sequence": check_eta_sequence,
    "eta_gap": check_eta_gap,
    "scan": check_scan,
    "complete": check_complete,
    "converge": check_converge,
    "ex32_bounds": check_ex32,
}


def _target_text(t):
    return " ".join(f"{k}={fmt(v) if not isinstance(v, str) else v}" for k, v in sorted(t.items()))


def run_report(scenario, seed=0, tolerances=None):
    """Run every declared expectation; errors become FAIL lines, never abort."""
    from .config import DEFAULT_TOLERANCES

    tols = dict(DEFAULT_TOLERANCES)
    tols.update(tolerances or {})
    seeds = np.random.SeedSequence(seed).spawn(len(scenario.expectations))

    def one(item):
        i, exp = item
        if not exp.citation:
            return CheckResult(i, exp.kind, "", "", False, "expectation lacks a citation", "")
        rng = np.random.default_rng(seeds[i])
        try:
            ok, measured = CHECKS[exp.kind](scenario, exp, rng, tols)
        except Exception as exc:  # noqa: BLE001  a failed check is reported, not raised
            ok, measured = False, f"error: {type(exc).__name__}: {exc}"
        return CheckResult(i, exp.kind, _target_text(exp.target), fmt(exp.expected), bool(ok),
                           measured, exp.citation)

    return parallel_map(one, enumerate(scenario.expectations))


def render_report(scenario, results, fmt_kind="text", header=()):
    if fmt_kind == "csv":
        rows = [[scenario.id, r.index, r.kind, r.target, r.expected, r.measured, r.status,
                 r.citation] for r in results]
        return write_csv(["scenario", "index", "kind", "target", "expected", "measured",
                          "status", "citation"], rows)
    lines = list(header) + [f"scenario {scenario.id}: {scenario.title}"]
    for r in results:
        lines.append(f"{r.status} [{r.kind}] {r.target} expected={r.expected} {r.measured}")
        lines.append(f"     {r.citation}")
    npass = sum(r.passed for r in results)
    lines.append(f"{npass}/{len(results)} passed")
    return "\n".join(lines) + "\n"
