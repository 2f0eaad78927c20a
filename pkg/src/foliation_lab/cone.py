"""Tangent cone of a foliation at singular points and the transversality test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import least_squares

from .field import Polydisc
from .variety import (
    ANGLE_TOL,
    ConeSet,
    canonicalize,
    dedupe_directions,
    projective_angle,
    tangent_cone_of_set,
)

THETA_MIN = 0.1
RESIDUAL_TOL = 1e-8
DENSITY_EPS = 0.05


def default_scales(domain, count=21):
    return 0.25 * float(np.min(domain.r)) * 2.0 ** -np.arange(count)


def _sample_offsets(rng, n, r, count):
    # log-uniform moduli per coordinate so every ratio of components shows up;
    # each coordinate independently spans one, six or sixteen decades, so
    # bulk directions are filled evenly and strongly lopsided points still occur
    decades = rng.choice([1.0, 6.0, 16.0], p=[0.5, 0.3, 0.2], size=(count, n))
    mod = r * 10.0 ** (-decades * rng.uniform(size=(count, n)))
    return mod * np.exp(2j * np.pi * rng.uniform(size=(count, n))) / np.sqrt(n)


def _test_directions(k, rng, count=2000):
    if k == 2:
        m = 600
        i = np.arange(m) + 0.5
        theta = np.arccos(1 - 2 * i / m)
        phi = np.pi * (1 + 5 ** 0.5) * i
        return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)
    t = rng.normal(size=(count, k)) + 1j * rng.normal(size=(count, k))
    return t / np.linalg.norm(t, axis=1, keepdims=True)


def uncovered_directions(directions, basis, eps=DENSITY_EPS, rng=None):
    """Test directions of span(basis) (in basis coordinates) farther than eps from every sample."""
    k = basis.shape[1]
    if k == 0 or not len(directions):
        return np.ones((1, max(k, 1)), dtype=complex)
    if k == 1:
        return np.zeros((0, 1), dtype=complex)
    coords = directions @ basis.conj()
    coords = coords / np.linalg.norm(coords, axis=1, keepdims=True)
    tests = _test_directions(k, rng if rng is not None else np.random.default_rng(0))
    cos_eps = np.cos(eps)
    out = []
    for chunk in np.array_split(tests, max(1, len(tests) // 200)):
        best = np.abs(chunk.conj() @ coords.T).max(axis=1)
        out.append(chunk[best < cos_eps])
    return np.concatenate(out)


def is_dense_in_sphere(directions, basis, eps=DENSITY_EPS, rng=None):
    """True when every projective direction of span(basis) is within eps of a sample."""
    return len(uncovered_directions(directions, basis, eps, rng)) == 0


def certified_relations(directions, tol=RESIDUAL_TOL):
    """Rows l with sum_i l_i v_i = 0 for all directions, kept iff residual <= tol."""
    D = np.asarray(directions, dtype=complex)
    _, vecs = np.linalg.eigh(D.conj().T @ D)
    rels = []
    for ell in vecs.T:
        if np.max(np.abs(D @ ell)) <= tol:
            rels.append(canonicalize(ell))
    return np.asarray(rels, dtype=complex).reshape(-1, D.shape[1])


def estimate_foliation_cone(X, E, p, scales=None, samples_per_scale=400, rng=None,
                            eps=DENSITY_EPS, residual_tol=RESIDUAL_TOL, refine_rounds=8,
                            max_holes=200):
    """Sampled tangent cone of the foliation of X at p in E.

    Directions X(q)/|X(q)| are collected at points q off E with |q - p| on
    a geometric scale ladder.  Linear relations satisfied by every sampled
    direction are certified by null-space extraction, and ``span_hint`` is
    set when the directions are eps-dense in the subspace they cut out;
    holes in the sample are filled by jittering the points whose
    directions lie nearest to them (at most ``max_holes`` per round).
    """
    p = np.asarray(p, dtype=complex)
    rng = rng if rng is not None else np.random.default_rng(0)
    scales = default_scales(X.domain) if scales is None else np.asarray(scales)
    dirs, pts, dir_scales, skipped = [], [], [], []
    for r in scales:
        q = p + _sample_offsets(rng, X.n, r, samples_per_scale)
        v = X(q)
        norm = np.linalg.norm(v, axis=1)
        off = (norm > 1e-300) & (E.distance(q) > 1e-14 * r)
        if not np.any(off):
            skipped.append(float(r))
            continue
        dirs.append(v[off] / norm[off, None])
        pts.append(q[off])
        dir_scales.append(np.full(int(off.sum()), r))
    if not dirs:
        return ConeSet(np.zeros((0, X.n), dtype=complex), skipped_scales=tuple(skipped))
    D = canonicalize(np.concatenate(dirs))
    sc = np.concatenate(dir_scales)
    Q = np.concatenate(pts)
    rels = certified_relations(D, residual_tol)
    basis = scipy.linalg.null_space(rels) if len(rels) else np.eye(X.n, dtype=complex)
    holes = uncovered_directions(D, basis, eps, rng)
    stalls = 0
    for k in range(refine_rounds):
        if not len(holes) or stalls >= 2:
            break
        before = len(holes)
        if len(holes) > max_holes:
            holes = holes[rng.choice(len(holes), max_holes, replace=False)]
        # jitter the sample points whose directions lie closest to each hole
        coords = D @ basis.conj()
        coords /= np.linalg.norm(coords, axis=1, keepdims=True)
        near = np.argmax(np.abs(holes.conj() @ coords.T), axis=1)
        base = np.repeat(Q[near] - p, max(32, 2048 // len(holes)), axis=0)
        width = 0.5 / (1 + k)
        kick = width * (rng.normal(size=base.shape) + 1j * rng.uniform(-1, 1, size=base.shape))
        q = p + base * np.exp(kick)
        v = X(q)
        norm = np.linalg.norm(v, axis=1)
        off = (norm > 1e-300) & (E.distance(q) > 1e-14 * np.linalg.norm(q - p, axis=1))
        if not np.any(off):
            break
        new = canonicalize(v[off] / norm[off, None])
        if len(rels) and np.max(np.abs(new @ rels.T)) > residual_tol:
            break
        D = np.concatenate([D, new])
        Q = np.concatenate([Q, q[off]])
        sc = np.concatenate([sc, np.linalg.norm(q[off] - p, axis=1)])
        holes = uncovered_directions(D, basis, eps, rng)
        # a cone that is genuinely thinner than the subspace stops shrinking its holes
        stalls = stalls + 1 if before > 50 and len(holes) > 0.8 * before else 0
    span = basis if len(holes) == 0 else None
    return ConeSet(D, relations=rels if len(rels) else None, span_hint=span, scales=sc,
                   skipped_scales=tuple(skipped))


@dataclass(frozen=True)
class TransversalityVerdict:
    verdict: str  # transversal | not_transversal | inconclusive
    min_angle: float
    neighborhood: Polydisc
    witness: tuple | None = None  # (q_near, direction, e_point)


def _witness_search(X, E, q, e, radius, rng, starts=4):
    """Minimise the angle between X(x) and e over x off E with |x - q| <= radius."""
    n = X.n
    lo = np.concatenate([q.real, q.imag]) - radius / np.sqrt(2 * n)
    hi = np.concatenate([q.real, q.imag]) + radius / np.sqrt(2 * n)
    e = e / np.linalg.norm(e)

    def resid(u):
        z = u[:n] + 1j * u[n:]
        v = X(z)
        v = v / (np.linalg.norm(v) + 1e-300)
        w = v - np.vdot(e, v) * e
        return np.concatenate([w.real, w.imag])

    best = None
    for _ in range(starts):
        u0 = lo + (hi - lo) * rng.uniform(size=2 * n)
        try:
            sol = least_squares(resid, u0, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                max_nfev=400)
        except ValueError:
            continue
        z = sol.x[:n] + 1j * sol.x[n:]
        v = X(z)
        if np.linalg.norm(v) < 1e-300 or (E.pieces and E.distance(z) <= 1e-14):
            continue
        ang = float(projective_angle(v, e))
        if best is None or ang < best[0]:
            best = (ang, z, canonicalize(v))
    return best


def is_transversal_type(X, E, p, theta_min=THETA_MIN, nbhd_radius=None, samples=4, rng=None,
                        samples_per_scale=400, witness_scales=3):
    """Decide whether the foliation is of transversal type at p in E."""
    p = np.asarray(p, dtype=complex)
    rng = rng if rng is not None else np.random.default_rng(0)
    if nbhd_radius is None:
        nbhd_radius = 0.25 * float(np.min(X.domain.r))
    nbhd = Polydisc(tuple(p), (nbhd_radius,) * X.n)
    qs = [p]
    for pc in E.pieces:
        cand = pc.sample_near(p, nbhd_radius, 4 * samples, rng)
        cand = cand[nbhd.contains(cand) & X.domain.contains(cand)]
        qs.extend(cand[:samples])
    qs = [q for q in qs if E.contains(q)]
    if not qs:
        raise ValueError("no points of E in the neighbourhood")
    min_angle = np.pi / 2
    for q in qs:
        cE = tangent_cone_of_set(E, q, rng=rng)
        cF = estimate_foliation_cone(X, E, q, samples_per_scale=samples_per_scale, rng=rng)
        for e in cE.directions:
            min_angle = min(min_angle, cF.angle_to(e))
            if cF.angle_to(e) > 5 * theta_min:
                continue
            # a realised sequence: the angle must close at every scale of the ladder
            hits = []
            for k in range(witness_scales):
                hit = _witness_search(X, E, q, e, nbhd_radius * 16.0 ** -k, rng)
                if hit is None or hit[0] > ANGLE_TOL:
                    break
                hits.append(hit)
            if len(hits) == witness_scales:
                ang, z, v = hits[-1]
                return TransversalityVerdict("not_transversal", float(ang), nbhd,
                                             (z, v, q, canonicalize(e)))
    if min_angle >= theta_min:
        return TransversalityVerdict("transversal", float(min_angle), nbhd)
    return TransversalityVerdict("inconclusive", float(min_angle), nbhd)
