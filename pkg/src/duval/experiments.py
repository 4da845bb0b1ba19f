"""Experiment runners shared by the command line, the scripts and the acceptance suite.

Each runner takes an ExperimentConfig and returns an Outcome: tabular rows,
scalar values and a status ('pass', 'fail' or 'inconclusive') judged against
the expectations file.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import dynkin
from .fields import (constant_form, cutoff_constant_form, exact_bump_form, exact_top_form,
                     bump_top_form, radial_closed_form, twisted_bump_form)
from .grassmann import wedge
from .kernels import (BallWeight, assemble_K, bm_components, dbar_numeric_ambient, delta_eta,
                      hefer, kernel_bound_ratio, weight_g)
from .operators import (FormField, KoppelmanOperator, QuadratureConfig,
                        form_norm, frame_coefficients, holder_probe, holomorphic_function,
                        homotopy_residual, moment_test)
from .polynomial import Polynomial
from .star_lq import (DBAR_MU_CONSTANT, CutoffFamily, QuasiShellSampler, appendix_scaling,
                      dbar_bound_ratio, detect_qX, dyadic_shells, exponent_table, fit_slope,
                      i1k_integral, shell_cloud, star_integral)
from .variety import (DuValType, Hypersurface, cached_sample_annulus, defining_poly,
                      df_form, make_point, sample_annulus, structure_form, tangent_chart, tangent_frame,
                      weighted_threshold)

EXPECTATIONS_PATH = Path(__file__).with_name("expectations.json")
PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass
class ExperimentConfig:
    command: str
    type: str = "A1"
    samples: int | None = None
    seed: int = 0
    out: str | None = None
    q_grid: list[float] | None = None
    k_max: int = 4
    alpha: list[float] | None = None
    params: dict = field(default_factory=dict)

    def hash(self) -> str:
        """Stable digest of everything that affects the numbers (the output path does not)."""
        d = asdict(self)
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def duval_type(self) -> DuValType:
        return DuValType.parse(self.type)

    def param(self, name, default):
        return self.params.get(name, default)


@dataclass
class Outcome:
    status: str
    values: dict
    rows: list[dict] = field(default_factory=list)
    expected: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


def load_expectations(path=None) -> dict:
    return json.loads(Path(path or EXPECTATIONS_PATH).read_text())


def expectation(command: str, t: DuValType, table: dict | None = None) -> dict:
    """Entry for (command, family): exact type name first, then family letter, then '*'."""
    table = table or load_expectations()
    block = table.get(command, {})
    for key in (str(t), t.family, "*"):
        if key in block:
            return block[key]
    return {}


def _status(ok: bool, inconclusive: bool = False) -> str:
    """Too little data overrides the verdict: a pass on starved samples is not a pass."""
    if inconclusive:
        return INCONCLUSIVE
    return PASS if ok else FAIL


def _rng_ball(rng, n, radius=1.0):
    x = rng.standard_normal((n, 6))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= radius * rng.uniform(0, 1, (n, 1)) ** (1 / 6)
    return x[:, :3] + 1j * x[:, 3:]


# ---------------------------------------------------------------------------
# identities

def run_identities(cfg: ExperimentConfig) -> Outcome:
    t = cfg.duval_type
    h = defining_poly(t)
    n = cfg.samples or 100_000
    exp = expectation("identities", t)
    rng = np.random.default_rng([cfg.seed, 11])
    zeta, z = _rng_ball(rng, n), _rng_ball(rng, n)
    two_pi_i = 2j * math.pi

    hef = hefer(h)
    fz, fw = h.value(zeta), h.value(z)
    scale = np.maximum(1.0, np.maximum(np.abs(fz), np.abs(fw)))
    err = {"hefer": float(np.max(np.abs(hef.delta(zeta, z) - (fz - fw)) / scale))}
    diag = hef.values(zeta, zeta) - h.gradient(zeta) / two_pi_i
    err["hefer_diagonal"] = float(np.max(np.abs(diag)) / max(1.0, np.max(np.abs(h.gradient(zeta)))))

    w = BallWeight()
    s1 = w.section(zeta, z, 1)[0]
    err["section"] = float(np.max(np.abs(delta_eta(s1, zeta, z)[0] - 1)))
    b1 = bm_components(zeta, z, 1)[0]
    err["bochner_martinelli"] = float(np.max(np.abs(delta_eta(b1, zeta, z)[0] - 1)))

    cloud = sample_annulus(h, 0.05, 1.0, n, cfg.seed)
    top = wedge(df_form(cloud.gradient), structure_form(h, cloud.gradient))[0b111]
    err["structure_form"] = float(np.max(np.abs(top / two_pi_i - 1)))

    # (delta_eta - dbar) g = 0 by finite differences on a smaller batch
    m = min(n, 2000)
    zw = _rng_ball(rng, m, 0.5)
    zt = _rng_ball(rng, m, 1.0)
    fn = lambda a, b: weight_g(w, a, b)
    resid = delta_eta(fn(zt, zw), zt, zw) - dbar_numeric_ambient(fn, zt, zw, 1e-5)
    err["weight"] = float(np.max(resid.max_abs()))

    ok = all(err[k] <= exp.get(k, 1e-12) for k in err)
    rows = [{"family": str(t), "identity": k, "max_error": v, "tolerance": exp.get(k)} for k, v in err.items()]
    return Outcome(_status(ok), {"points": n, **err}, rows, exp)


# ---------------------------------------------------------------------------
# L^q threshold

def run_lq_threshold(cfg: ExperimentConfig) -> Outcome:
    t = cfg.duval_type
    h = defining_poly(t)
    n = cfg.samples or 1_000_000
    exp = expectation("lq-threshold", t)
    j_range = tuple(cfg.param("j_range", (8, 30)))
    res = detect_qX(h, n, cfg.seed, j_range=j_range)
    exact = weighted_threshold(t)
    bound = dynkin.q_bound(t)
    sampler = QuasiShellSampler(h, dyadic_shells(*j_range), n, cfg.seed)
    grid = cfg.q_grid or [0.0, 2.0, round(res.estimate, 4), float(bound)]
    rows = []
    slopes = {}
    for q in grid:
        sm = sampler.masses(q)
        slopes[q] = fit_slope(sm.r_lo, sm.r_hi, sm.mass, sm.error)
        for i in range(len(sm.mass)):
            rows.append({"family": str(t), "q": q, "shell_index": i + j_range[0], "r_lo": sm.r_lo[i],
                         "r_hi": sm.r_hi[i], "mass": sm.mass[i], "std_err": sm.error[i]})
    target, tol = exp.get("target"), exp.get("tol", 0.15)
    values = {
        "q_estimate": res.estimate, "uncertainty": res.uncertainty,
        "quasi_homogeneous_threshold": float(exact), "quasi_homogeneous_threshold_exact": str(exact),
        "multiplicity_bound": str(bound),
        "within_multiplicity_bound": bool(res.estimate <= float(bound) + 3 * res.uncertainty + 1e-9),
        "slopes": {str(q): {"slope": s, "std_err": e} for q, (s, e) in slopes.items()},
    }
    ok = target is not None and abs(res.estimate - target) <= tol
    unsure = not math.isfinite(res.uncertainty) or res.uncertainty > tol
    return Outcome(_status(ok, unsure), values, rows, exp)


# ---------------------------------------------------------------------------
# dynkin

def run_dynkin(cfg: ExperimentConfig) -> Outcome:
    t = cfg.duval_type
    exp = expectation("dynkin-check", t)
    rep = dynkin.report(t)
    g = dynkin.resolution_graph(t)
    rep["negative_definite"] = dynkin.is_negative_definite(g)
    ok = rep["negative_definite"] and all(rep[k] == v for k, v in exp.items())
    rows = [{"family": str(t), "node": i, "multiplicity": m} for i, m in enumerate(g.multiplicities)]
    return Outcome(_status(ok), rep, rows, exp)


# ---------------------------------------------------------------------------
# condition (*)

def closed_test_form() -> FormField:
    """Smooth dbar-closed (0,1)-form nonzero at the singular point."""
    c, r = constant_form((0.7, -0.2 + 0.4j, 0.3j)), radial_closed_form(0.5 - 0.25j)
    return c + r


def run_star(cfg: ExperimentConfig) -> Outcome:
    t = cfg.duval_type
    h = defining_poly(t)
    per = cfg.samples or 200_000
    sigma = expectation("star-eval", t).get("sigma", 3.0)
    phi = closed_test_form()
    rows, seq = [], {}
    for profile in ("quintic", "cubic"):
        seq[profile] = []
        for k in range(1, cfg.k_max + 1):
            cloud = shell_cloud(h, k, per, cfg.seed * 100 + k)
            r = star_integral(h, phi, k, cloud, profile=profile)
            seq[profile].append(r)
            rows.append({"family": str(t), "profile": profile, "k": k, "re": r.value.real,
                         "im": r.value.imag, "abs": abs(r.value), "std_err": r.error,
                         "shell_samples": r.samples})
    main, alt = seq["quintic"], seq["cubic"]
    mags = [abs(r.value) for r in main]
    decreasing = all(b < a for a, b in zip(mags, mags[1:]))
    last = main[-1]
    near_zero = abs(last.value) <= sigma * last.error + 1e-300
    agree = all(abs(a.value - b.value) <= sigma * math.hypot(a.error, b.error) + 1e-300
                for a, b in zip(main, alt))
    starved = any(r.inconclusive for r in main + alt)
    values = {"abs_I": mags, "std_err": [r.error for r in main], "strictly_decreasing": decreasing,
              "final_within_sigma": near_zero, "profiles_agree": agree}
    return Outcome(_status(decreasing and near_zero and agree, starved), values, rows,
                   {"sigma": sigma})


# ---------------------------------------------------------------------------
# reproducing property and moments

def _interior_points(h: Hypersurface, count: int, seed: int, monomials, r_lo=0.38, r_hi=0.48):
    """Points inside the weight's inner ball where every test monomial is not small."""
    c = sample_annulus(h, r_lo, r_hi, 4000, seed + 101)
    r = np.linalg.norm(c.zeta, axis=1)
    score = np.ones(len(c))
    for p in monomials:
        score = np.minimum(score, np.abs(p(c.zeta[:, 0], c.zeta[:, 1], c.zeta[:, 2])) / r ** p.degree)
    idx = np.argsort(-score)
    chosen = []
    for i in idx:
        # keep the points spread out
        if all(np.linalg.norm(c.zeta[i] - c.zeta[j]) > 0.1 for j in chosen):
            chosen.append(i)
        if len(chosen) == count:
            break
    return [make_point(h, c.zeta[i]) for i in chosen]


def run_reproduce(cfg: ExperimentConfig) -> Outcome:
    t = cfg.duval_type
    h = defining_poly(t)
    n = cfg.samples or 1_000_000
    tol = expectation("reproduce-holo", t).get("tol", 0.02)
    op = KoppelmanOperator(h)
    _, r2, r3 = op.weight.radii
    cloud = cached_sample_annulus(h, r2 * 0.99, r3 * 1.01, n, cfg.seed)
    tests = {"1": Polynomial(3, {(0, 0, 0): 1}), "z1": Polynomial(3, {(1, 0, 0): 1}),
             "z3^2": Polynomial(3, {(0, 0, 2): 1})}
    points = _interior_points(h, cfg.param("points", 5), cfg.seed, list(tests.values()))
    rows, worst, unsure = [], 0.0, False
    for name, poly in tests.items():
        phi = holomorphic_function(poly)
        for i, zp in enumerate(points):
            r = op.apply_P(phi, zp, cloud)
            target = complex(phi.values(np.asarray(zp.zeta)[None])[0])
            rel = abs(complex(r.value[0]) - target) / abs(target)
            err = r.mc_error / abs(target)
            worst = max(worst, rel)
            unsure |= err > tol
            rows.append({"family": str(t), "function": name, "point": i, "abs_z": float(np.linalg.norm(zp.zeta)),
                         "P_re": complex(r.value[0]).real, "P_im": complex(r.value[0]).imag,
                         "target_re": target.real, "target_im": target.imag, "rel_error": rel,
                         "rel_mc_error": err})
    return Outcome(_status(worst <= tol, unsure), {"max_rel_error": worst, "points": len(points)},
                   rows, {"tol": tol})


def run_moment(cfg: ExperimentConfig) -> Outcome:
    t = cfg.duval_type
    h = defining_poly(t)
    n = cfg.samples or 400_000
    sigma = expectation("moment-test", t).get("sigma", 3.0)
    hols = {"1": (0, 0, 0), "z1": (1, 0, 0), "z2": (0, 1, 0), "z3": (0, 0, 1)}
    exact = exact_top_form(0.2, 0.4, 0, 1)
    rows, ok = [], True
    cloud = sample_annulus(h, 0.19, 0.41, n, cfg.seed)
    for name, e in hols.items():
        v, err = moment_test(h, exact, Polynomial(3, {e: 1}), cloud)
        zero_ok = abs(v) <= sigma * err + 1e-14
        ok &= zero_ok
        rows.append({"family": str(t), "form": "dbar-exact", "h": name, "re": v.real, "im": v.imag,
                     "std_err": err, "seed": cfg.seed, "within_sigma": zero_ok})
    # a generic top form has a nonzero moment that does not depend on the seed; the
    # diagonal circle action kills every moment except those of weight d - w1 = w1, so h = zeta_1
    bump = bump_top_form(0.2, 0.4, (1.0, 0.5j, -0.3))
    vals = []
    for s in (cfg.seed, cfg.seed + 1):
        c = cloud if s == cfg.seed else sample_annulus(h, 0.19, 0.41, n, s)
        v, err = moment_test(h, bump, Polynomial(3, {(1, 0, 0): 1}), c)
        vals.append((v, err))
        rows.append({"family": str(t), "form": "bump", "h": "z1", "re": v.real, "im": v.imag,
                     "std_err": err, "seed": s, "within_sigma": abs(v) <= sigma * err})
    (a, ea), (b, eb) = vals
    nonzero = abs(a) > sigma * ea
    stable = abs(a - b) <= sigma * math.hypot(ea, eb)
    values = {"exact_moments_vanish": bool(ok), "generic_nonzero": bool(nonzero),
              "generic_seed_stable": bool(stable), "generic_value": [a.real, a.imag]}
    return Outcome(_status(ok and nonzero and stable), values, rows, {"sigma": sigma})


# ---------------------------------------------------------------------------
# homotopy formula

def homotopy_point(h: Hypersurface, phi: FormField, seed: int, r_lo=0.28, r_hi=0.34) -> object:
    """A point in the support of phi where |phi| is largest among a small probe cloud."""
    c = sample_annulus(h, r_lo, r_hi, 4000, seed + 11)
    t1, t2 = tangent_frame(h, c.gradient)
    mag = form_norm(1, frame_coefficients(1, phi.values(c.zeta), t1, t2))
    return make_point(h, c.zeta[int(np.argmax(mag))])


def run_homotopy(cfg: ExperimentConfig) -> Outcome:
    t = cfg.duval_type
    h = defining_poly(t)
    n = cfg.samples or 1_000_000
    tol = expectation("koppelman-residual", t).get("tol", 0.05)
    quad = QuadratureConfig(local_samples=cfg.param("local_samples", 50_000), seed=cfg.seed)
    op = KoppelmanOperator(h, quad=quad)
    cloud = cached_sample_annulus(h, 0.19, 0.41, n, cfg.seed + 3)
    forms = {"dbar-exact": exact_bump_form(0.2, 0.4), "twisted": twisted_bump_form(0.2, 0.4, 0, 1)}
    rows, worst, unsure = [], 0.0, False
    for name, phi in forms.items():
        zp = homotopy_point(h, phi, cfg.seed)
        t0 = time.perf_counter()
        rep = homotopy_residual(op, phi, zp, cloud, eps=cfg.param("eps", 1e-3), tolerance=tol)
        worst = max(worst, rep.residual)
        unsure |= rep.inconclusive
        rows.append({"family": str(t), "form": name, "abs_z": float(np.linalg.norm(zp.zeta)),
                     "residual": rep.residual, "mc_error": rep.mc_error,
                     "seconds": time.perf_counter() - t0})
    return Outcome(_status(worst <= tol, unsure), {"max_residual": worst}, rows, {"tol": tol})


# ---------------------------------------------------------------------------
# Hoelder probe

def weighted_scale(h: Hypersurface, zeta, lam: float):
    """The quasi-homogeneous action zeta_j -> lam^(w_j) zeta_j, which preserves X."""
    return np.asarray(zeta) * lam ** np.asarray(h.weights, dtype=float)


def run_holder(cfg: ExperimentConfig) -> Outcome:
    t = cfg.duval_type
    h = defining_poly(t)
    n = cfg.samples or 300_000
    exp = expectation("holder-probe", t)
    cap = exponent_table([t])[t].holder_cap
    quad = QuadratureConfig(local_samples=cfg.param("local_samples", 20_000), seed=cfg.seed)
    op = KoppelmanOperator(h, quad=quad)
    phi = cutoff_constant_form((1.0, 0.3j, -0.5), 0.3, 0.45)
    cloud = cached_sample_annulus(h, 1e-5, 0.45, n, cfg.seed)
    base = sample_annulus(h, 0.15, 0.25, 200, cfg.seed + 17).zeta
    u1, u2 = base[0], base[int(np.argmax(np.linalg.norm(base - base[0], axis=1)))]
    levels = cfg.param("levels", 7)
    pairs = []
    for j in range(levels):
        lam = 2.0 ** (-j / min(h.weights))
        pairs.append((make_point(h, weighted_scale(h, u1, lam)), make_point(h, weighted_scale(h, u2, lam))))
    alphas = sorted(set(np.round(np.linspace(0, 1, 21), 10).tolist()) | {float(cap)})
    rep = holder_probe(op, phi, pairs, cloud, alphas=alphas)
    rows = [{"family": str(t), "pair": i, "distance": d, "difference": v}
            for i, (d, v) in enumerate(zip(rep.distances, rep.differences))]
    rows += [{"family": str(t), "alpha": a, "quotient_growth": g}
             for a, g in zip(rep.alphas, rep.quotient_growth)]
    need = exp.get("min_exponent", 0.0)
    values = {"fitted_exponent": rep.fitted_exponent, "best_alpha": rep.best_alpha,
              "holder_cap": str(cap), "min_exponent": need}
    return Outcome(_status(rep.fitted_exponent >= need), values, rows, exp)


# ---------------------------------------------------------------------------
# estimates: appendix scaling laws, cut-off bound, shell integrals, kernel bound

def kernel_pairs(h: Hypersurface, count: int, seed: int, rel_lo: float, rel_hi: float):
    """Pairs (z, zeta) on X with |z| log-uniform in (1e-3, 0.5) and |zeta - z| / |z| in (rel_lo, rel_hi)."""
    rng = np.random.default_rng([seed, 5])
    a = sample_annulus(h, 1e-3, 0.5, count, seed + 2)
    z = a.zeta
    t1, t2 = tangent_frame(h, a.gradient)
    m = len(z)
    eps = np.exp(rng.uniform(math.log(rel_lo), math.log(rel_hi), m)) * np.linalg.norm(z, axis=1)
    w = rng.standard_normal((m, 2)) + 1j * rng.standard_normal((m, 2))
    w *= (eps / np.linalg.norm(w, axis=1))[:, None]
    zeta, grad, _ = tangent_chart(h, z, t1, t2, w)
    ok = (np.abs(h.value(zeta)) <= 1e-9 * h.residual_scale(zeta)) & (np.linalg.norm(zeta - z, axis=1) > 0)
    return z[ok], zeta[ok], grad[ok]


def kernel_bound_scan(h: Hypersurface, count: int, seed: int, decades=(0, 1, 2, 3), chunk: int = 2000):
    """Sup of |K| / (|eta|^-3 + |omega| |eta|^-2) per decade of |eta| / |z|."""
    hef, w = hefer(h), BallWeight()
    sups = []
    for j in decades:
        z, zeta, grad = kernel_pairs(h, count, seed + j, 10.0 ** (-j - 1), 10.0 ** -j)
        best = 0.0
        for i in range(0, len(z), chunk):
            sl = slice(i, i + chunk)
            pt = make_point(h, zeta[sl])
            kv = assemble_K(h, hef, w, pt, z[sl])
            best = max(best, float(np.max(kernel_bound_ratio(kv, zeta[sl], z[sl]))))
        sups.append(best)
    return sups


def run_estimates(cfg: ExperimentConfig) -> Outcome:
    t = cfg.duval_type
    h = defining_poly(t)
    n = cfg.samples or 100_000
    exp = expectation("estimates-scan", t)
    rows, checks = [], {}

    for a in cfg.alpha or [1.0, 2.0, 3.0]:
        fit = appendix_scaling(h, a, "radial", samples=n, seed=cfg.seed)
        ok = abs(fit.exponent - (4 - a)) <= exp.get("radial_tol", 0.1)
        checks[f"radial_{a:g}"] = ok
        rows.append({"family": str(t), "test": "radial", "alpha": a, "beta": "", "exponent": fit.exponent,
                     "std_err": fit.error, "expected": 4 - a, "pass": ok})
    if t.family == "A" and t.n == 1:
        fit = appendix_scaling(h, 3.0, "two-point", beta=3.0, samples=3 * n, seed=cfg.seed)
        ok = abs(fit.exponent - (-2.0)) <= exp.get("two_point_tol", 0.15)
        checks["two_point"] = ok
        rows.append({"family": str(t), "test": "two-point", "alpha": 3.0, "beta": 3.0,
                     "exponent": fit.exponent, "std_err": fit.error, "expected": -2.0, "pass": ok})
    fit = appendix_scaling(h, 0.0, "log-weighted", samples=n, seed=cfg.seed)
    checks["log_weighted_bounded"] = bool(fit.bounded)
    rows.append({"family": str(t), "test": "log-weighted", "alpha": "", "beta": "", "exponent": fit.exponent,
                 "std_err": fit.error, "expected": "< -1", "pass": bool(fit.bounded)})

    # one constant for |dbar mu_k| |zeta| |log|zeta|| across k
    consts = []
    for k in range(1, cfg.k_max + 1):
        c = shell_cloud(h, k, 10_000, cfg.seed + k)
        consts.append(float(np.max(dbar_bound_ratio(CutoffFamily(k), c.zeta))))
    checks["cutoff_bound"] = max(consts) <= exp.get("cutoff_growth", 1.0) * DBAR_MU_CONSTANT
    for k, cst in enumerate(consts, 1):
        rows.append({"family": str(t), "test": "cutoff", "alpha": k, "beta": "", "exponent": cst,
                     "std_err": 0.0, "expected": f"<= {DBAR_MU_CONSTANT:.6f}", "pass": cst <= DBAR_MU_CONSTANT})

    if t.family == "A" and t.n <= 2:
        vals = [i1k_integral(t.n, k) for k in range(1, cfg.k_max + 1)]
        bounded = max(vals[1:]) <= 1.01 * vals[0]
        checks["shell_integral_bounded"] = bounded
        for k, v in enumerate(vals, 1):
            rows.append({"family": str(t), "test": "I1k", "alpha": k, "beta": "", "exponent": v,
                         "std_err": 0.0, "expected": "bounded", "pass": bounded})

    sups = kernel_bound_scan(h, cfg.param("kernel_pairs", 10_000), cfg.seed)
    checks["kernel_bound"] = bool(np.all(np.isfinite(sups)) and max(sups) <= exp.get("kernel_c", 0.2)
                                  and sups[-1] <= exp.get("kernel_saturation", 1.05) * sups[-2])
    for j, s in enumerate(sups):
        rows.append({"family": str(t), "test": "kernel", "alpha": j, "beta": "", "exponent": s,
                     "std_err": 0.0, "expected": "bounded", "pass": checks["kernel_bound"]})
    values = {"checks": checks, "cutoff_constants": consts, "kernel_sups": sups}
    return Outcome(_status(all(checks.values())), values, rows, exp)


RUNNERS = {
    "identities": run_identities,
    "lq-threshold": run_lq_threshold,
    "star-eval": run_star,
    "koppelman-residual": run_homotopy,
    "reproduce-holo": run_reproduce,
    "moment-test": run_moment,
    "holder-probe": run_holder,
    "estimates-scan": run_estimates,
    "dynkin-check": run_dynkin,
}


def run(cfg: ExperimentConfig) -> tuple[Outcome, float]:
    if cfg.command not in RUNNERS:
        raise ValueError(f"unknown command {cfg.command!r}")
    t0 = time.perf_counter()
    out = RUNNERS[cfg.command](cfg)
    return out, time.perf_counter() - t0
