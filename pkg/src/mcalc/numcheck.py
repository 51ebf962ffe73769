"""Numerical oracles: finite differences, remainder ratios, a Gateaux-but-not-
Frechet counterexample, spectral norms and a second-order chain-rule bound.

Every report carries the seed that produced its random inputs. Sample ``i``
of a run with seed ``s`` draws from ``np.random.default_rng([s, i])`` so
results do not depend on how samples are scheduled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from mcalc.errors import NoConvergence, NonFiniteValue
from mcalc.opcalc.polymap import PolyMap

EPS = np.finfo(float).eps


# --- reports --------------------------------------------------------------------


@dataclass(frozen=True)
class VerifyReport:
    name: str
    estimate: float
    reference: float
    abs_error: float
    rel_error: float
    tolerance: float
    verdict: str
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @classmethod
    def compare(cls, name: str, estimate, reference, tolerance: float, seed=None, *,
                floor: float = 0.0, **meta) -> "VerifyReport":
        """Relative comparison; arrays are compared in Frobenius norm and reported as norms.

        The error is taken relative to max(|reference|, floor), so a reference
        that is zero up to round-off is judged against ``floor`` instead.
        """
        est = np.asarray(estimate, dtype=float)
        ref = np.asarray(reference, dtype=float)
        abs_err = float(np.linalg.norm(est - ref))
        scale = float(np.linalg.norm(ref))
        denom = max(scale, floor)
        rel = abs_err / denom if denom > 0 else abs_err
        ok = rel <= tolerance
        if est.ndim:
            est_v, ref_v = float(np.linalg.norm(est)), scale
        else:
            est_v, ref_v = float(est), float(ref)
        return cls(name, est_v, ref_v, abs_err, rel, tolerance, "pass" if ok else "fail", seed, meta)

    def to_dict(self) -> dict:
        out = {"name": self.name, "estimate": self.estimate, "reference": self.reference,
               "rel_error": self.rel_error, "tolerance": self.tolerance,
               "verdict": self.verdict, "seed": self.seed}
        out["abs_error"] = self.abs_error
        out.update({k: v for k, v in self.metadata.items() if k not in out})
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# --- sequences ------------------------------------------------------------------


@dataclass(frozen=True)
class CurveSequence:
    """Points z_n -> 0 with strictly decreasing norms."""

    label: str
    points: tuple

    def __post_init__(self):
        pts = tuple(np.asarray(p, dtype=float) for p in self.points)
        norms = [float(np.linalg.norm(p)) for p in pts]
        if any(n <= 0 for n in norms) or any(b >= a for a, b in zip(norms, norms[1:])):
            raise ValueError("sequence norms must be positive and strictly decreasing")
        object.__setattr__(self, "points", pts)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    @classmethod
    def straight_line(cls, direction, ts: Sequence[float]) -> "CurveSequence":
        z = np.asarray(direction, dtype=float)
        return cls("straight-line", tuple(t * z for t in ts))

    @classmethod
    def parabola(cls, ns: Sequence[int], c: float = 2.0) -> "CurveSequence":
        """(1/n, c/n^2): tangent to the x-axis, so no straight line follows it."""
        return cls("curved", tuple(np.array([1.0 / n, c / n**2]) for n in ns))

    @classmethod
    def custom(cls, fn: Callable[[float], np.ndarray], params: Sequence[float],
               label: str = "custom") -> "CurveSequence":
        return cls(label, tuple(fn(p) for p in params))


# --- finite differences ----------------------------------------------------------


def _finite(v, where: str):
    if not np.all(np.isfinite(v)):
        raise NonFiniteValue(f"non-finite value at {where}")
    return v


def default_step(x, order: int = 1) -> float:
    """eps^(1/3) (1 + |x|) for central first differences, eps^(1/4) (1 + |x|) for nested ones."""
    p = 1 / 3 if order == 1 else 1 / 4
    return EPS**p * (1 + float(np.linalg.norm(x)))


def fd_directional(fn: Callable, x, z, h: float | None = None):
    """Central difference (fn(x + hz) - fn(x - hz)) / 2h."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    h = default_step(x) if h is None else h
    fp = _finite(np.asarray(fn(x + h * z), dtype=float), "x + hz")
    fm = _finite(np.asarray(fn(x - h * z), dtype=float), "x - hz")
    out = (fp - fm) / (2 * h)
    return float(out) if out.ndim == 0 else out


def fd_second(fn: Callable, x, z, t, h: float | None = None):
    """Nested central difference for D^2 fn(x)[z, t]."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    t = np.asarray(t, dtype=float)
    h = default_step(x, 2) if h is None else h
    vals = {}
    for a in (1, -1):
        for b in (1, -1):
            vals[a, b] = _finite(np.asarray(fn(x + a * h * z + b * h * t), dtype=float), "x +- hz +- ht")
    out = (vals[1, 1] - vals[1, -1] - vals[-1, 1] + vals[-1, -1]) / (4 * h * h)
    return float(out) if out.ndim == 0 else out


def frechet_remainder(fn: Callable, derivative: Callable, x, seq: CurveSequence) -> list[float]:
    """|fn(x + z) - fn(x) - A(z)| / |z| along ``seq``; should tend to 0 for a Frechet derivative A."""
    x = np.asarray(x, dtype=float)
    f0 = _finite(np.asarray(fn(x), dtype=float), "x")
    out = []
    for z in seq:
        r = np.asarray(fn(x + z), dtype=float) - f0 - np.asarray(derivative(z), dtype=float)
        _finite(r, "x + z")
        out.append(float(np.linalg.norm(r) / np.linalg.norm(z)))
    return out


# --- the counterexample --------------------------------------------------------------


def bump(s: float) -> float:
    """Smooth bump supported on (1, 3) with peak value 1 at s = 2."""
    u = s - 2.0
    if abs(u) >= 1.0:
        return 0.0
    return math.exp(1.0 - 1.0 / (1.0 - u * u))


def counterexample_f(x: float, y: float) -> float:
    """x * bump(y / x^2), extended by 0 on the y-axis.

    Every directional derivative at the origin is 0, yet f(t, 2t^2) = t.
    """
    if x == 0:
        return 0.0
    return x * bump(y / (x * x))


@dataclass(frozen=True)
class CounterexampleReport:
    reports: tuple
    gateaux_zero: bool
    frechet_fails: bool

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def summary(self) -> str:
        g = "Gateaux derivative exists and is linear (zero)" if self.gateaux_zero else "directional derivatives not all zero"
        f = "Frechet derivative does not exist" if self.frechet_fails else "remainder along the parabola vanishes"
        return f"{g}; {f}"


def counterexample_demo(n_max: int = 1000, seed: int = 0, n_rays: int = 32,
                        ts: Sequence[float] = (1e-4, 1e-6, 1e-8)) -> CounterexampleReport:
    if n_max < 10:
        raise ValueError("n_max must be >= 10")
    f = lambda p: counterexample_f(float(p[0]), float(p[1]))
    reports = []

    # (i) one-sided difference quotients along random rays through the origin
    worst, worst_meta = 0.0, {}
    for i in range(n_rays):
        d = np.random.default_rng([seed, i]).standard_normal(2)
        d /= np.linalg.norm(d)
        for t in ts:
            q = abs(f(t * d)) / t
            if q >= worst:
                worst, worst_meta = q, {"ray": d.tolist(), "t": t}
    reports.append(VerifyReport.compare("directional_derivatives_zero", worst, 0.0, 1e-12, seed,
                                        rays=n_rays, **worst_meta))

    # (ii) remainder ratios against the zero candidate along (1/n, 2/n^2)
    ns = range(10, n_max + 1)
    seq = CurveSequence.parabola(ns)
    ratios = frechet_remainder(f, lambda z: 0.0, np.zeros(2), seq)
    expected = [1 / math.sqrt(1 + 4 / n**2) for n in ns]
    dev = max(abs(r - e) for r, e in zip(ratios, expected))
    reports.append(VerifyReport("remainder_ratio_closed_form", dev, 0.0, dev, dev, 1e-12,
                                "pass" if dev < 1e-12 else "fail", seed, {"n_min": 10, "n_max": n_max}))
    last = ratios[-1]
    tol = 5 / math.sqrt(n_max)
    reports.append(VerifyReport.compare("remainder_ratio_limit", last, 1.0, tol, seed, n=n_max))

    # (iii) continuity: |f(x_n, y_n)| <= |x_n| along sequences tending to (0, y)
    rng = np.random.default_rng([seed, n_rays])
    bad = 0.0
    for y in rng.uniform(-2, 2, size=8):
        for n in (10, 100, 1000, 10_000):
            x_n, y_n = 1.0 / n, y + 1.0 / n
            bad = max(bad, abs(f((x_n, y_n))) - abs(x_n))
    reports.append(VerifyReport("continuity_bound", bad, 0.0, max(bad, 0.0), max(bad, 0.0), 0.0,
                                "pass" if bad <= 0 else "fail", seed, {}))

    return CounterexampleReport(tuple(reports), gateaux_zero=reports[0].passed,
                                frechet_fails=abs(last - 1) < tol)


# --- spectral norm ---------------------------------------------------------------


def spectral_norm(m, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on M^T M."""
    m = np.asarray(m, dtype=float)
    _finite(m, "matrix entries")
    if m.size == 0 or not np.any(m):
        return 0.0
    gram = m.T @ m
    v = np.random.default_rng(0).standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    lam = float(v @ gram @ v)
    for _ in range(max_iter):
        w = gram @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        new = float(v @ gram @ v)
        if abs(new - lam) <= tol * new:
            return math.sqrt(new)
        lam = new
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")


# --- composition oracles ----------------------------------------------------------


def _poly_contract(tp: np.ndarray, yp: np.ndarray) -> np.ndarray:
    """Contract the last axis of a polynomial-valued tensor with a polynomial vector.

    ``tp`` has shape (deg_t + 1, ..., n), ``yp`` has shape (deg_y + 1, n);
    the leading axis holds coefficients of powers of t.
    """
    out = np.zeros((tp.shape[0] + yp.shape[0] - 1,) + tp.shape[1:-1])
    for i in range(tp.shape[0]):
        for j in range(yp.shape[0]):
            out[i + j] += tp[i] @ yp[j]
    return out


def _compose_series(p: PolyMap, yp: np.ndarray) -> np.ndarray:
    """Coefficients of p(y(t)) for a polynomial curve y(t)."""
    out = np.zeros((1 + p.degree * (yp.shape[0] - 1), p.out_dim))
    out[0] += p.coeffs[0]
    for j in range(1, p.degree + 1):
        tp = p.coeffs[j][None]
        for _ in range(j):
            tp = _poly_contract(tp, yp)
        out[: tp.shape[0]] += tp
    return out


def composition_series(f: PolyMap, g: PolyMap, x, z) -> np.ndarray:
    """Exact Taylor coefficients of t -> f(g(x + t z))."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    line = np.stack([x, z])
    return _compose_series(f, _compose_series(g, line))


def composition_derivative(f: PolyMap, g: PolyMap, x, dirs) -> np.ndarray:
    """D^k (f o g)(x)[z1..zk] from exact diagonal values and polarization."""
    k = len(dirs)
    if k == 0:
        return f(g(x))
    dirs = [np.asarray(z, dtype=float) for z in dirs]
    acc = np.zeros(f.out_dim)
    for r in range(1, k + 1):
        for subset in combinations(range(k), r):
            v = sum(dirs[i] for i in subset)
            c = composition_series(f, g, x, v)
            diag = math.factorial(k) * c[k] if k < c.shape[0] else 0.0
            acc += (-1) ** (k - r) * diag
    return acc / math.factorial(k)


def composition_derivative_fd(f: PolyMap, g: PolyMap, x, dirs, h: float | None = None) -> np.ndarray:
    """One central-difference layer in the last direction over the exact lower derivative."""
    x = np.asarray(x, dtype=float)
    *rest, last = dirs
    return fd_directional(lambda y: composition_derivative(f, g, y, rest), x, last, h)


# --- second-order chain-rule bound -----------------------------------------------------


def _matricize(t: np.ndarray) -> np.ndarray:
    return t.reshape(t.shape[0], -1)


def _unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def bound_check(f: PolyMap, g: PolyMap, x, n_samples: int = 200, seed: int = 0) -> VerifyReport:
    """Sampled |D^2(f o g)(x)[z, t]| against |D^2f| |Dg|^2 + |Df| |D^2g| at g(x).

    The sampled side is a lower bound on the bilinear norm and the matricized
    spectral norms bound each factor from above, so a failure is never spurious.
    """
    x = np.asarray(x, dtype=float)
    y = g(x)
    rhs = (spectral_norm(_matricize(f.derivative_tensor(y, 2))) * spectral_norm(g.derivative_tensor(x, 1)) ** 2
           + spectral_norm(f.derivative_tensor(y, 1)) * spectral_norm(_matricize(g.derivative_tensor(x, 2))))
    lhs = 0.0
    for i in range(n_samples):
        rng = np.random.default_rng([seed, i])
        z, t = _unit(rng, g.in_dim), _unit(rng, g.in_dim)
        v = composition_derivative(f, g, x, [z, t])
        lhs = max(lhs, float(np.linalg.norm(_finite(v, "sampled second derivative"))))
    _finite(rhs, "bound")
    excess = max(0.0, lhs - rhs) / rhs if rhs > 0 else lhs
    tol = 1e-9
    return VerifyReport("second_order_bound", lhs, rhs, max(0.0, lhs - rhs), excess, tol,
                        "pass" if excess <= tol else "fail", seed,
                        {"samples": n_samples, "dims": [g.in_dim, g.out_dim, f.out_dim],
                         "tightness": lhs / rhs if rhs > 0 else None})


# --- symbolic vs numeric agreement for one expression -------------------------------


def verify_expression(expr, wrt: str, table, samples: int = 20, seed: int = 0, *,
                      perturb: float = 0.0, square: str = "well_conditioned",
                      tol_first: float = 1e-6, tol_second: float = 1e-4) -> list[VerifyReport]:
    """Check the symbolic derivatives of ``expr`` against finite differences.

    One report per check, holding the worst sample. ``perturb`` corrupts
    every symbolic value v as v (1 + perturb) + perturb; it exists so a
    test can confirm that wrong derivatives are caught.
    """
    from mcalc import frechet
    from mcalc.expr import ScalarExpr, evaluate, random_env, with_directions
    from mcalc.expr.ast import Var

    x = Var(wrt, table[wrt].shape)
    full = with_directions(table, wrt, 2)
    first = frechet.d(expr, x, 1).expr
    second = frechet.directional(expr, x, 2).expr
    scalar = isinstance(expr, ScalarExpr)
    grad = frechet.gradient(expr, x) if scalar else None
    hess = frechet.hessian(expr, x) if scalar else None

    def bad(v):
        return v * (1 + perturb) + perturb if perturb else v

    checks: dict[str, VerifyReport] = {}

    def record(rep: VerifyReport):
        # keep the worst sample: any failure beats a pass, then larger error
        old = checks.get(rep.name)
        if old is None or (rep.passed, -rep.rel_error) < (old.passed, -old.rel_error):
            checks[rep.name] = rep

    for i in range(samples):
        env = random_env(full, np.random.default_rng([seed, i]), square=square, unit_directions=True)
        x0, z, t = env[wrt], env["Z"], env["T"]
        fn = lambda y: evaluate(expr, env.bind(**{wrt: y}))
        meta = {"sample": i, "wrt": wrt}
        # differences of O(eps |f| / h^k) are noise; judge tiny references on the scale of f
        floor = 1e-4 * (1 + float(np.linalg.norm(evaluate(expr, env))))

        sym1 = bad(np.asarray(evaluate(first, env)))
        record(VerifyReport.compare("first_order_fd", sym1, fd_directional(fn, x0, z), tol_first, seed,
                                    floor=floor, h=default_step(x0), **meta))
        sym2 = bad(np.asarray(evaluate(second, env)))
        record(VerifyReport.compare("second_order_fd", sym2, fd_second(fn, x0, z, t), tol_second, seed,
                                    floor=floor, h=default_step(x0, 2), **meta))
        if scalar:
            via_grad = bad(float(np.sum(z * evaluate(grad, env))))
            record(VerifyReport.compare("gradient_consistency", via_grad, evaluate(first, env), 1e-10, seed, **meta))
            bzt = bad(hess.bilinear(env, z, t))
            btz = hess.bilinear(env, t, z)
            record(VerifyReport.compare("hessian_operator", bzt, evaluate(second, env), 1e-10, seed, **meta))
            asym = abs(bzt - btz) / (1 + abs(bzt))
            record(VerifyReport("hessian_symmetry", bzt, btz, abs(bzt - btz), asym, 1e-8,
                                "pass" if asym <= 1e-8 else "fail", seed, meta))
    return list(checks.values())
