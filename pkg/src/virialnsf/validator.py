"""Numerical audit of a :class:`VirialLaw` against the structural assumptions.

Every check produces one :class:`CheckResult`.  Checks are grouped in three
categories:

``structural``    exponent/viscosity inequalities and the coefficient
                  assumptions (radiative part, concavity, growth);
``derived``       thermodynamic consequences (C_v >= 0, entropy concavity,
                  Maxwell relation, barotropic gap);
``informational`` quantities reported for context, never pass/fail.

Growth bounds ``LHS <= C * RHS`` are fitted: ``C = max(LHS/RHS)`` over the
scan, and the bound fails if ``C > c_max`` *or* the log-log slope of the
ratio at the relevant end of the scan exceeds ``growth_tol``.  The slope
test catches asymptotic violations that a finite window would absorb into a
large-but-finite constant.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import statelaw as sl

PASS, FAIL, INFO = "pass", "fail", "informational"

CHECK_IDS = (
    "gamma-floor",
    "gamma-theta-range",
    "alpha-bar",
    "lame",
    "conductivity",
    "b1-constant",
    "P2-radiative",
    "P3-radiative-bounds",
    "P5-concavity",
    "P6-growth",
    "P6bis-growth",
    "cv-positive",
    "P7-entropy-concavity",
    "maxwell",
    "phi-gap",
    "P2-literal",
    "P6-small-theta",
    "P6bis-small-theta",
    "P6bis-n0",
)


@dataclass(frozen=True)
class ScanGrid:
    theta_lo: float = 1e-3
    theta_hi: float = 1e3
    rho_lo: float = 1e-3
    rho_hi: float = 1e2
    points: int = 128
    spacing: str = "log"

    def __post_init__(self):
        if not (0 < self.theta_lo < self.theta_hi and 0 < self.rho_lo < self.rho_hi):
            raise ValueError("scan ranges need 0 < lo < hi")
        if self.points < 16:
            raise ValueError("at least 16 points per axis")
        if self.spacing not in ("log", "linear"):
            raise ValueError("spacing must be 'log' or 'linear'")

    def axis(self, lo, hi):
        if self.spacing == "log":
            return np.logspace(math.log10(lo), math.log10(hi), self.points)
        return np.linspace(lo, hi, self.points)

    @property
    def theta(self):
        return self.axis(self.theta_lo, self.theta_hi)

    @property
    def rho(self):
        return self.axis(self.rho_lo, self.rho_hi)

    def mesh(self):
        """(rho, theta) meshes with rho along axis 0."""
        return np.meshgrid(self.rho, self.theta, indexing="ij")


@dataclass(frozen=True)
class ValidatorOptions:
    theta_split: float = 1.0
    exponent_slack: float = 0.01
    c_max: float = 1e6
    growth_tol: float = 0.05
    tail: int = 16


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    status: str
    category: str
    witness_rho: float = math.nan
    witness_theta: float = math.nan
    margin: float = math.nan
    fitted_c: float = math.nan
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)
    nonmonotone_witness: tuple | None = None

    def get(self, check_id):
        for c in self.checks:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    def failed(self, category=None):
        return [c.check_id for c in self.checks
                if c.status == FAIL and (category is None or c.category == category)]

    @property
    def ok(self):
        return not self.failed()

    def to_text(self):
        lines = []
        for c in self.checks:
            lines.append(
                f"{c.check_id:<22} {c.status:<13} {c.category:<13} "
                f"rho={c.witness_rho:.6g} theta={c.witness_theta:.6g} "
                f"margin={c.margin:.6g} C={c.fitted_c:.6g} {c.detail}".rstrip()
            )
        w = self.nonmonotone_witness
        lines.append("nonmonotone witness: " +
                     ("none" if w is None else f"rho={w[0]:.6g} theta={w[1]:.6g}"))
        return "\n".join(lines) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["check_id", "status", "witness_rho", "witness_theta", "margin", "fitted_C"])
        for c in self.checks:
            wr.writerow([c.check_id, c.status, repr(c.witness_rho), repr(c.witness_theta),
                         repr(c.margin), repr(c.fitted_c)])
        return buf.getvalue()


def _result(check_id, ok, category, **kw):
    return CheckResult(check_id, PASS if ok else FAIL, category, **kw)


# ----------------------------------------------------------------------------
# bound fitting


def _fit_bound(theta, lhs, rhs, opts, ends=("hi",)):
    """Fit C in lhs <= C rhs on a 1-d theta scan.

    Returns (ok, C, worst_theta, margin) where margin is the smallest of
    ``growth_tol - slope`` over the inspected ends (and ``log10(c_max/C)``).
    """
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if lhs.size == 0:
        return True, 0.0, math.nan, math.inf
    with np.errstate(all="ignore"):
        ratio = np.where(lhs == 0.0, 0.0, lhs / rhs)
    if not np.all(np.isfinite(ratio)):
        bad = int(np.argmax(~np.isfinite(ratio)))
        return False, math.inf, float(theta[bad]), -math.inf
    c = float(ratio.max())
    if c == 0.0:
        return True, 0.0, math.nan, math.inf
    worst = float(theta[int(np.argmax(ratio))])
    margin = math.log10(opts.c_max / c)
    k = min(opts.tail, theta.size)
    lt = np.log(theta)
    for end in ends:
        sel = slice(theta.size - k, None) if end == "hi" else slice(0, k)
        r = ratio[sel]
        if np.all(r > 0):
            slope = np.polyfit(lt[sel], np.log(r), 1)[0]
            growth = slope if end == "hi" else -slope
            if opts.growth_tol - growth < margin:
                margin = opts.growth_tol - growth
                worst = float(theta[-1] if end == "hi" else theta[0])
    return margin >= 0, c, worst, margin


# ----------------------------------------------------------------------------
# individual checks


def validate_structure(law, d=2):
    out = []
    g_floor = max(4.0, 2.0 * law.n_trunc, float(d))
    out.append(_result("gamma-floor", law.gamma > g_floor, "structural",
                       margin=law.gamma - g_floor, detail=f"needs gamma > {g_floor:g}"))
    m = min(law.gamma_theta - 2.0, law.alpha / 2.0 - law.gamma_theta, law.alpha - 4.0)
    out.append(_result("gamma-theta-range", m >= 0, "structural", margin=m,
                       detail="2 <= gamma_theta <= alpha/2, alpha >= 4"))
    m = min(law.alpha, 2.0 * law.gamma_theta) - law.alpha_bar
    out.append(_result("alpha-bar", m > 0, "structural", margin=m,
                       detail="alpha_bar < min(alpha, 2 gamma_theta)"))
    m = min(law.mu, law.lam + 2.0 * law.mu / d)
    out.append(_result("lame", m > 0, "structural", margin=m,
                       detail=f"mu > 0, lambda + 2mu/{d} > 0"))
    m = min(law.kappa_a, law.kappa_b - 1.0)
    ok = law.kappa_a > 0 and law.kappa_b >= 1.0
    out.append(_result("conductivity", ok, "structural", margin=m,
                       detail="kappa_a > 0, kappa_b >= 1"))
    ok = law.n_trunc < 1 or law.b[1].kind == "constant"
    out.append(_result("b1-constant", ok, "structural", margin=0.0))
    return out


def check_radiative(law, grid, opts=ValidatorOptions()):
    th = grid.theta
    b0 = law.b[0]
    out = []
    # radiative part: d^2/dtheta^2 (theta B_0) > 0 as theta -> 0
    t0 = th[:4]
    with np.errstate(all="ignore"):
        curv = 2.0 * b0.deriv(t0, 1) + t0 * b0.deriv(t0, 2)
        literal = b0.deriv(t0, 2)
    ok = bool(np.all(np.isfinite(curv)) and np.all(curv > 0))
    out.append(_result("P2-radiative", ok, "structural", witness_theta=float(t0[0]),
                       margin=float(np.nanmin(curv)),
                       detail="d2/dtheta2 (theta B_0) > 0 near 0"))
    out.append(CheckResult("P2-literal", INFO, "informational", witness_theta=float(t0[0]),
                           margin=float(np.nanmin(literal)), detail="B_0'' near 0"))

    gt = law.gamma_theta
    with np.errstate(all="ignore"):
        v0, v1 = b0.deriv(th, 0), b0.deriv(th, 1)
        p1, p2 = th ** (gt - 1.0), th ** (gt - 2.0)
    pairs = [(p1, v0), (v0, p1), (p2, v1), (v1, p2)]
    if np.any(v0 <= 0) or np.any(v1 <= 0):
        bad = int(np.argmax((v0 <= 0) | (v1 <= 0)))
        out.append(CheckResult("P3-radiative-bounds", FAIL, "structural",
                               witness_theta=float(th[bad]), margin=-math.inf,
                               fitted_c=math.inf, detail="B_0 or B_0' not positive"))
        return out
    c, margin, worst = 1.0, math.inf, math.nan
    for lhs, rhs in pairs:
        ok_i, c_i, w_i, m_i = _fit_bound(th, lhs, rhs, opts, ends=("lo", "hi"))
        c = max(c, c_i)
        if m_i < margin:
            margin, worst = m_i, w_i
    out.append(CheckResult("P3-radiative-bounds", PASS if margin >= 0 else FAIL,
                           "structural", witness_theta=worst, margin=margin, fitted_c=c))
    return out


def check_concavity(law, grid, opts=ValidatorOptions()):
    """d/dtheta(theta^2 B_n') <= 0 for n >= 2.

    The reported witness maximises the log-scale violation theta * D_n,
    i.e. the largest increase of theta^2 B_n' per unit log theta.
    """
    th = grid.theta
    worst_val, worst_th, detail = -math.inf, math.nan, ""
    ok = True
    for n in range(2, law.n_trunc + 1):
        dn = sl._d_t2b1(law, n, th)
        scale = float(np.max(np.abs(sl._t2b1(law, n, th)))) + 1.0
        tol = 64 * np.finfo(float).eps * scale
        if np.any(~np.isfinite(dn)) or np.any(dn > tol):
            ok = False
        weighted = th * dn
        i = int(np.nanargmax(weighted))
        if weighted[i] > worst_val:
            worst_val, worst_th, detail = float(weighted[i]), float(th[i]), f"n={n}"
    if law.n_trunc < 2:
        return [CheckResult("P5-concavity", PASS, "structural", margin=math.inf,
                            detail="vacuous (N < 2)")]
    return [CheckResult("P5-concavity", PASS if ok else FAIL, "structural",
                        witness_theta=worst_th if not ok else math.nan,
                        margin=-worst_val, detail=detail)]


def _p6_lhs(b, th):
    with np.errstate(all="ignore"):
        return (np.abs(th ** 3 * b.deriv(th, 3)) + np.abs(th ** 2 * b.deriv(th, 2))
                + np.abs(th * b.deriv(th, 1)) + np.abs(b.deriv(th, 0)))


def _p6bis_lhs(b, bbar, th):
    with np.errstate(all="ignore"):
        tb = th * b.deriv(th, 0)
        return np.abs(th ** 2 * b.deriv(th, 1)) + np.abs(tb) + np.abs(tb - bbar)


def _growth_pair(name, terms, th, opts):
    """Fit each (n, lhs, rhs) for theta >= split (binding) and < split (info)."""
    big = th >= opts.theta_split
    small = ~big
    res = []
    for regime, mask, ends, status_fn in (
        ("large", big, ("hi",), None),
        ("small", small, ("lo",), INFO),
    ):
        ok_all, c_all, margin_all, worst, det = True, 0.0, math.inf, math.nan, ""
        for n, lhs, rhs in terms:
            if not np.any(mask):
                continue
            ok, c, w, m = _fit_bound(th[mask], lhs[mask], rhs[mask], opts, ends)
            c_all = max(c_all, c)
            if m < margin_all:
                margin_all, worst, det = m, w, f"n={n}"
            ok_all &= ok
        if regime == "large":
            res.append(CheckResult(name, PASS if ok_all else FAIL, "structural",
                                   witness_theta=worst if not ok_all else math.nan,
                                   margin=margin_all, fitted_c=c_all, detail=det))
        else:
            res.append(CheckResult(f"{name.split('-')[0]}-small-theta", INFO, "informational",
                                   witness_theta=worst, margin=margin_all, fitted_c=c_all,
                                   detail=det))
    return res


def check_growth(law, grid, opts=ValidatorOptions()):
    th = grid.theta
    g, gt, ab, sl_ = law.gamma, law.gamma_theta, law.alpha_bar, opts.exponent_slack
    p6 = [(n, _p6_lhs(law.b[n], th), th ** ((g - n) * gt / g - 1.0 - sl_))
          for n in range(law.n_trunc + 1) if n != 1]
    p6bis = [(n, _p6bis_lhs(law.b[n], law.b_bar[n], th), th ** (ab * (g - 2 * n) / (2 * g) - sl_))
             for n in range(2, law.n_trunc + 1)]
    out = _growth_pair("P6-growth", p6, th, opts)
    out += _growth_pair("P6bis-growth", p6bis, th, opts)
    # n = 0 for the second bound, reported only (conflicts with the radiative lower bound)
    lhs0 = _p6bis_lhs(law.b[0], law.b_bar[0], th)
    _, c0, w0, m0 = _fit_bound(th, lhs0, th ** (ab / 2.0 - sl_), opts)
    out.append(CheckResult("P6bis-n0", INFO, "informational", witness_theta=w0,
                           margin=m0, fitted_c=c0))
    return out


def check_cv_and_entropy(law, grid, opts=ValidatorOptions()):
    rho, th = grid.mesh()
    cv = sl.specific_heat(law, rho, th)
    i = np.unravel_index(int(np.argmin(cv)), cv.shape)
    cv_ok = bool(cv[i] >= -1e-12)
    out = [CheckResult("cv-positive", PASS if cv_ok else FAIL, "derived",
                       witness_rho=float(rho[i]) if not cv_ok else math.nan,
                       witness_theta=float(th[i]) if not cv_ok else math.nan,
                       margin=float(cv[i]))]

    # Hessian of s(v, e) from the chain rule: s_e = 1/theta, s_v = P/theta.
    p = sl.pressure(law, rho, th)
    p_r = sl.pressure_drho(law, rho, th)
    p_t = sl.pressure_dtheta(law, rho, th)
    e_r = sl.internal_energy_drho(law, rho, th)
    e_t = cv
    # d(v,e)/d(rho,theta) = [[-1/rho^2, 0], [e_r, e_t]]
    with np.errstate(all="ignore"):
        dr_dv = -rho ** 2
        dr_de = np.zeros_like(rho)
        dt_dv = -e_r * dr_dv / e_t
        dt_de = 1.0 / e_t
        sv_r, sv_t = p_r / th, (p_t * th - p) / th ** 2
        se_r, se_t = np.zeros_like(rho), -1.0 / th ** 2
        h_vv = sv_r * dr_dv + sv_t * dt_dv
        h_ve = sv_r * dr_de + sv_t * dt_de
        h_ev = se_r * dr_dv + se_t * dt_dv
        h_ee = se_r * dr_de + se_t * dt_de
        hs = 0.5 * (h_ve + h_ev)
        tr = h_vv + h_ee
        det = h_vv * h_ee - hs * hs
        lam_max = 0.5 * tr + np.sqrt(np.maximum(0.25 * tr * tr - det, 0.0))
        scale = np.abs(h_vv) + np.abs(h_ee) + np.abs(hs)
        rel = lam_max / scale
    rel = np.where(np.isfinite(rel), rel, np.inf)
    j = np.unravel_index(int(np.argmax(rel)), rel.shape)
    ok = bool(rel[j] <= 1e-8)
    out.append(CheckResult("P7-entropy-concavity", PASS if ok else FAIL, "derived",
                           witness_rho=float(rho[j]) if not ok else math.nan,
                           witness_theta=float(th[j]) if not ok else math.nan,
                           margin=float(-rel[j])))

    res = np.abs(p - rho ** 2 * e_r - th * p_t) / (1.0 + np.abs(p))
    k = np.unravel_index(int(np.argmax(res)), res.shape)
    ok = bool(res[k] < 1e-10)
    out.append(CheckResult("maxwell", PASS if ok else FAIL, "derived",
                           witness_rho=float(rho[k]) if not ok else math.nan,
                           witness_theta=float(th[k]) if not ok else math.nan,
                           margin=float(1e-10 - res[k])))
    return out


def check_phi_gap(law, grid, opts=ValidatorOptions()):
    rho, th = grid.mesh()
    p = sl.pressure(law, rho, th)
    gap = np.abs(p - sl.p0_reference(law, rho))
    rho_e = rho * sl.internal_energy(law, rho, th)
    rhs = rho ** (law.gamma / 2.0) + th ** (law.alpha / 2.0 - opts.exponent_slack) \
        + np.sqrt(np.maximum(rho_e, 0.0))
    with np.errstate(all="ignore"):
        ratio = np.where(gap == 0.0, 0.0, gap / rhs)
    i = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    c = float(ratio[i])
    ok = np.isfinite(c) and c <= opts.c_max
    return [CheckResult("phi-gap", PASS if ok else INFO, "derived",
                        witness_rho=float(rho[i]), witness_theta=float(th[i]),
                        margin=math.log10(opts.c_max / c) if c > 0 else math.inf,
                        fitted_c=c)]


def detect_nonmonotone(law, grid):
    """(rho, theta) minimising dP/drho on the scan if it is negative, else None."""
    rho, th = grid.mesh()
    dp = sl.pressure_drho(law, rho, th)
    i = np.unravel_index(int(np.argmin(dp)), dp.shape)
    if dp[i] < 0:
        return float(rho[i]), float(th[i])
    return None


def validate(law, grid=None, d=2, opts=None):
    """Run every check and return a :class:`ValidationReport`."""
    grid = grid or ScanGrid()
    opts = opts or ValidatorOptions()
    checks = validate_structure(law, d)
    checks += check_radiative(law, grid, opts)
    checks += check_concavity(law, grid, opts)
    checks += check_growth(law, grid, opts)
    checks += check_cv_and_entropy(law, grid, opts)
    checks += check_phi_gap(law, grid, opts)
    order = {cid: i for i, cid in enumerate(CHECK_IDS)}
    checks.sort(key=lambda c: order[c.check_id])
    return ValidationReport(checks, detect_nonmonotone(law, grid))
