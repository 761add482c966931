"""Fits and derived scales: xi_p from S(r), v_p from xi_p(t), v_E, bounds.

The purification entropy decays as S(r) ~ e^{-2r/xi_p} at large r; the
length scale grows as xi_p(t) ~ 2^{v_p t}. Fits are weighted least
squares on the log of the measured series, with the fit window and the
goodness of fit always reported. The bound checker evaluates

    ln(1/F^(k)) <= ln(2) [r + k S(r)]          (log form of the purity bound)
    2^{N_A} - 1 <= xi_p(t) ln(2)/2             (needed to host infinite designs)
    t_inf >= (v_E / v_p) t_1                   (design-time separation)

against measured inputs. The first is a theorem whenever F and S come
from exact enumeration, so a violation there is flagged as an
inconsistency (bad fit window or estimator bias), never as physics. The
second is a necessary condition for having reached t_inf at depth t; its
slack is reported without a verdict.
"""

from dataclasses import dataclass

import numpy as np

from .ensemble import NOT_REACHED

DEFAULT_WINDOW_ENTRY = 0.5  # bits: fit starts once S drops below this
DEFAULT_NOISE_EXIT = 0.3  # fit ends once stderr/S exceeds this


@dataclass
class XiFit:
    """Exponential-decay fit of one S(r) series."""

    xi_p: float  # None when the trace does not purify
    goodness: float  # R^2 on ln S within the window
    window: tuple  # (r_first, r_last) actually used
    slope: float
    slope_stderr: float
    no_purification: bool = False


@dataclass
class ScalingFit:
    """xi_p(t) fits across depths plus the purification velocity."""

    xi_p_by_t: dict  # t -> XiFit
    v_p: float
    v_p_stderr: float
    normalized: bool  # True when the fit used log2(xi_p / t)


def _as_series(trace):
    if hasattr(trace, "s2"):
        return np.asarray(trace.r_values, float), np.asarray(trace.s2, float), np.asarray(
            trace.stderr, float
        )
    r, s, se = trace
    return np.asarray(r, float), np.asarray(s, float), np.asarray(se, float)


def fit_xi_p(trace, window=None):
    """Fit S(r) ~ e^{-2r/xi_p} by weighted least squares on ln S.

    ``trace`` is a PurificationTrace or an (r, S, stderr) triple. The
    default window starts after S first drops below 0.5 bits (past the
    initial transient) and ends where stderr/S exceeds 0.3 (noise floor);
    points with S <= 3 * stderr are excluded throughout. A non-negative
    slope sets ``no_purification`` instead of producing a negative xi_p.
    """
    r, s, se = _as_series(trace)
    usable = (s > 0) & (s > 3.0 * se)
    if window is None:
        below = np.flatnonzero(usable & (s < DEFAULT_WINDOW_ENTRY))
        start = r[below[0]] if below.size else r[0]
        noisy = np.flatnonzero(usable & (r >= start) & (se / np.maximum(s, 1e-300) > DEFAULT_NOISE_EXIT))
        stop = r[noisy[0]] - 1 if noisy.size else r[-1]
    else:
        start, stop = window
    mask = usable & (r >= start) & (r <= stop)
    if mask.sum() < 4:
        raise ValueError(
            f"only {int(mask.sum())} usable points in window [{start}, {stop}]; need 4"
        )
    rw, yw, sew = r[mask], np.log(s[mask]), se[mask] / s[mask]
    weights = 1.0 / sew**2 if np.all(sew > 0) else np.ones_like(rw)
    slope, intercept, slope_err = _wls_line(rw, yw, weights)
    fitted = slope * rw + intercept
    ybar = np.average(yw, weights=weights)
    ss_res = float(np.sum(weights * (yw - fitted) ** 2))
    ss_tot = float(np.sum(weights * (yw - ybar) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    win = (float(rw[0]), float(rw[-1]))
    if slope >= 0.0:
        return XiFit(None, r2, win, slope, slope_err, no_purification=True)
    return XiFit(-2.0 / slope, r2, win, slope, slope_err)


def _wls_line(x, y, w):
    """Weighted least-squares line fit; returns (slope, intercept, slope stderr)."""
    sw = w.sum()
    xbar = np.sum(w * x) / sw
    ybar = np.sum(w * y) / sw
    sxx = np.sum(w * (x - xbar) ** 2)
    if sxx <= 0:
        raise ValueError("degenerate abscissa in line fit")
    slope = np.sum(w * (x - xbar) * (y - ybar)) / sxx
    intercept = ybar - slope * xbar
    resid = y - slope * x - intercept
    dof = max(x.size - 2, 1)
    scale = np.sum(w * resid**2) / dof
    return float(slope), float(intercept), float(np.sqrt(scale / sxx))


def fit_v_p(xi_by_t, normalize_by_t=False):
    """Slope of log2(xi_p) (or log2(xi_p / t) when normalized) versus t.

    ``xi_by_t`` maps depth t to xi_p (a float or an XiFit). Returns
    (v_p, stderr). Entries that did not purify are rejected.
    """
    pairs = []
    for t in sorted(xi_by_t):
        xi = xi_by_t[t]
        if isinstance(xi, XiFit):
            if xi.no_purification:
                raise ValueError(f"t={t} trace shows no purification; cannot fit v_p")
            xi = xi.xi_p
        if xi is None or xi <= 0:
            raise ValueError(f"invalid xi_p at t={t}")
        pairs.append((float(t), float(xi)))
    if len(pairs) < 3:
        raise ValueError(f"need xi_p at >= 3 depths, got {len(pairs)}")
    ts = np.array([t for t, _ in pairs])
    ys = np.array([np.log2(xi / t) if normalize_by_t else np.log2(xi) for t, xi in pairs])
    slope, _, stderr = _wls_line(ts, ys, np.ones_like(ts))
    return slope, stderr


def scaling_fit(traces, normalize_by_t=False, window=None):
    """Full pipeline: fit xi_p for each trace, then v_p across depths."""
    fits = {trace.t: fit_xi_p(trace, window=window) for trace in traces}
    v_p, stderr = fit_v_p(fits, normalize_by_t=normalize_by_t)
    return ScalingFit(fits, v_p, stderr, normalize_by_t)


def estimate_v_E(design_scans):
    """Entanglement velocity from thermalization times: N_A = v_E * t_1.

    ``design_scans`` maps N_A to its thermalization time t_1 (entries
    equal to NOT_REACHED are skipped). Least-squares slope through the
    origin of N_A versus t_1.
    """
    pts = [
        (float(n_a), float(t1))
        for n_a, t1 in design_scans.items()
        if t1 != NOT_REACHED and t1 is not None
    ]
    if not pts:
        raise ValueError("t_1 not reached for any N_A")
    if len(pts) < 2:
        raise ValueError("need reached t_1 for at least two values of N_A")
    num = sum(n_a * t1 for n_a, t1 in pts)
    den = sum(t1 * t1 for _, t1 in pts)
    return num / den


@dataclass
class BoundReport:
    """Measured evaluation of the design-time bounds."""

    N_A: int
    log_bound: list  # dicts: k, r, lhs, rhs, slack  (theorem on exact inputs)
    xi_bound: list  # dicts: t, lhs, rhs, slack, permits_t_inf
    separation: dict  # t1, v_E, v_p, ratio, t_inf_lower (or None)
    violations: list  # human-readable inconsistency flags

    @property
    def ok(self):
        return not self.violations


def check_design_bounds(N_A, frame_potentials=None, entropy_by_r=None,
                        xi_p_by_t=None, t1=None, v_E=None, v_p=None, atol=1e-9):
    """Evaluate the purity/log bound, the xi_p floor, and the separation.

    ``frame_potentials`` maps k -> F^(k) and ``entropy_by_r`` maps
    r -> S(r); when both are given, ln(1/F^(k)) <= ln(2)[r + k S(r)] is
    checked for every (k, r) pair, and any violation beyond ``atol`` is
    recorded in ``violations`` (on exactly-enumerated inputs it is a
    theorem, so a flag means inconsistent inputs, e.g. mismatched fit
    windows). ``xi_p_by_t`` maps t -> xi_p; each entry reports the slack
    of 2^{N_A} - 1 <= xi_p ln(2)/2, i.e. whether depth t could already
    host infinitely high designs. t1, v_E, v_p fill in the separation
    bound t_inf >= (v_E/v_p) t1.
    """
    log_bound = []
    violations = []
    if frame_potentials and entropy_by_r is not None:
        for k in sorted(frame_potentials):
            lhs = float(np.log(1.0 / frame_potentials[k]))
            for r in sorted(entropy_by_r):
                rhs = float(np.log(2.0) * (r + k * entropy_by_r[r]))
                slack = rhs - lhs
                log_bound.append({"k": k, "r": r, "lhs": lhs, "rhs": rhs, "slack": slack})
                if slack < -atol:
                    violations.append(
                        f"log bound violated at k={k}, r={r} "
                        f"(lhs={lhs:.6g} > rhs={rhs:.6g}): inputs are inconsistent"
                    )
    xi_bound = []
    if xi_p_by_t:
        lhs = float((1 << N_A) - 1)
        for t in sorted(xi_p_by_t):
            xi = xi_p_by_t[t]
            xi = xi.xi_p if hasattr(xi, "xi_p") else float(xi)
            rhs = xi * np.log(2.0) / 2.0
            xi_bound.append(
                {"t": t, "lhs": lhs, "rhs": rhs, "slack": rhs - lhs,
                 "permits_t_inf": bool(rhs >= lhs - atol)}
            )
    separation = None
    if v_E is not None and v_p is not None:
        separation = {
            "t1": t1,
            "v_E": float(v_E),
            "v_p": float(v_p),
            "ratio": float(v_E) / float(v_p),
            "t_inf_lower": (float(v_E) / float(v_p)) * t1 if t1 is not None else None,
        }
    return BoundReport(N_A, log_bound, xi_bound, separation, violations)
