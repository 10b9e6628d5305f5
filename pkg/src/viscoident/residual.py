"""Two-stage weighted-residual estimation of the hereditary parameters.

Stage 1 fixes an initial intensity/exponent pair (lambda0, q0) and a
difference-moment order m by minimizing the weighted residual

    delta = sum_j { w_j * [K(t_j) - lambda0 * K_j(t_eval_j)] }**2,
    w_j = 1 / (1 + |r_j / r_n|**m),

where r_j is the sample residual and r_n the terminal-sample residual that
normalizes all of them. Stage 2 estimates the intensity scale from the
reciprocal-residual-weighted closed form

    lambda_tilde = sum_j K(t_j)*K_j / r_j**2  /  sum_j K_j**2 / r_j**2

(the target-residual level gamma cancels identically), then solves

    eps_i**q - eta_j * q = 0,
    eta_j = (sigma/H) * (1 + lambda_hat * [B_j*t_j - C_j*t_j**2 + D_j*t_j**3])

for the exponent on every (strain level, knot) pair and reduces the roots
by their median.

Evaluation times: each sample term j is evaluated at the midpoint of
[t_j, t_{j+1}] by default (the terminal sample at its own knot), or exactly
at the knots, where the scale formula is identically 1 on a self-fitted
spline.

When the segments are fitted to the samples themselves the scale estimate
is a multiplicative correction to lambda0; when they come from an
independent unit-normalized kernel model the estimate IS the intensity.
``identify`` distinguishes the two with ``model_segments``.

Estimation over (strain, knot) pairs is embarrassingly parallel, but results
must be reduced in sorted pair order; this implementation is sequential and
therefore trivially deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateDesignError,
    DegenerateNormalizationError,
    DomainError,
    InfeasibleEtaError,
    NoRootBracketError,
    NoRootError,
    PoleError,
)
from .material import PowerLaw
from .spline import (
    IsochroneDataset,
    KernelSamples,
    SplineSegment,
    integrate_segment_from_zero,
)

Q_RESIDUAL_RTOL = 1e-10
DEFAULT_M_RANGE = tuple(range(2, 9))


@dataclass(frozen=True)
class WeightConfig:
    """Stage-1 configuration: initial guesses, moment order, residual target."""

    lambda0: float = 1.0
    q0: float = 1.0
    m: int = 2
    gamma: float = 1e-6
    t_star: float | None = None

    def __post_init__(self):
        if self.lambda0 <= 0.0 or self.q0 <= 0.0:
            raise DomainError("lambda0 and q0 must be > 0")
        if not isinstance(self.m, int) or self.m < 2:
            raise DomainError(f"m must be an integer >= 2, got {self.m}")
        if self.gamma <= 0.0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")


@dataclass
class IdentificationResult:
    """Estimates plus the per-sample and per-pair diagnostics."""

    lambda_hat: float
    q_hat: float
    delta: float
    m_selected: int
    weights: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def segment_eval_times(samples: KernelSamples, at_knots: bool = False) -> np.ndarray:
    """Per-sample evaluation times: knots, or interval midpoints.

    The terminal sample has no following knot; its midpoint degenerates to
    the knot itself.
    """
    t = samples.times
    if at_knots:
        return t.copy()
    mids = np.empty_like(t)
    mids[:-1] = 0.5 * (t[:-1] + t[1:])
    mids[-1] = t[-1]
    return mids


def _model_values(segments: list[SplineSegment], t_eval: np.ndarray) -> np.ndarray:
    """Segment j's polynomial at its own evaluation time, term by term."""
    t_eval = np.broadcast_to(np.asarray(t_eval, dtype=float), (len(segments),))
    return np.array([seg.value(ti) for seg, ti in zip(segments, t_eval)])


def _residuals(samples: KernelSamples, segments: list[SplineSegment],
               cfg: WeightConfig, t_eval) -> tuple[np.ndarray, np.ndarray]:
    if len(segments) != len(samples):
        raise DomainError("need one segment per sample")
    model = _model_values(segments, t_eval)
    return samples.values - cfg.lambda0 * model, model


def _terminal_residual(samples: KernelSamples, segments: list[SplineSegment],
                       cfg: WeightConfig) -> float:
    """Normalizing residual at the terminal time t_star."""
    t_star = cfg.t_star if cfg.t_star is not None else samples.t_star
    return float(samples.values[-1] - cfg.lambda0 * segments[-1].value(t_star))


def stage1_weights(samples: KernelSamples, segments: list[SplineSegment],
                   cfg: WeightConfig, t_eval) -> np.ndarray:
    """Moment weights w_j = 1/(1 + |r_j / r_terminal|**m), each in (0, 1].

    w_j equals 1 exactly when the sample residual vanishes and falls toward
    0 as the model value (hence the residual) grows without bound.
    """
    resid, _ = _residuals(samples, segments, cfg, t_eval)
    denom = _terminal_residual(samples, segments, cfg)
    if denom == 0.0:
        raise DegenerateNormalizationError(
            "lambda0 fits the terminal sample exactly; perturb lambda0"
        )
    return 1.0 / (1.0 + np.abs(resid / denom) ** cfg.m)


def residual_delta(samples: KernelSamples, segments: list[SplineSegment],
                   cfg: WeightConfig, t_eval) -> float:
    """Weighted sum of squares sum_j (w_j * r_j)**2 at the configured m.

    An exact fit (every residual zero) short-circuits to 0 even though the
    weight normalization is then degenerate.
    """
    resid, _ = _residuals(samples, segments, cfg, t_eval)
    if np.all(resid == 0.0):
        return 0.0
    w = stage1_weights(samples, segments, cfg, t_eval)
    return float(np.sum((w * resid) ** 2))


def select_moment_order(samples: KernelSamples, segments: list[SplineSegment],
                        cfg: WeightConfig, t_eval,
                        m_range=DEFAULT_M_RANGE) -> int:
    """The m in range minimizing delta; ties break toward the smallest m."""
    m_range = tuple(m_range)
    if not m_range:
        raise DomainError("m_range must be nonempty")
    best_m, best_delta = None, math.inf
    for m in sorted(m_range):
        d = residual_delta(samples, segments, replace(cfg, m=m), t_eval)
        if d < best_delta:
            best_m, best_delta = m, d
    return best_m


def omega(samples: KernelSamples, segments: list[SplineSegment],
          weights: np.ndarray, lam: float, t_eval) -> float:
    """The residual functional sum_j {w_j*[K(t_j) - lam*K_j(t_eval_j)]}**2."""
    model = _model_values(segments, t_eval)
    return float(np.sum((weights * (samples.values - lam * model)) ** 2))


def lambda_closed_form(samples: KernelSamples, segments: list[SplineSegment],
                       weights: np.ndarray, t_eval) -> float:
    """Minimizer of the quadratic lam -> omega(lam) for fixed weights."""
    model = _model_values(segments, t_eval)
    w2 = np.asarray(weights, dtype=float) ** 2
    denom = float(np.sum(w2 * model ** 2))
    if denom == 0.0:
        raise DegenerateDesignError(
            "all weighted model values vanish; scale is undefined"
        )
    return float(np.sum(w2 * samples.values * model)) / denom


def lambda_gamma_form(samples: KernelSamples, segments: list[SplineSegment],
                      cfg: WeightConfig, t_eval) -> float:
    """Closed-form scale with reciprocal-residual weights.

    Substituting w_j = sqrt(gamma)/|r_j| into the closed form makes gamma a
    common factor of numerator and denominator, so it cancels exactly and
    never enters the arithmetic. Evaluated at the knots of a self-fitted
    spline every term ratio is K(t_j)/K(t_j), hence the value is
    identically 1.
    """
    resid, model = _residuals(samples, segments, cfg, t_eval)
    zero = np.nonzero(resid == 0.0)[0]
    if zero.size:
        raise PoleError(
            "residual is exactly zero; perturb lambda0 or drop the sample",
            sample_index=int(zero[0]) + 1,
        )
    inv = 1.0 / np.abs(resid) ** 2
    denom = float(np.sum(model ** 2 * inv))
    if denom == 0.0:
        raise DegenerateDesignError(
            "all weighted model values vanish; scale is undefined"
        )
    return float(np.sum(samples.values * model * inv)) / denom


def eta(segment: SplineSegment, sigma: float, pl: PowerLaw,
        lambda_hat: float) -> float:
    """eta_j = (sigma/H) * (1 + lambda_hat * integral_0^{t_j} K_j)."""
    if sigma <= 0.0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    value = sigma / pl.H * (1.0 + lambda_hat * integrate_segment_from_zero(segment))
    if value <= 0.0:
        raise InfeasibleEtaError(
            f"eta = {value} at knot t = {segment.t}; the exponent root "
            "problem requires eta > 0"
        )
    return value


def _f_and_fprime(eps: float, eta_j: float, q: float) -> tuple[float, float]:
    p = eps ** q
    return p - eta_j * q, p * math.log(eps) - eta_j


def solve_q_detailed(eps: float, eta_j: float, q_bar: float,
                     max_iter: int = 200) -> tuple[float, float, float]:
    """Root of eps**q = eta*q in (0, q_bar], with its final bracket.

    Deterministic bisection with safeguarded Newton refinement; terminates
    on the residual certificate |f(q)| <= Q_RESIDUAL_RTOL * max(1, eta*q).
    Returns (root, bracket_lo, bracket_hi); a tangency root (double root at
    the minimum of a convex residual, where no sign change exists) returns
    a collapsed bracket.
    """
    if eps <= 0.0:
        raise DomainError(f"strain level must be > 0, got {eps}")
    if eta_j <= 0.0:
        raise InfeasibleEtaError(f"eta must be > 0, got {eta_j}")
    if q_bar <= 0.0:
        raise DomainError(f"q_bar must be > 0, got {q_bar}")

    def f(q):
        return eps ** q - eta_j * q

    def done(q, fq):
        return abs(fq) <= Q_RESIDUAL_RTOL * max(1.0, eta_j * q)

    f_bar = f(q_bar)
    if f_bar >= 0.0:
        # No sign change at the bracket end. A convex residual (eps > 1)
        # may still have a tangency (double) root at its minimum.
        if eps > 1.0:
            log_eps = math.log(eps)
            arg = eta_j / log_eps
            if arg > 0.0:
                q_min = math.log(arg) / log_eps
                if q_min > 0.0 and done(q_min, f(q_min)):
                    return q_min, q_min, q_min
        raise NoRootBracketError(
            f"bracket condition eps**q_bar < eta*q_bar fails at q_bar = {q_bar}"
        )

    # f(q) -> 1 as q -> 0+, so shrink the lower end until it is positive.
    lo = min(1e-6, 0.5 * q_bar)
    f_lo = f(lo)
    while f_lo <= 0.0 and lo > 1e-300:
        lo *= 0.1
        f_lo = f(lo)
    if f_lo <= 0.0:
        raise NoRootError("residual does not change sign on (0, q_bar]")

    a, fa, b, fb = lo, f_lo, q_bar, f_bar
    x, fx = 0.5 * (a + b), None
    for _ in range(max_iter):
        fx, dfx = _f_and_fprime(eps, eta_j, x)
        if done(x, fx):
            return x, a, b
        if fx > 0.0:
            a, fa = x, fx
        else:
            b, fb = x, fx
        # Newton step, accepted only when it stays strictly inside the bracket
        if dfx != 0.0:
            x_new = x - fx / dfx
            if a < x_new < b:
                x = x_new
                continue
        x = 0.5 * (a + b)
    raise ConvergenceError(
        "exponent root refinement stalled", last_term=abs(fx)
    )


def solve_q(eps: float, eta_j: float, q_bar: float) -> float:
    """Root of eps**q - eta*q = 0 in (0, q_bar]; see solve_q_detailed."""
    return solve_q_detailed(eps, eta_j, q_bar)[0]


def auto_q_bracket(eps: float, eta_j: float, q0: float,
                   max_doublings: int = 64) -> float:
    """A q_bar satisfying the bracket condition for the descending branch.

    For eps <= 1 the residual is strictly decreasing, so the guess is
    doubled until it goes negative. For eps > 1 the residual is convex and
    the minimizer is explicit; using it as the bracket end isolates the
    smaller (descending-branch) root.
    """
    def f(q):
        return eps ** q - eta_j * q

    if eps > 1.0:
        log_eps = math.log(eps)
        arg = eta_j / log_eps
        if arg <= 0.0:
            raise NoRootBracketError("residual has no interior minimum")
        q_min = math.log(arg) / log_eps
        if q_min <= 0.0 or f(q_min) > 0.0:
            # allow the exact-tangency case through to solve_q
            if q_min > 0.0 and abs(f(q_min)) <= Q_RESIDUAL_RTOL * max(1.0, eta_j * q_min):
                return q_min
            raise NoRootBracketError(
                "convex residual stays positive; no exponent root exists"
            )
        return q_min
    q_bar = max(q0, 1.0)
    for _ in range(max_doublings):
        if f(q_bar) < 0.0:
            return q_bar
        q_bar *= 2.0
    raise NoRootBracketError(
        f"no sign change found doubling up to q_bar = {q_bar}"
    )


def scan_initial_guess(samples: KernelSamples, segments: list[SplineSegment],
                       cfg: WeightConfig, t_eval,
                       lambda0_values, q0_values) -> tuple[float, float, float]:
    """Coarse grid scan of (lambda0, q0) minimizing delta.

    First minimum wins on ties. The segment family carries no exponent
    dependence, so q0 only matters through downstream uses; it is scanned
    for completeness.
    """
    best = (None, None, math.inf)
    for lam0 in lambda0_values:
        for q0 in q0_values:
            trial = replace(cfg, lambda0=float(lam0), q0=float(q0))
            d = residual_delta(samples, segments, trial, t_eval)
            if d < best[2]:
                best = (float(lam0), float(q0), d)
    return best


def identify(samples: KernelSamples, segments: list[SplineSegment],
             isochrones: IsochroneDataset | None, cfg: WeightConfig,
             sigma: float, pl0: PowerLaw, *,
             strain_levels=None, at_knots: bool = False,
             m_range=DEFAULT_M_RANGE,
             model_segments: bool = False) -> IdentificationResult:
    """Run both estimation stages and reduce the exponent roots.

    Strain levels for the exponent stage come from ``isochrones`` when
    given, else from ``strain_levels``; with neither, the exponent stage is
    skipped and q_hat is NaN.

    ``model_segments`` declares that ``segments`` were fitted to an
    independent unit-intensity kernel model rather than to the samples:
    then the scale formula output is itself the intensity estimate.
    On self-fitted segments it is a multiplicative correction to lambda0
    (identically 1 at knot evaluation, so lambda_hat = lambda0).
    """
    t_eval = segment_eval_times(samples, at_knots=at_knots)
    m_sel = select_moment_order(samples, segments, cfg, t_eval, m_range)
    cfg_m = replace(cfg, m=m_sel)
    weights = stage1_weights(samples, segments, cfg_m, t_eval)
    delta = residual_delta(samples, segments, cfg_m, t_eval)
    ratio = lambda_gamma_form(samples, segments, cfg_m, t_eval)
    lambda_hat = ratio if model_segments else cfg.lambda0 * ratio

    if isochrones is not None:
        eps_levels = np.asarray(isochrones.strain_levels, dtype=float)
    elif strain_levels is not None:
        eps_levels = np.asarray(strain_levels, dtype=float)
    else:
        eps_levels = None

    diagnostics = {
        "lambda_ratio": ratio,
        "residuals": samples.values - cfg.lambda0 * _model_values(segments, t_eval),
        "eval_times": t_eval,
    }

    q_hat = math.nan
    if eps_levels is not None:
        etas = np.array(
            [eta(seg, sigma, pl0, lambda_hat) for seg in segments]
        )
        roots, failures = [], []
        for i, eps_i in enumerate(eps_levels):
            for j, eta_j in enumerate(etas):
                try:
                    q_bar = auto_q_bracket(eps_i, eta_j, cfg.q0)
                    roots.append(solve_q(eps_i, eta_j, q_bar))
                except (NoRootBracketError, NoRootError, InfeasibleEtaError) as exc:
                    failures.append((i + 1, j + 1, type(exc).__name__))
        if roots:
            q_hat = float(np.median(roots))
        else:
            raise NoRootError(
                "every (strain level, knot) pair failed to bracket an "
                "exponent root"
            )
        diagnostics["q_roots"] = np.array(roots)
        diagnostics["q_failures"] = failures
        diagnostics["etas"] = etas

    return IdentificationResult(
        lambda_hat=lambda_hat,
        q_hat=q_hat,
        delta=delta,
        m_selected=m_sel,
        weights=weights,
        diagnostics=diagnostics,
    )
