"""Kernel-sample spline approximation and similarity means.

Discrete kernel samples {(t_j, K(t_j))} are approximated per interval
[t_j, t_{j+1}) by the quadratic segment

    K_j(t) = B_j + 2C_j*(t - t_j) + 3D_j*(t - t_j)**2

with B_j = K(t_j), segment 1 flat (C_1 = D_1 = 0), and for j >= 2

    2C_j = 2*t_j*(K_j - K_{j-1}) / (h_{j-1} * (2*t_j - h_{j-1}))
    3D_j =       (K_j - K_{j-1}) / (h_{j-1} * (2*t_j - h_{j-1}))

where h_{j-1} = t_j - t_{j-1}. The doubled/tripled coefficients are stored
as-is so the bundled reference table can be compared digit for digit.

The segment notation carries a nonlinearity exponent in the source scheme,
but the algebra above does not depend on it; segments here are exponent-free.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import (
    DegenerateColumnError,
    DomainError,
    InsufficientDataError,
    OutOfRangeError,
    SingularDenominatorError,
)
from .material import PowerLaw, phi0

TABLE1_RESOURCE = "table1_kernel_samples.csv"

# Reference-table coefficient columns as printed, kept as text so the
# comparison can honor the table's own rounding resolution.
TABLE1_PRINTED_2C = (
    "0", "-100", "-149", "-137", "-167", "-130", "-186", "-39.3",
    "-12.25", "-27", "-8.3", "-6", "-2.5", "-0.6", "-0.34", "-0.2",
)
TABLE1_PRINTED_3D = (
    "0", "-10", "-10.42", "-6.86", "-6.82", "-4.32", "-5.47", "-0.65",
    "-0.09", "-0.17", "-0.04", "-0.02", "-0.005", "-0.0008", "-0.0002",
    "-0.0001",
)

# A recomputed coefficient is consistent with a printed one when it is
# within this relative tolerance or within half a unit of the printed
# value's last digit.
TABLE1_REL_TOL = 0.02


@dataclass(frozen=True)
class KernelSamples:
    """Ordered kernel samples (t_j, K(t_j)), j = 1..n."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or v.ndim != 1 or len(t) != len(v):
            raise DomainError("times and values must be 1-d and equally long")
        if len(t) < 1:
            raise DomainError("need at least one sample")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise DomainError("sample times and values must be finite")
        if len(t) > 1 and not np.all(np.diff(t) > 0.0):
            raise DomainError("sample times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t_star(self) -> float:
        """Terminal sample time t_n."""
        return float(self.times[-1])


@dataclass(frozen=True)
class IsochroneDataset:
    """Isochronous stress values phi_t(eps_i, t_j) on a strain x time grid."""

    strain_levels: np.ndarray
    times: np.ndarray
    phi_t: np.ndarray

    def __post_init__(self):
        eps = np.asarray(self.strain_levels, dtype=float)
        t = np.asarray(self.times, dtype=float)
        m = np.asarray(self.phi_t, dtype=float)
        object.__setattr__(self, "strain_levels", eps)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "phi_t", m)
        if eps.ndim != 1 or len(eps) < 1:
            raise DomainError("need at least one strain level")
        if t.ndim != 1 or len(t) < 2:
            raise DomainError("need at least two isochrone times")
        if np.any(eps <= 0.0) or not np.all(np.diff(eps) > 0.0):
            raise DomainError("strain levels must be positive and increasing")
        if np.any(t < 0.0) or not np.all(np.diff(t) > 0.0):
            raise DomainError("times must be nonnegative and increasing")
        if m.shape != (len(eps), len(t)):
            raise DomainError(
                f"phi_t must have shape {(len(eps), len(t))}, got {m.shape}"
            )
        if not np.all(np.isfinite(m)):
            raise DomainError("phi_t values must be finite")


@dataclass(frozen=True)
class SplineSegment:
    """One quadratic segment anchored at knot t_j.

    ``twoC`` and ``threeD`` store the doubled and tripled coefficients of
    the printed scheme; halve / third them where plain C_j, D_j are needed.
    """

    t: float
    B: float
    twoC: float
    threeD: float

    def value(self, time: float) -> float:
        """Segment polynomial at an arbitrary time (no range check)."""
        dt = time - self.t
        return self.B + self.twoC * dt + self.threeD * dt * dt


def similarity_means(data: IsochroneDataset, pl: PowerLaw) -> np.ndarray:
    """Least-squares similarity means, one per isochrone time.

    For each column j the minimizer of
    sum_i [phi0(eps_i) - S_j * phi_t(eps_i, t_j)]**2 is

        S_j = sum_i phi0(eps_i) * phi_t(eps_i, t_j) / sum_i phi_t(eps_i, t_j)**2
    """
    phi_inst = np.array([phi0(pl, e) for e in data.strain_levels])
    denom = np.sum(data.phi_t ** 2, axis=0)
    bad = np.nonzero(denom == 0.0)[0]
    if bad.size:
        raise DegenerateColumnError(
            f"isochrone column {bad[0] + 1} is identically zero"
        )
    return (phi_inst @ data.phi_t) / denom


def fit_kernel_spline(samples: KernelSamples) -> list[SplineSegment]:
    """Fit the quadratic segments to kernel samples.

    Segment 1 is the constant B_1; later segments use backward differences.
    Raises when a coefficient denominator 2*t_j - h_{j-1} vanishes.
    """
    if len(samples) < 2:
        raise InsufficientDataError("need at least two samples to fit segments")
    t, K = samples.times, samples.values
    segments = [SplineSegment(float(t[0]), float(K[0]), 0.0, 0.0)]
    for j in range(1, len(t)):
        h = t[j] - t[j - 1]
        bracket = 2.0 * t[j] - h
        if bracket == 0.0:
            raise SingularDenominatorError(
                f"2*t_j equals h_(j-1) at knot {j + 1} (t = {t[j]})",
                knot_index=j + 1,
            )
        threeD = (K[j] - K[j - 1]) / (h * bracket)
        # twoC derived from threeD so the 2C/3D = 2*t_j identity is bitwise
        segments.append(
            SplineSegment(float(t[j]), float(K[j]), 2.0 * t[j] * threeD, threeD)
        )
    return segments


def segment_index(segments: list[SplineSegment], t: float) -> int:
    """Segment covering t: half-open [t_j, t_{j+1}), last knot closed."""
    knots = np.array([s.t for s in segments])
    if t < knots[0] or t > knots[-1]:
        raise OutOfRangeError(
            f"t = {t} outside the fitted range [{knots[0]}, {knots[-1]}]"
        )
    if t == knots[-1]:
        return len(segments) - 1
    return int(np.searchsorted(knots, t, side="right")) - 1


def eval_kernel_spline(segments: list[SplineSegment], t: float) -> float:
    """Value of the fitted spline at t; exactly B_j at each knot."""
    return segments[segment_index(segments, t)].value(t)


def integrate_segment_from_zero(segment: SplineSegment) -> float:
    """integral_0^{t_j} of segment j's polynomial: B*t - C*t**2 + D*t**3.

    The segment polynomial is extended over [0, t_j] as in the printed
    scheme; C and D are the stored doubled/tripled coefficients halved and
    thirded.
    """
    t = segment.t
    C = segment.twoC / 2.0
    D = segment.threeD / 3.0
    return segment.B * t - C * t * t + D * t ** 3


def table1_fixture() -> KernelSamples:
    """The bundled 16-row reference kernel dataset (t from 0 to 1050)."""
    text = resources.files("viscoident.data").joinpath(TABLE1_RESOURCE).read_text()
    rows = list(csv.reader(text.strip().splitlines()))
    body = rows[1:]  # skip header
    times = np.array([float(r[1]) for r in body])
    values = np.array([float(r[2]) for r in body])
    return KernelSamples(times, values)


def _half_ulp(printed: str) -> float:
    """Half a unit in the last place of a printed decimal."""
    mantissa = printed.lstrip("-")
    decimals = len(mantissa.split(".")[1]) if "." in mantissa else 0
    return 0.5 * 10.0 ** (-decimals)


def compare_table1(samples: KernelSamples | None = None) -> list[dict]:
    """Recompute the reference-table coefficients and compare to print.

    A row is flagged formula-inconsistent when a recomputed coefficient is
    both more than ``TABLE1_REL_TOL`` relative away from the printed value
    and outside half a unit of the printed value's last digit (the latter
    absorbs the table's own display rounding).
    """
    if samples is None:
        samples = table1_fixture()
    segments = fit_kernel_spline(samples)
    report = []
    for j, seg in enumerate(segments):
        row = {"j": j + 1, "t": seg.t, "B": seg.B}
        flagged = False
        for name, computed, printed in (
            ("2C", seg.twoC, TABLE1_PRINTED_2C[j]),
            ("3D", seg.threeD, TABLE1_PRINTED_3D[j]),
        ):
            pval = float(printed)
            diff = abs(computed - pval)
            rel = diff / abs(pval) if pval != 0.0 else (0.0 if diff == 0.0 else np.inf)
            ok = rel <= TABLE1_REL_TOL or diff <= _half_ulp(printed)
            row[f"printed_{name}"] = pval
            row[f"computed_{name}"] = computed
            row[f"rel_{name}"] = rel
            flagged = flagged or not ok
        row["flagged"] = flagged
        report.append(row)
    return report
