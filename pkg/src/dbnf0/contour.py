"""F0 contour processing: continuization, state targets, spline synthesis.

Pitch tracks arrive as Hz-per-frame with 0 marking unvoiced frames.
Continuization fills unvoiced gaps with piecewise-cubic interpolation through
the voiced samples (not-a-knot ends, so cubic segments are reproduced
exactly) and extends the edges with the nearest voiced value. State targets
are log-F0 means over each state's frame span; synthesis places one knot per
positive-duration state at its span center and evaluates a natural cubic
spline, exponentiated back to Hz.
"""

from dataclasses import dataclass

import numpy as np

STATES_PER_PHONEME = 5
DEFAULT_FRAME_PERIOD = 0.010
MAX_F0_HZ = 1000.0
_MIN_FILL_HZ = 1e-2  # positivity floor for interpolated gap values


@dataclass
class F0Track:
    values: np.ndarray
    frame_period: float = DEFAULT_FRAME_PERIOD

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.frame_period <= 0:
            raise ValueError("frame_period must be positive")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("F0 values must be finite and non-negative")
        voiced = self.values[self.values > 0]
        if voiced.size and np.max(voiced) >= MAX_F0_HZ:
            raise ValueError(f"voiced F0 must stay below {MAX_F0_HZ} Hz")

    def voiced_mask(self):
        return self.values > 0


@dataclass
class ContinuousContour:
    values: np.ndarray
    frame_period: float = DEFAULT_FRAME_PERIOD

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.frame_period <= 0:
            raise ValueError("frame_period must be positive")
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise ValueError("a continuous contour must be finite and positive")

    def __len__(self):
        return self.values.shape[0]


@dataclass
class StateDurations:
    frames: np.ndarray  # (n_phonemes, 5) frame counts

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.int64)
        if self.frames.ndim != 2 or self.frames.shape[1] != STATES_PER_PHONEME:
            raise ValueError(f"durations must be (n, {STATES_PER_PHONEME})")
        if np.any(self.frames < 0):
            raise ValueError("durations must be non-negative")
        if np.any(self.frames.sum(axis=1) < 1):
            raise ValueError("every phoneme needs at least one frame")

    def total_frames(self):
        return int(self.frames.sum())


@dataclass
class StateF0:
    log_hz: np.ndarray  # (n_phonemes, 5) log-F0 values

    def __post_init__(self):
        self.log_hz = np.asarray(self.log_hz, dtype=np.float64)
        if self.log_hz.ndim != 2 or self.log_hz.shape[1] != STATES_PER_PHONEME:
            raise ValueError(f"state F0 must be (n, {STATES_PER_PHONEME})")
        if not np.all(np.isfinite(self.log_hz)):
            raise ValueError("state F0 values must be finite")


def _solve_tridiagonal(lower, diag, upper, rhs):
    """Thomas algorithm; diagonals given as full-length arrays."""
    n = diag.shape[0]
    c = np.empty(n)
    d = np.empty(n)
    c[0] = upper[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * c[i - 1]
        c[i] = upper[i] / denom if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


class CubicSpline1D:
    """Interpolating cubic spline with natural or not-a-knot ends.

    Second-derivative formulation solved with the Thomas algorithm.
    Evaluation outside the knot range extends the end segments' polynomials.
    Not-a-knot needs >= 4 knots and degrades to natural (3) or linear (2).
    """

    def __init__(self, x, y, bc="natural"):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.ndim != 1 or x.shape != y.shape or x.shape[0] < 2:
            raise ValueError("need >= 2 knots with matching x/y")
        if np.any(np.diff(x) <= 0):
            raise ValueError("knot positions must be strictly increasing")
        if bc not in ("natural", "not-a-knot"):
            raise ValueError(f"unknown boundary condition {bc!r}")
        self.x = x
        self.y = y
        self.m2 = self._second_derivatives(x, y, bc)

    @staticmethod
    def _second_derivatives(x, y, bc):
        m = x.shape[0] - 1  # segment count
        h = np.diff(x)
        m2 = np.zeros(m + 1)
        if m < 2:
            return m2  # single segment: linear
        slope = np.diff(y) / h
        rhs = 6.0 * np.diff(slope)
        lower = h[:-1].copy()
        diag = 2.0 * (h[:-1] + h[1:])
        upper = h[1:].copy()
        if bc == "not-a-knot" and m >= 3:
            # eliminate M_0 = M_1 (1 + h0/h1) - M_2 h0/h1 into row 1, and the
            # mirrored relation into the last row
            diag[0] += h[0] * (1.0 + h[0] / h[1])
            upper[0] -= h[0] * h[0] / h[1]
            diag[-1] += h[-1] * (1.0 + h[-1] / h[-2])
            lower[-1] -= h[-1] * h[-1] / h[-2]
        interior = _solve_tridiagonal(lower, diag, upper, rhs)
        m2[1:m] = interior
        if bc == "not-a-knot" and m >= 3:
            m2[0] = m2[1] * (1.0 + h[0] / h[1]) - m2[2] * h[0] / h[1]
            m2[m] = m2[m - 1] * (1.0 + h[-1] / h[-2]) - m2[m - 2] * h[-1] / h[-2]
        return m2

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        seg = np.clip(np.searchsorted(self.x, t, side="right") - 1, 0,
                      self.x.shape[0] - 2)
        h = self.x[seg + 1] - self.x[seg]
        dt = t - self.x[seg]
        m_lo, m_hi = self.m2[seg], self.m2[seg + 1]
        c1 = (self.y[seg + 1] - self.y[seg]) / h - h * (2.0 * m_lo + m_hi) / 6.0
        return (self.y[seg] + c1 * dt + 0.5 * m_lo * dt ** 2
                + (m_hi - m_lo) / (6.0 * h) * dt ** 3)


def continuize(track):
    """Fill unvoiced gaps by cubic interpolation through the voiced frames.

    Leading/trailing unvoiced regions take the nearest voiced value. Gap
    fills are floored at a small positive bound so the result is a valid
    continuous contour.
    """
    vals = track.values
    voiced = np.flatnonzero(vals > 0)
    if voiced.size < 2:
        raise ValueError("continuization needs at least 2 voiced frames")
    out = vals.copy()
    first, last = voiced[0], voiced[-1]
    out[:first] = vals[first]
    out[last + 1:] = vals[last]
    gaps = np.flatnonzero(out == 0.0)
    if gaps.size:
        bc = "not-a-knot" if voiced.size >= 4 else "natural"
        spline = CubicSpline1D(voiced.astype(np.float64), vals[voiced], bc=bc)
        out[gaps] = np.maximum(spline(gaps.astype(np.float64)), _MIN_FILL_HZ)
    return ContinuousContour(out, track.frame_period)


def _state_spans(durations):
    """(phoneme, state, start, length) for every state, in frame order."""
    spans = []
    start = 0
    for p in range(durations.frames.shape[0]):
        for s in range(STATES_PER_PHONEME):
            d = int(durations.frames[p, s])
            spans.append((p, s, start, d))
            start += d
    return spans


def extract_state_f0(contour, durations):
    """Per-state mean log-F0 over each state's frame span.

    Zero-duration states inherit the value of the nearest non-empty state
    within the same phoneme (earlier state on ties).
    """
    if durations.total_frames() != len(contour):
        raise ValueError(
            f"durations cover {durations.total_frames()} frames but the "
            f"contour has {len(contour)}")
    log_vals = np.log(contour.values)
    n = durations.frames.shape[0]
    states = np.full((n, STATES_PER_PHONEME), np.nan)
    for p, s, start, d in _state_spans(durations):
        if d > 0:
            states[p, s] = float(np.mean(log_vals[start:start + d]))
    for p in range(n):
        filled = np.flatnonzero(~np.isnan(states[p]))
        for s in range(STATES_PER_PHONEME):
            if np.isnan(states[p, s]):
                nearest = filled[np.argmin(np.abs(filled - s))]
                states[p, s] = states[p, nearest]
    return StateF0(states)


def spline_expand(states, durations, frame_period=DEFAULT_FRAME_PERIOD):
    """Frame-level contour through the state values (natural cubic spline).

    Each positive-duration state contributes a knot at its span's center
    frame; the spline is evaluated at every frame in log domain and
    exponentiated, so the output length equals the total duration.
    """
    if states.log_hz.shape[0] != durations.frames.shape[0]:
        raise ValueError("states and durations disagree on phoneme count")
    knots_t, knots_v = [], []
    for p, s, start, d in _state_spans(durations):
        if d > 0:
            knots_t.append(start + (d - 1) / 2.0)
            knots_v.append(states.log_hz[p, s])
    if len(knots_t) < 2:
        raise ValueError("spline expansion needs at least 2 positive-duration states")
    spline = CubicSpline1D(np.array(knots_t), np.array(knots_v), bc="natural")
    frames = np.arange(durations.total_frames(), dtype=np.float64)
    return ContinuousContour(np.exp(spline(frames)), frame_period)
