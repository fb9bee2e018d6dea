"""Gaussian states of optical field modes in the hbar = 1/2 convention.

Quadratures obey [x, p] = i/2, so the vacuum has variance 1/4 in both x
and p; that variance is the 0 dB reference for every noise figure in
this package.  An N-mode state is carried by its mean quadrature vector,
interleaved as (x1, p1, ..., xN, pN), together with the real symmetric
2N x 2N covariance matrix.

All states are immutable; operations are pure functions returning new
states.  Stochastic operations take an explicit seed and are addressed
per sample through :mod:`cvtelelab.streams`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .streams import sample_normals

VACUUM_VARIANCE = 0.25
SYMMETRY_TOL = 1e-10
# Slack on the symplectic-eigenvalue bound, absorbing round-off from
# chained transformations.
PHYSICALITY_SLACK = 1e-9


def variance_to_db(variance: float) -> float:
    """Quadrature variance -> dB relative to the vacuum level 1/4."""
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    return 10.0 * math.log10(variance / VACUUM_VARIANCE)


def db_to_variance(db: float) -> float:
    """dB relative to vacuum -> absolute quadrature variance."""
    return VACUUM_VARIANCE * 10.0 ** (db / 10.0)


def symplectic_form(num_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form for interleaved (x, p) ordering."""
    omega = np.zeros((2 * num_modes, 2 * num_modes))
    for k in range(num_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


@dataclass(frozen=True)
class GaussianState:
    """Mean vector plus covariance matrix of an N-mode Gaussian state."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size == 0 or mean.size % 2 != 0:
            raise ValueError(f"mean must have positive even length, got shape {mean.shape}")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and cov must be finite")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL:
            raise ValueError("cov is not symmetric within tolerance 1e-10")
        mean = mean.copy()
        cov = 0.5 * (cov + cov.T)  # symmetrize residual round-off
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def num_modes(self) -> int:
        return self.mean.size // 2

    def mode_mean(self, mode: int) -> np.ndarray:
        """(x, p) mean of one mode."""
        _check_mode(self, mode)
        return self.mean[2 * mode : 2 * mode + 2]

    def mode_cov(self, mode: int) -> np.ndarray:
        """2x2 covariance block of one mode."""
        _check_mode(self, mode)
        return self.cov[2 * mode : 2 * mode + 2, 2 * mode : 2 * mode + 2]

    def symplectic_eigenvalues(self) -> np.ndarray:
        """Symplectic spectrum; every value is >= 1/4 for a physical state."""
        eigs = np.linalg.eigvals(symplectic_form(self.num_modes) @ self.cov)
        # eigenvalues come in +/- i*nu pairs; keep one of each
        return np.sort(np.abs(eigs.imag))[::2]

    def is_physical(self, slack: float = PHYSICALITY_SLACK) -> bool:
        """Uncertainty-principle check: cov + (i/4) Omega >= 0."""
        return bool(self.symplectic_eigenvalues().min() >= VACUUM_VARIANCE - slack)

    def require_physical(self, slack: float = PHYSICALITY_SLACK) -> "GaussianState":
        if not self.is_physical(slack):
            raise ValueError(
                "state violates the uncertainty principle: min symplectic eigenvalue "
                f"{self.symplectic_eigenvalues().min():.6g} < {VACUUM_VARIANCE}"
            )
        return self


@dataclass(frozen=True)
class SqueezerSpec:
    """Squeezed-vacuum source: squeezing parameter plus antisqueezing excess.

    The squeezed quadrature has variance (1/4) e^{-2r}; the antisqueezed
    one (1/4) e^{+2r} * excess, with excess >= 1 (1 = pure state).
    """

    r: float
    excess: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"squeezing parameter r must be finite and >= 0, got {self.r}")
        if not (math.isfinite(self.excess) and self.excess >= 1.0):
            raise ValueError(f"antisqueezing excess must be >= 1, got {self.excess}")

    @property
    def squeezed_variance(self) -> float:
        return VACUUM_VARIANCE * math.exp(-2.0 * self.r)

    @property
    def antisqueezed_variance(self) -> float:
        return VACUUM_VARIANCE * math.exp(2.0 * self.r) * self.excess


@dataclass(frozen=True)
class HomodyneSample:
    """One homodyne outcome at local-oscillator phase ``phase``.

    Phases are canonically reduced to [0, pi): measuring at theta + pi is
    the same quadrature with flipped sign, so (theta + pi, v) is stored
    as (theta, -v).
    """

    phase: float
    value: float

    def __post_init__(self):
        phase, value = canonical_phase(self.phase, self.value)
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "value", value)


def canonical_phase(phase: float, value: float = 1.0) -> tuple[float, float]:
    """Reduce (phase, value) so the phase lies in [0, pi)."""
    k = math.floor(phase / math.pi)
    reduced = phase - k * math.pi
    if reduced >= math.pi:  # guards the float edge phase/pi = next-to-integer
        reduced -= math.pi
        k += 1
    return reduced, value if k % 2 == 0 else -value


def _check_mode(state: GaussianState, mode: int) -> None:
    if not 0 <= mode < state.num_modes:
        raise ValueError(f"mode index {mode} out of range for {state.num_modes} modes")


# ---------------------------------------------------------------------------
# constructors


def make_vacuum(num_modes: int) -> GaussianState:
    """N-mode vacuum: zero mean, cov = (1/4) I."""
    if num_modes < 1:
        raise ValueError(f"num_modes must be >= 1, got {num_modes}")
    return GaussianState(
        mean=np.zeros(2 * num_modes),
        cov=VACUUM_VARIANCE * np.eye(2 * num_modes),
    )


def make_coherent(alpha_x: float, alpha_p: float) -> GaussianState:
    """Single-mode coherent state: displaced vacuum with Var(x)=Var(p)=1/4."""
    return GaussianState(
        mean=np.array([alpha_x, alpha_p], dtype=float),
        cov=VACUUM_VARIANCE * np.eye(2),
    )


def make_squeezed(spec: SqueezerSpec, axis: str = "x") -> GaussianState:
    """Single-mode squeezed vacuum, squeezed along ``axis`` ('x' or 'p')."""
    if axis not in ("x", "p"):
        raise ValueError(f"axis must be 'x' or 'p', got {axis!r}")
    v_sq = spec.squeezed_variance
    v_anti = spec.antisqueezed_variance
    diag = (v_sq, v_anti) if axis == "x" else (v_anti, v_sq)
    return GaussianState(mean=np.zeros(2), cov=np.diag(diag))


def tensor(*states: GaussianState) -> GaussianState:
    """Product state: concatenated means, block-diagonal covariance."""
    if not states:
        raise ValueError("tensor() needs at least one state")
    mean = np.concatenate([s.mean for s in states])
    cov = np.zeros((mean.size, mean.size))
    offset = 0
    for s in states:
        d = s.mean.size
        cov[offset : offset + d, offset : offset + d] = s.cov
        offset += d
    return GaussianState(mean=mean, cov=cov)


def partial_trace(state: GaussianState, keep: "list[int] | tuple[int, ...]") -> GaussianState:
    """Reduced state of the listed modes, in the listed order."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must list at least one mode")
    for m in keep:
        _check_mode(state, m)
    if len(set(keep)) != len(keep):
        raise ValueError("keep must not repeat modes")
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in keep])
    return GaussianState(mean=state.mean[idx], cov=state.cov[np.ix_(idx, idx)])


# ---------------------------------------------------------------------------
# symplectic transformations


def _apply_symplectic(state: GaussianState, s_matrix: np.ndarray) -> GaussianState:
    return GaussianState(mean=s_matrix @ state.mean, cov=s_matrix @ state.cov @ s_matrix.T)


def beam_splitter_matrix(num_modes: int, mode_a: int, mode_b: int, transmittance: float) -> np.ndarray:
    """Orthogonal symplectic mixing matrix with cos(phi) = sqrt(transmittance).

    Acting on quadratures: x_a' = c x_a + s x_b, x_b' = -s x_a + c x_b
    (identically on p), with c = sqrt(T), s = sqrt(1 - T).
    """
    c = math.sqrt(transmittance)
    s = math.sqrt(1.0 - transmittance)
    m = np.eye(2 * num_modes)
    for off in (0, 1):  # x then p component of each mode
        ia, ib = 2 * mode_a + off, 2 * mode_b + off
        m[ia, ia] = c
        m[ia, ib] = s
        m[ib, ia] = -s
        m[ib, ib] = c
    return m


def beam_splitter(
    state: GaussianState, mode_a: int, mode_b: int, transmittance: float
) -> GaussianState:
    """Mix two modes on a beam splitter of the given power transmittance."""
    _check_mode(state, mode_a)
    _check_mode(state, mode_b)
    if mode_a == mode_b:
        raise ValueError("beam splitter needs two distinct modes")
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
    return _apply_symplectic(
        state, beam_splitter_matrix(state.num_modes, mode_a, mode_b, transmittance)
    )


def rotation_matrix(num_modes: int, mode: int, angle: float) -> np.ndarray:
    """Phase-space rotation of one mode: x' = x cos(a) + p sin(a)."""
    c, s = math.cos(angle), math.sin(angle)
    m = np.eye(2 * num_modes)
    i = 2 * mode
    m[i, i] = c
    m[i, i + 1] = s
    m[i + 1, i] = -s
    m[i + 1, i + 1] = c
    return m


def rotate(state: GaussianState, mode: int, angle: float) -> GaussianState:
    """Rotate one mode in phase space by ``angle`` radians."""
    _check_mode(state, mode)
    return _apply_symplectic(state, rotation_matrix(state.num_modes, mode, angle))


def displace(state: GaussianState, mode: int, dx: float, dp: float) -> GaussianState:
    """Shift one mode's mean by (dx, dp); the covariance is untouched."""
    _check_mode(state, mode)
    mean = state.mean.copy()
    mean[2 * mode] += dx
    mean[2 * mode + 1] += dp
    return GaussianState(mean=mean, cov=state.cov)


# ---------------------------------------------------------------------------
# homodyne measurement


def quadrature_marginal(state: GaussianState, mode: int, phase: float) -> tuple[float, float]:
    """Mean and variance of the quadrature x cos(theta) + p sin(theta)."""
    _check_mode(state, mode)
    u = np.zeros(2 * state.num_modes)
    u[2 * mode] = math.cos(phase)
    u[2 * mode + 1] = math.sin(phase)
    return float(u @ state.mean), float(u @ state.cov @ u)


def homodyne_condition(
    state: GaussianState, mode: int, phase: float, outcome: float
) -> GaussianState:
    """State of the remaining modes after measuring one quadrature.

    The mean is updated by linear regression onto the measured quadrature
    and the covariance by the Schur complement of its variance; the
    measured mode is removed.  Requires at least two modes.
    """
    _check_mode(state, mode)
    if state.num_modes < 2:
        raise ValueError("conditioning needs a nonempty remaining system")
    rotated = rotate(state, mode, phase)  # x of `mode` is now the measured quadrature
    i = 2 * mode
    keep = [k for k in range(2 * state.num_modes) if k not in (i, i + 1)]
    var = rotated.cov[i, i]
    if var <= 0.0:
        raise ValueError(f"measured quadrature variance must be positive, got {var}")
    cross = rotated.cov[keep, i]
    mean = rotated.mean[keep] + cross * (outcome - rotated.mean[i]) / var
    cov = rotated.cov[np.ix_(keep, keep)] - np.outer(cross, cross) / var
    return GaussianState(mean=mean, cov=cov)


def homodyne_sample(
    state: GaussianState,
    mode: int,
    phase: float,
    seed: int,
    index: int = 0,
    path: tuple[int, ...] = (),
) -> "tuple[HomodyneSample, GaussianState | None]":
    """Draw one homodyne outcome and return the conditioned remainder.

    The outcome comes from the normal marginal of the measured quadrature;
    the draw is addressed by (seed, path, index) and is reproducible in
    isolation.  Measuring the last remaining mode returns None in place of
    the remainder state.
    """
    phase, _ = canonical_phase(phase)
    marg_mean, marg_var = quadrature_marginal(state, mode, phase)
    if marg_var <= 0.0:
        raise ValueError(f"measured quadrature variance must be positive, got {marg_var}")
    z = sample_normals(seed, index, 1, path)[0]
    outcome = marg_mean + math.sqrt(marg_var) * z
    remainder = (
        homodyne_condition(state, mode, phase, outcome) if state.num_modes > 1 else None
    )
    return HomodyneSample(phase=phase, value=outcome), remainder


# ---------------------------------------------------------------------------
# phase-space functions


def wigner_analytic(state: GaussianState, x, p):
    """Wigner function of a single-mode Gaussian state at (x, p).

    W(x, p) = exp(-(1/2) d^T S^{-1} d) / (2 pi sqrt(det S)) with
    d = (x, p) - mean; normalized so the full plane integrates to 1.
    Accepts scalars or broadcastable arrays.
    """
    if state.num_modes != 1:
        raise ValueError("wigner_analytic expects a single-mode state")
    cov = state.cov
    det = float(np.linalg.det(cov))
    if det <= 0.0:
        raise ValueError("covariance matrix is singular")
    inv = np.linalg.inv(cov)
    dx = np.asarray(x, dtype=float) - state.mean[0]
    dp = np.asarray(p, dtype=float) - state.mean[1]
    quad = inv[0, 0] * dx * dx + 2.0 * inv[0, 1] * dx * dp + inv[1, 1] * dp * dp
    w = np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))
    return float(w) if np.isscalar(x) and np.isscalar(p) else w


def overlap_with_coherent(state: GaussianState, alpha_x: float, alpha_p: float) -> float:
    """Fidelity of a single-mode Gaussian state with the coherent state at
    mean (alpha_x, alpha_p):

    F = exp(-(1/2) d^T (S + I/4)^{-1} d) / (2 sqrt(det(S + I/4))),
    d = mean - (alpha_x, alpha_p).
    """
    if state.num_modes != 1:
        raise ValueError("overlap_with_coherent expects a single-mode state")
    state.require_physical()
    total = state.cov + VACUUM_VARIANCE * np.eye(2)
    det = float(np.linalg.det(total))
    delta = state.mean - np.array([alpha_x, alpha_p])
    quad = float(delta @ np.linalg.inv(total) @ delta)
    return math.exp(-0.5 * quad) / (2.0 * math.sqrt(det))
