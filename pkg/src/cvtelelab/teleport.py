"""One continuous-variable teleporter hop.

EPR resource construction (two squeezed vacua on a symmetric beam
splitter), the sender's Bell measurement x_u = (x_in - x_A)/sqrt(2),
p_v = (p_in + p_A)/sqrt(2), the classical channel with gains (g_x, g_p),
and the receiver's displacement by sqrt(2) * g * (x_u, p_v).

Both an analytic mode (exact covariance propagation of the ensemble
output) and a shot mode (per-sample Bell measurement plus feedforward)
are provided; their statistics agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .states import (
    VACUUM_VARIANCE,
    GaussianState,
    SqueezerSpec,
    beam_splitter,
    beam_splitter_matrix,
    db_to_variance,
    displace,
    homodyne_condition,
    make_squeezed,
    quadrature_marginal,
    tensor,
)
from .streams import block_normals, sample_normals


@dataclass(frozen=True)
class BellOutcome:
    """One measured pair (x_u, p_v)."""

    x_u: float
    p_v: float

    def __post_init__(self):
        if not (math.isfinite(self.x_u) and math.isfinite(self.p_v)):
            raise ValueError("Bell outcomes must be finite")


@dataclass(frozen=True)
class AddedNoise:
    """Residual EPR-correlation variances added by one teleporter hop:
    delta_x = Var(x_A - x_B), delta_p = Var(p_A + p_B)."""

    delta_x: float
    delta_p: float

    def __post_init__(self):
        if self.delta_x < 0 or self.delta_p < 0:
            raise ValueError("added noise variances must be nonnegative")


@dataclass(frozen=True)
class TeleporterConfig:
    """Resource pair plus classical-channel gains for one hop.

    ``squeezer_x`` feeds the x-squeezed port of the EPR beam splitter and
    sets Var(x_A - x_B); ``squeezer_p`` the p-squeezed port and
    Var(p_A + p_B).  Gains default to unity.
    """

    squeezer_x: SqueezerSpec
    squeezer_p: SqueezerSpec
    g_x: float = 1.0
    g_p: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.g_x) and math.isfinite(self.g_p)):
            raise ValueError("gains must be finite")

    @classmethod
    def from_squeezing(
        cls, r: float, excess: float = 1.0, g_x: float = 1.0, g_p: float = 1.0
    ) -> "TeleporterConfig":
        """Symmetric hop: one squeezer spec duplicated for both ports."""
        spec = SqueezerSpec(r=r, excess=excess)
        return cls(squeezer_x=spec, squeezer_p=spec, g_x=g_x, g_p=g_p)

    @classmethod
    def from_output_db(
        cls, db_x: float, db_p: float, g_x: float = 1.0, g_p: float = 1.0
    ) -> "TeleporterConfig":
        """Hop characterized by its measured coherent-input output variances.

        Back-computes the added noise per quadrature as
        delta = 0.25 * (10^(dB/10) - 1) and fits a pure resource squeezer
        reproducing it (the output variances at unity gain do not depend
        on the antisqueezing excess).
        """
        max_db = 10.0 * math.log10(3.0)  # zero-squeezing output: 0.25 + 0.5
        squeezers = []
        for label, db in (("db_x", db_x), ("db_p", db_p)):
            if db < 0:
                raise ValueError(f"{label}: teleported-output dB is >= 0 relative to vacuum")
            if db > max_db:
                raise ValueError(
                    f"{label}: {db} dB exceeds the zero-squeezing output "
                    f"{max_db:.4f} dB; no resource squeezer reproduces it"
                )
            delta = db_to_variance(db) - VACUUM_VARIANCE
            if delta <= 0:
                # 0 dB: ideal hop, infinite squeezing is unrepresentable; use a
                # huge but finite r so delta underflows to 0 within float64.
                squeezers.append(SqueezerSpec(r=400.0))
            else:
                squeezers.append(SqueezerSpec(r=max(-0.5 * math.log(2.0 * delta), 0.0)))
        return cls(squeezer_x=squeezers[0], squeezer_p=squeezers[1], g_x=g_x, g_p=g_p)

    def added_noise(self) -> AddedNoise:
        """Closed form: delta = e^{-2r}/2 per quadrature (one squeezer each)."""
        return AddedNoise(
            delta_x=2.0 * self.squeezer_x.squeezed_variance,
            delta_p=2.0 * self.squeezer_p.squeezed_variance,
        )


def make_epr(squeezer_x: SqueezerSpec, squeezer_p: SqueezerSpec) -> GaussianState:
    """Two-mode squeezed state from two squeezed vacua on a 50/50 splitter.

    Mode 0 is the sender's half (A), mode 1 the receiver's (B), with
    Var(x_A - x_B) = 2 * squeezer_x.squeezed_variance and
    Var(p_A + p_B) = 2 * squeezer_p.squeezed_variance.
    """
    pair = tensor(make_squeezed(squeezer_x, axis="x"), make_squeezed(squeezer_p, axis="p"))
    return beam_splitter(pair, 0, 1, 0.5)


def _draw_quadrature(state: GaussianState, mode: int, phase: float, z: float):
    """Measure one quadrature using the supplied standard-normal draw."""
    marg_mean, marg_var = quadrature_marginal(state, mode, phase)
    outcome = marg_mean + math.sqrt(marg_var) * z
    remainder = homodyne_condition(state, mode, phase, outcome) if state.num_modes > 1 else None
    return outcome, remainder


def bell_measure_on(
    joint: GaussianState, mode_in: int, mode_a: int, z: np.ndarray
) -> tuple[BellOutcome, GaussianState]:
    """Bell measurement of two modes of a joint state, given normal draws.

    Mixes the modes on a 50/50 splitter so that x_u = (x_in - x_a)/sqrt(2)
    appears on the input port and p_v = (p_in + p_a)/sqrt(2) on the other,
    samples both, and returns the outcome with the conditioned remainder.
    """
    mixed = beam_splitter(joint, mode_a, mode_in, 0.5)
    x_u, rest = _draw_quadrature(mixed, mode_in, 0.0, float(z[0]))
    a_index = mode_a - 1 if mode_a > mode_in else mode_a
    p_v, rest = _draw_quadrature(rest, a_index, math.pi / 2.0, float(z[1]))
    return BellOutcome(x_u=x_u, p_v=p_v), rest


def bell_measure(
    input_state: GaussianState,
    epr: GaussianState,
    seed: int,
    index: int = 0,
    path: tuple[int, ...] = (),
) -> tuple[BellOutcome, GaussianState]:
    """Sender's joint measurement of the input mode and her EPR half.

    Returns the outcome pair and the receiver's conditioned single-mode
    state.  Deterministic given (seed, path, index).
    """
    if input_state.num_modes != 1:
        raise ValueError("input must be a single-mode state")
    if epr.num_modes != 2:
        raise ValueError("EPR resource must be a two-mode state")
    z = sample_normals(seed, index, 2, path)
    return bell_measure_on(tensor(input_state, epr), 0, 1, z)


def feedforward(
    bob: GaussianState, outcome: BellOutcome, cfg: TeleporterConfig
) -> GaussianState:
    """Receiver's displacement by sqrt(2) * (g_x x_u, g_p p_v)."""
    return displace(
        bob, 0, math.sqrt(2.0) * cfg.g_x * outcome.x_u, math.sqrt(2.0) * cfg.g_p * outcome.p_v
    )


def teleport_analytic(input_state: GaussianState, cfg: TeleporterConfig) -> GaussianState:
    """Exact ensemble output of one hop.

    Evaluates the Heisenberg relations x_out = g_x x_in - (g_x x_A - x_B),
    p_out = g_p p_in + (g_p p_A + p_B) over the input and the EPR resource:
    the mean scales by (g_x, g_p) and the covariance picks up the resource
    noise, which at unity gain reduces to diag(delta_x, delta_p).
    """
    if input_state.num_modes != 1:
        raise ValueError("input must be a single-mode state")
    gx, gp = cfg.g_x, cfg.g_p
    sqx, sqp = cfg.squeezer_x, cfg.squeezer_p
    # Var(x_B - g x_A) over the EPR state, split into the squeezed and
    # antisqueezed contributions; the antisqueezed term vanishes at g = 1,
    # guarded explicitly so near-ideal resources stay finite.
    noise_x = 0.5 * (1.0 + gx) ** 2 * sqx.squeezed_variance
    if gx != 1.0:
        noise_x += 0.5 * (1.0 - gx) ** 2 * sqp.antisqueezed_variance
    noise_p = 0.5 * (1.0 + gp) ** 2 * sqp.squeezed_variance
    if gp != 1.0:
        noise_p += 0.5 * (1.0 - gp) ** 2 * sqx.antisqueezed_variance
    gain = np.array([gx, gp])
    return GaussianState(
        mean=gain * input_state.mean,
        cov=np.outer(gain, gain) * input_state.cov + np.diag([noise_x, noise_p]),
    )


@dataclass(frozen=True)
class ShotEnsemble:
    """Outputs of a Monte Carlo teleportation run.

    Every shot yields a Gaussian state with the shared conditional
    covariance ``cov`` and its own mean; ``outcomes`` logs the Bell
    measurement results (x_u, p_v) per shot.
    """

    means: np.ndarray  # (n_shots, 2)
    cov: np.ndarray  # (2, 2), identical for every shot
    outcomes: np.ndarray  # (n_shots, 2)

    def __len__(self) -> int:
        return self.means.shape[0]

    def state(self, shot: int) -> GaussianState:
        return GaussianState(mean=self.means[shot], cov=self.cov)

    def outcome(self, shot: int) -> BellOutcome:
        return BellOutcome(x_u=float(self.outcomes[shot, 0]), p_v=float(self.outcomes[shot, 1]))

    def mixture_mean(self) -> np.ndarray:
        return self.means.mean(axis=0)

    def mixture_cov(self) -> np.ndarray:
        """Ensemble covariance: conditional cov + scatter of the means."""
        if len(self) < 2:
            return self.cov.copy()
        return self.cov + np.cov(self.means, rowvar=False, ddof=1)

    def summary_state(self) -> GaussianState:
        """Gaussian state with the ensemble's mixture moments."""
        return GaussianState(mean=self.mixture_mean(), cov=self.mixture_cov())


def _teleport_shots_vectorized(
    in_means: np.ndarray, in_cov: np.ndarray, cfg: TeleporterConfig, z: np.ndarray
) -> ShotEnsemble:
    """Shot loop with the outcome-independent conditioning precomputed.

    Reproduces bell_measure + feedforward per shot: draw x_u from its
    marginal, p_v from its conditional given x_u, then displace the
    receiver's conditioned mode.
    """
    n = in_means.shape[0]
    epr = make_epr(cfg.squeezer_x, cfg.squeezer_p)
    cov6 = np.zeros((6, 6))
    cov6[:2, :2] = in_cov
    cov6[2:, 2:] = epr.cov
    s = beam_splitter_matrix(3, 1, 0, 0.5)
    cov6 = s @ cov6 @ s.T
    means6 = np.zeros((n, 6))
    means6[:, :2] = in_means
    means6 = means6 @ s.T

    iu, iv = 0, 3  # x of the difference port, p of the sum port
    var_u = cov6[iu, iu]
    x_u = means6[:, iu] + math.sqrt(var_u) * z[:, 0]
    c_vu = cov6[iv, iu]
    var_v_cond = cov6[iv, iv] - c_vu**2 / var_u
    p_v = means6[:, iv] + (c_vu / var_u) * (x_u - means6[:, iu]) + math.sqrt(var_v_cond) * z[:, 1]
    outcomes = np.column_stack([x_u, p_v])

    # receiver's mode conditioned jointly on (x_u, p_v)
    meas = [iu, iv]
    bob = [4, 5]
    s_meas = cov6[np.ix_(meas, meas)]
    c_bm = cov6[np.ix_(bob, meas)]
    gain_mat = c_bm @ np.linalg.inv(s_meas)
    bob_cov = cov6[np.ix_(bob, bob)] - gain_mat @ c_bm.T
    bob_means = means6[:, bob] + (outcomes - means6[:, meas]) @ gain_mat.T

    shift = outcomes * (math.sqrt(2.0) * np.array([cfg.g_x, cfg.g_p]))
    return ShotEnsemble(means=bob_means + shift, cov=bob_cov, outcomes=outcomes)


def teleport_shots(
    input_state: GaussianState,
    cfg: TeleporterConfig,
    n_shots: int,
    seed: int,
    path: tuple[int, ...] = (),
) -> ShotEnsemble:
    """Monte Carlo teleportation: Bell measurement + feedforward per shot.

    Shot ``i`` draws from counter block ``i`` of the (seed, path) stream,
    matching ``bell_measure(..., seed, index=i, path=path)`` exactly.
    """
    if input_state.num_modes != 1:
        raise ValueError("input must be a single-mode state")
    if n_shots < 1:
        raise ValueError(f"n_shots must be >= 1, got {n_shots}")
    z = block_normals(seed, n_shots, 2, path)
    in_means = np.broadcast_to(input_state.mean, (n_shots, 2))
    return _teleport_shots_vectorized(np.asarray(in_means), input_state.cov, cfg, z)


def calibrate_gain(
    measured_out_mean: tuple[float, float], in_mean: tuple[float, float]
) -> tuple[float, float]:
    """Componentwise gain estimate <out>/<in>; zero input means are rejected."""
    gains = []
    for label, out_c, in_c in zip("xp", measured_out_mean, in_mean):
        if in_c == 0:
            raise ValueError(f"gain undefined: input mean of {label} quadrature is zero")
        gains.append(out_c / in_c)
    return gains[0], gains[1]
