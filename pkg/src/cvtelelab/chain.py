"""Sequential teleporter chains, noise budgets, fidelity laws, and the
entanglement-swapping comparison.

For n identical pure hops at unity gain the chain fidelity has the closed
form 1 / (1 + n e^{-2r}); unequal or impure hops are handled by summing
the per-hop added noise and evaluating the unity-gain fidelity on the
accumulated output variances.  Above a chain fidelity of 1/2 the chain
beats any classical strategy; above 2/3 it beats the no-cloning bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .states import (
    VACUUM_VARIANCE,
    GaussianState,
    SqueezerSpec,
    displace,
    overlap_with_coherent,
    tensor,
    variance_to_db,
)
from .teleport import (
    AddedNoise,
    ShotEnsemble,
    TeleporterConfig,
    _teleport_shots_vectorized,
    bell_measure_on,
    make_epr,
    teleport_analytic,
)
from .streams import block_normals

CLASSICAL_FIDELITY_LIMIT = 0.5
NO_CLONING_FIDELITY_LIMIT = 2.0 / 3.0

DEFAULT_SWAP_GAIN_GRID = np.linspace(0.1, 2.0, 191)


@dataclass(frozen=True)
class ChainSpec:
    """An ordered sequence of teleporter hops."""

    hops: tuple[TeleporterConfig, ...]
    label: str = ""

    def __post_init__(self):
        hops = tuple(self.hops)
        if not hops:
            raise ValueError("a chain needs at least one hop")
        object.__setattr__(self, "hops", hops)

    def __len__(self) -> int:
        return len(self.hops)


@dataclass(frozen=True)
class NoiseBudget:
    """Per-hop and accumulated added noise, with the coherent-input output
    variances (unity gain) in absolute units and in dB above vacuum."""

    per_hop: tuple[AddedNoise, ...]
    totals: AddedNoise
    out_var_x: float
    out_var_p: float
    out_db_x: float
    out_db_p: float


@dataclass(frozen=True)
class FidelityReport:
    """Standalone per-hop fidelities, the end-to-end chain fidelity, and
    its position relative to the classical and no-cloning limits."""

    per_hop_fidelity: tuple[float, ...]
    chain_fidelity: float
    beats_classical: bool
    beats_no_cloning: bool
    classical_margin: float
    no_cloning_margin: float

    @classmethod
    def from_fidelities(
        cls, per_hop: Sequence[float], chain_fidelity: float
    ) -> "FidelityReport":
        return cls(
            per_hop_fidelity=tuple(per_hop),
            chain_fidelity=chain_fidelity,
            beats_classical=chain_fidelity > CLASSICAL_FIDELITY_LIMIT,
            beats_no_cloning=chain_fidelity > NO_CLONING_FIDELITY_LIMIT,
            classical_margin=chain_fidelity - CLASSICAL_FIDELITY_LIMIT,
            no_cloning_margin=chain_fidelity - NO_CLONING_FIDELITY_LIMIT,
        )


class ChainRun(NamedTuple):
    """Result of run_chain: final output, noise budget, fidelity report."""

    output: "GaussianState | ShotEnsemble"
    budget: NoiseBudget
    report: FidelityReport


def sequential_fidelity_ideal(n: int, r: float) -> float:
    """Coherent-state fidelity of n identical pure unity-gain hops:
    1 / (1 + n e^{-2r})."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    return 1.0 / (1.0 + n * math.exp(-2.0 * r))


def accumulate_noise(spec: ChainSpec) -> NoiseBudget:
    """Sum the per-hop added noise and express the coherent-input output
    variances (unity gain) in absolute units and dB."""
    per_hop = tuple(hop.added_noise() for hop in spec.hops)
    total_x = float(sum(h.delta_x for h in per_hop))
    total_p = float(sum(h.delta_p for h in per_hop))
    var_x = VACUUM_VARIANCE + total_x
    var_p = VACUUM_VARIANCE + total_p
    return NoiseBudget(
        per_hop=per_hop,
        totals=AddedNoise(delta_x=total_x, delta_p=total_p),
        out_var_x=var_x,
        out_var_p=var_p,
        out_db_x=variance_to_db(var_x),
        out_db_p=variance_to_db(var_p),
    )


def fidelity_unity_gain(var_x: float, var_p: float) -> float:
    """Coherent-input unity-gain fidelity from the output variances:
    2 / sqrt((1 + 4 Vx)(1 + 4 Vp))."""
    if var_x < 0 or var_p < 0:
        raise ValueError(f"variances must be nonnegative, got ({var_x}, {var_p})")
    return 2.0 / math.sqrt((1.0 + 4.0 * var_x) * (1.0 + 4.0 * var_p))


def run_chain(
    input_state: GaussianState,
    spec: ChainSpec,
    mode: str = "analytic",
    seed: int = 0,
    n_shots: int = 10_000,
) -> ChainRun:
    """Feed the input through every hop in order.

    Per-hop fidelities are each hop's standalone performance on the
    original input; the chain fidelity compares the end-to-end output with
    the coherent state at the input mean.  In shot mode every Monte Carlo
    trajectory is threaded through all hops (hop h draws from stream path
    ``(h,)``) and the chain fidelity is evaluated on the ensemble's
    mixture moments.
    """
    if input_state.num_modes != 1:
        raise ValueError("input must be a single-mode state")
    if mode not in ("analytic", "shots"):
        raise ValueError(f"mode must be 'analytic' or 'shots', got {mode!r}")
    budget = accumulate_noise(spec)
    alpha_x, alpha_p = input_state.mean
    per_hop_f = tuple(
        overlap_with_coherent(teleport_analytic(input_state, hop), alpha_x, alpha_p)
        for hop in spec.hops
    )

    if mode == "analytic":
        state = input_state
        for hop in spec.hops:
            state = teleport_analytic(state, hop)
        chain_f = overlap_with_coherent(state, alpha_x, alpha_p)
        return ChainRun(state, budget, FidelityReport.from_fidelities(per_hop_f, chain_f))

    if n_shots < 1:
        raise ValueError(f"n_shots must be >= 1, got {n_shots}")
    means = np.broadcast_to(input_state.mean, (n_shots, 2)).copy()
    cov = input_state.cov
    ensemble = None
    for h, hop in enumerate(spec.hops):
        z = block_normals(seed, n_shots, 2, path=(h,))
        ensemble = _teleport_shots_vectorized(means, cov, hop, z)
        means, cov = ensemble.means, ensemble.cov
    chain_f = overlap_with_coherent(ensemble.summary_state(), alpha_x, alpha_p)
    return ChainRun(ensemble, budget, FidelityReport.from_fidelities(per_hop_f, chain_f))


def threshold_squeezing(n: int, target_fidelity: float) -> float:
    """Squeezing needed for n identical pure hops to reach the target
    fidelity: r = -ln((1/F - 1)/n) / 2.

    Targets below the zero-squeezing fidelity 1/(1+n) are not attained by
    any r >= 0 and yield math.inf as an unreachable marker.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < target_fidelity < 1.0:
        raise ValueError(f"target fidelity must lie in (0, 1), got {target_fidelity}")
    ratio = (1.0 / target_fidelity - 1.0) / n
    if ratio > 1.0:
        return math.inf
    return max(-0.5 * math.log(ratio), 0.0)


@dataclass(frozen=True)
class SwapScan:
    """Swap-gain scan result over a gain grid."""

    gains: np.ndarray
    fidelities: np.ndarray
    best_gain: float
    best_fidelity: float


def _swap_joint(input_state: GaussianState, r: float) -> GaussianState:
    spec = SqueezerSpec(r=r)
    return tensor(input_state, make_epr(spec, spec), make_epr(spec, spec))


def swap_then_teleport(
    input_state: GaussianState,
    r: float,
    swap_gain: float,
    seed: int = 0,
    mode: str = "analytic",
    n_shots: int = 2_000,
) -> tuple[GaussianState, FidelityReport]:
    """Entanglement swapping followed by teleportation over the swapped pair.

    Two EPR pairs (modes 1-2 and 3-4) are built at squeezing r.  A Bell
    measurement of modes 2 and 3 plus a feedforward with gain ``swap_gain``
    onto mode 4 leaves modes 1 and 4 entangled; the input is then
    teleported over that pair at unity gain.  Analytic mode propagates the
    exact ensemble output; shot mode samples both Bell measurements.
    """
    if input_state.num_modes != 1:
        raise ValueError("input must be a single-mode state")
    if mode not in ("analytic", "shots"):
        raise ValueError(f"mode must be 'analytic' or 'shots', got {mode!r}")
    alpha_x, alpha_p = input_state.mean
    g = swap_gain

    if mode == "analytic":
        joint = _swap_joint(input_state, r)
        # x_out = x_in - x_1 + g (x_2 - x_3) + x_4
        # p_out = p_in + p_1 + g (p_2 + p_3) + p_4
        out_map = np.array(
            [
                [1.0, 0, -1.0, 0, g, 0, -g, 0, 1.0, 0],
                [0, 1.0, 0, 1.0, 0, g, 0, g, 0, 1.0],
            ]
        )
        output = GaussianState(mean=out_map @ joint.mean, cov=out_map @ joint.cov @ out_map.T)
    else:
        if n_shots < 1:
            raise ValueError(f"n_shots must be >= 1, got {n_shots}")
        z = block_normals(seed, n_shots, 4)
        joint = _swap_joint(input_state, r)
        means = np.empty((n_shots, 2))
        outcomes = np.empty((n_shots, 2))
        cov = None
        for i in range(n_shots):
            swap_outcome, rest = bell_measure_on(joint, 2, 3, z[i, :2])
            # feedforward onto mode 4 (index 2 after the measured modes left)
            rest = displace(
                rest,
                2,
                math.sqrt(2.0) * g * swap_outcome.x_u,
                math.sqrt(2.0) * g * swap_outcome.p_v,
            )
            tele_outcome, bob = bell_measure_on(rest, 0, 1, z[i, 2:])
            bob = displace(
                bob,
                0,
                math.sqrt(2.0) * tele_outcome.x_u,
                math.sqrt(2.0) * tele_outcome.p_v,
            )
            means[i] = bob.mean
            outcomes[i] = (tele_outcome.x_u, tele_outcome.p_v)
            cov = bob.cov
        output = ShotEnsemble(means=means, cov=cov, outcomes=outcomes).summary_state()

    fidelity = overlap_with_coherent(output, alpha_x, alpha_p)
    return output, FidelityReport.from_fidelities((), fidelity)


def scan_swap_gain(
    input_state: GaussianState,
    r: float,
    gains: "np.ndarray | None" = None,
    seed: int = 0,
) -> SwapScan:
    """Brute-force swap-gain scan (analytic propagation per grid point)."""
    grid = DEFAULT_SWAP_GAIN_GRID if gains is None else np.asarray(gains, dtype=float)
    if grid.size == 0:
        raise ValueError("gain grid must be nonempty")
    fidelities = np.array(
        [
            swap_then_teleport(input_state, r, float(g), seed=seed)[1].chain_fidelity
            for g in grid
        ]
    )
    best = int(fidelities.argmax())
    return SwapScan(
        gains=grid,
        fidelities=fidelities,
        best_gain=float(grid[best]),
        best_fidelity=float(fidelities[best]),
    )
