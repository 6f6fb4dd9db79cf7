"""Shock application and contagion propagation.

Three propagation models over a shocked network:

* ``linear``: relative equity losses spread through the interbank leverage
  matrix, accumulating bounded stress h in [0, 1] (first differences of the
  borrowers' stress scaled by the creditor's leverage on them).
* ``threshold``: a default cascade; a bank defaults once credit losses from
  defaulted counterparties reach its remaining buffer, iterated to the least
  fixed point.
* ``hybrid``: linear dynamics plus a lump loss-given-default write-off hitting
  creditors whenever a bank's stress reaches 1.

Leverage is always computed against the buffers of the network the shock was
applied to and frozen for the whole propagation.  Losses are tracked in
currency for the hybrid model so write-down lumps can overshoot a buffer;
stress is the capped ratio of loss to original buffer.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from .network import FinancialNetwork, recompute_marginals

MODELS = ("threshold", "linear", "hybrid")


@dataclass(frozen=True)
class ShockSpec:
    """Parameterized initial shock.

    ``magnitude`` is the fraction of each target's capital buffer destroyed
    when ``magnitude_kind`` is ``"fraction"`` (must lie in (0, 1]), or an
    absolute currency amount per target when it is ``"absolute"``.
    """

    model: str = "linear"
    targets: tuple[str, ...] | str = "all"
    magnitude: float = 1.0
    magnitude_kind: str = "fraction"  # fraction | absolute
    lgd: float = 1.0
    max_rounds: int = 1000
    epsilon: float = 1e-10
    seed: int = 0  # reserved

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.magnitude_kind not in ("fraction", "absolute"):
            raise ValueError(f"unknown magnitude kind {self.magnitude_kind!r}")
        if self.magnitude_kind == "fraction" and not (0.0 < self.magnitude <= 1.0):
            raise ValueError(f"fractional magnitude must be in (0, 1], got {self.magnitude}")
        if self.magnitude_kind == "absolute" and self.magnitude <= 0.0:
            raise ValueError("absolute magnitude must be positive")
        if not (0.0 <= self.lgd <= 1.0):
            raise ValueError(f"lgd must be in [0, 1], got {self.lgd}")
        if self.targets != "all":
            object.__setattr__(self, "targets", tuple(self.targets))

    def target_indices(self, net: FinancialNetwork) -> list[int]:
        if self.targets == "all":
            return list(range(net.n))
        return [net.index_of(t) for t in self.targets]

    def drop_targets(self, gone: set[str]) -> "ShockSpec":
        """Remove intervened-away banks from the target set."""
        if self.targets == "all":
            return self
        kept = tuple(t for t in self.targets if t not in gone)
        return replace(self, targets=kept)


@dataclass(frozen=True)
class InitialState:
    """Round-1 state produced by :func:`apply_initial_shock`."""

    h1: NDArray[np.float64]          # initial relative stress per bank
    initial_losses: NDArray[np.float64]  # currency destroyed per bank
    buffers_after: NDArray[np.float64]
    fully_shocked: NDArray[np.bool_]  # targets hit with the full fraction
    warnings: tuple[str, ...] = ()


@dataclass
class PropagationResult:
    rounds: int
    stress_trajectory: NDArray[np.float64]  # (rounds, n), h per round
    final_stress: NDArray[np.float64]
    losses: NDArray[np.float64]
    defaulted: NDArray[np.bool_]
    additional_defaults: NDArray[np.int_]
    converged: bool
    model: str
    lgd: float = 1.0
    warnings: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.final_stress.shape[0]


def apply_initial_shock(net: FinancialNetwork, spec: ShockSpec) -> InitialState:
    """Destroy part of the targets' buffers and record round-1 stress."""
    idx = spec.target_indices(net)
    n = net.n
    buffers = net.buffers()
    h1 = np.zeros(n)
    losses = np.zeros(n)
    fully = np.zeros(n, dtype=bool)
    warnings: list[str] = []
    for i in idx:
        b = buffers[i]
        if spec.magnitude_kind == "fraction":
            phi = spec.magnitude
            h1[i] = phi
            losses[i] = phi * b
            fully[i] = phi == 1.0
        else:
            hit = min(spec.magnitude, b)
            losses[i] = hit
            if b > 0:
                h1[i] = hit / b
            else:
                h1[i] = 1.0
                warnings.append(f"bank {net.banks[i].id}: absolute shock on zero buffer")
            fully[i] = h1[i] >= 1.0
    return InitialState(
        h1=h1,
        initial_losses=losses,
        buffers_after=buffers - losses,
        fully_shocked=fully,
        warnings=tuple(warnings),
    )


def _leverage(net: FinancialNetwork) -> tuple[NDArray[np.float64], list[str]]:
    """Lambda[i, j] = exposure(i -> j) / buffer_i against the pre-shock buffers.

    A zero-buffer bank with incident exposure has undefined leverage; it is
    treated as immediately fully distressed instead (flagged by caller).
    """
    buffers = net.buffers()
    e = net.exposures
    warnings = []
    lam = np.zeros_like(e)
    pos = buffers > 0
    lam[pos, :] = e[pos, :] / buffers[pos, None]
    for i in np.flatnonzero(~pos):
        if e[i, :].sum() > 0:
            warnings.append(
                f"bank {net.banks[i].id}: zero buffer with incident exposure; "
                "treated as immediately fully distressed"
            )
    return lam, warnings


def propagate_linear(
    net: FinancialNetwork, state: InitialState, spec: ShockSpec
) -> PropagationResult:
    """Stress propagation through the leverage matrix (first differences)."""
    n = net.n
    buffers = net.buffers()
    lam, lam_warnings = _leverage(net)
    zero_buf_exposed = (buffers <= 0) & (net.exposures.sum(axis=1) > 0)

    h_prev = np.zeros(n)
    h = state.h1.copy()
    h[zero_buf_exposed & (h > 0)] = 1.0
    trajectory = [h.copy()]
    converged = False
    rounds = 1
    for _ in range(spec.max_rounds):
        delta = h - h_prev
        h_next = np.minimum(1.0, h + lam @ delta)
        # Zero-buffer banks jump straight to full distress on any incoming
        # stress (leverage against a zero buffer is undefined).
        hit = zero_buf_exposed & ((net.exposures @ delta) > 0)
        h_next[hit] = 1.0
        if np.max(np.abs(h_next - h), initial=0.0) < spec.epsilon:
            converged = True
            break
        h_prev, h = h, h_next
        trajectory.append(h.copy())
        rounds += 1
    final = trajectory[-1]
    losses = final * buffers
    defaulted = final >= 1.0
    return PropagationResult(
        rounds=rounds,
        stress_trajectory=np.array(trajectory),
        final_stress=final,
        losses=losses,
        defaulted=defaulted,
        additional_defaults=counterfactual_defaults(net, spec),
        converged=converged,
        model="linear",
        lgd=spec.lgd,
        warnings=state.warnings + tuple(lam_warnings),
    )


def _threshold_cascade(
    exposures: NDArray[np.float64],
    buffers: NDArray[np.float64],
    initial_losses: NDArray[np.float64],
    seed_defaults: NDArray[np.bool_],
    lgd: float,
    max_rounds: int,
) -> tuple[NDArray[np.bool_], NDArray[np.float64], list[NDArray[np.float64]], int, bool]:
    """Iterate the default set to its least fixed point.

    Returns (defaulted, losses, per-round stress snapshots, rounds, converged).
    Losses are initial losses plus lgd-weighted exposure to defaulted banks.
    """
    n = buffers.shape[0]
    defaulted = seed_defaults.copy()
    rounds = 1
    converged = False

    def losses_for(dset: NDArray[np.bool_]) -> NDArray[np.float64]:
        return initial_losses + lgd * exposures[:, dset].sum(axis=1)

    def stress_for(losses: NDArray[np.float64], dset: NDArray[np.bool_]) -> NDArray[np.float64]:
        h = np.where(buffers > 0, np.minimum(1.0, losses / np.where(buffers > 0, buffers, 1.0)), 0.0)
        h[(buffers <= 0) & (losses > 0)] = 1.0
        h[dset] = 1.0
        return h

    losses = losses_for(defaulted)
    snapshots = [stress_for(losses, defaulted)]
    for _ in range(max_rounds):
        losses = losses_for(defaulted)
        new = defaulted | ((losses >= buffers) & (losses > 0)) | (seed_defaults)
        if (new == defaulted).all():
            converged = True
            break
        defaulted = new
        rounds += 1
        snapshots.append(stress_for(losses_for(defaulted), defaulted))
    losses = losses_for(defaulted)
    snapshots[-1] = stress_for(losses, defaulted)
    return defaulted, losses, snapshots, rounds, converged


def propagate_threshold(
    net: FinancialNetwork, state: InitialState, spec: ShockSpec
) -> PropagationResult:
    """Furfine-style default cascade to the least fixed point."""
    buffers = net.buffers()
    seeds = state.fully_shocked | ((buffers <= 0) & (state.initial_losses > 0)) | (
        (buffers <= 0) & (state.h1 >= 1.0)
    )
    defaulted, losses, snapshots, rounds, converged = _threshold_cascade(
        net.exposures, buffers, state.initial_losses, seeds, spec.lgd, spec.max_rounds
    )
    return PropagationResult(
        rounds=rounds,
        stress_trajectory=np.array(snapshots),
        final_stress=snapshots[-1],
        losses=losses,
        defaulted=defaulted,
        additional_defaults=counterfactual_defaults(net, spec),
        converged=converged,
        model="threshold",
        lgd=spec.lgd,
        warnings=state.warnings,
    )


def propagate_hybrid(
    net: FinancialNetwork, state: InitialState, spec: ShockSpec
) -> PropagationResult:
    """Linear dynamics with a lump lgd write-off when a bank's stress hits 1.

    Currency losses can overshoot a buffer (the overshoot encodes insolvency
    depth); stress stays capped at 1.
    """
    n = net.n
    buffers = net.buffers()
    lam, lam_warnings = _leverage(net)
    e = net.exposures
    zero_buf_exposed = (buffers <= 0) & (e.sum(axis=1) > 0)

    losses = state.initial_losses.copy()

    def stress(losses_vec: NDArray[np.float64]) -> NDArray[np.float64]:
        h = np.where(buffers > 0, np.minimum(1.0, losses_vec / np.where(buffers > 0, buffers, 1.0)), 0.0)
        h[(buffers <= 0) & (losses_vec > 0)] = 1.0
        return h

    h_prev = np.zeros(n)
    h = np.maximum(stress(losses), state.h1)
    h[zero_buf_exposed & (state.h1 > 0)] = 1.0
    defaulted = h >= 1.0
    charged = np.zeros(n, dtype=bool)  # banks whose default lump already hit creditors
    trajectory = [h.copy()]
    converged = False
    rounds = 1
    for _ in range(spec.max_rounds):
        delta = h - h_prev
        new_defaults = defaulted & ~charged
        losses_next = losses + buffers * (lam @ delta)
        if new_defaults.any():
            losses_next = losses_next + spec.lgd * e[:, new_defaults].sum(axis=1)
            charged |= new_defaults
        h_next = np.maximum(h, stress(losses_next))  # monotone: stress never decreases
        hit = zero_buf_exposed & ((e @ delta) > 0)
        h_next[hit] = 1.0
        losses = losses_next
        if np.max(np.abs(h_next - h), initial=0.0) < spec.epsilon and not (
            (h_next >= 1.0) & ~charged
        ).any():
            converged = True
            break
        h_prev = h
        h = h_next
        defaulted = h >= 1.0
        trajectory.append(h.copy())
        rounds += 1
    return PropagationResult(
        rounds=rounds,
        stress_trajectory=np.array(trajectory),
        final_stress=trajectory[-1],
        losses=losses,
        defaulted=defaulted,
        additional_defaults=counterfactual_defaults(net, spec),
        converged=converged,
        model="hybrid",
        lgd=spec.lgd,
        warnings=state.warnings + tuple(lam_warnings),
    )


def propagate(net: FinancialNetwork, spec: ShockSpec) -> PropagationResult:
    """Apply the initial shock and run the configured model."""
    state = apply_initial_shock(net, spec)
    if spec.model == "linear":
        return propagate_linear(net, state, spec)
    if spec.model == "threshold":
        return propagate_threshold(net, state, spec)
    return propagate_hybrid(net, state, spec)


def counterfactual_defaults(net: FinancialNetwork, spec: ShockSpec) -> NDArray[np.int_]:
    """Downstream defaults attributable to each bank.

    For every bank, run a single-seed threshold cascade (full buffer wipeout
    of that bank alone) and count the other banks that default.
    """
    n = net.n
    buffers = net.buffers()
    e = net.exposures
    out = np.zeros(n, dtype=np.int_)
    for i in range(n):
        seeds = np.zeros(n, dtype=bool)
        seeds[i] = True
        initial_losses = np.zeros(n)
        initial_losses[i] = buffers[i]
        defaulted, _, _, _, _ = _threshold_cascade(
            e, buffers, initial_losses, seeds, spec.lgd, spec.max_rounds
        )
        out[i] = int(defaulted.sum()) - 1
    return out


def settle_network(
    net: FinancialNetwork, result: PropagationResult, stage_tag: str = "FN_s"
) -> FinancialNetwork:
    """Book the propagation outcome into a new network snapshot.

    Buffers absorb the losses (and may go negative); defaulted banks'
    outstanding debt is written down by lgd on their creditors' exposure
    rows; marginals are refreshed.
    """
    if result.n != net.n:
        raise ValueError("result does not match network size")
    buffers = net.buffers() - result.losses
    exposures = np.array(net.exposures)
    if result.defaulted.any():
        write_down = 1.0 - _result_lgd(result)
        exposures[:, result.defaulted] *= write_down
    banks = tuple(
        replace(b, capital_buffer=float(buffers[i])) for i, b in enumerate(net.banks)
    )
    settled = FinancialNetwork(banks=banks, exposures=exposures, stage_tag=stage_tag)
    return recompute_marginals(settled)


def _result_lgd(result: PropagationResult) -> float:
    return getattr(result, "lgd", 1.0)


def run_shock(
    net: FinancialNetwork, spec: ShockSpec, stage_tag: str = "FN_s"
) -> tuple[PropagationResult, FinancialNetwork]:
    """Propagate and settle in one step; returns (result, settled network)."""
    result = propagate(net, spec)
    result.lgd = spec.lgd  # carried for the settle write-down
    settled = settle_network(net, result, stage_tag=stage_tag)
    return result, settled


def result_to_csv(net: FinancialNetwork, result: PropagationResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bank_id", "h_star", "loss", "defaulted", "additional_defaults"])
    for i, b in enumerate(net.banks):
        writer.writerow(
            [
                b.id,
                repr(float(result.final_stress[i])),
                repr(float(result.losses[i])),
                int(result.defaulted[i]),
                int(result.additional_defaults[i]),
            ]
        )
    return buf.getvalue()
