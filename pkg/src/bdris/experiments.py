"""Seeded Monte-Carlo harness: ambiguity-aware NMSE and SER across SNR grids.

Per trial: derive seeds -> draw design/channels/symbols -> synthesize ->
add noise -> run receiver -> resolve ambiguities -> score.  Channel accuracy
is scored after per-column alignment, which is where the model's inherent
column-scale indeterminacies live; for the static channel the alignment is
done on the effective channel ``H @ S`` (the unitary ``S`` preserves the
Frobenius geometry, and the indeterminacy is a column scale exactly there).

Scenario randomness (channels, symbols, design, noise) is derived from
(master seed, snr index, trial index) only, so competing receivers see the
same data; receiver-specific randomness (iterate initialization) also mixes
in the receiver name.
"""

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import SystemConfig, derive_seed
from .errors import IdentifiabilityError, NumericalError, ScalingResolutionError
from .identifiability import check_feasible
from .receivers import (
    RECEIVER_NAMES,
    RESERVED_RECEIVER_NAMES,
    ReceiverOutput,
    hard_decisions,
    pakron,
    tucker,
    zf_perfect_csi,
)
from .signal import (
    SymbolBlock,
    add_noise,
    design_scattering,
    gen_channels,
    gen_symbols,
    synthesize_received,
)

TRIAL_CSV_HEADER = ("seed", "snr_db", "receiver", "nmse_h", "nmse_g", "ser",
                    "iters", "wall_ms")


def nmse_aligned(truth, estimate, mode="per-column") -> float:
    """Normalized squared error after least-squares scale alignment.

    ``per-column`` fits one complex scale per column, ``global`` a single
    scale for the whole matrix, then returns
    ``||truth - scale*estimate||_F^2 / ||truth||_F^2``.
    """
    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {estimate.shape}")
    tnorm2 = float(np.linalg.norm(truth) ** 2)
    if tnorm2 == 0.0:
        raise ValueError("truth matrix has zero norm")
    if mode == "per-column":
        denom = np.sum(np.abs(estimate) ** 2, axis=0)
        numer = np.sum(estimate.conj() * truth, axis=0)
        alpha = np.divide(numer, denom, out=np.zeros_like(numer), where=denom > 0)
        aligned = estimate * alpha[None, :]
    elif mode == "global":
        denom = float(np.sum(np.abs(estimate) ** 2))
        alpha = np.sum(estimate.conj() * truth) / denom if denom > 0 else 0.0
        aligned = estimate * alpha
    else:
        raise ValueError(f"unknown alignment mode: {mode}")
    return float(np.linalg.norm(truth - aligned) ** 2) / tnorm2


def ser(symbols: SymbolBlock, detected) -> float:
    """Fraction of wrongly decided data symbols (reference row excluded)."""
    detected = np.asarray(detected)
    if detected.shape != symbols.x.shape:
        raise ValueError("detected matrix shape differs from transmitted block")
    keep = [r for r in range(symbols.x.shape[0]) if r != symbols.reference_row]
    tx_idx = hard_decisions(symbols.x[keep], symbols.alphabet)
    rx_idx = hard_decisions(detected[keep], symbols.alphabet)
    return float(np.mean(tx_idx != rx_idx))


@dataclass(frozen=True)
class TrialResult:
    seed: int
    snr_db: float
    receiver: str
    nmse_h: float
    nmse_g: float
    ser: float
    iterations: int
    wall_ms: float


@dataclass(frozen=True)
class TrialFailure:
    seed: int
    snr_db: float
    receiver: str
    error: str


@dataclass
class SweepReport:
    config: dict
    receivers: list
    runs: int
    master_seed: int
    noiseless: bool
    cells: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": json_safe(self.config),
            "receivers": list(self.receivers),
            "runs": self.runs,
            "master_seed": self.master_seed,
            "noiseless": self.noiseless,
            "cells": json_safe(self.cells),
        }


def json_safe(obj):
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def run_trial(cfg: SystemConfig, receiver: str, snr_db: float,
              snr_index: int = 0, trial_index: int = 0,
              master_seed: int | None = None, noiseless: bool = False):
    """One seeded end-to-end trial; returns a TrialResult."""
    if receiver in RESERVED_RECEIVER_NAMES:
        raise NotImplementedError(f"receiver {receiver!r} is reserved but not implemented")
    if receiver not in RECEIVER_NAMES:
        raise ValueError(f"unknown receiver {receiver!r}; choose from {RECEIVER_NAMES}")
    master = cfg.seed if master_seed is None else master_seed
    scenario_seed = derive_seed(master, "scenario", snr_index, trial_index)
    design = design_scattering(cfg, derive_seed(scenario_seed, "design"))
    channels = gen_channels(cfg, derive_seed(scenario_seed, "channels"))
    symbols = gen_symbols(cfg, derive_seed(scenario_seed, "symbols"))
    received = synthesize_received(channels, design, symbols)
    if not noiseless:
        received = add_noise(received, snr_db, derive_seed(scenario_seed, "noise"))
    init_seed = derive_seed(master, "init", receiver, snr_index, trial_index,
                            cfg.solver.init_seed)

    if receiver == "zf-oracle":
        t0 = time.perf_counter()
        x_hat = zf_perfect_csi(received, channels, design, cfg.solver.pinv_tol)
        wall = time.perf_counter() - t0
        detected = symbols.alphabet[hard_decisions(x_hat, symbols.alphabet)]
        return TrialResult(
            seed=scenario_seed, snr_db=snr_db, receiver=receiver,
            nmse_h=0.0, nmse_g=0.0, ser=ser(symbols, detected),
            iterations=0, wall_ms=wall * 1e3)

    run = pakron if receiver == "pakron" else tucker
    out: ReceiverOutput = run(received, design, symbols.alphabet,
                              cfg.solver, init_seed)
    hs_true = channels.h @ design.s
    return TrialResult(
        seed=scenario_seed,
        snr_db=snr_db,
        receiver=receiver,
        nmse_h=nmse_aligned(hs_true, out.hs_hat, "per-column"),
        nmse_g=nmse_aligned(channels.gbar, out.gbar_hat, "per-column"),
        ser=ser(symbols, out.x_detected),
        iterations=out.iterations,
        wall_ms=out.wall_time * 1e3,
    )


def _trial_task(args):
    cfg, receiver, snr_db, snr_index, trial_index, master_seed, noiseless = args
    try:
        return run_trial(cfg, receiver, snr_db, snr_index, trial_index,
                         master_seed, noiseless)
    except (ScalingResolutionError, NumericalError, IdentifiabilityError,
            np.linalg.LinAlgError) as err:
        seed = derive_seed(cfg.seed if master_seed is None else master_seed,
                           "scenario", snr_index, trial_index)
        return TrialFailure(seed=seed, snr_db=snr_db, receiver=receiver,
                            error=f"{type(err).__name__}: {err}")


def run_sweep(cfg: SystemConfig, receivers, runs: int, jobs: int = 1,
              noiseless: bool = False, force: bool = False,
              master_seed: int | None = None):
    """Run the full (snr x receiver x trial) grid.

    Returns ``(trials, report)`` where ``trials`` preserves the task order
    (snr index, receiver, trial index) and includes failures.  Identifiability
    is checked up front for every requested receiver unless ``force``.
    """
    receivers = list(receivers)
    if not receivers:
        raise ValueError("at least one receiver is required")
    if len(set(receivers)) != len(receivers):
        raise ValueError("duplicate receiver names")
    if not force:
        for rx in receivers:
            check_feasible(cfg, rx)
    snrs = [math.inf] if noiseless else list(cfg.snr_db)
    tasks = [
        (cfg, rx, snr, si, r, master_seed, noiseless)
        for si, snr in enumerate(snrs)
        for rx in receivers
        for r in range(runs)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trials = list(pool.map(_trial_task, tasks, chunksize=8))
    else:
        trials = [_trial_task(t) for t in tasks]

    report = SweepReport(
        config=cfg.to_mapping(),
        receivers=receivers,
        runs=runs,
        master_seed=cfg.seed if master_seed is None else master_seed,
        noiseless=noiseless,
    )
    for si, snr in enumerate(snrs):
        for ri, rx in enumerate(receivers):
            start = (si * len(receivers) + ri) * runs
            report.cells.append(_aggregate_cell(snr, rx, trials[start:start + runs]))
    return trials, report


def _aggregate_cell(snr_db, receiver, cell_trials) -> dict:
    ok = [t for t in cell_trials if isinstance(t, TrialResult)]
    cell = {
        "snr_db": snr_db,
        "receiver": receiver,
        "runs_completed": len(ok),
        "failures": len(cell_trials) - len(ok),
    }
    if ok:
        for name in ("nmse_h", "nmse_g", "ser"):
            vals = np.array([getattr(t, name) for t in ok])
            cell[f"{name}_mean"] = float(vals.mean())
            cell[f"{name}_median"] = float(np.median(vals))
        cell["iterations_mean"] = float(np.mean([t.iterations for t in ok]))
        cell["wall_ms_mean"] = float(np.mean([t.wall_ms for t in ok]))
    return cell


def write_trials_csv(path, trials) -> None:
    """Persist per-trial rows (failures are skipped; see the report JSON)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_CSV_HEADER)
        for t in trials:
            if isinstance(t, TrialResult):
                writer.writerow([t.seed, t.snr_db, t.receiver, t.nmse_h,
                                 t.nmse_g, t.ser, t.iterations, t.wall_ms])


def read_trials_csv(path):
    """Load per-trial rows back as TrialResult objects."""
    out = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(TrialResult(
                seed=int(row["seed"]), snr_db=float(row["snr_db"]),
                receiver=row["receiver"], nmse_h=float(row["nmse_h"]),
                nmse_g=float(row["nmse_g"]), ser=float(row["ser"]),
                iterations=int(row["iters"]), wall_ms=float(row["wall_ms"])))
    return out


def trial_to_dict(trial) -> dict:
    return json_safe(asdict(trial))
