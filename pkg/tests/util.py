"""Shared helpers for the test suite: instance drawing and loop oracles."""

import numpy as np

from bdris.config import SolverOptions, SystemConfig, derive_seed
from bdris.signal import (
    design_scattering,
    gen_channels,
    gen_symbols,
    synthesize_received,
)


def desk_config(**overrides) -> SystemConfig:
    """Small feasible configuration used across receiver tests."""
    base = dict(tx_antennas=2, rx_antennas=4, ris_elements=4, groups=2,
                blocks=8, slots=4, frames=4, snr_db=(10.0,),
                modulation_order=4, seed=0)
    base.update(overrides)
    return SystemConfig(**base)


def tight_solver(max_iters=500, structure_projection=True) -> SolverOptions:
    return SolverOptions(delta=1e-15, max_iters=max_iters,
                         structure_projection=structure_projection)


def draw_instance(cfg: SystemConfig, seed: int):
    """Deterministic (design, channels, symbols, received) tuple."""
    design = design_scattering(cfg, derive_seed(seed, "design"))
    channels = gen_channels(cfg, derive_seed(seed, "channels"))
    symbols = gen_symbols(cfg, derive_seed(seed, "symbols"))
    received = synthesize_received(channels, design, symbols)
    return design, channels, symbols, received


def loop_oracle(cfg: SystemConfig, design, channels, symbols) -> np.ndarray:
    """Brute-force synthesis: explicit loop over (group, slot, block, frame)."""
    y = np.zeros((cfg.rx_antennas, cfg.slots, cfg.blocks, cfg.frames),
                 dtype=complex)
    nbar = cfg.group_size
    for q in range(cfg.groups):
        sl = slice(q * nbar, (q + 1) * nbar)
        hq = channels.h[:, sl]
        s0q = design.s[sl, sl]
        for i in range(cfg.frames):
            giq = channels.g[i][sl, :]
            for k in range(cfg.blocks):
                m = (hq @ s0q @ np.diag(design.p[k, sl]) @ giq
                     @ np.diag(design.w[k]))
                for t in range(cfg.slots):
                    y[:, t, k, i] += m @ symbols.x[t, :]
    return y


def trilinear_oracle(a, b, c) -> np.ndarray:
    """Explicit rank-one-sum tensor: T[i,j,k] = sum_r a[i,r] b[j,r] c[k,r]."""
    out = np.zeros((a.shape[0], b.shape[0], c.shape[0]), dtype=complex)
    for r in range(a.shape[1]):
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                for k in range(c.shape[0]):
                    out[i, j, k] += a[i, r] * b[j, r] * c[k, r]
    return out


def rel_err(actual, expected) -> float:
    denom = np.linalg.norm(expected)
    if denom == 0:
        return float(np.linalg.norm(actual))
    return float(np.linalg.norm(np.asarray(actual) - np.asarray(expected)) / denom)
