"""Ground-truth generation and received-signal synthesis.

The link is an uplink MIMO channel relayed by a group-connected passive
surface.  During block ``k`` of frame ``i`` the noiseless receive matrix over
the ``slots`` symbol slots is

    Y[i,k] = H @ S @ diag(p_k) @ G_i @ diag(w_k) @ X.T

where ``H`` (rx_antennas x ris_elements) is the static surface-to-receiver
channel, ``S`` is a fixed block-diagonal unitary scattering matrix, ``p_k``
is the unit-modulus per-element rotation applied in block ``k``, ``G_i``
(ris_elements x tx_antennas) is the frame-varying transmitter-to-surface
channel, ``w_k`` is the per-block coding vector and ``X`` (slots x
tx_antennas) holds the transmitted symbols.  Stacking all blocks and frames
gives a fourth-order tensor of shape
(rx_antennas, slots, blocks, frames).

All generators are pure functions of (config, seed).
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .config import SystemConfig
from .tensor_ops import khatri_rao


def psk_alphabet(order: int) -> np.ndarray:
    """Unit-power PSK constellation ``exp(1j*pi*(2m+1)/order)``, m = 0..order-1."""
    m = np.arange(order)
    return np.exp(1j * np.pi * (2 * m + 1) / order)


@dataclass(frozen=True)
class ScatteringDesign:
    """Known receive-side quantities: scattering, rotations, coding.

    ``psi`` combines coding and rotations row-wise: row k is
    ``kron(w_k, p_k)``, so its column count is tx_antennas * ris_elements.
    """

    s: np.ndarray    # ris_elements x ris_elements, block-diagonal unitary
    p: np.ndarray    # blocks x ris_elements, unit-modulus rotations
    w: np.ndarray    # blocks x tx_antennas, coding matrix
    psi: np.ndarray  # blocks x (tx_antennas * ris_elements)


@dataclass(frozen=True)
class ChannelSet:
    """Ground-truth channels: static ``h`` and one ``g`` slice per frame."""

    h: np.ndarray    # rx_antennas x ris_elements
    g: np.ndarray    # frames x ris_elements x tx_antennas

    @cached_property
    def gbar(self) -> np.ndarray:
        """frames x (tx_antennas * ris_elements); row i is vec(g[i])."""
        return np.stack([gi.ravel(order="F") for gi in self.g])


@dataclass(frozen=True)
class SymbolBlock:
    x: np.ndarray          # slots x tx_antennas
    alphabet: np.ndarray
    reference_row: int = 0

    @property
    def reference_value(self) -> complex:
        return complex(self.alphabet[0])


@dataclass(frozen=True)
class ReceivedTensor:
    y: np.ndarray                  # rx_antennas x slots x blocks x frames
    noiseless: np.ndarray | None = None
    achieved_snr_db: float = math.inf


@dataclass(frozen=True)
class TensorViews:
    """The two receiver-facing rearrangements of one received tensor.

    ``z``  - third-order view, (rx_antennas*slots) x blocks x frames; frontal
             slice i stacks vec(Y[i,k]) over k.
    ``q4`` - the received tensor itself, reinterpreted as a fourth-order
             multilinear model with the known structured core ``core``.
    """

    z: np.ndarray
    q4: np.ndarray
    core: np.ndarray


def design_scattering(cfg: SystemConfig, seed: int) -> ScatteringDesign:
    """Draw the known surface/coding design for one scenario.

    The scattering matrix is block-diagonal with unitary DFT blocks of size
    ``group_size``; rotations and coding entries are unit-modulus with random
    phases (or deterministic DFT-style phases when ``phase_design = dft``).
    """
    nbar = cfg.group_size
    block = scipy.linalg.dft(nbar) / math.sqrt(nbar)
    s = scipy.linalg.block_diag(*([block] * cfg.groups)).astype(complex)

    k = cfg.blocks
    n = cfg.ris_elements
    mt = cfg.tx_antennas
    if cfg.phase_design == "dft":
        # Vandermonde phases: row k of psi is then a row of the K-point DFT
        # matrix sampled at column n + m*n_total, full rank by construction.
        kk = np.arange(k)[:, None]
        p = np.exp(-2j * np.pi * kk * np.arange(n)[None, :] / k)
        w = np.exp(-2j * np.pi * kk * (np.arange(mt)[None, :] * n) / k)
    else:
        rng = np.random.default_rng(seed)
        p = np.exp(2j * np.pi * rng.random((k, n)))
        w = np.exp(2j * np.pi * rng.random((k, mt)))

    psi = khatri_rao(w.T, p.T).T

    if np.linalg.norm(s @ s.conj().T - np.eye(n)) > 1e-12 * n:
        raise AssertionError("scattering matrix lost unitarity")
    if np.linalg.matrix_rank(psi) != min(k, mt * n):
        raise AssertionError("combined rotation/coding matrix is rank deficient")
    return ScatteringDesign(s=s, p=p, w=w, psi=psi)


def gen_channels(cfg: SystemConfig, seed: int) -> ChannelSet:
    """Draw ground-truth channels per the configured fading model."""
    rng = np.random.default_rng(seed)
    mr, n, mt, ni = cfg.rx_antennas, cfg.ris_elements, cfg.tx_antennas, cfg.frames
    if cfg.channel_model == "rayleigh":
        h = _cn(rng, (mr, n))
        g = _cn(rng, (ni, n, mt))
    else:
        root = math.isqrt(n)
        if root * root != n:
            raise ValueError(
                "geometric channel model requires ris_elements to be a perfect square"
            )
        h = _geometric(rng, cfg.paths, mr, root)
        g = np.stack([
            _geometric(rng, cfg.paths, mt, root).conj().T for _ in range(ni)
        ])
    return ChannelSet(h=h, g=g)


def _cn(rng, shape):
    """i.i.d. circularly symmetric complex Gaussian entries, unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def _ula(size, angle):
    """Half-wavelength uniform linear array steering vector."""
    return np.exp(1j * np.pi * np.arange(size) * np.sin(angle))


def _upa(root, azimuth, elevation):
    """root x root half-wavelength uniform planar array steering vector."""
    horiz = np.exp(1j * np.pi * np.arange(root) * np.sin(azimuth) * np.sin(elevation))
    vert = np.exp(1j * np.pi * np.arange(root) * np.cos(elevation))
    return np.kron(vert, horiz)  # horizontal index varies fastest


def _geometric(rng, paths, array_size, root):
    """Multipath low-rank channel: linear array x planar surface array."""
    gains = _cn(rng, paths) / math.sqrt(paths)
    h = np.zeros((array_size, root * root), dtype=complex)
    for gain in gains:
        theta = rng.uniform(-np.pi / 2, np.pi / 2)
        az = rng.uniform(-np.pi / 2, np.pi / 2)
        el = rng.uniform(0, np.pi / 2)
        h += gain * np.outer(_ula(array_size, theta), _upa(root, az, el).conj())
    return h


def gen_symbols(cfg: SystemConfig, seed: int) -> SymbolBlock:
    """Draw the symbol matrix; the first row is the known reference vector."""
    rng = np.random.default_rng(seed)
    alphabet = psk_alphabet(cfg.modulation_order)
    idx = rng.integers(0, cfg.modulation_order, size=(cfg.slots, cfg.tx_antennas))
    x = alphabet[idx]
    x[0, :] = alphabet[0]
    return SymbolBlock(x=x, alphabet=alphabet)


def synthesize_received(channels: ChannelSet, design: ScatteringDesign,
                        symbols: SymbolBlock) -> ReceivedTensor:
    """Noiseless received tensor of shape (rx, slots, blocks, frames)."""
    hs = channels.h @ design.s
    if hs.shape[1] != channels.g.shape[1] or channels.g.shape[2] != symbols.x.shape[1]:
        raise ValueError("channel / design / symbol dimensions are inconsistent")
    rotated = np.einsum("rn,kn->krn", hs, design.p)
    mixed = np.einsum("krn,inm->kirm", rotated, channels.g)
    coded = np.einsum("kirm,km->kirm", mixed, design.w)
    y = np.einsum("kirm,tm->rtki", coded, symbols.x)
    return ReceivedTensor(y=y, noiseless=y, achieved_snr_db=math.inf)


def add_noise(received: ReceivedTensor, snr_db: float, seed: int) -> ReceivedTensor:
    """Add white circular Gaussian noise at the requested per-entry SNR.

    The noise variance is set from the Frobenius power of the noiseless
    tensor: ``sigma2 = ||Y||_F^2 / (numel * 10**(snr/10))``.
    """
    if math.isinf(snr_db):
        return received
    y0 = received.y
    signal_power = float(np.linalg.norm(y0) ** 2)
    sigma2 = signal_power / (y0.size * 10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng(seed)
    noise = _cn(rng, y0.shape) * math.sqrt(sigma2)
    achieved = 10.0 * math.log10(signal_power / float(np.linalg.norm(noise) ** 2))
    return ReceivedTensor(
        y=y0 + noise,
        noiseless=received.noiseless,
        achieved_snr_db=achieved,
    )


def build_core(ris_elements: int, tx_antennas: int) -> np.ndarray:
    """Structured core of the fourth-order multilinear view.

    Shape (ris_elements, tx_antennas, d, d) with d = tx_antennas*ris_elements;
    entry (n, m, r, r) is 1 for r = n + m*ris_elements, all else zero.  Its
    [0,1]x[2,3] generalized unfolding is selection_matrix(d).T.
    """
    d = ris_elements * tx_antennas
    core = np.zeros((ris_elements, tx_antennas, d, d), dtype=complex)
    n_idx, m_idx = np.unravel_index(np.arange(d), (ris_elements, tx_antennas), order="F")
    core[n_idx, m_idx, np.arange(d), np.arange(d)] = 1.0
    return core


def reshape_views(received: ReceivedTensor, design: ScatteringDesign) -> TensorViews:
    """Build the two model views a receiver consumes.

    The identity ``unfold_multi(q4, [0,1], [2,3]) == unfold(z, 0)`` (same
    flat data) ties the views together; both equal the stacked per-frame
    block matrices.
    """
    y = received.y
    mr, t, k, ni = y.shape
    z = np.reshape(y, (mr * t, k, ni), order="F")
    n = design.s.shape[0]
    mt = design.psi.shape[1] // n
    return TensorViews(z=z, q4=y, core=build_core(n, mt))


def ambiguity_equivalent(channels: ChannelSet, design: ScatteringDesign,
                         symbols: SymbolBlock,
                         element_scale: np.ndarray,
                         stream_scale: np.ndarray):
    """Rescaled (channels, symbols) that synthesize the *same* received tensor.

    ``element_scale`` (len ris_elements) multiplies the effective channel
    ``H @ S`` column-wise and is compensated inside every ``g`` slice;
    ``stream_scale`` (len tx_antennas) multiplies the symbol columns and is
    compensated the same way.  This is the model's inherent indeterminacy;
    accuracy metrics are therefore only meaningful after column alignment.
    """
    d = np.asarray(element_scale, dtype=complex)
    e = np.asarray(stream_scale, dtype=complex)
    s = design.s
    h = channels.h @ s @ np.diag(d) @ s.conj().T
    g = np.einsum("n,inm,m->inm", 1.0 / d, channels.g, 1.0 / e)
    x = symbols.x * e[None, :]
    return ChannelSet(h=h, g=g), SymbolBlock(x=x, alphabet=symbols.alphabet)
