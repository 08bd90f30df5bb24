"""Semi-blind estimation of (channel pair, symbols) from the received tensor.

Two receivers consume the views produced by :func:`bdris.signal.reshape_views`:

* ``pakron``  - two stages.  Stage I runs bilinear alternating least squares
  on the third-order view to estimate the mixed factor
  ``omega = kron(X, H @ S)`` together with the stacked per-frame channel.
  Stage II splits ``omega`` by an SVD rank-1 factorization of its Kronecker
  rearrangement.
* ``tucker``  - single stage.  Trilinear alternating least squares on the
  fourth-order view with its known structured core, jointly updating
  ``H @ S``, ``X`` and the stacked per-frame channel.

Both inherit the model's indeterminacies: a per-stream scale on the symbol
columns (pinned by the known reference row, see ``resolve_and_detect``) and a
per-element column scale on ``H @ S`` compensated inside the stacked channel
(left to evaluation-time column alignment).

A zero-forcing oracle with perfect channel knowledge is included as a symbol
detection baseline.
"""

import time
from dataclasses import dataclass, replace

import numpy as np

from .config import SolverOptions
from .errors import IdentifiabilityError, ScalingResolutionError
from .signal import ChannelSet, ReceivedTensor, ScatteringDesign, build_core, reshape_views
from .tensor_ops import (
    best_rank1,
    khatri_rao,
    kron,
    kron_rearrange,
    nearest_kronecker,
    pinv,
    unfold,
    unvec,
)

RECEIVER_NAMES = ("pakron", "tucker", "zf-oracle")
RESERVED_RECEIVER_NAMES = ("hybrid",)  # pakron-initialized tucker; not implemented


@dataclass(frozen=True)
class ReceiverOutput:
    h_hat: np.ndarray | None      # rx_antennas x ris_elements
    hs_hat: np.ndarray | None     # effective channel H @ S (same shape)
    gbar_hat: np.ndarray | None   # frames x (tx_antennas * ris_elements)
    x_hat: np.ndarray             # slots x tx_antennas, soft symbol estimates
    x_detected: np.ndarray | None
    iterations: int
    residual_trajectory: tuple    # normalized reconstruction error per sweep
    converged: bool
    final_fit: float              # error of the returned factors
    wall_time: float = 0.0


@dataclass(frozen=True)
class StageOneResult:
    omega: np.ndarray             # (slots*rx) x (tx*ris) mixed factor
    gbar: np.ndarray
    trajectory: tuple
    iterations: int
    converged: bool
    fit: float


def _require(name, lhs, rhs):
    if lhs < rhs:
        raise IdentifiabilityError(name, lhs, rhs)


def pakron_stage1(z, psi, left_shape, right_shape, solver: SolverOptions,
                  init_seed: int, gbar_init=None) -> StageOneResult:
    """Bilinear ALS on the third-order view ``z``.

    Alternates the two closed-form updates

        omega <- unfold(z,0) @ pinv(khatri_rao(gbar, psi).T)
        gbar  <- unfold(z,2) @ pinv(khatri_rao(psi, omega).T)

    until the normalized reconstruction error stops improving by more than
    ``solver.delta``.  ``left_shape = (slots, tx_antennas)`` and
    ``right_shape = (rx_antennas, ris_elements)`` describe the Kronecker
    structure of ``omega``; when ``solver.structure_projection`` is set, a
    final sweep replaces the converged ``omega`` by its nearest separable
    matrix and re-solves both factors once, which pins the per-column scale
    indeterminacy to a separable one without degrading the noiseless fit.
    """
    z = np.asarray(z)
    tm_r, k, frames = z.shape
    d = psi.shape[1]
    _require("frames*blocks >= tx_antennas*ris_elements", frames * k, d)
    _require("blocks*slots*rx_antennas >= tx_antennas*ris_elements", k * tm_r, d)
    if left_shape[0] * right_shape[0] != tm_r or left_shape[1] * right_shape[1] != d:
        raise ValueError("factor shapes inconsistent with the data view")

    z1 = unfold(z, 0)
    z3 = unfold(z, 2)
    znorm2 = float(np.linalg.norm(z) ** 2)
    if gbar_init is not None:
        gbar = np.array(gbar_init, dtype=complex)
    else:
        rng = np.random.default_rng(init_seed)
        gbar = (rng.standard_normal((frames, d))
                + 1j * rng.standard_normal((frames, d))) / np.sqrt(2)

    tol = solver.pinv_tol
    trajectory = []
    prev = np.inf
    converged = False
    omega = None
    for _ in range(solver.max_iters):
        omega = z1 @ pinv(khatri_rao(gbar, psi).T, tol)
        kr_po = khatri_rao(psi, omega)
        gbar = z3 @ pinv(kr_po.T, tol)
        err = float(np.linalg.norm(z3 - gbar @ kr_po.T) ** 2) / znorm2
        trajectory.append(err)
        if abs(err - prev) <= solver.delta:
            converged = True
            break
        prev = err
    fit = trajectory[-1]

    if solver.structure_projection:
        xa, hb = nearest_kronecker(omega, left_shape, right_shape)
        omega_p = kron(xa, hb)
        gbar = z3 @ pinv(khatri_rao(psi, omega_p).T, tol)
        kr_gp = khatri_rao(gbar, psi)
        omega = z1 @ pinv(kr_gp.T, tol)
        fit = float(np.linalg.norm(z1 - omega @ kr_gp.T) ** 2) / znorm2

    return StageOneResult(omega=omega, gbar=gbar, trajectory=tuple(trajectory),
                          iterations=len(trajectory), converged=converged, fit=fit)


def kron_factorize(omega, s, slots, rx_antennas):
    """Split an estimated ``kron(X, H @ S)`` into ``(X, H)``.

    Right-multiplying by ``kron(I, S^H)`` removes the known unitary factor;
    the Kronecker rearrangement of the result is rank-1 for perfectly
    structured input, with ``vec(X)`` and ``vec(H)`` as its singular pair.
    The split is exact up to one complex scale trade-off between the two
    factors.
    """
    n = s.shape[0]
    mt = omega.shape[1] // n
    delta = omega @ kron(np.eye(mt), s.conj().T)
    rearranged = kron_rearrange(delta, (slots, mt), (rx_antennas, n))
    u, v, sigma = best_rank1(rearranged)
    root = np.sqrt(sigma)
    x_hat = unvec(root * u, slots, mt)
    h_hat = unvec(root * v.conj(), rx_antennas, n)
    return x_hat, h_hat


def pakron(received: ReceivedTensor, design: ScatteringDesign, alphabet,
           solver: SolverOptions, init_seed: int, gbar_init=None) -> ReceiverOutput:
    """Two-stage semi-blind receiver (alternating LS + Kronecker split)."""
    t0 = time.perf_counter()
    views = reshape_views(received, design)
    mr, slots, _, _ = received.y.shape
    n = design.s.shape[0]
    mt = design.psi.shape[1] // n
    stage1 = pakron_stage1(views.z, design.psi, (slots, mt), (mr, n),
                           solver, init_seed, gbar_init=gbar_init)
    x_raw, h_hat = kron_factorize(stage1.omega, design.s, slots, mr)
    out = ReceiverOutput(
        h_hat=h_hat,
        hs_hat=h_hat @ design.s,
        gbar_hat=stage1.gbar,
        x_hat=x_raw,
        x_detected=None,
        iterations=stage1.iterations,
        residual_trajectory=stage1.trajectory,
        converged=stage1.converged,
        final_fit=stage1.fit,
    )
    out = resolve_and_detect(out, alphabet)
    return replace(out, wall_time=time.perf_counter() - t0)


def _psi_slices(psi, n, mt):
    # column r = n_idx + m_idx*n of psi maps to [k, n_idx, m_idx]
    return np.reshape(psi, (psi.shape[0], n, mt), order="F")


def tucker_tals(q4, core, psi, solver: SolverOptions, init_seed: int,
                x_init=None, gbar_init=None):
    """Trilinear ALS on the fourth-order view with known structured core.

    Per sweep, solves the three conditional LS problems for the effective
    channel ``F = H @ S`` (mode 0), the symbols ``X`` (mode 1) and the
    stacked per-frame channel (mode 3), each against the mode unfolding of
    ``q4`` and the corresponding core-times-Kronecker mixing matrix.

    Returns ``(f, x, gbar, trajectory, converged)`` with the trajectory of
    normalized reconstruction errors.
    """
    q4 = np.asarray(q4)
    mr, slots, k, frames = q4.shape
    n, mt = core.shape[0], core.shape[1]
    d = n * mt
    _require("frames*blocks*slots >= ris_elements", frames * k * slots, n)
    _require("frames*blocks*rx_antennas >= tx_antennas", frames * k * mr, mt)
    _require("blocks*slots*rx_antennas >= tx_antennas*ris_elements",
             k * slots * mr, d)
    if not np.array_equal(core, build_core(n, mt)):
        raise ValueError("core must be the canonical selection-structured core")

    psi3 = _psi_slices(psi, n, mt)
    q1 = unfold(q4, 0)
    q2 = unfold(q4, 1)
    q4m = unfold(q4, 3)
    qnorm2 = float(np.linalg.norm(q4) ** 2)

    rng = np.random.default_rng(init_seed)

    def _cn(shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)

    x = np.array(x_init, dtype=complex) if x_init is not None else _cn((slots, mt))
    gbar = np.array(gbar_init, dtype=complex) if gbar_init is not None else _cn((frames, d))

    tol = solver.pinv_tol
    trajectory = []
    prev = np.inf
    converged = False
    f = None
    for _ in range(solver.max_iters):
        g3 = np.reshape(gbar, (frames, n, mt), order="F")
        # mixing matrices below equal unfold(core x2 X x3 psi x4 gbar, mode)
        # etc.; the selection structure of the core reduces them to these
        # contractions.
        v1 = np.einsum("tm,knm,inm->ntki", x, psi3, g3).reshape(n, -1, order="F")
        f = q1 @ pinv(v1, tol)
        v2 = np.einsum("rn,knm,inm->mrki", f, psi3, g3).reshape(mt, -1, order="F")
        x = q2 @ pinv(v2, tol)
        v4 = np.einsum("rn,tm,knm->nmrtk", f, x, psi3).reshape(d, -1, order="F")
        gbar = q4m @ pinv(v4, tol)
        err = float(np.linalg.norm(q4m - gbar @ v4) ** 2) / qnorm2
        trajectory.append(err)
        if abs(err - prev) <= solver.delta:
            converged = True
            break
        prev = err

    return f, x, gbar, tuple(trajectory), converged


def tucker(received: ReceivedTensor, design: ScatteringDesign, alphabet,
           solver: SolverOptions, init_seed: int,
           x_init=None, gbar_init=None) -> ReceiverOutput:
    """Single-stage semi-blind receiver (trilinear ALS on the 4-way view)."""
    t0 = time.perf_counter()
    views = reshape_views(received, design)
    f, x_raw, gbar, trajectory, converged = tucker_tals(
        views.q4, views.core, design.psi, solver, init_seed,
        x_init=x_init, gbar_init=gbar_init)
    out = ReceiverOutput(
        h_hat=f @ design.s.conj().T,  # S is unitary, so this inverts it exactly
        hs_hat=f,
        gbar_hat=gbar,
        x_hat=x_raw,
        x_detected=None,
        iterations=len(trajectory),
        residual_trajectory=trajectory,
        converged=converged,
        final_fit=trajectory[-1],
    )
    out = resolve_and_detect(out, alphabet)
    return replace(out, wall_time=time.perf_counter() - t0)


def zf_perfect_csi(received: ReceivedTensor, channels: ChannelSet,
                   design: ScatteringDesign, pinv_tol=1e-12) -> np.ndarray:
    """Zero-forcing symbol estimate with perfect channel knowledge.

    Inverts the known mode-1 mixing of the fourth-order view:
    ``X = unfold(q4, 1) @ pinv(V)`` with ``V`` built from the true channels
    and the design.
    """
    q4 = received.y
    mr, slots, k, frames = q4.shape
    n = design.s.shape[0]
    mt = design.psi.shape[1] // n
    f = channels.h @ design.s
    psi3 = _psi_slices(design.psi, n, mt)
    g3 = np.reshape(channels.gbar, (frames, n, mt), order="F")
    v2 = np.einsum("rn,knm,inm->mrki", f, psi3, g3).reshape(mt, -1, order="F")
    return unfold(q4, 1) @ pinv(v2, pinv_tol)


def hard_decisions(x, alphabet) -> np.ndarray:
    """Indices of the nearest constellation points (ties to the lower index)."""
    dist = np.abs(np.asarray(x)[..., None] - np.asarray(alphabet))
    return np.argmin(dist, axis=-1)


def resolve_and_detect(out: ReceiverOutput, alphabet,
                       reference_value=None) -> ReceiverOutput:
    """Fix the per-stream scale from the known reference row, then detect.

    Column m of the soft estimate is scaled by
    ``reference_value / x_hat[0, m]``, cancelling the per-stream diagonal
    indeterminacy; the remaining rows are hard-decided to the nearest
    constellation point.  The channel estimates are left untouched.
    """
    ref = complex(alphabet[0]) if reference_value is None else complex(reference_value)
    x = out.x_hat
    pivot = x[0, :]
    if np.any(np.abs(pivot) < 1e-150):
        raise ScalingResolutionError(
            "reference-row estimate is numerically zero; cannot resolve scaling"
        )
    x_res = x * (ref / pivot)[None, :]
    detected = np.asarray(alphabet)[hard_decisions(x_res, alphabet)]
    detected[0, :] = ref
    return replace(out, x_hat=x_res, x_detected=detected)
