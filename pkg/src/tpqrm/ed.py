"""Exact diagonalization in the symmetry-resolved basis.

The Z4 symmetry -sigma_x exp(i pi/2 a'a) splits the Hilbert space into
even/odd photon subspaces (Bargmann q = 1/4, 3/4), each with a residual
Z2 parity p.  On the combinations

    |n; p> = (|up, f_n> + s_n |down, f_n>) / sqrt(2),
    s_n = -p (-1)^n,   f_n = 2n (+1 in the odd subspace),

the Hamiltonian is real symmetric tridiagonal:

    diag_n     = f_n - (Delta/2) s_n
    offdiag_n  = g sqrt((f_n+1)(f_n+2)) [ (1+r) - (1-r) s_n ] / 2 .

This closed form is a derived projection, not given anywhere in closed
form; verify_block_projection checks it entrywise against the explicit
dense spin (x) Fock construction and is exercised across the parameter
space by the test suite.

A second, independent route diagonalizes the squeezed-frame matrix
diag[(2m+1/2) beta - 1/2] + p M_mn (couplings from aa); the two frames
cross-validate each other.  Ground-state observables, the coupling
quantum Fisher information, and Wigner grids are all computed from
bare-Fock eigenvectors mapped back to spin (x) Fock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig, eigh_tridiagonal
from scipy.special import eval_genlaguerre, gammaln

from .aa import GroundStateObservables, aa_matrix
from .errors import ConvergenceError
from .model import ModelParams, SectorSpec, geometry
from .specfun import squeeze_element

N_MAX_CEILING = 16384


@dataclass(frozen=True)
class ParityBlock:
    """One symmetry block of the Hamiltonian, in tridiagonal form."""

    n_max: int
    parity: int
    q: float
    diag: np.ndarray
    offdiag: np.ndarray

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out


@dataclass(frozen=True)
class SpectrumResult:
    """Sorted eigenvalues with parity labels and per-level convergence data."""

    energies: np.ndarray
    parities: np.ndarray
    indices: np.ndarray
    converged: np.ndarray
    convergence_estimate: np.ndarray
    n_max_used: int

    @property
    def levels(self) -> list[tuple[float, int, int]]:
        return [
            (float(e), int(p), int(i))
            for e, p, i in zip(self.energies, self.parities, self.indices)
        ]


@dataclass(frozen=True)
class WignerGrid:
    """W(x, p) on a uniform grid; x = a + a', p = i(a' - a), integral 1."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    normalization: float


def _fock_offset(q: float) -> int:
    if q == 0.25:
        return 0
    if q == 0.75:
        return 1
    raise ValueError(f"Bargmann index q={q} must be 1/4 or 3/4")


def build_parity_block(
    params: ModelParams, parity: int, n_max: int, q: float = 0.25
) -> ParityBlock:
    """Tridiagonal Hamiltonian block for one (q, parity) sector."""
    if parity not in (+1, -1):
        raise ValueError("parity must be +1 or -1")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    off = _fock_offset(q)
    n = np.arange(n_max)
    s = -parity * (-1.0) ** n
    f = 2 * n + off
    diag = f - 0.5 * params.delta * s
    t = params.g * np.sqrt((f[:-1] + 1.0) * (f[:-1] + 2.0)) * ((1 + params.r) - (1 - params.r) * s[:-1]) / 2.0
    return ParityBlock(n_max=n_max, parity=parity, q=q, diag=diag, offdiag=t)


def dense_hamiltonian(params: ModelParams, n_fock: int) -> np.ndarray:
    """Full Hamiltonian on spin (x) Fock(0..n_fock-1); real because i sigma_y is real."""
    n = np.arange(n_fock)
    a = np.diag(np.sqrt(n[1:].astype(float)), 1)
    a2 = a @ a
    ad2 = a2.T
    num = np.diag(n.astype(float))
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    isy = np.array([[0.0, 1.0], [-1.0, 0.0]])
    sz = np.array([[1.0, 0.0], [0.0, -1.0]])
    eye2 = np.eye(2)
    return (
        -0.5 * params.delta * np.kron(sx, np.eye(n_fock))
        + np.kron(eye2, num)
        + 0.5 * params.g * (1 + params.r) * np.kron(sz, a2 + ad2)
        + 0.5 * params.g * (1 - params.r) * np.kron(isy, a2 - ad2)
    )


def verify_block_projection(
    params: ModelParams, parity: int, n_max: int, q: float = 0.25
) -> float:
    """Max entrywise deviation of the tridiagonal block from the dense projection.

    Builds the (|up,f_n> + s_n|down,f_n>)/sqrt(2) basis explicitly and
    projects the dense Hamiltonian onto it; the derived closed form
    must reproduce that to machine precision.
    """
    off = _fock_offset(q)
    n_fock = 2 * n_max + off + 2
    h = dense_hamiltonian(params, n_fock)
    basis = np.zeros((2 * n_fock, n_max))
    for n in range(n_max):
        s = -parity * (-1) ** n
        f = 2 * n + off
        basis[f, n] = 1.0 / math.sqrt(2.0)
        basis[n_fock + f, n] = s / math.sqrt(2.0)
    projected = basis.T @ h @ basis
    block = build_parity_block(params, parity, n_max, q)
    tri = np.diag(block.diag) + np.diag(block.offdiag, 1) + np.diag(block.offdiag, -1)
    return float(np.abs(projected - tri).max())


def _lowest_block_eigenvalues(block: ParityBlock, k: int) -> np.ndarray:
    return eigh_tridiagonal(
        block.diag, block.offdiag, eigvals_only=True, select="i", select_range=(0, k - 1)
    )


def lowest_level(params: ModelParams, parity: int, n_max: int, q: float = 0.25) -> float:
    """Lowest eigenvalue of one block at fixed truncation (no doubling)."""
    return float(_lowest_block_eigenvalues(build_parity_block(params, parity, n_max, q), 1)[0])


def ed_spectrum(
    params: ModelParams,
    sector: SectorSpec = SectorSpec(),
    n_max: int = 64,
    tol: float = 1e-10,
    k: int = 8,
    n_max_ceiling: int = N_MAX_CEILING,
) -> SpectrumResult:
    """Lowest k levels of one symmetry block, with truncation doubling.

    n_max doubles until every level moves by less than tol, or the
    ceiling is reached; unconverged levels are flagged, never raised.
    At g = g_c only levels below the continuum threshold -1/2 are
    physically meaningful.
    """
    n_cur = max(n_max, 2 * k, 4)
    w_prev = _lowest_block_eigenvalues(
        build_parity_block(params, sector.parity, n_cur, sector.q), k
    )
    estimate = np.full(k, np.inf)
    while True:
        n_next = 2 * n_cur
        if n_next > n_max_ceiling:
            break
        w_next = _lowest_block_eigenvalues(
            build_parity_block(params, sector.parity, n_next, sector.q), k
        )
        estimate = np.abs(w_next - w_prev)
        w_prev, n_cur = w_next, n_next
        if estimate.max() < tol:
            break
    converged = estimate < tol
    return SpectrumResult(
        energies=w_prev,
        parities=np.full(k, sector.parity, dtype=int),
        indices=np.arange(k),
        converged=converged,
        convergence_estimate=estimate,
        n_max_used=n_cur,
    )


def full_spectrum(
    params: ModelParams,
    q: float = 0.25,
    n_max: int = 64,
    tol: float = 1e-10,
    k: int = 8,
    n_max_ceiling: int = N_MAX_CEILING,
) -> SpectrumResult:
    """Both parity blocks of a Bargmann subspace, merged and sorted."""
    parts = [
        ed_spectrum(params, SectorSpec(q, p), n_max, tol, k, n_max_ceiling) for p in (+1, -1)
    ]
    energies = np.concatenate([s.energies for s in parts])
    parities = np.concatenate([s.parities for s in parts])
    indices = np.concatenate([s.indices for s in parts])
    converged = np.concatenate([s.converged for s in parts])
    estimates = np.concatenate([s.convergence_estimate for s in parts])
    order = np.argsort(energies, kind="stable")
    return SpectrumResult(
        energies=energies[order],
        parities=parities[order],
        indices=indices[order],
        converged=converged[order],
        convergence_estimate=estimates[order],
        n_max_used=max(s.n_max_used for s in parts),
    )


def _squeezed_frame_eigs(params: ModelParams, parity: int, n_max: int) -> tuple[np.ndarray, float]:
    geo = geometry(params)
    m = aa_matrix(params, n_max)
    a = parity * m
    idx = np.arange(n_max)
    a[idx, idx] += (2 * idx + 0.5) * geo.beta - 0.5
    w = eig(a, right=False)
    order = np.argsort(w.real)
    w = w[order]
    max_imag = float(np.abs(w.imag).max()) if n_max else 0.0
    return w, max_imag


def squeezed_frame_spectrum(
    params: ModelParams,
    parity: int,
    n_max: int,
    k: int = 8,
    tol: float = 1e-8,
) -> SpectrumResult:
    """Lowest k levels from the squeezed-frame coupled-manifold matrix.

    The matrix is treated as general (non-symmetric) per its textual
    form; residual imaginary parts above 1e-8 (1 + |E|) flag the level
    unconverged instead of raising.  Convergence estimates come from a
    half-size solve.  Near collapse this frame reaches a given accuracy
    at much smaller n_max than bare Fock, because the basis already
    absorbs the squeezing.
    """
    geo = geometry(params)
    if geo.at_collapse:
        raise ValueError("squeezed frame undefined at g = g_c (theta diverges)")
    if n_max < max(2 * k, 4):
        raise ValueError(f"n_max={n_max} too small for k={k} levels")
    w_full, _ = _squeezed_frame_eigs(params, parity, n_max)
    w_half, _ = _squeezed_frame_eigs(params, parity, n_max // 2)
    lowest = w_full[:k]
    estimate = np.abs(lowest.real - w_half[:k].real)
    imag_ok = np.abs(lowest.imag) <= 1e-8 * (1.0 + np.abs(lowest.real))
    converged = imag_ok & (estimate < tol)
    return SpectrumResult(
        energies=lowest.real,
        parities=np.full(k, parity, dtype=int),
        indices=np.arange(k),
        converged=converged,
        convergence_estimate=estimate,
        n_max_used=n_max,
    )


def ground_state_block(
    params: ModelParams,
    n_max: int = 64,
    tol: float = 1e-10,
    n_max_ceiling: int = N_MAX_CEILING,
) -> tuple[float, np.ndarray, float, int]:
    """Ground level of the (q=1/4, parity=-1) block: (energy, coeffs, estimate, n_max).

    Truncation doubles until the energy is stable to tol.  The
    coefficient vector's overall sign is fixed so its largest entry is
    positive.
    """
    n_cur = max(n_max, 8)
    e_prev = None
    while True:
        block = build_parity_block(params, -1, n_cur)
        w, v = eigh_tridiagonal(block.diag, block.offdiag, select="i", select_range=(0, 0))
        e_cur, coeffs = float(w[0]), v[:, 0]
        if e_prev is not None:
            estimate = abs(e_cur - e_prev)
            if estimate < tol or 2 * n_cur > n_max_ceiling:
                break
        e_prev = e_cur
        n_cur *= 2
    if coeffs[np.argmax(np.abs(coeffs))] < 0:
        coeffs = -coeffs
    return e_cur, coeffs, estimate, n_cur


def block_to_spinfock(coeffs: np.ndarray, parity: int, q: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    """Map block coefficients to the two spin components over the Fock index."""
    off = _fock_offset(q)
    n_max = len(coeffs)
    size = 2 * (n_max - 1) + off + 1
    psi_up = np.zeros(size)
    psi_dn = np.zeros(size)
    n = np.arange(n_max)
    f = 2 * n + off
    s = -parity * (-1.0) ** n
    psi_up[f] = coeffs / math.sqrt(2.0)
    psi_dn[f] = s * coeffs / math.sqrt(2.0)
    return psi_up, psi_dn


def _a2_apply(psi: np.ndarray) -> np.ndarray:
    out = np.zeros_like(psi)
    f = np.arange(len(psi) - 2, dtype=float)
    out[:-2] = np.sqrt((f + 1.0) * (f + 2.0)) * psi[2:]
    return out


def _ad2_apply(psi: np.ndarray) -> np.ndarray:
    out = np.zeros_like(psi)
    f = np.arange(len(psi) - 2, dtype=float)
    out[2:] = np.sqrt((f + 1.0) * (f + 2.0)) * psi[:-2]
    return out


def dg_hamiltonian_apply(
    psi_up: np.ndarray, psi_dn: np.ndarray, r: float
) -> tuple[np.ndarray, np.ndarray]:
    """Apply dH/dg = (1+r)/2 sigma_z (a^2+a'^2) + (1-r)/2 i sigma_y (a^2-a'^2)."""
    k_up = _a2_apply(psi_up) + _ad2_apply(psi_up)
    k_dn = _a2_apply(psi_dn) + _ad2_apply(psi_dn)
    l_up = _a2_apply(psi_up) - _ad2_apply(psi_up)
    l_dn = _a2_apply(psi_dn) - _ad2_apply(psi_dn)
    out_up = 0.5 * (1 + r) * k_up + 0.5 * (1 - r) * l_dn
    out_dn = -0.5 * (1 + r) * k_dn - 0.5 * (1 - r) * l_up
    return out_up, out_dn


def ed_ground_observables(
    params: ModelParams, n_max: int = 64, tol: float = 1e-10
) -> GroundStateObservables:
    """Ground-state photon number, polarization and quadrature widths.

    Computed from the (q=1/4, parity=-1) ground eigenvector mapped back
    to spin (x) Fock; <x> = <p> = 0 holds identically in the even
    subspace, and <a^2> vanishes by parity (retained in the quadrature
    formulas as an honesty check rather than assumed).
    """
    energy, coeffs, estimate, _ = ground_state_block(params, n_max, tol)
    if estimate >= max(tol, 1e-8):
        raise ConvergenceError(
            f"ground state unconverged: estimate {estimate:.2e} at ceiling truncation"
        )
    psi_up, psi_dn = block_to_spinfock(coeffs, parity=-1)
    f = np.arange(len(psi_up), dtype=float)
    photon = float(f @ (psi_up**2 + psi_dn**2))
    a2 = float(psi_up @ _a2_apply(psi_up) + psi_dn @ _a2_apply(psi_dn))
    sigma_x = float(2.0 * psi_up @ psi_dn)
    dx = math.sqrt(1.0 + 2.0 * photon + 2.0 * a2)
    dp = math.sqrt(1.0 + 2.0 * photon - 2.0 * a2)
    return GroundStateObservables(photon=photon, sigma_x=sigma_x, dx=dx, dp=dp)


def _qfi_from_block(params: ModelParams, n_max: int, k_states: int) -> tuple[float, np.ndarray]:
    block = build_parity_block(params, -1, n_max)
    k_solve = min(k_states, n_max - 1)
    w, v = eigh_tridiagonal(
        block.diag, block.offdiag, select="i", select_range=(0, k_solve)
    )
    n = np.arange(n_max - 1)
    s = (-1.0) ** n  # parity -1
    tau = np.sqrt((2 * n + 1.0) * (2 * n + 2.0)) * ((1 + params.r) - (1 - params.r) * s) / 2.0
    v0 = v[:, 0]
    tv0 = np.zeros(n_max)
    tv0[:-1] += tau * v0[1:]
    tv0[1:] += tau * v0[:-1]
    nums = v[:, 1:].T @ tv0
    gaps = w[1:] - w[0]
    terms = 4.0 * nums**2 / gaps**2
    return float(terms.sum()), terms


def qfi_spectral(
    params: ModelParams,
    n_max: int = 256,
    k_states: int = 64,
    rel_tol: float = 1e-6,
    n_max_ceiling: int = N_MAX_CEILING,
    check_cross_parity: bool = True,
) -> float:
    """Coupling quantum Fisher information from the spectral sum.

    F_Q = 4 sum_(j!=0) |<j| dH/dg |0>|^2 / (E_j - E_0)^2 over the
    ground-state parity block; cross-parity matrix elements of dH/dg
    are checked to vanish (relative 1e-12) unless disabled.  The
    excited-state count must exhaust the sum to rel_tol (the tail is
    estimated from the last quarter of the included terms); truncation
    doubles until F_Q itself is stable to rel_tol.
    """
    f_prev = None
    n_cur = max(n_max, 4 * k_states)
    while True:
        f_cur, terms = _qfi_from_block(params, n_cur, k_states)
        tail = terms[-max(1, len(terms) // 4):].sum()
        if tail > rel_tol * f_cur:
            raise ConvergenceError(
                f"spectral sum tail {tail:.3e} above {rel_tol:.0e} x F_Q = "
                f"{rel_tol * f_cur:.3e} with k_states={k_states}; increase k_states"
            )
        if f_prev is not None and abs(f_cur - f_prev) <= rel_tol * f_cur:
            break
        if 2 * n_cur > n_max_ceiling:
            raise ConvergenceError(
                f"F_Q not stable to {rel_tol:.0e} at truncation ceiling {n_cur}"
            )
        f_prev, n_cur = f_cur, 2 * n_cur

    if check_cross_parity:
        _assert_cross_parity_selection_rule(params, n_cur)
    return f_cur


def _assert_cross_parity_selection_rule(params: ModelParams, n_max: int, k: int = 4) -> None:
    """Symmetry forbids <opposite parity| dH/dg |ground>; enforce it numerically."""
    block_m = build_parity_block(params, -1, n_max)
    _, v0 = eigh_tridiagonal(block_m.diag, block_m.offdiag, select="i", select_range=(0, 0))
    up0, dn0 = block_to_spinfock(v0[:, 0], parity=-1)
    dup, ddn = dg_hamiltonian_apply(up0, dn0, params.r)
    scale = math.sqrt(float(dup @ dup + ddn @ ddn))
    block_p = build_parity_block(params, +1, n_max)
    _, vp = eigh_tridiagonal(block_p.diag, block_p.offdiag, select="i", select_range=(0, k - 1))
    for j in range(k):
        wu, wd = block_to_spinfock(vp[:, j], parity=+1)
        elem = float(wu @ dup + wd @ ddn)
        if abs(elem) > 1e-12 * max(scale, 1.0):
            raise RuntimeError(
                f"cross-parity element {elem:.3e} above 1e-12 x {scale:.3e}: "
                "parity bookkeeping violated"
            )


def qfi_fidelity_oracle(params: ModelParams, n_max: int = 256, eps: float = 1e-5) -> float:
    """QFI from the fidelity drop between ground states at g and g + eps.

    Independent of the spectral sum: F_Q ~ 8 (1 - |<psi(g)|psi(g+eps)>|) / eps^2.
    """
    if params.g + eps >= params.g_c:
        raise ValueError("g + eps crosses the collapse point")
    _, c1, _, used = ground_state_block(params, n_max)
    shifted = ModelParams(delta=params.delta, g=params.g + eps, r=params.r)
    _, c2, _, used2 = ground_state_block(shifted, used)
    n = min(len(c1), len(c2))
    overlap = abs(float(c1[:n] @ c2[:n]))
    return 8.0 * (1.0 - overlap) / eps**2


def squeezed_vacuum_coeffs(theta: float, n_states: int) -> np.ndarray:
    """Even-sector coefficients of S(theta)|0>, S(s) = exp[(s/2)(a'^2 - a^2)]."""
    return np.array([squeeze_element(m, 0, theta / 2.0, +1) for m in range(n_states)])


def conditional_photon_state(
    params: ModelParams, conditioning: str, n_max: int = 64, tol: float = 1e-10
) -> np.ndarray:
    """Normalized photon state after projecting the qubit, over the Fock index."""
    _, coeffs, _, _ = ground_state_block(params, n_max, tol)
    psi_up, psi_dn = block_to_spinfock(coeffs, parity=-1)
    if conditioning == "qubit-up":
        comp = psi_up
    elif conditioning == "qubit-down":
        comp = psi_dn
    else:
        raise ValueError(f"conditioning must be 'qubit-up' or 'qubit-down', got {conditioning!r}")
    return comp / np.linalg.norm(comp)


def _wigner_from_density(
    rho_pairs: list[tuple[int, int, float]], x_axis: np.ndarray, p_axis: np.ndarray
) -> np.ndarray:
    """Assemble W from Fock density entries via the Laguerre kernel.

    With alpha = (x + i p)/2 the contribution of |m><n| (m >= n) is
    (1/2pi) (-1)^n sqrt(n!/m!) (2 conj(alpha))^(m-n) L_n^(m-n)(4|alpha|^2)
    exp(-2|alpha|^2), plus the mirrored term for the transposed entry;
    the conjugated-argument convention is pinned by a brute-force
    position-integral oracle in the tests.
    """
    x = x_axis[None, :]
    p = p_axis[:, None]
    aa = (x * x + p * p) / 1.0  # 4|alpha|^2 with alpha=(x+ip)/2
    z = x - 1j * p  # 2 conj(alpha)
    envelope = np.exp(-0.5 * aa)
    total = np.zeros((len(p_axis), len(x_axis)))
    for m, n, val in rho_pairs:
        lo, hi = min(m, n), max(m, n)
        d = hi - lo
        pref = (-1.0) ** lo * math.exp(0.5 * (gammaln(lo + 1) - gammaln(hi + 1)))
        lag = eval_genlaguerre(lo, d, aa)
        if d == 0:
            total += val * pref * lag
        else:
            # real state: |m><n| + |n><m| give 2 Re[(2 conj alpha)^d]
            total += 2.0 * val * pref * (z**d).real * lag
    return total * envelope / (2.0 * math.pi)


def wigner_grid(
    params: ModelParams,
    n_max: int = 64,
    half_width: float | None = None,
    points: int = 161,
    conditioning: str = "reduced",
    tol: float = 1e-10,
) -> WignerGrid:
    """Wigner function of the ground-state photon mode.

    conditioning selects the reduced state (qubit traced out) or the
    renormalized state after projecting the qubit up/down.  The grid
    must be wide enough that |W| < 1e-6 on the boundary, else a
    ValueError reports the boundary mass; integral and second moments
    are the correctness invariants checked by the tests.
    """
    _, coeffs, estimate, _ = ground_state_block(params, n_max, tol)
    if estimate >= max(tol, 1e-8):
        raise ConvergenceError(f"ground state unconverged (estimate {estimate:.2e})")
    psi_up, psi_dn = block_to_spinfock(coeffs, parity=-1)

    if conditioning == "reduced":
        components = [psi_up, psi_dn]
    elif conditioning in ("qubit-up", "qubit-down"):
        comp = psi_up if conditioning == "qubit-up" else psi_dn
        components = [comp / np.linalg.norm(comp)]
    else:
        raise ValueError(f"unknown conditioning {conditioning!r}")

    if half_width is None:
        width = 1.0
        for comp in components:
            f = np.arange(len(comp), dtype=float)
            nrm = float(comp @ comp)
            ph = float(f @ comp**2)
            a2 = float(comp @ _a2_apply(comp))
            widest = math.sqrt(max(nrm + 2 * ph + 2 * abs(a2), 1e-12) / max(nrm, 1e-12))
            width = max(width, widest)
        half_width = 5.5 * width

    x_axis = np.linspace(-half_width, half_width, points)
    p_axis = np.linspace(-half_width, half_width, points)

    pairs: list[tuple[int, int, float]] = []
    support = max(int(np.max(np.nonzero(np.abs(psi_up) + np.abs(psi_dn) > 1e-14)[0])) + 1, 2)
    for comp in components:
        c = comp[:support]
        for m in range(0, support, 2):
            if c[m] == 0.0:
                continue
            for n in range(0, m + 1, 2):
                val = float(c[m] * c[n])
                if abs(val) < 1e-18:
                    continue
                pairs.append((m, n, val))

    values = _wigner_from_density(pairs, x_axis, p_axis)

    boundary = max(
        float(np.abs(values[0, :]).max()),
        float(np.abs(values[-1, :]).max()),
        float(np.abs(values[:, 0]).max()),
        float(np.abs(values[:, -1]).max()),
    )
    if boundary > 1e-6:
        raise ValueError(
            f"grid too narrow: boundary |W| = {boundary:.2e} > 1e-6, widen half_width"
        )
    norm = float(np.trapezoid(np.trapezoid(values, x_axis, axis=1), p_axis))
    return WignerGrid(x_axis=x_axis, p_axis=p_axis, values=values, normalization=norm)
