"""Finite Fock-space models over a window of localized states.

The localized states are linearly dependent in general, so the window Gram
matrix Z is factored as Z = V V* with V of full column rank; the physical
operators a_g = sum_k V[g, k] c_k over Jordan-Wigner modes c_k then satisfy

    {a_g, a*_g'} = Z[g, g'],   {a_g, a_g'} = 0,

and the Fock dimension is 2**rank(Z) rather than 2**n_sites.  Everything
downstream (Hamiltonians, Heisenberg evolution, anticommutator norms,
propagation and volume-convergence checks) runs in this mode space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .interactions import Interaction
from .lattice import Window
from .magnetic import MagneticParams, overlap_matrix, window_coords

__all__ = [
    "FockError",
    "ModeBasis",
    "mode_basis",
    "jw_lowering",
    "mode_operators",
    "monomial_operator",
    "build_interaction_hamiltonian",
    "build_quadratic_hamiltonian",
    "Evolution",
    "operator_norm",
    "anticommutator_norm",
    "LRReport",
    "lr_check",
    "ConvergenceReport",
    "volume_convergence",
    "quasifree_expectation",
]

GRAM_FACTOR_RTOL = 1e-12
MAX_MODES = 14


class FockError(ValueError):
    pass


@dataclass(frozen=True)
class ModeBasis:
    """Gram factorization of a window plus the ambient Fock dimensions."""

    window: Window
    z: np.ndarray
    v: np.ndarray
    rank: int

    @property
    def n_sites(self) -> int:
        return len(self.window)

    @property
    def dim(self) -> int:
        return 1 << self.rank


def mode_basis(window: Window, mp: MagneticParams, rtol: float = GRAM_FACTOR_RTOL,
               max_modes: int = MAX_MODES) -> ModeBasis:
    z = overlap_matrix(window, mp)
    w, u = np.linalg.eigh(z)
    keep = w > rtol * max(w[-1], 0.0)
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        raise FockError("window Gram matrix has no retained modes")
    if rank > max_modes:
        raise FockError(f"rank {rank} exceeds the mode cap {max_modes} (dim 2^{rank})")
    v = u[:, keep] * np.sqrt(w[keep])
    resid = float(np.max(np.abs(z - v @ v.conj().T)))
    if resid > 1e-10 * max(1.0, float(np.max(np.abs(z)))):
        raise FockError(f"Gram factorization residual {resid:.3e} too large")
    return ModeBasis(window=window, z=z, v=v, rank=rank)


def jw_lowering(n_modes: int) -> list[sp.csr_matrix]:
    """Jordan-Wigner lowering operators on (C^2)^{n_modes}, basis |0>, |1> per mode."""
    lower = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    zphase = sp.csr_matrix(np.diag([1.0, -1.0]))
    ident = sp.identity(2, format="csr")
    ops = []
    for k in range(n_modes):
        factors = [zphase] * k + [lower] + [ident] * (n_modes - k - 1)
        acc = factors[0]
        for f in factors[1:]:
            acc = sp.kron(acc, f, format="csr")
        ops.append(acc.astype(np.complex128))
    return ops


def mode_operators(basis: ModeBasis) -> list[sp.csr_matrix]:
    """Annihilators a_g = sum_k V[g, k] c_k for every window site."""
    cs = jw_lowering(basis.rank)
    out = []
    for g in range(basis.n_sites):
        acc = None
        for k in range(basis.rank):
            coef = basis.v[g, k]
            if coef == 0:
                continue
            term = coef * cs[k]
            acc = term if acc is None else acc + term
        if acc is None:
            acc = sp.csr_matrix((basis.dim, basis.dim), dtype=np.complex128)
        out.append(acc.tocsr())
    return out


def monomial_operator(factors, ops: list[sp.csr_matrix]) -> sp.csr_matrix:
    """Ordered product of a / a* factors, as (site, dagger) pairs left to right."""
    dim = ops[0].shape[0]
    acc = sp.identity(dim, format="csr", dtype=np.complex128)
    for site, dagger in factors:
        a = ops[site]
        acc = acc @ (a.conj().T.tocsr() if dagger else a)
    return acc.tocsr()


def build_interaction_hamiltonian(basis: ModeBasis, interaction: Interaction,
                                  ops: list[sp.csr_matrix] | None = None,
                                  support_within: frozenset[int] | None = None) -> sp.csr_matrix:
    """H = sum over terms of f * (M + M*), optionally keeping only terms whose
    support lies inside the given site subset."""
    if ops is None:
        ops = mode_operators(basis)
    h = sp.csr_matrix((basis.dim, basis.dim), dtype=np.complex128)
    for term in interaction.terms:
        if support_within is not None and not term.support <= support_within:
            continue
        m = monomial_operator(term.monomial.factors, ops)
        h = h + term.coupling * (m + m.conj().T)
    dev = float(np.max(np.abs((h - h.conj().T).toarray()))) if h.nnz else 0.0
    if dev > 1e-10 * max(1.0, float(np.max(np.abs(h.toarray()))) if h.nnz else 1.0):
        raise FockError(f"assembled Hamiltonian is not Hermitian: deviation {dev:.3e}")
    return h


def build_quadratic_hamiltonian(basis: ModeBasis, hopping: np.ndarray,
                                constants: np.ndarray | None = None,
                                ops: list[sp.csr_matrix] | None = None) -> sp.csr_matrix:
    """H = sum t[g', g] a*_g' a_g - sum c(g), with t Hermitian."""
    n = basis.n_sites
    if hopping.shape != (n, n):
        raise FockError(f"hopping shape {hopping.shape} mismatches {n} sites")
    if np.max(np.abs(hopping - hopping.conj().T)) > 1e-10 * max(1.0, float(np.max(np.abs(hopping)))):
        raise FockError("hopping matrix is not Hermitian")
    if ops is None:
        ops = mode_operators(basis)
    # collapse through the mode map first: sum t a*a = sum (V* t V)[k,l] c*_k c_l
    tmode = basis.v.conj().T @ hopping @ basis.v
    cs = jw_lowering(basis.rank)
    h = sp.csr_matrix((basis.dim, basis.dim), dtype=np.complex128)
    for k in range(basis.rank):
        for l in range(basis.rank):
            if tmode[k, l] != 0:
                h = h + tmode[k, l] * (cs[k].conj().T @ cs[l])
    if constants is not None:
        h = h - float(np.sum(constants)) * sp.identity(basis.dim, format="csr", dtype=np.complex128)
    return h.tocsr()


class Evolution:
    """Heisenberg evolution A -> e^{itH} A e^{-itH} from one eigendecomposition."""

    def __init__(self, h: sp.spmatrix | np.ndarray):
        hd = h.toarray() if sp.issparse(h) else np.asarray(h)
        dev = float(np.max(np.abs(hd - hd.conj().T)))
        if dev > 1e-9 * max(1.0, float(np.max(np.abs(hd)))):
            raise FockError(f"Hamiltonian is not Hermitian: deviation {dev:.3e}")
        self.eigvals, self.eigvecs = np.linalg.eigh(hd)
        self._props: dict[float, np.ndarray] = {}

    def propagator(self, t: float) -> np.ndarray:
        key = float(t)
        if key not in self._props:
            phase = np.exp(1j * key * self.eigvals)
            self._props[key] = (self.eigvecs * phase) @ self.eigvecs.conj().T
        return self._props[key]

    def heisenberg(self, a: sp.spmatrix | np.ndarray, t: float) -> np.ndarray:
        u = self.propagator(t)
        ad = a.toarray() if sp.issparse(a) else np.asarray(a)
        return u @ ad @ u.conj().T


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value; exact for the sizes used here."""
    ad = a.toarray() if sp.issparse(a) else np.asarray(a)
    if min(ad.shape) == 0:
        return 0.0
    if max(ad.shape) <= 2048:
        return float(np.linalg.norm(ad, 2))
    from scipy.sparse.linalg import svds

    try:
        s = svds(ad, k=1, return_singular_vectors=False)
        return float(s[0])
    except Exception:
        return float(np.linalg.norm(ad, 2))


def anticommutator_norm(p: np.ndarray, q: np.ndarray) -> float:
    pd = p.toarray() if sp.issparse(p) else np.asarray(p)
    qd = q.toarray() if sp.issparse(q) else np.asarray(q)
    return operator_norm(pd @ qd + qd @ pd)


_FLAVORS = ((False, False), (False, True), (True, False), (True, True))


@dataclass(frozen=True)
class LRReport:
    """Propagation-front table: measured anticommutator norms against the
    exponential light-cone envelope g * exp(-zeta * (d - v|t|))."""

    zeta: float
    velocity: float
    g: float
    t_grid: np.ndarray
    pairs: tuple[tuple[int, int], ...]
    f_table: np.ndarray
    bounds: np.ndarray
    n_exceed: int
    max_ratio: float
    passed: bool
    flavor_labels: tuple[str, ...] = ("a,a", "a,a*", "a*,a", "a*,a*")


def lr_check(basis: ModeBasis, h: sp.spmatrix | np.ndarray, t_grid,
             zeta: float, velocity: float, g: float,
             pairs: list[tuple[int, int]] | None = None,
             rel_slack: float = 1e-9) -> LRReport:
    """Measure F(t) = max over flavors of ||{tau_t(a#_g), a#_g'}|| for each pair
    and compare with g * exp(-zeta(d(g, g') - v|t|))."""
    if zeta <= 0 or g <= 0:
        raise FockError("zeta and g must be positive")
    t_grid = np.asarray(t_grid, dtype=float)
    n = basis.n_sites
    if pairs is None:
        pairs = [(i, j) for i in range(n) for j in range(n)]
    dists = basis.window.distance_matrix()
    ops = mode_operators(basis)
    dense = [op.toarray() for op in ops]
    evol = Evolution(h)
    moving = sorted({i for i, _ in pairs})
    f_table = np.zeros((len(t_grid), len(pairs), 4))
    bounds = np.zeros((len(t_grid), len(pairs)))
    for it, t in enumerate(t_grid):
        evolved = {i: evol.heisenberg(dense[i], float(t)) for i in moving}
        for ip, (i, j) in enumerate(pairs):
            at = evolved[i]
            bstat = dense[j]
            for ifl, (dag_mov, dag_stat) in enumerate(_FLAVORS):
                x = at.conj().T if dag_mov else at
                y = bstat.conj().T if dag_stat else bstat
                f_table[it, ip, ifl] = operator_norm(x @ y + y @ x)
            with np.errstate(over="ignore"):  # inf bound is trivially satisfied
                bounds[it, ip] = g * np.exp(-zeta * (dists[i, j] - velocity * abs(float(t))))
    fmax = f_table.max(axis=2)
    ratios = fmax / bounds
    exceed = ratios > 1.0 + rel_slack
    return LRReport(
        zeta=zeta, velocity=velocity, g=g, t_grid=t_grid, pairs=tuple(pairs),
        f_table=f_table, bounds=bounds,
        n_exceed=int(np.count_nonzero(exceed)),
        max_ratio=float(ratios.max()) if ratios.size else 0.0,
        passed=not bool(exceed.any()),
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Norm differences between full- and restricted-support dynamics against
    the boundary-sum envelope 2 g (e^{zeta v |t|} - 1) * boundary_sum."""

    t_grid: np.ndarray
    site: int
    diffs: np.ndarray
    bounds: np.ndarray
    boundary_sum: float
    passed: bool
    max_ratio: float


def volume_convergence(basis: ModeBasis, interaction: Interaction,
                       inner_sites: frozenset[int], site: int, t_grid,
                       zeta: float, velocity: float, g: float,
                       rel_slack: float = 1e-9) -> ConvergenceReport:
    """Compare tau_t under the full interaction against the dynamics generated
    by the terms supported inside inner_sites, for the annihilator at one site."""
    t_grid = np.asarray(t_grid, dtype=float)
    ops = mode_operators(basis)
    h_full = build_interaction_hamiltonian(basis, interaction, ops=ops)
    h_small = build_interaction_hamiltonian(basis, interaction, ops=ops,
                                            support_within=inner_sites)
    ev_full = Evolution(h_full)
    ev_small = Evolution(h_small)
    dists = basis.window.distance_matrix()
    boundary = 0.0
    for term in interaction.terms:
        if term.support <= inner_sites:
            continue
        d_site = min(dists[site, s] for s in term.support)
        boundary += term.k * term.coupling * np.exp(-zeta * d_site)
    a = ops[site].toarray()
    diffs = np.zeros(len(t_grid))
    bounds = np.zeros(len(t_grid))
    for it, t in enumerate(t_grid):
        diffs[it] = operator_norm(ev_full.heisenberg(a, float(t)) - ev_small.heisenberg(a, float(t)))
        with np.errstate(over="ignore"):  # inf bound is trivially satisfied
            bounds[it] = 2.0 * g * (np.exp(zeta * velocity * abs(float(t))) - 1.0) * boundary
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bounds > 0, diffs / bounds, np.where(diffs > 1e-12, np.inf, 0.0))
    passed = bool(np.all(diffs <= bounds * (1.0 + rel_slack) + 1e-12))
    return ConvergenceReport(t_grid=t_grid, site=site, diffs=diffs, bounds=bounds,
                             boundary_sum=boundary, passed=passed,
                             max_ratio=float(np.max(ratios)) if ratios.size else 0.0)


def quasifree_expectation(window: Window, mp: MagneticParams, p_matrix: np.ndarray,
                          factors) -> complex:
    """Determinant form of a quasi-free expectation with one-particle density P:

        <a*(f_n) ... a*(f_1) a(g_1) ... a(g_m)> = delta_{nm} det [ <g_i, P f_j> ].

    The factors must be normal ordered (all creators first); P must be an
    orthogonal projection in the truncated angular coordinates.
    """
    p_matrix = np.asarray(p_matrix, dtype=np.complex128)
    if np.max(np.abs(p_matrix - p_matrix.conj().T)) > 1e-10:
        raise FockError("P must be Hermitian")
    if np.max(np.abs(p_matrix @ p_matrix - p_matrix)) > 1e-10:
        raise FockError("P must be idempotent")
    trunc, rows = window_coords(window, mp)
    if p_matrix.shape != (trunc + 1, trunc + 1):
        raise FockError(f"P shape {p_matrix.shape} mismatches coordinate size {trunc + 1}")
    seen_annihilator = False
    creators: list[int] = []
    annihilators: list[int] = []
    for site, dagger in factors:
        if dagger:
            if seen_annihilator:
                raise FockError("monomial is not normal ordered: creator after annihilator")
            creators.append(site)
        else:
            seen_annihilator = True
            annihilators.append(site)
    if len(creators) != len(annihilators):
        return 0.0 + 0.0j
    if not creators:
        return 1.0 + 0.0j
    n = len(creators)
    # creators listed left to right are f_n .. f_1
    fs = [rows[creators[n - 1 - j]] for j in range(n)]
    gs = [rows[annihilators[i]] for i in range(n)]
    gmat = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            gmat[i, j] = np.vdot(gs[i], p_matrix @ fs[j])
    return complex(np.linalg.det(gmat))
