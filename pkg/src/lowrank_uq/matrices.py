"""Dense Hermitian matrix primitives.

Norms, spectral decompositions, best low-rank approximation, and Frobenius
projections onto the quantum state space (positive semi-definite, unit trace)
and its rank-constrained subsets.  Matrices are plain complex ndarrays;
the validation helpers enforce the Hermitian / density-matrix contracts at
module boundaries.  Complex storage is used even for real-valued problems so
that there is a single code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tolerances import (
    EIG_RECON_RTOL,
    HERMITIAN_ATOL,
    NUCLEAR_SLACK,
    PSD_ATOL,
    TRACE_ATOL,
)

__all__ = [
    "EigendecompositionError",
    "SpectralDecomposition",
    "check_hermitian",
    "check_quantum_state",
    "hermitize",
    "frobenius_norm",
    "nuclear_norm",
    "operator_norm",
    "eigh",
    "best_rank_k",
    "project_to_simplex",
    "project_state_space",
    "project_rank_k_state_space",
    "random_rank_k_state",
    "haar_orthonormal_columns",
    "write_matrix_text",
    "read_matrix_text",
]


class EigendecompositionError(np.linalg.LinAlgError):
    """Eigensolver failed to converge within its iteration cap."""


def hermitize(a: np.ndarray) -> np.ndarray:
    """Symmetrize to the nearest Hermitian matrix, (A + A^dagger) / 2."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def check_hermitian(a, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate that ``a`` is square and Hermitian; return it as complex."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    dev = float(np.max(np.abs(a - a.conj().T)))
    if dev > atol * scale:
        raise ValueError(f"matrix is not Hermitian: max asymmetry {dev:.3e}")
    return a


def check_quantum_state(rho) -> np.ndarray:
    """Validate the density-matrix contract: Hermitian, unit trace, PSD."""
    rho = check_hermitian(rho)
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > TRACE_ATOL:
        raise ValueError(f"state trace is {tr!r}, expected 1")
    lam = np.linalg.eigvalsh(rho)
    if lam.min() < -PSD_ATOL:
        raise ValueError(f"state has negative eigenvalue {lam.min():.3e}")
    if np.abs(lam).sum() > 1.0 + NUCLEAR_SLACK:
        raise ValueError("state nuclear norm exceeds 1")
    return rho


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def nuclear_norm(a) -> float:
    """Sum of absolute eigenvalues (= singular values for Hermitian input)."""
    return float(np.abs(np.linalg.eigvalsh(check_hermitian(a))).sum())


def operator_norm(a) -> float:
    """Largest absolute eigenvalue."""
    return float(np.abs(np.linalg.eigvalsh(check_hermitian(a))).max())


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted non-increasing, column ``i`` of ``eigenvectors``
    paired with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eigh(a) -> SpectralDecomposition:
    """Full spectral decomposition with eigenvalues in descending order."""
    a = check_hermitian(a)
    try:
        lam, vec = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigendecompositionError(
            f"eigendecomposition did not converge for a {a.shape[0]}x{a.shape[0]} "
            f"matrix with frobenius norm {frobenius_norm(a):.6e}"
        ) from exc
    order = np.argsort(lam)[::-1]
    dec = SpectralDecomposition(lam[order], vec[:, order])
    scale = frobenius_norm(a)
    if scale > 0:
        resid = frobenius_norm(dec.reconstruct() - a)
        if resid > EIG_RECON_RTOL * scale:
            raise EigendecompositionError(
                f"eigendecomposition residual {resid:.3e} exceeds "
                f"{EIG_RECON_RTOL:g} * {scale:.3e}"
            )
    return dec


def best_rank_k(a, k: int) -> np.ndarray:
    """Frobenius-closest matrix of rank <= k.

    Keeps the ``k`` eigenvalues of largest magnitude together with their
    eigenvectors and zeroes the rest.
    """
    a = check_hermitian(a)
    d = a.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"rank must be in [1, {d}], got {k}")
    dec = eigh(a)
    keep = np.argsort(-np.abs(dec.eigenvalues))[:k]
    lam = np.zeros(d)
    lam[keep] = dec.eigenvalues[keep]
    v = dec.eigenvectors
    return (v * lam) @ v.conj().T


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex.

    Sort-and-threshold method, exact in O(d log d).
    """
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - cssv / idx > 0)[0][-1]
    tau = cssv[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def project_state_space(a) -> np.ndarray:
    """Frobenius projection onto the state space (PSD, unit trace).

    Eigendecompose, project the eigenvalue vector onto the probability
    simplex, reassemble.
    """
    dec = eigh(a)
    w = project_to_simplex(dec.eigenvalues)
    v = dec.eigenvectors
    return hermitize((v * w) @ v.conj().T)


def project_rank_k_state_space(a, k: int) -> np.ndarray:
    """Frobenius projection onto rank-<=k density matrices.

    Keeps the ``k`` algebraically largest eigenvalues, projects that
    k-vector onto the probability simplex, and reassembles with the
    retained eigenvectors.
    """
    a = check_hermitian(a)
    d = a.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"rank must be in [1, {d}], got {k}")
    dec = eigh(a)
    w = project_to_simplex(dec.eigenvalues[:k])
    v = dec.eigenvectors[:, :k]
    return hermitize((v * w) @ v.conj().T)


def haar_orthonormal_columns(d: int, k: int, rng) -> np.ndarray:
    """k Haar-distributed orthonormal columns in C^d (QR with phase fix)."""
    gen = np.random.default_rng(rng)
    z = gen.standard_normal((d, k)) + 1j * gen.standard_normal((d, k))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases.conj()


def random_rank_k_state(d: int, k: int, rng, weights=None) -> np.ndarray:
    """Random rank-k density matrix: Haar eigenvectors, simplex-uniform weights.

    ``weights`` may be supplied explicitly (length k, nonnegative, summing
    to one) to pin the spectrum.
    """
    if not 1 <= k <= d:
        raise ValueError(f"rank must be in [1, {d}], got {k}")
    gen = np.random.default_rng(rng)
    cols = haar_orthonormal_columns(d, k, gen)
    if weights is None:
        w = gen.dirichlet(np.ones(k))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (k,) or w.min() < 0 or abs(w.sum() - 1.0) > TRACE_ATOL:
            raise ValueError("weights must be a length-k probability vector")
    return hermitize((cols * w) @ cols.conj().T)


# --- fixture text format -----------------------------------------------------
#
# First line: the dimension d.  Then d lines of d entries "re+imi" separated
# by whitespace, each component printed with 17 significant digits so that
# write/read round-trips are bit identical for double precision values.

def _format_entry(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def _parse_entry(tok: str) -> complex:
    if not tok.endswith("i"):
        raise ValueError(f"bad matrix entry {tok!r}")
    body = tok[:-1]
    # imaginary part starts at the last sign that is not an exponent sign
    for pos in range(len(body) - 1, 0, -1):
        c = body[pos]
        if c in "+-" and body[pos - 1] not in "eE":
            return complex(float(body[:pos]), float(body[pos:]))
    raise ValueError(f"bad matrix entry {tok!r}")


def write_matrix_text(a, path) -> None:
    a = check_hermitian(a)
    d = a.shape[0]
    with open(path, "w") as fh:
        fh.write(f"{d}\n")
        for row in a:
            fh.write(" ".join(_format_entry(z) for z in row) + "\n")


def read_matrix_text(path) -> np.ndarray:
    with open(path) as fh:
        d = int(fh.readline().strip())
        rows = []
        for _ in range(d):
            toks = fh.readline().split()
            if len(toks) != d:
                raise ValueError(f"expected {d} entries per row, got {len(toks)}")
            rows.append([_parse_entry(t) for t in toks])
    return check_hermitian(np.array(rows, dtype=complex))
