"""Design ensembles and the trace-measurement sampling operator.

Two ensembles are supported:

* isotropic Gaussian design: matrices with i.i.d. standard normal entries
  (real, non-symmetric), or a complex Hermitian variant with unit entry
  variance for sensing complex Hermitian targets;
* Pauli basis design: draws X^i = d * E_j, with E_j the normalized Pauli
  tensor-product basis and j uniform on [0, d^2).

A plan stores the realized draws (matrices for Gaussian, basis indices for
Pauli) and is immutable after drawing; evaluation operations are pure, so
plans can be shared across concurrent replications.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .matrices import frobenius_norm, haar_orthonormal_columns, hermitize
from .tolerances import REAL_IMAG_ATOL

__all__ = [
    "PAULI_MATRICES",
    "DesignEnsemble",
    "SensingPlan",
    "gaussian_design",
    "pauli_design",
    "pauli_basis_element",
    "pauli_basis",
    "pauli_coefficients",
    "index_to_word",
    "word_to_index",
    "draw_plan",
    "draw_paired_plan",
    "full_basis_plan",
    "apply_sampling",
    "adjoint_average",
    "rip_statistic",
    "empirical_rip",
    "random_rank_k_direction",
    "write_plan",
    "read_plan",
]

PAULI_MATRICES = (
    np.array([[1, 0], [0, 1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# Full-basis arrays are memoized up to this many qubits (d = 32 needs ~16 MB);
# beyond that, coefficients are computed per word by tensor contraction.
_BASIS_CACHE_MAX_QUBITS = 5
_MAX_QUBITS = 8


def _num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim != 2**n:
        raise ValueError(f"Pauli design requires d a power of 2, got {dim}")
    return n


def index_to_word(index: int, num_qubits: int) -> tuple:
    """Base-4 digits of ``index``, most significant digit = first qubit."""
    if not 0 <= index < 4**num_qubits:
        raise ValueError(f"index {index} out of range for {num_qubits} qubits")
    digits = []
    for _ in range(num_qubits):
        digits.append(index % 4)
        index //= 4
    return tuple(reversed(digits))


def word_to_index(word) -> int:
    idx = 0
    for digit in word:
        idx = 4 * idx + int(digit)
    return idx


def pauli_basis_element(num_qubits: int, word) -> np.ndarray:
    """Normalized Pauli word 2^(-N/2) * sigma_{y_1} x ... x sigma_{y_N}."""
    if not 1 <= num_qubits <= _MAX_QUBITS:
        raise ValueError(f"number of qubits must be in [1, {_MAX_QUBITS}]")
    word = tuple(int(y) for y in word)
    if len(word) != num_qubits:
        raise ValueError(f"word length {len(word)} != {num_qubits}")
    if any(y not in (0, 1, 2, 3) for y in word):
        raise ValueError(f"invalid Pauli symbol in {word}")
    out = np.array([[1.0 + 0j]])
    for y in word:
        out = np.kron(out, PAULI_MATRICES[y])
    return out * 2.0 ** (-num_qubits / 2.0)


@functools.lru_cache(maxsize=4)
def pauli_basis(num_qubits: int) -> np.ndarray:
    """All 4^N basis elements as an array of shape (4^N, d, d), indexed by
    :func:`word_to_index`."""
    if not 1 <= num_qubits <= _BASIS_CACHE_MAX_QUBITS:
        raise ValueError(
            f"full basis materialized only up to {_BASIS_CACHE_MAX_QUBITS} qubits"
        )
    basis = np.ones((1, 1, 1), dtype=complex)
    for _ in range(num_qubits):
        dim = basis.shape[1]
        basis = np.einsum("jab,ycd->jyacbd", basis, np.stack(PAULI_MATRICES)).reshape(
            basis.shape[0] * 4, dim * 2, dim * 2
        )
    basis = basis * 2.0 ** (-num_qubits / 2.0)
    basis.setflags(write=False)
    return basis


@functools.lru_cache(maxsize=4)
def _basis_flat(num_qubits: int) -> np.ndarray:
    flat = pauli_basis(num_qubits).reshape(4**num_qubits, -1).copy()
    flat.setflags(write=False)
    return flat


def _coefficient_by_contraction(a: np.ndarray, word) -> complex:
    """tr(E_word a) without materializing E_word (O(N d^2) work)."""
    n = len(word)
    t = a.reshape((2,) * (2 * n))  # row axes first, column axes last
    for q, y in enumerate(word):
        m = n - q  # qubits left; row axis 0, matching column axis m
        t = np.tensordot(PAULI_MATRICES[y], t, axes=([0, 1], [m, 0]))
        # tensordot prepends nothing here (scalar contraction), axes shrink by 2
    return complex(t) * 2.0 ** (-n / 2.0)


def pauli_coefficients(a, num_qubits: int, indices=None) -> np.ndarray:
    """Basis coefficients <E_j, a> for all j, or only for ``indices``.

    For Hermitian ``a`` the coefficients are real up to rounding; they are
    returned as complex and it is the caller's business to take real parts.
    """
    a = np.asarray(a, dtype=complex)
    if num_qubits <= _BASIS_CACHE_MAX_QUBITS:
        coeffs = _basis_flat(num_qubits).conj() @ a.ravel()
        return coeffs if indices is None else coeffs[np.asarray(indices)]
    if indices is None:
        indices = np.arange(4**num_qubits)
    indices = np.asarray(indices)
    uniq, inverse = np.unique(indices, return_inverse=True)
    vals = np.array(
        [_coefficient_by_contraction(a, index_to_word(int(j), num_qubits)) for j in uniq]
    )
    return vals[inverse]


@dataclass(frozen=True)
class DesignEnsemble:
    """A measurement design family.

    kind
        ``"gaussian"`` or ``"pauli"``.
    dim
        Matrix dimension d (a power of two for Pauli).
    coherence
        Operator-norm bound constant K with ||E_j||_op <= K / sqrt(d); equals
        1 for the Pauli basis.
    hermitian
        Gaussian only: draw complex Hermitian matrices with unit entry
        variance instead of real i.i.d. entries.  Required when sensing
        complex-valued Hermitian targets.
    """

    kind: str
    dim: int
    coherence: float = 1.0
    hermitian: bool = False

    def __post_init__(self):
        if self.kind not in ("gaussian", "pauli"):
            raise ValueError(f"unknown design kind {self.kind!r}")
        if self.kind == "pauli":
            _num_qubits(self.dim)  # validates power of two
            if self.hermitian:
                raise ValueError("hermitian flag applies to gaussian designs only")
        if self.dim < 1 or self.dim > 256:
            raise ValueError("dimension must be in [1, 256]")

    @property
    def num_qubits(self) -> int:
        if self.kind != "pauli":
            raise ValueError("num_qubits is defined for Pauli designs only")
        return _num_qubits(self.dim)


def gaussian_design(dim: int, hermitian: bool = False) -> DesignEnsemble:
    return DesignEnsemble("gaussian", dim, coherence=float("nan"), hermitian=hermitian)


def pauli_design(num_qubits: int) -> DesignEnsemble:
    return DesignEnsemble("pauli", 2**num_qubits, coherence=1.0)


@dataclass(frozen=True)
class SensingPlan:
    """A realized sequence of design draws.

    Gaussian plans store the drawn matrices, shape (n, d, d); Pauli plans
    store basis indices in [0, d^2) (the realized X^i is d * E_index).
    ``seed`` is kept when the plan was drawn from an integer seed, which is
    what makes Gaussian plans serializable.
    """

    ensemble: DesignEnsemble
    n: int
    matrices: np.ndarray | None = None
    indices: np.ndarray | None = None
    seed: int | None = None

    @property
    def dim(self) -> int:
        return self.ensemble.dim


def draw_plan(ensemble: DesignEnsemble, n: int, rng) -> SensingPlan:
    """Draw ``n`` i.i.d. designs from the ensemble.

    ``rng`` may be an integer seed (recorded on the plan, enabling
    serialization of Gaussian plans) or any ``numpy.random`` generator.
    """
    if n < 1:
        raise ValueError("need at least one draw")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    gen = np.random.default_rng(rng)
    d = ensemble.dim
    if ensemble.kind == "gaussian":
        if ensemble.hermitian:
            m = (
                gen.standard_normal((n, d, d)) + 1j * gen.standard_normal((n, d, d))
            ) / np.sqrt(2.0)
            mats = (m + m.conj().transpose(0, 2, 1)) / np.sqrt(2.0)
        else:
            mats = gen.standard_normal((n, d, d))
        return SensingPlan(ensemble, n, matrices=mats, seed=seed)
    indices = gen.integers(0, d * d, size=n)
    return SensingPlan(ensemble, n, indices=indices, seed=seed)


def draw_paired_plan(ensemble: DesignEnsemble, n: int, rng) -> SensingPlan:
    """Plan of ``n`` draws where draw i and draw i + n/2 share the design."""
    if n % 2:
        raise ValueError("paired plans need an even number of draws")
    half = draw_plan(ensemble, n // 2, rng)
    if ensemble.kind == "gaussian":
        return SensingPlan(ensemble, n, matrices=np.concatenate([half.matrices] * 2))
    return SensingPlan(ensemble, n, indices=np.concatenate([half.indices] * 2))


def full_basis_plan(ensemble: DesignEnsemble, multiplicity: int) -> SensingPlan:
    """Deterministic Pauli plan measuring every basis index ``multiplicity``
    times (n = multiplicity * d^2), used for re-averaged estimates."""
    if ensemble.kind != "pauli":
        raise ValueError("full-basis plans exist for Pauli designs only")
    if multiplicity < 1:
        raise ValueError("multiplicity must be >= 1")
    d2 = ensemble.dim**2
    return SensingPlan(ensemble, multiplicity * d2, indices=np.tile(np.arange(d2), multiplicity))


def _require_real(values: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)
    worst = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if worst > REAL_IMAG_ATOL * scale:
        raise ValueError(
            f"trace measurements are not real (max imaginary part {worst:.3e}); "
            "complex Hermitian targets need a Hermitian or Pauli design"
        )
    return values.real


def apply_sampling(plan: SensingPlan, a) -> np.ndarray:
    """The sampling operator: component i is tr(X^i a), returned real."""
    a = np.asarray(a, dtype=complex)
    d = plan.dim
    if a.shape != (d, d):
        raise ValueError(f"matrix shape {a.shape} does not match design dimension {d}")
    if plan.ensemble.kind == "gaussian":
        # tr(X a) = sum_{mk} X_mk a_km; keep real designs in real arithmetic
        # rather than promoting the whole draw array to complex
        flat = plan.matrices.reshape(plan.n, -1)
        target = a.T.ravel()
        if np.iscomplexobj(flat):
            vals = flat @ target
        else:
            vals = flat @ np.ascontiguousarray(target.real)
            if np.any(target.imag):
                vals = vals + 1j * (flat @ np.ascontiguousarray(target.imag))
    else:
        coeffs = pauli_coefficients(a, plan.ensemble.num_qubits, plan.indices)
        vals = d * coeffs
    return _require_real(np.atleast_1d(np.asarray(vals)))


def adjoint_average(plan: SensingPlan, y) -> np.ndarray:
    """(1/n) sum_i X^i y_i, symmetrized onto the Hermitian space."""
    y = np.asarray(y, dtype=float)
    if y.shape != (plan.n,):
        raise ValueError(f"weight vector length {y.shape} != plan size {plan.n}")
    d = plan.dim
    if plan.ensemble.kind == "gaussian":
        m = (y @ plan.matrices.reshape(plan.n, -1)).reshape(d, d)
    else:
        w = np.bincount(plan.indices, weights=y, minlength=d * d)
        nq = plan.ensemble.num_qubits
        if nq <= _BASIS_CACHE_MAX_QUBITS:
            m = d * (w @ _basis_flat(nq)).reshape(d, d)
        else:
            m = np.zeros((d, d), dtype=complex)
            for j in np.nonzero(w)[0]:
                m += d * w[j] * pauli_basis_element(nq, index_to_word(int(j), nq))
    return hermitize(m / plan.n)


def rip_statistic(plan: SensingPlan, theta) -> float:
    """Relative isometry defect |(1/n)||X theta||^2 - ||theta||_F^2| / ||theta||_F^2."""
    fsq = frobenius_norm(theta) ** 2
    if fsq == 0:
        raise ValueError("isometry defect is undefined at theta = 0")
    vals = apply_sampling(plan, theta)
    return abs(float(np.mean(vals**2)) / fsq - 1.0)


def random_rank_k_direction(d: int, k: int, rng) -> np.ndarray:
    """Random rank-k Hermitian matrix with unit Frobenius norm."""
    gen = np.random.default_rng(rng)
    cols = haar_orthonormal_columns(d, k, gen)
    lam = gen.standard_normal(k)
    lam /= np.linalg.norm(lam)
    return hermitize((cols * lam) @ cols.conj().T)


def empirical_rip(ensemble: DesignEnsemble, n: int, k: int, trials: int, rng) -> float:
    """Monte-Carlo lower bound on the rank-k restricted isometry constant.

    One plan is drawn and shared across ``trials`` random rank-k unit-norm
    matrices; the exact supremum over the rank-k manifold is intractable, so
    the returned maximum is a lower bound on it.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    gen = np.random.default_rng(rng)
    plan = draw_plan(ensemble, n, gen)
    worst = 0.0
    for _ in range(trials):
        theta = random_rank_k_direction(ensemble.dim, k, gen)
        worst = max(worst, rip_statistic(plan, theta))
    return worst


# --- plan serialization -------------------------------------------------------
#
# Header line "kind d n seed"; Pauli plans then list one index per line, while
# Gaussian plans are re-derived from the recorded seed rather than stored.

def _kind_token(ensemble: DesignEnsemble) -> str:
    if ensemble.kind == "gaussian":
        return "gaussian-hermitian" if ensemble.hermitian else "gaussian"
    return "pauli"


def write_plan(plan: SensingPlan, path) -> None:
    token = _kind_token(plan.ensemble)
    if plan.ensemble.kind == "gaussian" and plan.seed is None:
        raise ValueError("gaussian plans are serialized by seed; this plan has none")
    seed = "-" if plan.seed is None else str(plan.seed)
    with open(path, "w") as fh:
        fh.write(f"{token} {plan.dim} {plan.n} {seed}\n")
        if plan.ensemble.kind == "pauli":
            for j in plan.indices:
                fh.write(f"{int(j)}\n")


def read_plan(path) -> SensingPlan:
    with open(path) as fh:
        token, d_str, n_str, seed_str = fh.readline().split()
        d, n = int(d_str), int(n_str)
        seed = None if seed_str == "-" else int(seed_str)
        if token == "pauli":
            ensemble = pauli_design(_num_qubits(d))
            indices = np.array([int(fh.readline()) for _ in range(n)])
            return SensingPlan(ensemble, n, indices=indices, seed=seed)
        ensemble = gaussian_design(d, hermitian=(token == "gaussian-hermitian"))
        if seed is None:
            raise ValueError("gaussian plan file lacks a seed")
        return draw_plan(ensemble, n, seed)
