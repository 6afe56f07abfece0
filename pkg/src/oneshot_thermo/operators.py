"""Finite-dimensional Hermitian operator algebra.

Operators come in two representations: a dense complex matrix (capped at
dim <= 2**10) and a dedicated diagonal representation (capped at dim <= 2**14)
used whenever the operator is diagonal in the computational basis.  The
diagonal fast path is what carries all large-n chain computations; the dense
path is reserved for genuinely quantum (non-commuting) inputs.

All values are immutable after construction (backing arrays are marked
read-only) and every operation is a pure function, so everything here is safe
to share across threads.

Conventions: natural logarithms throughout, 0*ln(0) := 0, energies in abstract
energy units.
"""

import numpy as np

from .errors import DimensionLimit, InvalidOperator, ShapeError

MAX_DENSE_DIM = 2 ** 10
MAX_DIAG_DIM = 2 ** 14

HERMITICITY_RTOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
TRACE_ATOL = 1e-10
COMMUTATOR_TOL = 1e-10


def _freeze(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


class HermitianOperator:
    """A Hermitian matrix, stored dense or diagonal.

    Construct from a square complex array, or via :meth:`diagonal` from a real
    vector of eigenvalues in the computational basis.
    """

    __slots__ = ("dim", "_mat", "_diag")

    def __init__(self, entries, _validated=False):
        mat = np.asarray(entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidOperator(f"expected a square matrix, got shape {mat.shape}")
        if mat.shape[0] > MAX_DENSE_DIM:
            raise DimensionLimit(
                f"dense dim {mat.shape[0]} exceeds cap {MAX_DENSE_DIM}; "
                "use the diagonal representation"
            )
        if not _validated:
            scale = np.linalg.norm(mat, "fro")
            dev = np.linalg.norm(mat - mat.conj().T, "fro")
            if dev > HERMITICITY_RTOL * max(scale, 1.0):
                raise InvalidOperator(
                    f"matrix is not Hermitian (relative deviation {dev / max(scale, 1.0):.3e})"
                )
            mat = 0.5 * (mat + mat.conj().T)
        self.dim = mat.shape[0]
        self._mat = _freeze(mat)
        self._diag = None

    @classmethod
    def diagonal(cls, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1:
            raise InvalidOperator("diagonal representation expects a 1-d real vector")
        if values.size > MAX_DIAG_DIM:
            raise DimensionLimit(f"diagonal dim {values.size} exceeds cap {MAX_DIAG_DIM}")
        op = cls.__new__(cls)
        op.dim = values.size
        op._mat = None
        op._diag = _freeze(values)
        return op

    @classmethod
    def _from_matrix_unchecked(cls, mat):
        op = cls.__new__(cls)
        op.dim = mat.shape[0]
        op._mat = _freeze(np.asarray(mat, dtype=complex))
        op._diag = None
        return op

    @property
    def is_diagonal(self):
        return self._diag is not None

    @property
    def diag(self):
        """Diagonal entries as a real vector (only for diagonal operators)."""
        if self._diag is None:
            raise InvalidOperator("operator is stored dense; use .matrix()")
        return self._diag

    def matrix(self):
        """Dense complex matrix (materializes diagonal operators, dense cap applies)."""
        if self._mat is not None:
            return self._mat
        if self.dim > MAX_DENSE_DIM:
            raise DimensionLimit(
                f"cannot densify diagonal operator of dim {self.dim} (cap {MAX_DENSE_DIM})"
            )
        return np.diag(self._diag.astype(complex))

    def diag_or_none(self):
        """Diagonal entries if this operator is numerically diagonal, else None."""
        if self._diag is not None:
            return self._diag
        off = self._mat - np.diag(np.diag(self._mat))
        scale = max(np.linalg.norm(self._mat, "fro"), 1.0)
        if np.linalg.norm(off, "fro") <= 1e-13 * scale:
            return np.real(np.diag(self._mat))
        return None

    def trace(self):
        if self._diag is not None:
            return float(np.sum(self._diag))
        return float(np.real(np.trace(self._mat)))

    def to_json_dict(self):
        if self._diag is not None:
            return {"dim": self.dim, "diag": [float(x) for x in self._diag]}
        return {
            "dim": self.dim,
            "re": np.real(self._mat).tolist(),
            "im": np.imag(self._mat).tolist(),
        }

    @classmethod
    def from_json_dict(cls, d):
        if "diag" in d:
            diag = np.asarray(d["diag"], dtype=float)
            if int(d["dim"]) != diag.size:
                raise InvalidOperator("dim field inconsistent with diag length")
            return cls.diagonal(diag)
        mat = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        if int(d["dim"]) != mat.shape[0]:
            raise InvalidOperator("dim field inconsistent with matrix shape")
        return cls(mat)

    def __repr__(self):
        kind = "diag" if self.is_diagonal else "dense"
        return f"{type(self).__name__}(dim={self.dim}, {kind})"


class DensityOperator(HermitianOperator):
    """A state: Hermitian, positive semidefinite, unit trace."""

    __slots__ = ()

    def __init__(self, entries, _validated=False):
        super().__init__(entries, _validated=_validated)
        if not _validated:
            w = np.linalg.eigvalsh(self._mat)
            if w.min() < EIGENVALUE_FLOOR:
                raise InvalidOperator(f"negative eigenvalue {w.min():.3e} below floor")
            tr = float(np.sum(w))
            if abs(tr - 1.0) > TRACE_ATOL:
                raise InvalidOperator(f"trace {tr!r} differs from 1 beyond tolerance")

    @classmethod
    def diagonal(cls, values):
        values = np.asarray(values, dtype=float)
        if values.size and values.min() < EIGENVALUE_FLOOR:
            raise InvalidOperator(f"negative probability {values.min():.3e}")
        if abs(values.sum() - 1.0) > TRACE_ATOL:
            raise InvalidOperator(f"probabilities sum to {values.sum()!r}, not 1")
        op = cls.__new__(cls)
        op.dim = values.size
        if values.size > MAX_DIAG_DIM:
            raise DimensionLimit(f"diagonal dim {values.size} exceeds cap {MAX_DIAG_DIM}")
        op._mat = None
        op._diag = _freeze(values)
        return op

    @classmethod
    def pure(cls, ket):
        """Rank-one state |psi><psi| from a (normalized) amplitude vector."""
        v = np.asarray(ket, dtype=complex).ravel()
        n = np.linalg.norm(v)
        if n == 0:
            raise InvalidOperator("zero vector cannot be normalized")
        v = v / n
        return cls._from_matrix_unchecked(np.outer(v, v.conj()))


class SpectralDecomposition:
    """Degeneracy-merged eigendecomposition of a Hermitian operator.

    ``eigenvalues`` are sorted descending, one entry per merged eigenspace;
    ``projectors`` are the matching orthogonal projectors (dense matrices).
    """

    __slots__ = ("eigenvalues", "projectors", "multiplicities")

    def __init__(self, eigenvalues, projectors, multiplicities):
        self.eigenvalues = _freeze(np.asarray(eigenvalues, dtype=float))
        self.projectors = tuple(_freeze(p) for p in projectors)
        self.multiplicities = tuple(int(m) for m in multiplicities)

    def reconstruct(self):
        out = np.zeros_like(self.projectors[0])
        for lam, p in zip(self.eigenvalues, self.projectors):
            out = out + lam * p
        return out


def eig(a, merge_tol=None):
    """Degeneracy-merged spectral decomposition.

    Eigenvalues closer than ``merge_tol`` (default 1e-8 times the spectral
    range) are treated as one eigenspace; the merged eigenvalue is the
    multiplicity-weighted mean.
    """
    if not isinstance(a, HermitianOperator):
        a = HermitianOperator(a)
    if a.is_diagonal:
        vals = a.diag
        mat_dim = a.dim
        if mat_dim > MAX_DENSE_DIM:
            raise DimensionLimit("eig with explicit projectors needs dim <= 2**10")
        vecs = np.eye(mat_dim, dtype=complex)
    else:
        vals, vecs = np.linalg.eigh(a.matrix())
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    spread = float(vals[0] - vals[-1]) if vals.size > 1 else 0.0
    if merge_tol is None:
        merge_tol = 1e-8 * max(spread, 1e-300)
    merged_vals, projectors, mults = [], [], []
    i = 0
    while i < vals.size:
        j = i + 1
        while j < vals.size and vals[j - 1] - vals[j] <= merge_tol:
            j += 1
        block = vecs[:, i:j]
        merged_vals.append(float(np.mean(vals[i:j])))
        projectors.append(block @ block.conj().T)
        mults.append(j - i)
        i = j
    return SpectralDecomposition(merged_vals, projectors, mults)


def tensor(a, b):
    """Kronecker product of two operators; trace is multiplicative."""
    out_dim = a.dim * b.dim
    if a.is_diagonal and b.is_diagonal:
        if out_dim > MAX_DIAG_DIM:
            raise DimensionLimit(f"tensor dim {out_dim} exceeds cap {MAX_DIAG_DIM}")
        vals = np.multiply.outer(a.diag, b.diag).ravel()
        cls = _result_class(a, b)
        op = cls.__new__(cls)
        op.dim = vals.size
        op._mat = None
        op._diag = _freeze(vals)
        return op
    if out_dim > MAX_DENSE_DIM:
        raise DimensionLimit(f"dense tensor dim {out_dim} exceeds cap {MAX_DENSE_DIM}")
    mat = np.kron(a.matrix(), b.matrix())
    cls = _result_class(a, b)
    return cls._from_matrix_unchecked(mat)


def _result_class(a, b):
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator
    return HermitianOperator


def partial_trace(rho, factor_dims, keep):
    """Trace out the tensor factors not listed in ``keep``.

    ``factor_dims`` lists the factor dimensions in tensor order; ``keep`` is a
    collection of factor indices to retain (order preserved by position).
    """
    dims = [int(d) for d in factor_dims]
    if int(np.prod(dims)) != rho.dim:
        raise ShapeError(f"product of factor_dims {dims} != dim {rho.dim}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ShapeError(f"keep indices {keep} out of range for {len(dims)} factors")
    if len(keep) == len(dims):
        return rho
    drop = [i for i in range(len(dims)) if i not in keep]
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    if rho.is_diagonal:
        t = rho.diag.reshape(dims)
        t = np.sum(t, axis=tuple(drop))
        return DensityOperator.diagonal(t.ravel())
    t = rho.matrix().reshape(dims + dims)
    n = len(dims)
    for d in reversed(drop):
        t = np.trace(t, axis1=d, axis2=d + n)
        n -= 1
    mat = t.reshape(kept_dim, kept_dim)
    return DensityOperator._from_matrix_unchecked(0.5 * (mat + mat.conj().T))


def trace_distance(rho, sigma):
    """(1/2)||rho - sigma||_1."""
    if rho.dim != sigma.dim:
        raise ShapeError(f"dims {rho.dim} and {sigma.dim} differ")
    if rho.is_diagonal and sigma.is_diagonal:
        return 0.5 * float(np.sum(np.abs(rho.diag - sigma.diag)))
    w = np.linalg.eigvalsh(rho.matrix() - sigma.matrix())
    return 0.5 * float(np.sum(np.abs(w)))


def commutes(a, b, tol=COMMUTATOR_TOL):
    """True if [a, b] vanishes within ``tol`` relative to the operand scales."""
    if a.dim != b.dim:
        raise ShapeError(f"dims {a.dim} and {b.dim} differ")
    if a.is_diagonal and b.is_diagonal:
        return True
    am, bm = a.matrix(), b.matrix()
    comm = am @ bm - bm @ am
    scale = max(np.linalg.norm(am, "fro") * np.linalg.norm(bm, "fro"), 1.0)
    return np.linalg.norm(comm, "fro") <= tol * np.sqrt(scale)


def dephase(rho, hamiltonian, merge_tol=None):
    """Pinch rho in the (degeneracy-merged) eigenbasis of the Hamiltonian.

    Returns sum_k P_k rho P_k.  Trace-preserving, positivity-preserving,
    idempotent; leaves anything commuting with the Hamiltonian unchanged.
    """
    if rho.dim != hamiltonian.dim:
        raise ShapeError(f"dims {rho.dim} and {hamiltonian.dim} differ")
    if rho.is_diagonal and hamiltonian.is_diagonal:
        return rho
    sd = eig(hamiltonian, merge_tol)
    rmat = rho.matrix()
    out = np.zeros_like(rmat)
    for p in sd.projectors:
        out += p @ rmat @ p
    out = 0.5 * (out + out.conj().T)
    return DensityOperator._from_matrix_unchecked(out)
