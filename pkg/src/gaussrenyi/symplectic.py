"""Symplectic linear algebra on covariance matrices.

Conventions used throughout the package:

* quadratures are ordered ``(q_1, ..., q_n, p_1, ..., p_n)`` and the
  symplectic form is ``Omega = [[0, I_n], [-I_n, 0]]``;
* the vacuum has covariance ``V = I`` and a thermal mode with mean photon
  number ``N`` has symplectic eigenvalue ``nu = 2N + 1``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    AsymmetricInput,
    DimensionMismatch,
    NotFaithful,
    NotLegitimate,
    NotPositiveDefinite,
    NumericalFailure,
    RouteDisagreement,
)

EPS_FAITHFUL = 1e-9
LEGITIMACY_TOL = 1e-9
SYMMETRY_TOL = 1e-10


def omega(n):
    """Symplectic form for ``n`` modes in qq..pp ordering."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def _as_square_even(V, name="V"):
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {V.shape}")
    if V.shape[0] == 0 or V.shape[0] % 2:
        raise DimensionMismatch(f"{name} must have even positive dimension, got {V.shape[0]}")
    return V


def as_covariance(V, name="V"):
    """Return ``V`` as a float array after shape and symmetry checks."""
    V = _as_square_even(V, name)
    scale = max(1.0, float(np.max(np.abs(V))))
    if np.max(np.abs(V - V.T)) > SYMMETRY_TOL * scale:
        raise AsymmetricInput(f"{name} is not symmetric within {SYMMETRY_TOL:g}")
    return V


def _sqrtm_pd(V):
    w, U = np.linalg.eigh(V)
    if w[0] <= 0:
        raise NotPositiveDefinite(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    return (U * np.sqrt(w)) @ U.T


def symplectic_eigenvalues(V):
    """Symplectic eigenvalues of ``V`` in descending order.

    For positive-definite input they are the moduli of the eigenvalues of
    ``V^{1/2} Omega V^{1/2}``.  For indefinite input (never legitimate) the
    moduli of the eigenvalues of ``Omega V`` are returned as a diagnostic.
    """
    V = as_covariance(V)
    n = V.shape[0] // 2
    Om = omega(n)
    try:
        root = _sqrtm_pd(V)
    except NotPositiveDefinite:
        vals = np.sort(np.abs(np.linalg.eigvals(Om @ V)))[::-1]
        return vals[::2].copy()
    herm = 1j * (root @ Om @ root)
    vals = np.linalg.eigvalsh(herm)
    return np.sort(vals[n:])[::-1]


def uncertainty_min_eig(V):
    """Smallest eigenvalue of the Hermitian matrix ``V + i Omega``."""
    V = as_covariance(V)
    n = V.shape[0] // 2
    return float(np.linalg.eigvalsh(V + 1j * omega(n))[0])


@dataclass(frozen=True)
class ValidityReport:
    legitimate: bool
    faithful: bool
    nu: np.ndarray
    min_margin: float


def validate_covariance(V):
    """Check the uncertainty principle and faithfulness of ``V``.

    Returns:
        ValidityReport: ``legitimate`` iff ``V > 0`` and ``min nu >= 1 - 1e-9``;
        ``faithful`` iff additionally ``min nu >= 1 + EPS_FAITHFUL``.
    """
    V = as_covariance(V)
    pd = np.linalg.eigvalsh(V)[0] > 0
    nu = symplectic_eigenvalues(V)
    nu_min = float(nu.min())
    legitimate = bool(pd and nu_min >= 1.0 - LEGITIMACY_TOL)
    faithful = bool(legitimate and nu_min >= 1.0 + EPS_FAITHFUL)
    return ValidityReport(legitimate, faithful, nu, nu_min - 1.0)


def require_faithful(V, name="V"):
    report = validate_covariance(V)
    if not report.faithful:
        raise NotFaithful(
            f"{name} is not faithful (min symplectic eigenvalue {report.nu.min():.12g})"
        )
    return report


@dataclass(frozen=True)
class WilliamsonDecomposition:
    """``V = S (D + D) S^T`` with ``S`` symplectic and ``D = diag(nu)``."""

    S: np.ndarray
    nu: np.ndarray

    @property
    def n_modes(self):
        return self.nu.size

    def reconstruct(self, values=None):
        """``S (I_2 (x) diag(values)) S^T``; ``values`` defaults to ``nu``."""
        d = self.nu if values is None else np.asarray(values, dtype=float)
        return (self.S * np.concatenate([d, d])) @ self.S.T

    def inverse_S(self):
        n = self.n_modes
        Om = omega(n)
        return Om @ self.S.T @ Om.T


def williamson(V):
    """Williamson normal form of a positive-definite symmetric matrix.

    The canonical 2x2-block form of ``A = V^{1/2} Omega V^{1/2}`` is obtained
    from a real Schur decomposition, so the whole computation stays real.
    Columns are ordered by descending symplectic eigenvalue and each
    ``(q_k, p_k)`` column pair is signed so that the first non-negligible
    entry of the q-column is positive.

    Raises:
        NotPositiveDefinite: if ``V`` is not positive definite.
        NumericalFailure: if the Schur form is not block diagonal or the
            result fails its reconstruction checks.
    """
    V = as_covariance(V)
    n = V.shape[0] // 2
    Om = omega(n)
    root = _sqrtm_pd(V)
    A = root @ Om @ root
    A = 0.5 * (A - A.T)
    try:
        T, Z = scipy.linalg.schur(A, output="real")
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise NumericalFailure(f"real Schur decomposition failed: {exc}") from exc

    nu = np.empty(n)
    pairs = []
    for k in range(n):
        i = 2 * k
        b, c = T[i, i + 1], T[i + 1, i]
        if b * c >= 0:
            raise NumericalFailure("Schur form of V^1/2 Omega V^1/2 is not 2x2-block diagonal")
        qi, pi = (i, i + 1) if b > 0 else (i + 1, i)
        nu[k] = 0.5 * (abs(b) + abs(c))
        pairs.append((qi, pi))
    off = T.copy()
    for k in range(n):
        off[2 * k:2 * k + 2, 2 * k:2 * k + 2] = 0.0
    if np.max(np.abs(off)) > 1e-8 * max(1.0, np.max(np.abs(T))):
        raise NumericalFailure("Schur form of a skew-symmetric matrix is not block diagonal")

    order = np.argsort(-nu, kind="stable")
    nu = nu[order]
    O = np.empty_like(Z)
    for k, src in enumerate(order):
        qi, pi = pairs[src]
        O[:, k] = Z[:, qi]
        O[:, n + k] = Z[:, pi]
    inv_root_d = 1.0 / np.sqrt(np.concatenate([nu, nu]))
    S = (root @ O) * inv_root_d

    for k in range(n):
        col = S[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))
        if idx.size and col[idx[0]] < 0:
            S[:, k] *= -1.0
            S[:, n + k] *= -1.0

    decomposition = WilliamsonDecomposition(S, nu)
    scale = np.linalg.norm(V)
    if np.linalg.norm(decomposition.reconstruct() - V) > 1e-8 * scale:
        raise NumericalFailure("Williamson reconstruction check failed")
    if np.linalg.norm(S @ Om @ S.T - Om) > 1e-8 * max(1.0, np.linalg.norm(S, 2) ** 2):
        raise NumericalFailure("Williamson symplecticity check failed")
    return decomposition


def arcoth(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * np.log1p(2.0 / (x - 1.0))


def cov_to_hamiltonian(V):
    """Gibbs matrix ``H = 2 i Omega arcoth(V i Omega)`` of a faithful ``V``.

    Evaluated in the Williamson basis, ``H = S^{-T} (2 arcoth(D) + 2 arcoth(D)) S^{-1}``,
    which is real by construction.
    """
    require_faithful(V)
    wd = williamson(V)
    Sinv = wd.inverse_S()
    g = 2.0 * arcoth(wd.nu)
    H = (Sinv.T * np.concatenate([g, g])) @ Sinv
    return 0.5 * (H + H.T)


def hamiltonian_to_cov(H):
    """Covariance matrix ``V = coth(i Omega H / 2) i Omega`` of a Gibbs matrix ``H``."""
    H = as_covariance(H, name="H")
    wd = williamson(H)
    Sinv = wd.inverse_S()
    c = 1.0 / np.tanh(0.5 * wd.nu)
    V = (Sinv.T * np.concatenate([c, c])) @ Sinv
    return 0.5 * (V + V.T)


def log_partition_from_nu(nu):
    nu = np.asarray(nu, dtype=float)
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(0.5) + 0.5 * np.log(np.maximum(nu - 1.0, 0.0)) + 0.5 * np.log(nu + 1.0)))


def gaussian_partition(V):
    """``Z = sqrt(det((V + i Omega)/2)) = prod_j sqrt(nu_j^2 - 1)/2`` for legitimate ``V``."""
    report = validate_covariance(V)
    if not report.legitimate:
        raise NotLegitimate("covariance matrix violates the uncertainty principle")
    return float(np.exp(log_partition_from_nu(report.nu)))


def log_gaussian_partition(V):
    report = validate_covariance(V)
    if not report.legitimate:
        raise NotLegitimate("covariance matrix violates the uncertainty principle")
    return log_partition_from_nu(report.nu)


def _spectral_route_b(V, f):
    n = V.shape[0] // 2
    iOm = 1j * omega(n)
    M = V @ iOm
    lam, X = np.linalg.eig(M)
    Xinv = np.linalg.inv(X)
    if np.linalg.norm(M - (X * lam) @ Xinv) > 1e-9 * np.linalg.norm(M):
        raise NumericalFailure("eigendecomposition of V i Omega failed its residual check")
    x = lam.real
    fx = np.sign(x) * np.asarray(f(np.abs(x)), dtype=float)
    R = (X * fx) @ Xinv @ iOm
    if np.max(np.abs(R.imag)) > 1e-8 * max(1.0, np.max(np.abs(R))):
        raise NumericalFailure("matrix function of V i Omega has a non-negligible imaginary part")
    R = R.real
    return 0.5 * (R + R.T)


def apply_spectral_function(V, f, route="A", rtol=1e-7):
    """Apply a scalar function to the symplectic spectrum of ``V``.

    Route ``"A"`` (default) returns ``S (I_2 (x) f(D)) S^T`` from the
    Williamson decomposition.  Route ``"B"`` evaluates ``f_odd(V i Omega) i Omega``
    from a complex eigendecomposition, ``f_odd`` being the odd extension of
    ``f``.  Route ``"both"`` computes the two and raises
    :class:`RouteDisagreement` if they differ by more than ``rtol`` relative.

    Args:
        V: faithful covariance matrix.
        f: vectorised scalar function, finite on the symplectic spectrum.
    """
    V = as_covariance(V)
    require_faithful(V)
    if route not in ("A", "B", "both"):
        raise ValueError(f"unknown route {route!r}")
    out_a = out_b = None
    if route in ("A", "both"):
        wd = williamson(V)
        out_a = wd.reconstruct(np.asarray(f(wd.nu), dtype=float))
        out_a = 0.5 * (out_a + out_a.T)
    if route in ("B", "both"):
        out_b = _spectral_route_b(V, f)
    if route == "both":
        scale = max(np.linalg.norm(out_a), np.finfo(float).tiny)
        if np.linalg.norm(out_a - out_b) > rtol * scale:
            raise RouteDisagreement("Williamson and V i Omega routes disagree")
    return out_a if out_a is not None else out_b


def symplectic_spectral_reduce(V, f, mode="sum"):
    """``sum_j f(nu_j)`` or ``prod_j f(nu_j)`` over the symplectic spectrum."""
    report = validate_covariance(V)
    if not report.legitimate:
        raise NotLegitimate("covariance matrix violates the uncertainty principle")
    with np.errstate(divide="raise", invalid="raise"):
        try:
            vals = np.asarray(f(report.nu), dtype=float)
        except FloatingPointError as exc:
            raise NotFaithful("function is singular on the symplectic spectrum") from exc
    if not np.all(np.isfinite(vals)):
        raise NotFaithful("function is singular on the symplectic spectrum")
    if mode == "sum":
        return float(np.sum(vals))
    if mode == "product":
        return float(np.prod(vals))
    raise ValueError(f"mode must be 'sum' or 'product', got {mode!r}")


def spectral_reduce_by_matrix(V, f, mode="sum"):
    """Matrix-function form of :func:`symplectic_spectral_reduce`.

    ``sum = Tr f(sqrt(-V Omega V Omega)) / 2`` and
    ``prod = sqrt(det f(sqrt(-V Omega V Omega)))``.
    """
    V = as_covariance(V)
    n = V.shape[0] // 2
    Om = omega(n)
    M = -V @ Om @ V @ Om
    mu, X = np.linalg.eig(M)
    Xinv = np.linalg.inv(X)
    root = np.sqrt(np.maximum(mu.real, 0.0))
    F = (X * np.asarray(f(root), dtype=float)) @ Xinv
    if mode == "sum":
        return float(0.5 * np.trace(F).real)
    if mode == "product":
        return float(np.sqrt(np.linalg.det(F).real))
    raise ValueError(f"mode must be 'sum' or 'product', got {mode!r}")


@dataclass(frozen=True)
class GaussianState:
    """Gaussian state given by its mean vector and covariance matrix."""

    mean: np.ndarray
    cov: np.ndarray
    report: ValidityReport = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cov = as_covariance(self.cov, name="cov")
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if mean.size != cov.shape[0]:
            raise DimensionMismatch(
                f"mean has length {mean.size} but covariance is {cov.shape[0]}x{cov.shape[0]}"
            )
        report = validate_covariance(cov)
        if not report.legitimate:
            raise NotLegitimate("covariance matrix violates the uncertainty principle")
        cov = cov.copy()
        mean = mean.copy()
        cov.setflags(write=False)
        mean.setflags(write=False)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "report", report)

    @classmethod
    def from_cov(cls, cov, mean=None):
        cov = np.asarray(cov, dtype=float)
        if mean is None:
            mean = np.zeros(cov.shape[0])
        return cls(mean, cov)

    @property
    def n_modes(self):
        return self.cov.shape[0] // 2

    @property
    def faithful(self):
        return self.report.faithful

    @property
    def nu(self):
        return self.report.nu

    def log_partition(self):
        return log_partition_from_nu(self.report.nu)

    def transformed(self, S, d=None):
        """State after the Gaussian unitary ``V -> S V S^T``, ``s -> S s + d``."""
        S = np.asarray(S, dtype=float)
        mean = S @ self.mean
        if d is not None:
            mean = mean + np.asarray(d, dtype=float)
        cov = S @ self.cov @ S.T
        return GaussianState(mean, 0.5 * (cov + cov.T))

    def allclose(self, other, atol=1e-12):
        return (
            self.cov.shape == other.cov.shape
            and np.max(np.abs(self.cov - other.cov)) <= atol
            and np.max(np.abs(self.mean - other.mean)) <= atol
        )
