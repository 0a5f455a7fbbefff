"""Covariance-level counterparts of operator powers and products of Gaussian forms.

Every map here takes covariance matrices of exponential quadratic forms
``exp(-x^T H x / 2)`` and returns the covariance matrix of the composed form
(or its symplectic spectrum), never the Gibbs matrix ``H`` itself.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AlphaOutOfRange, AsymmetricInput, FeasibilityViolated, NotLegitimate, NumericalFailure
from .symplectic import (
    arcoth,
    as_covariance,
    log_partition_from_nu,
    omega,
    require_faithful,
    validate_covariance,
    williamson,
)

FEAS_REL = 1e-9


def f_alpha(nu, alpha):
    """Symplectic eigenvalue of the normalised power ``rho^alpha``.

    ``((nu+1)^a + (nu-1)^a) / ((nu+1)^a - (nu-1)^a) = coth(a * arcoth(nu))``.
    """
    return 1.0 / np.tanh(alpha * arcoth(nu))


def log_two_sinh(x):
    """``log(2 sinh x)`` for ``x > 0`` without overflow or cancellation."""
    x = np.asarray(x, dtype=float)
    return x + np.log(-np.expm1(-2.0 * x))


def log_power_partition(nu, alpha):
    """``log Tr exp(-x^T (alpha H) x / 2)`` from the symplectic spectrum of ``H``'s covariance.

    Uses ``sqrt(f^2 - 1)/2 = 1/(2 sinh(alpha arcoth nu))`` so that it stays
    accurate when ``alpha`` is large and ``f_alpha(nu)`` rounds to 1.
    """
    return float(-np.sum(log_two_sinh(alpha * arcoth(nu))))


def eps_feas(*matrices):
    """Scale-aware strict-positivity threshold ``1e-9 (1 + max ||V||_2)``."""
    return FEAS_REL * (1.0 + max(np.linalg.norm(M, 2) for M in matrices))


def min_eig(M):
    M = np.asarray(M, dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def _symmetrized(M, what):
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > 1e-9 * scale:
        raise AsymmetricInput(f"{what} lost symmetry beyond 1e-9")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class PowerState:
    """Covariance ``cov`` and log-partition of the form ``exp(-x^T (alpha H) x / 2)``."""

    cov: np.ndarray
    log_partition: float
    nu: np.ndarray
    alpha: float

    @property
    def partition(self):
        return float(np.exp(self.log_partition))


def power_state(V, alpha):
    """Covariance matrix of ``rho^alpha / Tr rho^alpha`` and ``Tr exp(-alpha x^T H x / 2)``.

    Raises:
        AlphaOutOfRange: if ``alpha <= 0``.
        NotFaithful: if ``V`` is not faithful.
    """
    if not alpha > 0:
        raise AlphaOutOfRange(f"power must be positive, got {alpha}")
    V = as_covariance(V)
    require_faithful(V)
    wd = williamson(V)
    nu_pow = f_alpha(wd.nu, alpha)
    cov = wd.reconstruct(nu_pow)
    cov = 0.5 * (cov + cov.T)
    return PowerState(cov, log_power_partition(wd.nu, alpha), nu_pow, float(alpha))


def special_power_forms(V, which):
    """Closed forms for the covariance of ``rho^2`` and ``rho^{1/2}``.

    ``square``: ``(V + Omega V^{-1} Omega^T) / 2``.
    ``sqrt``: ``(sqrt(I + (V Omega)^{-2}) + I) V`` with a principal matrix square root.
    """
    V = as_covariance(V)
    require_faithful(V)
    n = V.shape[0] // 2
    Om = omega(n)
    if which == "square":
        out = 0.5 * (V + Om @ np.linalg.solve(V, Om.T))
    elif which == "sqrt":
        inv_vo = np.linalg.inv(V @ Om)
        root = scipy.linalg.sqrtm(np.eye(2 * n) + inv_vo @ inv_vo)
        out = ((root + np.eye(2 * n)) @ V).real
    else:
        raise ValueError(f"which must be 'square' or 'sqrt', got {which!r}")
    return 0.5 * (out + out.T)


def compose_product(V1, V2):
    """Complex-symmetric covariance ``V3`` of the product of two Gaussian forms.

    ``V3 = -i Omega + (V2 + i Omega)(V2 + V1)^{-1}(V1 + i Omega)``.
    """
    V1 = as_covariance(V1, "V1")
    V2 = as_covariance(V2, "V2")
    require_faithful(V1, "V1")
    require_faithful(V2, "V2")
    n = V1.shape[0] // 2
    iOm = 1j * omega(n)
    V3 = -iOm + (V2 + iOm) @ np.linalg.solve(V1 + V2, V1 + iOm)
    scale = max(1.0, float(np.max(np.abs(V3))))
    if np.max(np.abs(V3 - V3.T)) > 1e-9 * scale:
        raise AsymmetricInput("composed covariance is not complex-symmetric")
    return 0.5 * (V3 + V3.T)


def composed_trace(V3):
    """Principal ``sqrt(det((V3 + i Omega)/2))`` of a complex-symmetric form."""
    V3 = np.asarray(V3, dtype=complex)
    n = V3.shape[0] // 2
    return complex(np.sqrt(np.linalg.det(0.5 * (V3 + 1j * omega(n)))))


def _sqrt_factor(V4):
    """``K = sqrt(I + (V4 Omega)^{-2}) V4 = S (I_2 (x) sqrt(D^2 - I)) S^T``."""
    wd = williamson(V4)
    nu = wd.nu
    return wd.reconstruct(np.sqrt((nu - 1.0) * (nu + 1.0)))


def sandwich_by_sqrt(V4, V5):
    """Covariance ``V6`` of ``exp(-x H4 x/4) exp(-x H5 x/2) exp(-x H4 x/4)``.

    ``V6 = V4 - K (V5 + V4)^{-1} K`` with ``K = sqrt(I + (V4 Omega)^{-2}) V4``.

    Only ``V4`` has to be faithful; ``V5`` enters through ``(V5 + V4)^{-1}``
    and may be as pure as a high power of a state gets.

    Raises:
        NotFaithful: if ``V4`` is not faithful.
        NotLegitimate: if ``V5`` is not a legitimate covariance matrix.
    """
    V4 = as_covariance(V4, "V4")
    V5 = as_covariance(V5, "V5")
    require_faithful(V4, "V4")
    if not validate_covariance(V5).legitimate:
        raise NotLegitimate("V5 violates the uncertainty principle")
    K = _sqrt_factor(V4)
    V6 = V4 - K @ np.linalg.solve(V5 + V4, K)
    return _symmetrized(V6, "sandwiched covariance")


def gibbs_symplectic(V, power=1.0, log_scale=0.0):
    """Complex symplectic matrix ``exp(i Omega H power)`` of the form ``exp(-power x^T H x / 2)``.

    Products of Gaussian forms map to products of these matrices, and the
    eigenvalues are ``exp(+-power * 2 arcoth(nu_j))``.  The result is
    multiplied by ``exp(-log_scale)`` so that large exponents stay finite.
    """
    wd = williamson(V)
    g = 2.0 * power * arcoth(wd.nu)
    # cosh and sinh times exp(-log_scale), without forming exp(g)
    up = 0.5 * np.exp(g - log_scale)
    down = 0.5 * np.exp(-g - log_scale)
    ch, sh = np.diag(up + down), np.diag(up - down)
    block = np.block([[ch, 1j * sh], [-1j * sh, ch]])
    return wd.S @ block @ wd.inverse_S()


def sandwich_arcoth_spectrum(V4, V_sigma, beta):
    """``arcoth`` of the symplectic spectrum of the sandwich of ``V4`` around ``V_sigma`` to the ``beta``.

    Equal to ``arcoth(symplectic_eigenvalues(sandwich_by_sqrt(V4, power_state(V_sigma, beta).cov)))``,
    but read off the large eigenvalues of ``M(V4) M(V_sigma)^beta``.  That avoids
    the cancellation in ``nu - 1`` when the sandwich is nearly pure, which is
    the case for high powers ``beta``.

    Raises:
        NumericalFailure: if a retained eigenvalue underflows.
    """
    V4 = as_covariance(V4, "V4")
    V_sigma = as_covariance(V_sigma, "V_sigma")
    r4 = require_faithful(V4, "V4")
    rs = require_faithful(V_sigma, "V_sigma")
    n = V4.shape[0] // 2
    scale4 = 2.0 * float(np.max(arcoth(r4.nu)))
    scale_s = 2.0 * beta * float(np.max(arcoth(rs.nu)))
    M = gibbs_symplectic(V4, 1.0, scale4) @ gibbs_symplectic(V_sigma, beta, scale_s)
    lam = np.sort(np.abs(np.linalg.eigvals(M)))[::-1][:n]
    if not np.all(lam > 0):
        raise NumericalFailure("sandwich spectrum underflowed")
    return 0.5 * (np.log(lam) + scale4 + scale_s)


def inverse_sandwich_by_sqrt(V4, V5):
    """Covariance ``V8`` of ``exp(-x H4 x/4) exp(+x H5 x/2) exp(-x H4 x/4)``.

    ``V8 = V4 + K (V5 - V4)^{-1} K``; requires ``V5 - V4 > 0``.

    Raises:
        FeasibilityViolated: if ``min eig(V5 - V4) <= eps_feas``.
    """
    V4 = as_covariance(V4, "V4")
    V5 = as_covariance(V5, "V5")
    require_faithful(V4, "V4")
    require_faithful(V5, "V5")
    diff = V5 - V4
    margin = min_eig(diff)
    if margin <= eps_feas(V4, V5):
        raise FeasibilityViolated(
            f"V5 - V4 is not positive definite (min eigenvalue {margin:.3e})", margin
        )
    K = _sqrt_factor(V4)
    V8 = V4 + K @ np.linalg.solve(diff, K)
    return _symmetrized(V8, "inverse-sandwiched covariance")


def log_product_trace(V1, V2, sign="+"):
    """Logarithm of :func:`product_trace`."""
    V1 = as_covariance(V1, "V1")
    V2 = as_covariance(V2, "V2")
    r1 = require_faithful(V1, "V1")
    r2 = require_faithful(V2, "V2")
    if sign == "+":
        denom = 0.5 * (V1 + V2)
    elif sign == "-":
        denom = 0.5 * (V2 - V1)
        margin = min_eig(V2 - V1)
        if margin <= eps_feas(V1, V2):
            raise FeasibilityViolated(
                f"V2 - V1 is not positive definite (min eigenvalue {margin:.3e})", margin
            )
    else:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    _, logdet = np.linalg.slogdet(denom)
    return log_partition_from_nu(r1.nu) + log_partition_from_nu(r2.nu) - 0.5 * logdet


def product_trace(V1, V2, sign="+"):
    """Trace of the product (``+``) or inverse-sandwich (``-``) of two Gaussian forms.

    ``sqrt(det((V1+i Omega)/2) det((V2+i Omega)/2) / det((V1 +- V2)/2))``, where
    the ``-`` case uses ``det((V2 - V1)/2)`` and needs ``V2 - V1 > 0``.
    The Hermitian determinants are evaluated as ``prod_j (nu_j^2 - 1)/4``.
    """
    return float(np.exp(log_product_trace(V1, V2, sign)))
