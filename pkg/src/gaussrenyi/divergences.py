"""Renyi-type divergences of Gaussian states from means and covariance matrices.

All logarithms are natural, so every value is in nats.  Quasi-entropies are
assembled in log space; ``quasi`` is ``exp(log_quasi)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlphaOutOfRange,
    BoundaryInconclusive,
    DimensionMismatch,
    FeasibilityViolated,
    LimitUnstable,
    NotFaithful,
    RouteDisagreement,
)
from .state_algebra import (
    eps_feas,
    inverse_sandwich_by_sqrt,
    log_power_partition,
    log_two_sinh,
    min_eig,
    power_state,
    sandwich_arcoth_spectrum,
)
from .symplectic import (
    GaussianState,
    arcoth,
    spectral_reduce_by_matrix,
    symplectic_eigenvalues,
)

IDENTICAL_TOL = 1e-12


@dataclass(frozen=True)
class DivergenceResult:
    """Value of a divergence together with its quasi-entropy and diagnostics.

    An infinite divergence is reported as ``value == math.inf`` with
    ``feasible=False``, the offending ``feasibility_margin`` and a ``reason``.
    """

    value: float
    quasi: float | None
    log_quasi: float | None
    alpha: float | None
    kind: str
    feasibility_margin: float = math.nan
    feasible: bool = True
    reason: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_infinite(self):
        return math.isinf(self.value)

    def as_dict(self):
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "value": self.value,
            "quasi": self.quasi,
            "log_quasi": self.log_quasi,
            "feasibility_margin": self.feasibility_margin,
            "feasible": self.feasible,
            "reason": self.reason,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass(frozen=True)
class ChernoffResult:
    exponent: float
    alpha_star: float
    evaluations: int


def _check_pair(rho, sigma):
    if rho.n_modes != sigma.n_modes:
        raise DimensionMismatch("states have different mode counts")
    if not rho.faithful:
        raise NotFaithful("rho is not faithful")
    if not sigma.faithful:
        raise NotFaithful("sigma is not faithful")


def _check_alpha(alpha):
    alpha = float(alpha)
    if not (alpha > 0 and alpha != 1.0 and math.isfinite(alpha)):
        raise AlphaOutOfRange(f"alpha must lie in (0,1) or (1,inf), got {alpha}")
    return alpha


def mean_shift_exponent(Va, Vb, ds, sign="+"):
    """``ds^T (Va + Vb)^{-1} ds`` (``sign='+'``) or ``ds^T (Va - Vb)^{-1} ds`` (``'-'``).

    Raises:
        FeasibilityViolated: for ``sign='-'`` when ``Va - Vb`` is not positive definite.
    """
    Va = np.asarray(Va, dtype=float)
    Vb = np.asarray(Vb, dtype=float)
    ds = np.asarray(ds, dtype=float).reshape(-1)
    if sign == "+":
        M = Va + Vb
    elif sign == "-":
        M = Va - Vb
        margin = min_eig(M)
        if margin <= eps_feas(Va, Vb):
            raise FeasibilityViolated(
                f"Va - Vb is not positive definite (min eigenvalue {margin:.3e})", margin
            )
    else:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    if not np.any(ds):
        return 0.0
    return float(ds @ np.linalg.solve(M, ds))


def _infinite(kind, alpha, margin, reason):
    return DivergenceResult(
        value=math.inf,
        quasi=math.inf,
        log_quasi=math.inf,
        alpha=alpha,
        kind=kind,
        feasibility_margin=margin,
        feasible=False,
        reason=reason,
    )


def _exp(x):
    # quasi-entropies near the feasibility boundary can exceed the float range
    return math.exp(x) if x < 709.0 else math.inf


def _finite(kind, alpha, log_q, margin, **diagnostics):
    value = log_q / (alpha - 1.0)
    return DivergenceResult(
        value=float(value),
        quasi=_exp(log_q),
        log_quasi=float(log_q),
        alpha=alpha,
        kind=kind,
        feasibility_margin=float(margin),
        diagnostics=diagnostics,
    )


def petz_quasi(rho, sigma, alpha):
    """Petz quasi-entropy ``Tr rho^alpha sigma^{1-alpha}`` of two Gaussian states.

    For ``alpha > 1`` the closed form requires ``V_sigma(alpha-1) - V_rho(alpha) > 0``;
    otherwise an infinite result is returned.  ``value`` holds ``D_alpha``.
    """
    _check_pair(rho, sigma)
    alpha = _check_alpha(alpha)
    ds = rho.mean - sigma.mean
    log_zr = rho.log_partition()
    log_zs = sigma.log_partition()
    pr = power_state(rho.cov, alpha)
    if alpha < 1:
        ps = power_state(sigma.cov, 1.0 - alpha)
        total = pr.cov + ps.cov
        margin = min_eig(total)
        _, logdet = np.linalg.slogdet(0.5 * total)
        shift = mean_shift_exponent(pr.cov, ps.cov, ds, "+")
        log_q = (
            pr.log_partition + ps.log_partition
            - alpha * log_zr - (1.0 - alpha) * log_zs
            - 0.5 * logdet - shift
        )
        return _finite("petz", alpha, log_q, margin, mean_shift=shift)

    ps = power_state(sigma.cov, alpha - 1.0)
    diff = ps.cov - pr.cov
    margin = min_eig(diff)
    if margin <= eps_feas(ps.cov, pr.cov):
        return _infinite(
            "petz", alpha, margin, "V_sigma(alpha-1) - V_rho(alpha) is not positive definite"
        )
    _, logdet = np.linalg.slogdet(0.5 * diff)
    shift = mean_shift_exponent(ps.cov, pr.cov, ds, "-")
    log_q = (
        (alpha - 1.0) * log_zs - alpha * log_zr
        + pr.log_partition + ps.log_partition
        - 0.5 * logdet + shift
    )
    return _finite("petz", alpha, log_q, margin, mean_shift=shift)


def petz_renyi(rho, sigma, alpha):
    """Petz-Renyi relative entropy ``D_alpha(rho||sigma) = ln Q_alpha / (alpha - 1)``."""
    return petz_quasi(rho, sigma, alpha)


def sandwiched_quasi(rho, sigma, alpha):
    """Sandwiched quasi-entropy ``Tr (rho^{1/2} sigma^{(1-alpha)/alpha} rho^{1/2})^alpha``.

    For ``alpha > 1`` the closed form requires ``V_sigma(gamma) - V_rho > 0`` with
    ``gamma = (alpha - 1)/alpha``; otherwise an infinite result is returned.
    """
    _check_pair(rho, sigma)
    alpha = _check_alpha(alpha)
    ds = rho.mean - sigma.mean
    log_zr = rho.log_partition()
    log_zs = sigma.log_partition()
    if alpha < 1:
        beta = (1.0 - alpha) / alpha
        ps = power_state(sigma.cov, beta)
        xi = sandwich_arcoth_spectrum(rho.cov, sigma.cov, beta)
        margin = min_eig(ps.cov + rho.cov)
        shift = mean_shift_exponent(ps.cov, rho.cov, ds, "+")
        log_q = (
            -float(np.sum(log_two_sinh(alpha * xi)))
            - alpha * log_zr - (1.0 - alpha) * log_zs
            - alpha * shift
        )
        return _finite("sandwiched", alpha, log_q, margin, mean_shift=shift)

    ps = power_state(sigma.cov, (alpha - 1.0) / alpha)
    diff = ps.cov - rho.cov
    margin = min_eig(diff)
    if margin <= eps_feas(ps.cov, rho.cov):
        return _infinite(
            "sandwiched", alpha, margin, "V_sigma(gamma) - V_rho is not positive definite"
        )
    v_xi = inverse_sandwich_by_sqrt(rho.cov, ps.cov)
    shift = mean_shift_exponent(ps.cov, rho.cov, ds, "-")
    log_q = (
        (alpha - 1.0) * log_zs - alpha * log_zr
        + log_power_partition(symplectic_eigenvalues(v_xi), alpha)
        + alpha * shift
    )
    return _finite("sandwiched", alpha, log_q, margin, mean_shift=shift)


def sandwiched_renyi(rho, sigma, alpha):
    """Sandwiched Renyi relative entropy ``ln Q~_alpha / (alpha - 1)``."""
    return sandwiched_quasi(rho, sigma, alpha)


def fidelity(rho, sigma):
    """Uhlmann fidelity ``(Tr |sqrt(rho) sqrt(sigma)|)^2``, the square of ``Q~_{1/2}``."""
    res = sandwiched_quasi(rho, sigma, 0.5)
    return _exp(2.0 * res.log_quasi)


def dmax(rho, sigma):
    """Max-relative entropy ``ln || rho^{1/2} sigma^{-1} rho^{1/2} ||_inf``.

    Finite closed form when ``V_sigma - V_rho > 0``; infinite when the
    difference has a negative eigenvalue below ``-eps_feas``.

    Raises:
        BoundaryInconclusive: if ``V_sigma - V_rho`` is singular positive
            semidefinite and the states differ.
        RouteDisagreement: if the spectral-sum and matrix-function forms
            of the arcoth term disagree beyond ``1e-8``.
    """
    _check_pair(rho, sigma)
    if rho.allclose(sigma, IDENTICAL_TOL):
        return DivergenceResult(0.0, 1.0, 0.0, None, "dmax", 0.0, reason="identical states")
    diff = sigma.cov - rho.cov
    margin = min_eig(diff)
    eps = eps_feas(rho.cov, sigma.cov)
    if margin < -eps:
        return _infinite("dmax", None, margin, "necessary condition V_sigma >= V_rho violated")
    if margin <= eps:
        raise BoundaryInconclusive(
            f"V_sigma - V_rho is singular positive semidefinite (min eigenvalue {margin:.3e})"
        )
    v_prime = inverse_sandwich_by_sqrt(rho.cov, sigma.cov)
    nu_prime = symplectic_eigenvalues(v_prime)
    arcoth_sum = float(np.sum(arcoth(nu_prime)))
    arcoth_matrix = spectral_reduce_by_matrix(v_prime, arcoth, "sum")
    if abs(arcoth_sum - arcoth_matrix) > 1e-8 * max(1.0, abs(arcoth_sum)):
        raise RouteDisagreement("spectral and matrix-function arcoth terms disagree")
    shift = mean_shift_exponent(sigma.cov, rho.cov, rho.mean - sigma.mean, "-")
    value = sigma.log_partition() - rho.log_partition() - arcoth_sum + shift
    return DivergenceResult(
        value=float(value),
        quasi=_exp(value),
        log_quasi=float(value),
        alpha=None,
        kind="dmax",
        feasibility_margin=margin,
        diagnostics={
            "nu_prime": nu_prime.tolist(),
            "arcoth_route_gap": abs(arcoth_sum - arcoth_matrix),
            "mean_shift": shift,
        },
    )


def _richardson(d_far, d_mid, d_near):
    """Second-order Richardson limit from steps ``h, h/2, h/4``."""
    return (8.0 * d_near - 6.0 * d_mid + d_far) / 3.0


def relative_entropy(rho, sigma, kind="petz", h=1e-3, tol=1e-4):
    """Quantum relative entropy as the alpha -> 1 limit of a Renyi family.

    Second-order Richardson extrapolation from ``alpha = 1 - h, 1 - h/2, 1 - h/4``
    and, when the closed form is feasible there, from the mirrored points
    above 1.  The two one-sided limits must agree within ``tol`` and their
    mean is returned.  When the right side is infeasible the left limit is
    returned with ``diagnostics['one_sided'] = True``.

    Raises:
        LimitUnstable: if the one-sided limits differ by more than ``tol``.
    """
    family = {"petz": petz_renyi, "sandwiched": sandwiched_renyi}[kind]
    steps = (h, h / 2, h / 4)
    left = _richardson(*(family(rho, sigma, 1.0 - t).value for t in steps))
    above = [family(rho, sigma, 1.0 + t) for t in steps]
    margin = min(r.feasibility_margin for r in above)
    if any(r.is_infinite for r in above):
        return DivergenceResult(
            float(left), None, None, 1.0, f"relative_{kind}",
            feasibility_margin=margin,
            reason="closed form infeasible above alpha = 1; left limit only",
            diagnostics={"left": float(left), "one_sided": True},
        )
    right = _richardson(*(r.value for r in above))
    spread = abs(left - right)
    if spread > tol:
        raise LimitUnstable(f"one-sided alpha -> 1 limits differ by {spread:.3e}")
    return DivergenceResult(
        0.5 * (left + right), None, None, 1.0, f"relative_{kind}",
        feasibility_margin=margin,
        diagnostics={"left": float(left), "right": float(right), "spread": spread, "one_sided": False},
    )


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(fun, a, b, xtol):
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    evals = 2
    while abs(b - a) > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fun(d)
        evals += 1
    x = 0.5 * (a + b)
    return x, fun(x), evals + 1


def chernoff_exponent(rho, sigma, lo=1e-4, hi=1.0 - 1e-4, xtol=1e-8, scan_points=21):
    """Quantum Chernoff exponent ``-ln min_{alpha in (0,1)} Q_alpha(rho||sigma)``.

    A coarse scan brackets the minimum of ``ln Q_alpha``, which golden-section
    search then refines to ``xtol`` in ``alpha``.
    """
    _check_pair(rho, sigma)
    if rho.allclose(sigma, IDENTICAL_TOL):
        return ChernoffResult(0.0, 0.5, 0)

    def log_q(a):
        return petz_quasi(rho, sigma, a).log_quasi

    grid = np.linspace(lo, hi, scan_points)
    values = [log_q(a) for a in grid]
    i = int(np.argmin(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, scan_points - 1)]
    alpha_star, best, evals = _golden_section(log_q, a, b, xtol)
    if values[i] < best:
        alpha_star, best = float(grid[i]), values[i]
    return ChernoffResult(max(0.0, -best), float(alpha_star), evals + scan_points)


__all__ = [
    "ChernoffResult",
    "DivergenceResult",
    "GaussianState",
    "chernoff_exponent",
    "dmax",
    "fidelity",
    "mean_shift_exponent",
    "petz_quasi",
    "petz_renyi",
    "relative_entropy",
    "sandwiched_quasi",
    "sandwiched_renyi",
]
