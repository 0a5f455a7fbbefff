"""Brute-force oracle on a truncated Fock space.

States are built as dense matrices ``exp(-(x - s)^T H (x - s) / 2)`` of the
quadratic form compressed to the truncated space, then normalised by their
own trace.  Divergences are evaluated directly from the definitions by
Hermitian eigendecomposition, independently of the closed-form formulas.

Because the compressed form is diagonalised, every truncated density matrix
comes with an exactly known logarithmic spectrum, so negative powers need no
eigenvalue clamping.  Pairs are first moved by a common Gaussian unitary to a
balanced frame (centred means, Williamson-diagonal average covariance), which
leaves every divergence unchanged and lowers the photon numbers that the
truncation has to capture.
"""

import itertools
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.special import logsumexp

from .errors import (
    AlphaOutOfRange,
    CutoffTooSmall,
    DimensionMismatch,
    NotFaithful,
    SpectrumFloorHit,
    TruncationInsufficient,
)
from .symplectic import GaussianState, cov_to_hamiltonian, williamson

MAX_MODES = 2
DEFAULT_MAX_DIM = 6400
TAIL_TOL = 1e-8
MOMENT_TOL = 1e-6
HERMITIAN_TOL = 1e-10
# Largest relative change tolerated under the round-off probe of negative powers.
ROUNDOFF_BUDGET = 1e-8
KINDS = ("petz", "sandwiched", "dmax", "fidelity", "relative")


def max_dim():
    """Largest total Fock dimension allowed, from ``GAUSSRENYI_MAX_DIM``."""
    return int(os.environ.get("GAUSSRENYI_MAX_DIM", DEFAULT_MAX_DIM))


def _cutoff_tuple(n, cutoffs):
    if n < 1 or n > MAX_MODES:
        raise DimensionMismatch(f"oracle supports 1 to {MAX_MODES} modes, got {n}")
    if np.isscalar(cutoffs):
        cutoffs = (int(cutoffs),) * n
    cutoffs = tuple(int(c) for c in cutoffs)
    if len(cutoffs) != n:
        raise DimensionMismatch(f"expected {n} cutoffs, got {len(cutoffs)}")
    if min(cutoffs) < 2:
        raise CutoffTooSmall(f"every cutoff must be at least 2, got {cutoffs}")
    dim = math.prod(cutoffs)
    if dim > max_dim():
        raise TruncationInsufficient(
            f"Fock dimension {dim} exceeds GAUSSRENYI_MAX_DIM={max_dim()}"
        )
    return cutoffs


@dataclass(frozen=True)
class TruncatedOperator:
    """Dense operator on the Fock space ``(0..c_1-1) x ... x (0..c_n-1)``."""

    matrix: np.ndarray
    cutoffs: tuple
    is_hermitian: bool = True

    def __post_init__(self):
        dim = math.prod(self.cutoffs)
        if self.matrix.shape != (dim, dim):
            raise DimensionMismatch(f"matrix shape {self.matrix.shape} does not match cutoffs {self.cutoffs}")
        if self.is_hermitian:
            scale = max(1.0, float(np.linalg.norm(self.matrix)))
            if np.linalg.norm(self.matrix - self.matrix.conj().T) > HERMITIAN_TOL * scale:
                raise ValueError("matrix flagged Hermitian is not Hermitian")

    @property
    def dim(self):
        return self.matrix.shape[0]

    def trace(self):
        return complex(np.trace(self.matrix))


def _lowering(c):
    return sp.diags(np.sqrt(np.arange(1, c, dtype=float)), 1, format="csr")


def _sparse_quadratures(cutoffs):
    """Sparse ``q_1..q_n, p_1..p_n`` with mode 0 as the most significant index."""
    n = len(cutoffs)
    singles = []
    for c in cutoffs:
        a = _lowering(c).astype(complex)
        ad = a.conj().T
        singles.append(((a + ad) / math.sqrt(2.0), -1j * (a - ad) / math.sqrt(2.0)))
    ops = []
    for which in (0, 1):
        for k in range(n):
            op = sp.identity(1, dtype=complex, format="csr")
            for j, c in enumerate(cutoffs):
                factor = singles[j][which] if j == k else sp.identity(c, dtype=complex, format="csr")
                op = sp.kron(op, factor, format="csr")
            ops.append(op)
    return ops


def build_quadratures(n, cutoffs):
    """Quadrature operators ``q_k = (a_k + a_k^dag)/sqrt(2)``, ``p_k = -i(a_k - a_k^dag)/sqrt(2)``.

    With this normalisation the vacuum has ``<q^2> = 1/2``, i.e. covariance ``V = I``.
    On the truncated space ``[q_k, p_k] = i`` holds except in the last Fock level.

    Returns:
        list of ``2n`` Hermitian :class:`TruncatedOperator` in qq..pp order.
    """
    cutoffs = _cutoff_tuple(n, cutoffs)
    return [TruncatedOperator(op.toarray(), cutoffs) for op in _sparse_quadratures(cutoffs)]


def _kept_indices(cutoffs):
    """Positions of the ``cutoffs`` Fock states inside the space with every cutoff + 1."""
    big = tuple(c + 1 for c in cutoffs)
    grid = np.array(list(itertools.product(*[range(c) for c in big])))
    mask = np.all(grid < np.array(cutoffs), axis=1)
    return np.flatnonzero(mask)


def quadratic_form(state, cutoffs):
    """Compression of ``(x - s)^T H (x - s)`` onto the truncated Fock space.

    The quadratures are built with one extra level per mode so that every
    matrix element between retained states is exact.
    """
    cutoffs = _cutoff_tuple(state.n_modes, cutoffs)
    H = cov_to_hamiltonian(state.cov)
    big = tuple(c + 1 for c in cutoffs)
    eye = sp.identity(math.prod(big), dtype=complex, format="csr")
    ys = [x - s * eye for x, s in zip(_sparse_quadratures(big), state.mean)]
    Q = sp.csr_matrix(eye.shape, dtype=complex)
    m = len(ys)
    for j in range(m):
        for k in range(m):
            if H[j, k] != 0.0:
                Q = Q + H[j, k] * (ys[j] @ ys[k])
    keep = _kept_indices(cutoffs)
    Q = Q[keep][:, keep].toarray()
    return 0.5 * (Q + Q.conj().T), cutoffs


@dataclass(frozen=True)
class TruncatedState:
    """Eigendecomposition ``rho = U diag(exp(log_weights)) U^dag`` of a truncated state.

    ``log_deficit_ratio`` is ``log(Tr exp(-Q/2) / Z)`` before normalisation.
    """

    log_weights: np.ndarray
    vectors: np.ndarray | None
    cutoffs: tuple
    log_deficit_ratio: float

    @property
    def trace_deficit(self):
        return float(-np.expm1(self.log_deficit_ratio))

    def operator(self):
        U = self.vectors
        if U is None:
            return TruncatedOperator(np.diag(np.exp(self.log_weights)).astype(complex), self.cutoffs)
        M = (U * np.exp(self.log_weights)) @ U.conj().T
        return TruncatedOperator(0.5 * (M + M.conj().T), self.cutoffs)


def truncated_state(state, cutoffs, phases=None):
    """Normalised truncated Gibbs state of ``state`` with its exact log-spectrum.

    ``phases`` optionally diagonalises ``D Q D^dag`` with ``D = diag(phases)``
    instead of ``Q``; the result is the same state with different round-off.
    """
    if not state.faithful:
        raise NotFaithful("the Fock oracle needs a faithful state (finite H)")
    Q, cutoffs = quadratic_form(state, cutoffs)
    if phases is None:
        q, U = scipy.linalg.eigh(Q, driver="evr")
    else:
        q, U = scipy.linalg.eigh(phases[:, None] * Q * phases.conj()[None, :], driver="evr")
        U = phases.conj()[:, None] * U
    log_unnorm = -0.5 * q
    log_trace = float(logsumexp(log_unnorm))
    return TruncatedState(log_unnorm - log_trace, U, cutoffs, log_trace - state.log_partition())


def build_gaussian_density(state, cutoffs, check=True):
    """Dense truncated density matrix of a Gaussian state.

    Raises:
        TruncationInsufficient: if ``check`` and the trace deficit exceeds ``TAIL_TOL``.
    """
    ts = truncated_state(state, cutoffs)
    if check and ts.trace_deficit > TAIL_TOL:
        raise TruncationInsufficient(
            f"trace deficit {ts.trace_deficit:.3e} exceeds {TAIL_TOL:g} at cutoffs {ts.cutoffs}"
        )
    return ts.operator()


def extract_moments(rho):
    """Mean vector and covariance ``<{dx_j, dx_k}>`` of a truncated density matrix.

    The operator is embedded in a space with one more level per mode, where
    products of two quadratures act exactly on the retained states.
    """
    cutoffs = rho.cutoffs
    big = tuple(c + 1 for c in cutoffs)
    keep = _kept_indices(cutoffs)
    R = np.zeros((math.prod(big),) * 2, dtype=complex)
    R[np.ix_(keep, keep)] = rho.matrix
    xs = [op.toarray() for op in _sparse_quadratures(big)]
    mean = np.array([np.trace(R @ x).real for x in xs])
    m = len(xs)
    cov = np.empty((m, m))
    for j in range(m):
        for k in range(m):
            anti = xs[j] @ xs[k] + xs[k] @ xs[j]
            cov[j, k] = np.trace(R @ anti).real - 2.0 * mean[j] * mean[k]
    return mean, cov


@dataclass(frozen=True)
class CutoffReport:
    trace_deficit: float
    recommended_cutoffs: list
    cutoffs: tuple = ()
    tolerance: float = TAIL_TOL

    @property
    def passed(self):
        return self.trace_deficit <= self.tolerance


def recommended_cutoffs(state):
    """``ceil(10 nbar_k + |s|^2 + 20)`` with ``nbar_k = (V_qq + V_pp)/4 - 1/2`` per mode."""
    n = state.n_modes
    V = state.cov
    shift = float(state.mean @ state.mean)
    out = []
    for k in range(n):
        nbar = 0.25 * (V[k, k] + V[n + k, n + k]) - 0.5
        out.append(int(math.ceil(10.0 * nbar + shift + 20.0)))
    return out


def truncation_check(state, cutoffs):
    """Trace lost by truncating ``state`` at ``cutoffs`` and suggested cutoffs."""
    if not state.faithful:
        raise NotFaithful("the Fock oracle needs a faithful state (finite H)")
    Q, cutoffs = quadratic_form(state, cutoffs)
    q = scipy.linalg.eigh(Q, eigvals_only=True, driver="evr")
    deficit = float(-np.expm1(logsumexp(-0.5 * q) - state.log_partition()))
    return CutoffReport(deficit, recommended_cutoffs(state), cutoffs)


def _require_tail(ts, what):
    if ts.trace_deficit > TAIL_TOL:
        raise TruncationInsufficient(
            f"{what}: trace deficit {ts.trace_deficit:.3e} exceeds {TAIL_TOL:g} at cutoffs {ts.cutoffs}"
        )


@dataclass(frozen=True)
class OracleResult:
    """Oracle value with the frame and truncation data that produced it.

    ``value`` is a quasi-entropy for ``petz`` and ``sandwiched``, the fidelity
    for ``fidelity`` and a divergence in nats for ``dmax`` and ``relative``.
    """

    value: float
    kind: str
    alpha: float | None
    cutoffs: tuple
    frame: str
    diagnostics: dict = field(default_factory=dict)


def balanced_frame(rho, sigma):
    """Apply one Gaussian unitary to both states: centre the mean and diagonalise the average covariance.

    With ``(V_rho + V_sigma)/2 = S D S^T`` the map is ``x -> S^{-1}(x - m)``,
    ``m = (s_rho + s_sigma)/2``.  Divergences are invariant under it.
    """
    S_inv = williamson(0.5 * (rho.cov + sigma.cov)).inverse_S()
    centre = 0.5 * (rho.mean + sigma.mean)

    def move(state):
        cov = S_inv @ state.cov @ S_inv.T
        return GaussianState(S_inv @ (state.mean - centre), 0.5 * (cov + cov.T))

    return move(rho), move(sigma)


def _sandwich_singular_values(lr, overlap, ls, power):
    """Singular values of ``rho^{1/2} sigma^{power/2}`` given ``overlap = U_rho^dag U_sigma``."""
    B = np.exp(0.5 * lr)[:, None] * overlap * np.exp(0.5 * power * ls)[None, :]
    return np.linalg.svd(B, compute_uv=False)


def _functional(kind, alpha, lr, overlap, ls):
    if kind == "petz":
        weights = np.abs(overlap) ** 2
        return float(np.exp(alpha * lr) @ weights @ np.exp((1.0 - alpha) * ls))
    if kind == "sandwiched":
        sv = _sandwich_singular_values(lr, overlap, ls, (1.0 - alpha) / alpha)
        return float(np.sum(sv ** (2.0 * alpha)))
    if kind == "fidelity":
        sv = _sandwich_singular_values(lr, overlap, ls, 1.0)
        return float(np.sum(sv)) ** 2
    if kind == "dmax":
        sv = _sandwich_singular_values(lr, overlap, ls, -1.0)
        return 2.0 * math.log(float(sv[0]))
    weights = np.abs(overlap) ** 2
    p = np.exp(lr)
    return float(p @ lr - p @ weights @ ls)


def _probe_phases(dim):
    # deterministic, irrational phases give an independent rounding pattern
    k = np.arange(dim, dtype=float)
    return np.exp(2j * math.pi * ((k * 0.6180339887498949) % 1.0))


def default_cutoffs(rho, sigma, cap=None):
    """Per-mode maximum of the recommended cutoffs of both states, optionally capped."""
    out = [max(a, b) for a, b in zip(recommended_cutoffs(rho), recommended_cutoffs(sigma))]
    if cap is not None:
        out = [min(c, int(cap)) for c in out]
    return out


def adequate_cutoff(rho, sigma, max_cutoff, start=10, step=2, balance=True):
    """Smallest uniform cutoff ``start, start + step, ...`` at which both states pass the tail test.

    The search uses eigenvalues only, which is much cheaper than the full
    oracle build.

    Raises:
        TruncationInsufficient: if no cutoff up to ``max_cutoff`` suffices.
    """
    if balance:
        rho, sigma = balanced_frame(rho, sigma)
    guess = max(max(recommended_cutoffs(rho)), max(recommended_cutoffs(sigma)))
    c = min(max(start, min(guess, max_cutoff) - 4 * step), max_cutoff)
    report = math.nan
    while c <= max_cutoff:
        r_rep = truncation_check(rho, c)
        s_rep = truncation_check(sigma, c)
        if r_rep.passed and s_rep.passed:
            return c
        report = max(r_rep.trace_deficit, s_rep.trace_deficit)
        c += step
    raise TruncationInsufficient(
        f"trace deficit {report:.3e} still above {TAIL_TOL:g} at cutoff {max_cutoff}"
    )


def comparison_cutoffs(rho, sigma, max_cutoff=80):
    """Cutoff policy for closed-form comparisons.

    One mode is cheap, so the largest cutoff allowed by ``max_cutoff`` and
    GAUSSRENYI_MAX_DIM is used, which also shortens the slowly decaying tails
    of negative powers.  For two modes the cost grows like ``cutoff**6`` and
    the smallest passing uniform cutoff from :func:`adequate_cutoff` is used.
    """
    limit = min(int(max_cutoff), max_dim() if rho.n_modes == 1 else math.isqrt(max_dim()))
    if limit < 2:
        raise TruncationInsufficient(f"GAUSSRENYI_MAX_DIM={max_dim()} leaves no usable cutoff")
    if rho.n_modes == 1:
        return limit
    return adequate_cutoff(rho, sigma, limit)


class OraclePair:
    """Truncated representations of one ``(rho, sigma)`` pair, shared across kinds and orders.

    Negative powers of sigma (``alpha > 1`` and ``dmax``) are repeated with a
    second diagonalisation of a phase-conjugated copy of rho's quadratic form.
    The two answers differ only by round-off, so their gap measures how much
    the small eigenvalues of sigma amplify it.

    Args:
        rho, sigma: faithful Gaussian states with at most two modes.
        cutoffs: per-mode cutoffs (int or sequence); ``None`` takes
            :func:`default_cutoffs` of the balanced pair.
        check: enforce the trace-deficit tolerance on both truncated states.
        balance: move to :func:`balanced_frame` first (``False`` keeps the
            states as given).
    """

    def __init__(self, rho, sigma, cutoffs=None, check=True, balance=True):
        if rho.n_modes != sigma.n_modes:
            raise DimensionMismatch("states have different mode counts")
        self.rho, self.sigma = balanced_frame(rho, sigma) if balance else (rho, sigma)
        if cutoffs is None:
            cutoffs = default_cutoffs(self.rho, self.sigma)
        self.cutoffs = _cutoff_tuple(rho.n_modes, cutoffs)
        self.check = check
        self.frame = "balanced" if balance else "fock"
        self._states = None
        self._probe = None

    def states(self):
        if self._states is None:
            r_ts = truncated_state(self.rho, self.cutoffs)
            s_ts = truncated_state(self.sigma, self.cutoffs)
            if self.check:
                _require_tail(r_ts, "rho")
                _require_tail(s_ts, "sigma")
            self._states = (r_ts, s_ts, r_ts.vectors.conj().T @ s_ts.vectors)
        return self._states

    def probe(self):
        if self._probe is None:
            _, s_ts, _ = self.states()
            r_ts = truncated_state(self.rho, self.cutoffs, phases=_probe_phases(s_ts.log_weights.size))
            self._probe = (r_ts, r_ts.vectors.conj().T @ s_ts.vectors)
        return self._probe

    def evaluate(self, kind, alpha=None):
        """Oracle value of ``kind`` at order ``alpha``; see :func:`oracle_evaluate`."""
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
        if kind in ("petz", "sandwiched"):
            if alpha is None or not alpha > 0 or alpha == 1:
                raise AlphaOutOfRange(f"alpha must lie in (0,1) or (1,inf), got {alpha}")
            alpha = float(alpha)
        else:
            alpha = None

        r_ts, s_ts, overlap = self.states()
        ls = s_ts.log_weights
        value = _functional(kind, alpha, r_ts.log_weights, overlap, ls)
        probe_gap = 0.0
        if kind == "dmax" or (alpha is not None and alpha > 1):
            p_ts, p_overlap = self.probe()
            again = _functional(kind, alpha, p_ts.log_weights, p_overlap, ls)
            scale = 1.0 if kind == "dmax" else abs(value)
            probe_gap = abs(again - value) / max(scale, 1e-300)
            if not probe_gap <= ROUNDOFF_BUDGET:
                raise SpectrumFloorHit(
                    f"{kind}: round-off probe moved the value by {probe_gap:.3e} (relative); "
                    f"sigma's truncated spectrum reaches {math.exp(np.min(ls)):.3e}"
                )

        return OracleResult(
            value=value,
            kind=kind,
            alpha=alpha,
            cutoffs=self.cutoffs,
            frame=self.frame,
            diagnostics={
                "rho_trace_deficit": r_ts.trace_deficit,
                "sigma_trace_deficit": s_ts.trace_deficit,
                "sigma_min_eigenvalue": float(np.exp(np.min(ls))),
                "roundoff_probe": probe_gap,
                "clamped_eigenvalues": 0,
            },
        )


def oracle_evaluate(kind, rho, sigma, alpha=None, cutoffs=None, check=True):
    """Evaluate a divergence directly on truncated density matrices.

    Args:
        kind: one of ``petz``, ``sandwiched``, ``dmax``, ``fidelity``, ``relative``.
        rho, sigma: faithful Gaussian states with at most two modes.
        alpha: order for ``petz`` and ``sandwiched``.
        cutoffs: per-mode cutoffs (int or sequence); ``None`` takes the
            largest recommended cutoffs of the two balanced states.
        check: enforce the trace-deficit tolerance on both truncated states.

    Returns:
        OracleResult

    Raises:
        TruncationInsufficient: trace deficit above ``TAIL_TOL`` or dimension too large.
        SpectrumFloorHit: round-off amplified by a negative power of sigma
            exceeds ``ROUNDOFF_BUDGET``.
    """
    return OraclePair(rho, sigma, cutoffs, check).evaluate(kind, alpha)


def oracle_divergence(kind, rho, sigma, alpha=None, cutoffs=None, check=True):
    """Scalar form of :func:`oracle_evaluate`."""
    return oracle_evaluate(kind, rho, sigma, alpha, cutoffs, check).value
