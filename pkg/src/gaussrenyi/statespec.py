"""Serializable state descriptions, presets and the seeded random pair generator.

State files are UTF-8 JSON in one of two shapes::

    {"modes": 1, "ordering": "qqpp", "mean": [0.0, 0.0], "cov": [[3.0, 0.0], [0.0, 3.0]]}
    {"preset": {"name": "thermal", "params": {"N": 1}}}
"""

import json
import math

import numpy as np
from scipy.stats import unitary_group

from .errors import ParseError
from .symplectic import GaussianState

ORDERING = "qqpp"


def _nu_from(params):
    if "nu" in params:
        return float(params["nu"])
    return 2.0 * float(params.get("N", 0.0)) + 1.0


def _rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def thermal(N=None, nu=None):
    """Single-mode thermal state with ``nu = 2N + 1``."""
    if nu is None:
        nu = 2.0 * float(N if N is not None else 0.0) + 1.0
    return GaussianState(*thermal_moments(nu))


def thermal_moments(nu):
    return np.zeros(2), float(nu) * np.eye(2)


def squeezed_thermal(N=0.0, r=0.0, phi=0.0):
    """Thermal state squeezed by ``r`` along the quadrature at angle ``phi / 2``."""
    return GaussianState(*squeezed_thermal_moments(N, r, phi))


def squeezed_thermal_moments(N=0.0, r=0.0, phi=0.0):
    nu = 2.0 * float(N) + 1.0
    R = _rotation(0.5 * float(phi))
    sq = np.diag([math.exp(-2.0 * r), math.exp(2.0 * r)])
    return np.zeros(2), nu * (R @ sq @ R.T)


def displaced_thermal(N=0.0, q=0.0, p=0.0):
    return GaussianState(*displaced_thermal_moments(N, q, p))


def displaced_thermal_moments(N=0.0, q=0.0, p=0.0):
    nu = 2.0 * float(N) + 1.0
    return np.array([q, p], dtype=float), nu * np.eye(2)


def two_mode_squeezed(r=0.0, N=0.0):
    """Two-mode squeezed thermal state, ``nu = 2N + 1`` on both modes."""
    return GaussianState(*two_mode_squeezed_moments(r, N))


def two_mode_squeezed_moments(r=0.0, N=0.0):
    nu = 2.0 * float(N) + 1.0
    c, s = math.cosh(2.0 * r), math.sinh(2.0 * r)
    cov = nu * np.array(
        [
            [c, s, 0.0, 0.0],
            [s, c, 0.0, 0.0],
            [0.0, 0.0, c, -s],
            [0.0, 0.0, -s, c],
        ]
    )
    return np.zeros(4), cov


# preset name -> (mean, cov) from a parameter dict
PRESETS = {
    "thermal": lambda p: thermal_moments(_nu_from(p)),
    "squeezed_thermal": lambda p: squeezed_thermal_moments(p.get("N", 0.0), p.get("r", 0.0), p.get("phi", 0.0)),
    "displaced_thermal": lambda p: displaced_thermal_moments(p.get("N", 0.0), p.get("q", 0.0), p.get("p", 0.0)),
    "two_mode_squeezed": lambda p: two_mode_squeezed_moments(p.get("r", 0.0), p.get("N", 0.0)),
}

_PRESET_PARAMS = {
    "thermal": {"N", "nu"},
    "squeezed_thermal": {"N", "r", "phi"},
    "displaced_thermal": {"N", "q", "p"},
    "two_mode_squeezed": {"r", "N"},
}


def parse_state(data):
    """Mean vector and covariance matrix described by a parsed state file.

    No physical validation is done here, so that illegitimate matrices can
    still be reported on.

    Raises:
        ParseError: if the description does not follow the schema.
    """
    if not isinstance(data, dict):
        raise ParseError("state description must be a JSON object")
    if "preset" in data:
        preset = data["preset"]
        if not isinstance(preset, dict) or "name" not in preset:
            raise ParseError("preset must be an object with a 'name'")
        name = preset["name"]
        if name not in PRESETS:
            raise ParseError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        params = preset.get("params", {})
        if not isinstance(params, dict):
            raise ParseError("preset params must be an object")
        unknown = set(params) - _PRESET_PARAMS[name]
        if unknown:
            raise ParseError(f"unknown parameters for {name}: {sorted(unknown)}")
        try:
            params = {k: float(v) for k, v in params.items()}
        except (TypeError, ValueError) as exc:
            raise ParseError(f"preset parameters must be numbers: {exc}") from exc
        return PRESETS[name](params)

    missing = {"modes", "ordering", "mean", "cov"} - set(data)
    if missing:
        raise ParseError(f"explicit state is missing fields {sorted(missing)}")
    if data["ordering"] != ORDERING:
        raise ParseError(f"ordering must be {ORDERING!r}, got {data['ordering']!r}")
    try:
        n = int(data["modes"])
        mean = np.array(data["mean"], dtype=float)
        cov = np.array(data["cov"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"mean and cov must be numeric arrays: {exc}") from exc
    if n < 1 or mean.shape != (2 * n,) or cov.shape != (2 * n, 2 * n):
        raise ParseError(
            f"expected mean of length {2 * n} and {2 * n}x{2 * n} cov, "
            f"got {mean.shape} and {cov.shape}"
        )
    return mean, cov


def state_from_dict(data):
    """Resolve a parsed state description to a :class:`GaussianState`."""
    mean, cov = parse_state(data)
    return GaussianState(mean, cov)


def state_to_dict(state):
    """Explicit JSON-ready description of ``state``."""
    return {
        "modes": state.n_modes,
        "ordering": ORDERING,
        "mean": [float(x) for x in state.mean],
        "cov": [[float(x) for x in row] for row in state.cov],
    }


def dumps_state(state):
    # json writes floats via repr, the shortest string that round-trips exactly
    return json.dumps(state_to_dict(state), indent=2) + "\n"


def _decode(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def loads_state(text):
    return state_from_dict(_decode(text))


def load_state(path):
    """Read a state file into a :class:`GaussianState`.

    Raises:
        ParseError: for unreadable, malformed or schema-violating files.
        NotLegitimate: if the covariance violates the uncertainty principle.
    """
    return loads_state(_read(path))


def load_moments(path):
    """Read a state file into raw ``(mean, cov)`` arrays without validation."""
    return parse_state(_decode(_read(path)))


def save_state(state, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_state(state))


def passive_symplectic(U):
    """Orthogonal symplectic matrix of the passive unitary ``a -> U a``."""
    X, Y = U.real, U.imag
    return np.block([[X, -Y], [Y, X]])


def single_mode_squeezers(r):
    r = np.asarray(r, dtype=float)
    return np.diag(np.concatenate([np.exp(-r), np.exp(r)]))


def random_state(rng, n_modes, nu_range=(1.1, 3.0), r_max=0.4, mean_radius=2.0):
    """Random faithful state ``V = S (D + D) S^T`` with ``S = O_1 Sq(r) O_2``.

    ``D`` has entries uniform in ``nu_range``, the squeezing parameters are
    uniform in ``[-r_max, r_max]`` and the mean is uniform in the ball of
    radius ``mean_radius``.
    """
    n = int(n_modes)
    nu = rng.uniform(*nu_range, size=n)
    r = rng.uniform(-r_max, r_max, size=n)
    if n == 1:
        # every 1-mode passive unitary is a phase rotation
        theta = rng.uniform(0.0, 2.0 * math.pi, size=2)
        O1 = passive_symplectic(np.array([[np.exp(1j * theta[0])]]))
        O2 = passive_symplectic(np.array([[np.exp(1j * theta[1])]]))
    else:
        O1 = passive_symplectic(unitary_group.rvs(n, random_state=rng))
        O2 = passive_symplectic(unitary_group.rvs(n, random_state=rng))
    S = O1 @ single_mode_squeezers(r) @ O2
    cov = S @ np.diag(np.concatenate([nu, nu])) @ S.T
    cov = 0.5 * (cov + cov.T)
    direction = rng.standard_normal(2 * n)
    direction /= np.linalg.norm(direction)
    radius = mean_radius * rng.uniform() ** (1.0 / (2 * n))
    return GaussianState(radius * direction, cov)


def random_pairs(seed, count, n_modes, **kwargs):
    """``count`` independent ``(rho, sigma)`` pairs from ``numpy.random.default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    return [(random_state(rng, n_modes, **kwargs), random_state(rng, n_modes, **kwargs))
            for _ in range(count)]


__all__ = [
    "PRESETS",
    "dumps_state",
    "load_moments",
    "load_state",
    "loads_state",
    "parse_state",
    "random_pairs",
    "random_state",
    "save_state",
    "state_from_dict",
    "state_to_dict",
]
