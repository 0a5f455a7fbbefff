"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the summary lines
(they are printed even without ``-s``).
"""

import io
import math
import time

import numpy as np
import pytest
import scipy.linalg

from gaussrenyi import cli, fock
from gaussrenyi import divergences as dv
from gaussrenyi.errors import GaussRenyiError, SpectrumFloorHit, TruncationInsufficient
from gaussrenyi.state_algebra import (
    _sqrt_factor,
    f_alpha,
    inverse_sandwich_by_sqrt,
    min_eig,
    power_state,
    product_trace,
    sandwich_by_sqrt,
    special_power_forms,
)
from gaussrenyi.statespec import (
    load_state,
    loads_state,
    dumps_state,
    random_pairs,
    random_state,
    save_state,
    thermal,
)
from gaussrenyi.symplectic import (
    GaussianState,
    apply_spectral_function,
    gaussian_partition,
    omega,
    validate_covariance,
    williamson,
)

CORPUS_SEED = 42
CORPUS_SIZES = ((1, 20), (2, 10))
LOW_ALPHAS = (0.3, 0.5, 0.7)
HIGH_ALPHAS = (1.5, 2.0, 3.0)
MAX_CUTOFF = 80


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")


# ------------------------------------------------------------------ corpus


def _corpus_entry(rho, sigma):
    entry = {"rho": rho, "sigma": sigma, "items": [], "pair": None, "error": None}
    try:
        cutoff = fock.comparison_cutoffs(rho, sigma, MAX_CUTOFF)
        pair = fock.OraclePair(rho, sigma, cutoff)
        pair.states()
    except TruncationInsufficient as exc:
        entry["error"] = f"TruncationInsufficient: {exc}"
        return entry
    entry["pair"] = pair
    for kind, fn in (("petz", dv.petz_quasi), ("sandwiched", dv.sandwiched_quasi)):
        for a in LOW_ALPHAS + HIGH_ALPHAS:
            closed = fn(rho, sigma, a)
            item = {"kind": kind, "alpha": a}
            if closed.is_infinite:
                item["status"] = "infeasible"
            else:
                try:
                    value = pair.evaluate(kind, a).value
                except SpectrumFloorHit as exc:
                    item.update(status="refused", reason=str(exc))
                else:
                    # in log space, since large quasi-entropies overflow
                    err = abs(math.expm1(math.log(value) - closed.log_quasi)) if value > 0 else 1.0
                    item.update(status="compared", rel_error=err)
            entry["items"].append(item)
    return entry


@pytest.fixture(scope="module")
def corpus():
    """Oracle comparison for the seeded corpus, shared by criteria 2 and 3."""
    t0 = time.perf_counter()
    entries = []
    for modes, count in CORPUS_SIZES:
        for i, (rho, sigma) in enumerate(random_pairs(CORPUS_SEED, count, modes)):
            entry = _corpus_entry(rho, sigma)
            entry.update(modes=modes, index=i)
            entries.append(entry)
    return entries, time.perf_counter() - t0


# ------------------------------------------------------------- criterion 1


def test_criterion_1_thermal_analytic(capsys):
    t0 = time.perf_counter()
    rho, sigma = thermal(nu=3.0), thermal(nu=5.0)
    checks = {
        "Q_1/2": (dv.petz_quasi(rho, sigma, 0.5).quasi, 1.0 / (math.sqrt(6) - math.sqrt(2))),
        "Q_2": (dv.petz_quasi(rho, sigma, 2.0).quasi, 1.2),
        "Q~_2": (dv.sandwiched_quasi(rho, sigma, 2.0).quasi, 1.2),
        "Tr rho sigma": (
            product_trace(rho.cov, sigma.cov) / (gaussian_partition(rho.cov) * gaussian_partition(sigma.cov)),
            0.25,
        ),
        "dmax": (dv.dmax(rho, sigma).value, math.log(1.5)),
    }
    errors = {k: abs(got - want) / abs(want) for k, (got, want) in checks.items()}
    v_prime = inverse_sandwich_by_sqrt(rho.cov, sigma.cov)
    v_err = float(np.max(np.abs(v_prime - 7.0 * np.eye(2))))
    elapsed = time.perf_counter() - t0

    ok = max(errors.values()) <= 1e-10 and v_err <= 1e-12 and elapsed < 1.0
    worst = max(errors, key=errors.get)
    report(capsys, 1, "thermal analytic oracle", ok,
           f"max rel error {errors[worst]:.1e} ({worst}), |V'-7I| {v_err:.1e}, {elapsed:.3f} s")
    assert ok


# ------------------------------------------------------------- criterion 2


def test_criterion_2_fock_oracle_equivalence(corpus, capsys):
    entries, elapsed = corpus
    counts = {"compared": 0, "infeasible": 0, "refused": 0, "over": 0, "untruncatable": 0}
    worst = 0.0
    failures = []
    for e in entries:
        if e["error"]:
            counts["untruncatable"] += 1
            failures.append(f"{e['modes']}-mode #{e['index']}: {e['error']}")
            continue
        for item in e["items"]:
            counts[item["status"]] += 1
            tag = f"{e['modes']}-mode #{e['index']} {item['kind']} a={item['alpha']}"
            if item["status"] == "compared":
                worst = max(worst, item["rel_error"])
                if item["rel_error"] > 1e-5:
                    counts["over"] += 1
                    failures.append(f"{tag}: rel error {item['rel_error']:.2e}")
            elif item["status"] == "refused":
                failures.append(f"{tag}: oracle refused")

    ok = not failures and counts["compared"] > 0 and elapsed < 120.0
    detail = (f"compared {counts['compared']}, infeasible {counts['infeasible']}, "
              f"over 1e-5 {counts['over']}, oracle refused {counts['refused']}, "
              f"untruncatable pairs {counts['untruncatable']}, max rel error {worst:.2e}, {elapsed:.1f} s")
    report(capsys, 2, "Fock-oracle equivalence", ok, detail)
    with capsys.disabled():
        for line in failures:
            print(f"    {line}")
    assert ok, detail


# ------------------------------------------------------------- criterion 3


def test_criterion_3_limit_consistency(corpus, capsys):
    entries, _ = corpus
    fid_identity = 0.0
    fid_error = 0.0
    rel_error = 0.0
    gaps = []
    problems = []
    for e in entries:
        rho, sigma, pair = e["rho"], e["sigma"], e["pair"]
        tag = f"{e['modes']}-mode #{e['index']}"

        F = dv.fidelity(rho, sigma)
        d_half = dv.sandwiched_renyi(rho, sigma, 0.5).value
        fid_identity = max(fid_identity, abs(-math.log(F) - d_half))

        if pair is None:
            problems.append(f"{tag}: no oracle")
            continue
        fid_error = max(fid_error, abs(F - pair.evaluate("fidelity").value))

        oracle_rel = pair.evaluate("relative").value
        limits = []
        try:
            for kind in ("petz", "sandwiched"):
                res = dv.relative_entropy(rho, sigma, kind=kind)
                limits.append(res.diagnostics["left"])
                if not res.diagnostics["one_sided"]:
                    limits.append(res.diagnostics["right"])
        except GaussRenyiError as exc:
            problems.append(f"{tag}: {type(exc).__name__}: {exc}")
            continue
        spread = max(max(limits) - min(limits), max(abs(x - oracle_rel) for x in limits))
        rel_error = max(rel_error, spread)

        dm = dv.dmax(rho, sigma)
        if not dm.is_infinite and dm.feasibility_margin >= 0.5:
            d200 = dv.sandwiched_renyi(rho, sigma, 200.0).value
            gaps.append(f"{tag} gap {dm.value - d200:.2e}")
            if not 0.0 <= dm.value - d200 <= 5e-2:
                problems.append(f"{tag}: dmax - D~_200 = {dm.value - d200:.3e}")

    ok = (fid_identity <= 1e-12 and fid_error <= 1e-6 and rel_error <= 1e-4 and not problems)
    detail = (f"|-ln F - D~_1/2| {fid_identity:.1e}, fidelity vs oracle {fid_error:.1e}, "
              f"relative-entropy limits spread {rel_error:.1e}, "
              f"dmax pairs with margin >= 0.5: {len(gaps)} ({'; '.join(gaps) or 'none'})")
    report(capsys, 3, "limit consistency", ok, detail)
    with capsys.disabled():
        for line in problems:
            print(f"    {line}")
    assert ok, detail


# ------------------------------------------------------------- criterion 4

GRID = (0.2, 0.4, 0.6, 0.8, 1.3, 1.7, 2.5, 4.0)


def _sqrt_sandwich_gap(V):
    n = V.shape[0] // 2
    Om = omega(n)
    eye = np.eye(2 * n)
    inv_vo = np.linalg.inv(V @ Om)
    inv_ov = np.linalg.inv(Om @ V)
    left = scipy.linalg.sqrtm(eye + inv_vo @ inv_vo) @ V
    right = V @ scipy.linalg.sqrtm(eye + inv_ov @ inv_ov)
    lhs = left @ np.linalg.solve(V + 1j * Om, right)
    gap = np.max(np.abs(lhs - (V - 1j * Om)))
    gap = max(gap, np.max(np.abs(left.real - _sqrt_factor(V))))
    return gap / max(1.0, np.linalg.norm(V))


def _property_failures(seed, n):
    rng = np.random.default_rng(seed)
    rho, sigma = random_pairs(seed, 1, n)[0]
    out = []

    for a in (0.3, 0.7, 2.0):
        for fn in (dv.petz_quasi, dv.sandwiched_quasi):
            q = fn(rho, rho, a).quasi
            if abs(q - 1.0) > 1e-8:
                out.append(f"identity {fn.__name__} a={a}: {q}")
        # rho compared with itself through the general branch
        moved = GaussianState(rho.mean + 1e-3, rho.cov)
        for fn in (dv.petz_renyi, dv.sandwiched_renyi):
            if fn(moved, rho, a).value < -1e-9:
                out.append(f"negative {fn.__name__}")

    petz = [dv.petz_renyi(rho, sigma, a).value for a in GRID]
    sand = [dv.sandwiched_renyi(rho, sigma, a).value for a in GRID]
    for name, seq in (("petz", petz), ("sandwiched", sand)):
        for x, y in zip(seq, seq[1:]):
            if not (y >= x - 1e-9 or math.isinf(y)):
                out.append(f"monotonicity {name}: {x} > {y}")
            if math.isinf(x) and not math.isinf(y):
                out.append(f"finite {name} after an infinite order")
    for p, s in zip(petz, sand):
        if not (s <= p + 1e-9 or math.isinf(p)):
            out.append(f"ordering: D~ {s} > D {p}")

    alpha = rng.uniform(0.2, 3.0)
    a_cov = power_state(rho.cov, alpha).cov
    b_cov = apply_spectral_function(rho.cov, lambda nu: f_alpha(nu, alpha), route="B")
    if np.linalg.norm(a_cov - b_cov) > 1e-7 * np.linalg.norm(a_cov):
        out.append("dual route")

    if _sqrt_sandwich_gap(rho.cov) > 1e-9:
        out.append(f"sqrt-sandwich identity gap {_sqrt_sandwich_gap(rho.cov):.2e}")

    beta = rng.uniform(0.1, 3.0)
    derived = {
        "power": a_cov,
        "square": special_power_forms(rho.cov, "square"),
        "sandwich": sandwich_by_sqrt(rho.cov, power_state(sigma.cov, beta).cov),
        "inverse sandwich": inverse_sandwich_by_sqrt(rho.cov, rho.cov + sigma.cov),
    }
    for name, V in derived.items():
        if not validate_covariance(V).legitimate:
            out.append(f"{name} covariance illegitimate")

    S = williamson(random_state(rng, n).cov).S
    d = rng.normal(size=2 * n)
    rho2, sigma2 = rho.transformed(S, d), sigma.transformed(S, d)
    pairs = [(dv.petz_renyi, a) for a in (0.4, 1.7)] + [(dv.sandwiched_renyi, a) for a in (0.4, 1.7)]
    values = [(fn(rho, sigma, a).value, fn(rho2, sigma2, a).value) for fn, a in pairs]
    values.append((dv.dmax(rho, sigma).value, dv.dmax(rho2, sigma2).value))
    values.append((dv.fidelity(rho, sigma), dv.fidelity(rho2, sigma2)))
    for v1, v2 in values:
        if math.isinf(v1) or math.isinf(v2):
            if v1 != v2:
                out.append("invariance: feasibility changed")
        elif abs(v1 - v2) > 1e-7 * max(1.0, abs(v1)):
            out.append(f"invariance: {v1} vs {v2}")
    return out


def test_criterion_4_property_suite(capsys):
    t0 = time.perf_counter()
    cases = [(seed, 1 + seed % 2) for seed in range(1000, 1200)]
    failures = []
    for seed, n in cases:
        failures += [f"seed {seed}: {msg}" for msg in _property_failures(seed, n)]
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 60.0
    report(capsys, 4, "property suite", ok,
           f"{len(cases)} cases, {len(failures)} violations, {elapsed:.1f} s")
    with capsys.disabled():
        for line in failures[:20]:
            print(f"    {line}")
    assert ok


# ------------------------------------------------------------- criterion 5


def _infeasible_pairs(count):
    """Pairs whose Petz order-2 condition fails by a clear margin."""
    rng = np.random.default_rng(2024)
    pairs = []
    while len(pairs) < count:
        n = 1 + len(pairs) % 2
        rho = random_state(rng, n)
        sigma = random_state(rng, n, r_max=1.5)
        # second power from its own closed form, not through power_state
        margin = min_eig(sigma.cov - special_power_forms(rho.cov, "square"))
        if margin < -0.05:
            pairs.append((rho, sigma))
    return pairs


def test_criterion_5_feasibility_semantics(capsys):
    problems = []
    if not dv.dmax(thermal(nu=5.0), thermal(nu=3.0)).is_infinite:
        problems.append("thermal 5 vs 3 dmax finite")
    indefinite = GaussianState(np.zeros(2), np.diag([1.5, 8.0]))
    if not dv.petz_renyi(thermal(nu=3.0), indefinite, 2.0).is_infinite:
        problems.append("indefinite Petz order-2 case finite")

    for i, (rho, sigma) in enumerate(_infeasible_pairs(100)):
        results = {
            "petz a=2": dv.petz_renyi(rho, sigma, 2.0).value,
            "petz a=3": dv.petz_renyi(rho, sigma, 3.0).value,
            "dmax": dv.dmax(rho, sigma).value,
            "cli petz a=2": cli.evaluate_measure("petz", rho, sigma, 2.0)["value"],
            "cli dmax": cli.evaluate_measure("dmax", rho, sigma)["value"],
        }
        grid = np.linspace(2.0, 6.0, 5)
        for a, row in zip(grid, cli.sweep_rows(rho, sigma, "petz", grid)):
            results[f"sweep a={a:g}"] = row[1]
        for name, value in results.items():
            if value not in (math.inf, "inf"):
                problems.append(f"pair {i} {name}: {value}")

    ok = not problems
    report(capsys, 5, "feasibility semantics", ok,
           f"2 fixed cases and 100 fuzzed infeasible pairs, {len(problems)} finite emissions")
    with capsys.disabled():
        for line in problems[:20]:
            print(f"    {line}")
    assert ok


# ------------------------------------------------------------- criterion 6


def test_criterion_6_cli_determinism(tmp_path, capsys):
    texts = []
    for k in range(2):
        path = tmp_path / f"report{k}.json"
        code = cli.main(["oracle-check", "--seed", "42", "--report", str(path)], out=io.StringIO())
        texts.append((code, path.read_bytes()))
    identical = texts[0] == texts[1]

    worst = 0.0
    for j, (rho, sigma) in enumerate(random_pairs(42, 20, 2)):
        for k, state in enumerate((rho, sigma)):
            path = tmp_path / f"state{j}_{k}.json"
            save_state(state, path)
            for back in (load_state(path), loads_state(dumps_state(state))):
                worst = max(worst, float(np.max(np.abs(back.cov - state.cov))),
                            float(np.max(np.abs(back.mean - state.mean), initial=0.0)))

    ok = identical and texts[0][0] == cli.EXIT_OK and worst <= 1e-15
    report(capsys, 6, "CLI determinism", ok,
           f"reports identical: {identical} (exit {texts[0][0]}, {len(texts[0][1])} bytes), "
           f"round-trip max error {worst:.1e}")
    assert ok
