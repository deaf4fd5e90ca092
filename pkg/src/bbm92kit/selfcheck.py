"""Built-in invariant suite behind the `selftest` CLI command.

Each check re-derives one of the toolkit's core guarantees at reduced size so
the whole suite stays interactive; the pytest suite runs the full-size
versions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import attack, povm, rates, sim
from .fock import Basis, Bit, ModePartition, basis_state, inner_product, multimode_inner_product


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _compositions(n: int):
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in _compositions(n - first):
            yield (first, *rest)


def check_overlap_law() -> CheckResult:
    worst = 0.0
    for n in range(1, 9):
        for b in (Bit.ZERO, Bit.ONE):
            for b2 in (Bit.ZERO, Bit.ONE):
                got = inner_product(basis_state(n, Basis.X, b), basis_state(n, Basis.Z, b2))
                want = (-1.0) ** (b * b2 * n) * 2.0 ** (-n / 2.0)
                worst = max(worst, abs(got - want))
    for n in range(2, 7):
        for parts in _compositions(n):
            got = multimode_inner_product(
                ModePartition(parts), Basis.X, Bit.ONE, Basis.Z, Bit.ONE
            )
            want = (-1.0) ** n * 2.0 ** (-n / 2.0)
            worst = max(worst, abs(got - want))
    return CheckResult("overlap law", worst <= 1e-12, f"max deviation {worst:.2e}")


def check_povm_completeness() -> CheckResult:
    worst = 0.0
    for n_a in range(1, 8):
        for n_b in range(1, 8):
            if (n_a + 1) * (n_b + 1) > povm.DIM_CAP:
                continue
            pair = povm.PhotonPair(n_a, n_b)
            total = (
                povm.f_cor(pair).entries
                + povm.f_err(pair).entries
                + povm.f_dbl(pair).entries
            )
            worst = max(worst, float(np.max(np.abs(total - np.eye(pair.joint_dim)))))
    return CheckResult("POVM completeness", worst <= 1e-12, f"max |sum - I| {worst:.2e}")


def check_odd_odd_bound() -> CheckResult:
    worst = 0.0
    for n_a in range(1, 9, 2):
        for n_b in range(1, 9, 2):
            if n_a + n_b < 3 or n_a + n_b > 9:
                continue
            l_sum = (n_a - 1) // 2 + (n_b - 1) // 2
            want = 0.5 * (1.0 - 2.0 ** (-l_sum))
            got = povm.min_double_click(povm.PhotonPair(n_a, n_b))
            worst = max(worst, abs(got - want))
    return CheckResult("odd-odd double-click bound", worst <= 1e-9, f"max deviation {worst:.2e}")


def check_boundary_12() -> CheckResult:
    points = povm.trace_boundary(povm.PhotonPair(1, 2), num_points=400)
    deltas = np.array([p.delta_m for p in points])
    epss = np.array([p.eps_m for p in points])
    on_curve = deltas <= 1.0 / 3.0 + 1e-12
    dev = float(
        np.max(np.abs(epss[on_curve] - rates.g(np.clip(deltas[on_curve], 0, 1.0 / 3.0))))
    )
    ends = abs(float(epss[np.argmin(deltas)]) - 0.5) <= 1e-6 and float(deltas.min()) <= 1e-9
    ok = dev <= 1e-6 and ends
    return CheckResult("(1,2) boundary tightness", ok, f"max |eps - g| {dev:.2e}")


def check_region_soundness() -> CheckResult:
    rng = np.random.default_rng(20240817)
    violations = 0
    total = 0
    for n_a in range(1, 9):
        for n_b in range(1, 9):
            if n_a + n_b < 3 or (n_a + 1) * (n_b + 1) > 36:
                continue
            pair = povm.PhotonPair(n_a, n_b)
            fd = povm.f_dbl(pair).entries
            fe = povm.f_err(pair).entries
            states = rng.standard_normal((2000, pair.joint_dim))
            states /= np.linalg.norm(states, axis=1, keepdims=True)
            dbl = np.einsum("ni,ij,nj->n", states, fd, states)
            err = np.einsum("ni,ij,nj->n", states, fe, states)
            env = rates.multiphoton_envelope(np.clip(dbl, 0.0, 1.0))
            violations += int(np.sum(err < env - 1e-8))
            total += len(states)
    return CheckResult(
        "trade-off region soundness", violations == 0, f"{violations}/{total} outside"
    )


def check_eps1_star() -> CheckResult:
    x = rates.eps1_star()
    residual = abs(16.0 * x * (1.0 - x) ** 3 - 1.0)
    ok = residual <= 1e-10 and abs(x - 0.080) <= 5e-4 and x < 0.1
    return CheckResult("tangency error rate", ok, f"x={x:.9f} residual {residual:.2e}")


def check_tau_consistency() -> CheckResult:
    worst = 0.0
    dominance = 0.0
    n = 0
    for d in np.linspace(0.0, 0.2499, 20):
        limit = rates.feasible_eps_limit(d)
        if limit <= 0:
            continue
        for frac in np.linspace(0.0, 1.0, 20):
            stats = rates.ObservedStats(d, frac * limit)
            if not stats.feasible:
                continue
            n += 1
            closed = rates.tau_closed_form(stats).tau
            worst = max(worst, abs(closed - rates.tau_numeric(stats, resolution=1000)))
            dominance = min(dominance, closed - rates.tau_low(stats))
    ok = worst <= 1e-5 and dominance >= -1e-9
    return CheckResult(
        "tau closed form vs numeric", ok, f"{n} pts, max dev {worst:.2e}, min margin {dominance:.2e}"
    )


def check_attack() -> CheckResult:
    v = attack.build_v(1, 2).entries
    defect = 0.0
    for w in (Basis.Z, Basis.X):
        for a in (Bit.ZERO, Bit.ONE):
            for b in (Bit.ZERO, Bit.ONE):
                src = np.kron(
                    basis_state(1, w, a).amplitudes, basis_state(2, w, b).amplitudes
                )
                tgt = np.kron(
                    basis_state(1, w, a).amplitudes,
                    basis_state(2, w, Bit(b ^ a)).amplitudes,
                )
                defect = max(defect, float(np.max(np.abs(v @ src - tgt))))
    sweep = attack.boundary_sweep(500)
    acc_dev = max(abs(p.result.eve_bit_accuracy - 1.0) for p in sweep)
    curve_dev = 0.0
    covered = []
    for p in sweep:
        if p.result.delta_m <= 1.0 / 3.0 + 1e-12:
            gap = p.result.eps_m - float(rates.g(min(p.result.delta_m, 1.0 / 3.0)))
            if abs(gap) <= 1e-6:
                covered.append(p.result.delta_m)
            curve_dev = min(curve_dev, gap)
    covered.sort()
    coverage_ok = covered and covered[0] <= 1e-9 and covered[-1] >= 1.0 / 3.0 - 1e-9
    ok = defect <= 1e-10 and acc_dev <= 1e-12 and curve_dev >= -1e-9 and bool(coverage_ok)
    return CheckResult(
        "explicit attack",
        ok,
        f"V defect {defect:.2e}, accuracy dev {acc_dev:.2e}, below-curve {curve_dev:.2e}",
    )


def check_key_rate_anchors() -> CheckResult:
    ok = True
    detail = []
    r0 = rates.key_rate(rates.ObservedStats(0.0, 0.0))
    ok &= abs(r0.r_key - 1.0) <= 1e-15
    for d in np.linspace(0.0, 0.25, 11):
        r = rates.key_rate(rates.ObservedStats(float(d), 0.0))
        ok &= abs(r.r_key - (1.0 - 4.0 * d)) <= 1e-12
        upper = (1.0 - d) - rates.tau_low(rates.ObservedStats(float(d), 0.0))
        ok &= upper >= r.r_key - 1e-9
    detail.append(f"R(0,0)={r0.r_key}")
    return CheckResult("key-rate anchors", bool(ok), "; ".join(detail))


def check_simulation() -> CheckResult:
    ideal = sim.run_protocol(sim.SourceModel.ideal_pair(), 20000, seed=7)
    again = sim.run_protocol(sim.SourceModel.ideal_pair(), 20000, seed=7)
    ideal_ok = ideal == again and ideal.n_dbl == 0 and ideal.n_err == 0
    werner = sim.run_protocol(sim.SourceModel.werner(0.9), 100000, seed=8)
    z = abs(werner.eps_hat - 0.05) / max(werner.eps_se, 1e-12)
    return CheckResult(
        "seeded simulation", ideal_ok and z <= 5.0, f"ideal clean, werner z={z:.2f}"
    )


def run_all() -> list[CheckResult]:
    checks = (
        check_overlap_law,
        check_povm_completeness,
        check_odd_odd_bound,
        check_boundary_12,
        check_region_soundness,
        check_eps1_star,
        check_tau_consistency,
        check_attack,
        check_key_rate_anchors,
        check_simulation,
    )
    return [fn() for fn in checks]
