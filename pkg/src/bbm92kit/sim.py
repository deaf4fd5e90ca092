"""Event-level Monte Carlo of the sift-and-discard protocol.

Each event draws independent uniform basis choices for the two parties and a
Born-rule outcome for the configured source.  Events where the bases match
and both parties detect photons enter the tally; double clicks on either side
are counted and discarded, the rest split into correct and error bits.

Randomness contract: every event consumes exactly four uniform draws from a
counter-based generator keyed by the seed, so chunked or per-event parallel
generation reproduces the serial stream bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import rates
from .attack import attack_density
from .errors import InfeasibleError
from .fock import Basis, Bit, PolarizedFockState, basis_state
from .povm import DIM_CAP, outcome_projectors

_DRAWS_PER_EVENT = 4
_PROB_FLOOR = 1e-12  # Born probabilities below numerical noise are exact zeros


class Outcome(Enum):
    """What one party's detector pair reported for one event."""

    BIT0 = 0
    BIT1 = 1
    DOUBLE = 2
    NO_DETECTION = 3


@dataclass(frozen=True)
class EventRecord:
    """One protocol round as seen after public announcements."""

    alice_basis: Basis
    bob_basis: Basis
    alice_outcome: Outcome
    bob_outcome: Outcome

    @property
    def detected(self) -> bool:
        return (
            self.alice_outcome is not Outcome.NO_DETECTION
            and self.bob_outcome is not Outcome.NO_DETECTION
        )

    @property
    def sifted(self) -> bool:
        """Kept for key generation: same basis, both detected, no double click."""
        return (
            self.alice_basis is self.bob_basis
            and self.detected
            and self.alice_outcome is not Outcome.DOUBLE
            and self.bob_outcome is not Outcome.DOUBLE
        )


@dataclass(frozen=True)
class SiftedTally:
    """Counts over events with matching bases where both parties detected."""

    n: int
    n_dbl: int
    n_err: int
    n_cor: int
    n_events: int = 0
    n_mismatched: int = 0
    n_undetected: int = 0

    def __post_init__(self) -> None:
        if self.n_dbl + self.n_err + self.n_cor != self.n:
            raise ValueError("double + error + correct counts must equal n")

    @property
    def delta_hat(self) -> float:
        return self.n_dbl / self.n if self.n else 0.0

    @property
    def eps_hat(self) -> float:
        return self.n_err / self.n if self.n else 0.0

    @property
    def delta_se(self) -> float:
        p = self.delta_hat
        return math.sqrt(p * (1.0 - p) / self.n) if self.n else 0.0

    @property
    def eps_se(self) -> float:
        p = self.eps_hat
        return math.sqrt(p * (1.0 - p) / self.n) if self.n else 0.0


@dataclass(frozen=True, eq=False)
class SourceBranch:
    """One mixture component: a photon-number pair and its joint density."""

    weight: float
    n_a: int
    n_b: int
    rho: np.ndarray

    def __post_init__(self) -> None:
        if not 0.0 < self.weight <= 1.0:
            raise ValueError(f"branch weight must be in (0, 1], got {self.weight!r}")
        if self.n_a < 0 or self.n_b < 0:
            raise ValueError("photon numbers must be >= 0")
        dim = (self.n_a + 1) * (self.n_b + 1)
        if dim > DIM_CAP:
            raise ValueError(f"joint dimension {dim} exceeds cap {DIM_CAP}")
        rho = np.array(self.rho, dtype=float)
        if rho.shape != (dim, dim):
            raise ValueError(f"density must be {dim}x{dim}, got {rho.shape}")
        if float(np.max(np.abs(rho - rho.T))) > 1e-10:
            raise ValueError("density matrix must be symmetric")
        rho = 0.5 * (rho + rho.T)
        if abs(float(np.trace(rho)) - 1.0) > 1e-10:
            raise ValueError(f"density trace must be 1, got {np.trace(rho)!r}")
        if float(np.linalg.eigvalsh(rho).min()) < -1e-10:
            raise ValueError("density matrix must be positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)


def _phi_plus_density() -> np.ndarray:
    phi = np.zeros(4)
    for bit in (Bit.ZERO, Bit.ONE):
        amp = basis_state(1, Basis.Z, bit).amplitudes
        phi += np.kron(amp, amp)
    phi /= np.sqrt(2.0)
    return np.outer(phi, phi)


@dataclass(frozen=True, eq=False)
class SourceModel:
    """Mixture of photon-number branches feeding the two apparatuses."""

    kind: str
    branches: tuple[SourceBranch, ...]

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("source needs at least one branch")
        total = sum(b.weight for b in self.branches)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"branch weights must sum to 1, got {total!r}")

    @classmethod
    def ideal_pair(cls) -> "SourceModel":
        """Perfectly correlated single-photon pair: no errors, no double clicks."""
        return cls("ideal_pair", (SourceBranch(1.0, 1, 1, _phi_plus_density()),))

    @classmethod
    def werner(cls, visibility: float) -> "SourceModel":
        """Entangled pair mixed with white noise: error rate (1-v)/2, no double clicks."""
        if not 0.0 <= visibility <= 1.0:
            raise ValueError(f"visibility must be in [0, 1], got {visibility!r}")
        rho = visibility * _phi_plus_density() + (1.0 - visibility) * np.eye(4) / 4.0
        return cls("werner", (SourceBranch(1.0, 1, 1, rho),))

    @classmethod
    def eve_attack(cls, chi: PolarizedFockState, xi: float) -> "SourceModel":
        """Ideal pairs diluted with the explicit attack in a fraction xi of events."""
        if not 0.0 <= xi <= 1.0:
            raise ValueError(f"multiphoton fraction must be in [0, 1], got {xi!r}")
        branches = []
        if xi < 1.0:
            branches.append(SourceBranch(1.0 - xi, 1, 1, _phi_plus_density()))
        if xi > 0.0:
            branches.append(SourceBranch(xi, 1, 2, attack_density(chi)))
        return cls("eve_attack", tuple(branches))

    @classmethod
    def custom(cls, branches) -> "SourceModel":
        """Arbitrary mixture of (weight, n_a, n_b, density) blocks; n=0 means vacuum."""
        return cls("custom", tuple(SourceBranch(*b) for b in branches))


def _party_projectors(n: int, w: Basis) -> tuple[list[np.ndarray], list[int]]:
    if n == 0:
        return [np.eye(1)], [Outcome.NO_DETECTION.value]
    p0, p1, pdbl = outcome_projectors(n, w)
    return (
        [p0.entries, p1.entries, pdbl.entries],
        [Outcome.BIT0.value, Outcome.BIT1.value, Outcome.DOUBLE.value],
    )


@dataclass(frozen=True)
class _OutcomeTable:
    codes_a: np.ndarray
    codes_b: np.ndarray
    cum: np.ndarray
    probs: np.ndarray


_TABLE_CACHE: dict[int, dict] = {}


def _tables(source: SourceModel) -> dict:
    """Per-branch, per-basis-pair outcome distributions, cached by source identity."""
    cached = _TABLE_CACHE.get(id(source))
    if cached is not None and cached["source"] is source:
        return cached
    tables = {}
    for bi, branch in enumerate(source.branches):
        for wa in (Basis.Z, Basis.X):
            proj_a, codes_a = _party_projectors(branch.n_a, wa)
            for wb in (Basis.Z, Basis.X):
                proj_b, codes_b = _party_projectors(branch.n_b, wb)
                probs, ca, cb = [], [], []
                for pa, code_a in zip(proj_a, codes_a):
                    for pb, code_b in zip(proj_b, codes_b):
                        p = float(np.trace(branch.rho @ np.kron(pa, pb)))
                        probs.append(p if p > _PROB_FLOOR else 0.0)
                        ca.append(code_a)
                        cb.append(code_b)
                probs = np.array(probs)
                total = probs.sum()
                if abs(total - 1.0) > 1e-9:
                    raise ValueError(f"outcome probabilities sum to {total!r}")
                probs /= total
                tables[(bi, wa, wb)] = _OutcomeTable(
                    np.array(ca), np.array(cb), np.cumsum(probs), probs
                )
    weights = np.array([b.weight for b in source.branches])
    cached = {"source": source, "tables": tables, "branch_cum": np.cumsum(weights)}
    _TABLE_CACHE[id(source)] = cached
    return cached


def event_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniform draws for events [start, start+count): shape (count, 4).

    Counter-based: one Philox counter block yields exactly the four doubles of
    one event, so any chunking of the event range reproduces the same
    per-event draws.
    """
    if start < 0 or count < 0:
        raise ValueError("start and count must be >= 0")
    bitgen = np.random.Philox(key=seed, counter=[start, 0, 0, 0])
    return np.random.Generator(bitgen).random((count, _DRAWS_PER_EVENT))


class EventStream:
    """Seeded per-event randomness; event i always sees the same four draws."""

    def __init__(self, seed: int, start: int = 0, chunk: int = 1024):
        self.seed = seed
        self._next = start
        self._chunk = max(chunk, 1)
        self._buffer = np.empty((0, _DRAWS_PER_EVENT))
        self._buffer_start = start

    def next4(self) -> np.ndarray:
        offset = self._next - self._buffer_start
        if offset >= len(self._buffer):
            self._buffer = event_uniforms(self.seed, self._next, self._chunk)
            self._buffer_start = self._next
            offset = 0
        self._next += 1
        return self._buffer[offset]


_BASES = (Basis.Z, Basis.X)


def sample_event(source: SourceModel, rng_stream: EventStream) -> EventRecord:
    """Draw one protocol round: bases, branch, Born-rule outcome pair."""
    u = rng_stream.next4()
    cache = _tables(source)
    wa = _BASES[int(u[0] >= 0.5)]
    wb = _BASES[int(u[1] >= 0.5)]
    bi = int(np.searchsorted(cache["branch_cum"], u[2], side="right"))
    bi = min(bi, len(source.branches) - 1)
    table = cache["tables"][(bi, wa, wb)]
    k = min(int(np.searchsorted(table.cum, u[3], side="right")), len(table.cum) - 1)
    return EventRecord(wa, wb, Outcome(int(table.codes_a[k])), Outcome(int(table.codes_b[k])))


def run_protocol(
    source: SourceModel, num_events: int, seed: int, chunk: int = 1 << 20
) -> SiftedTally:
    """Simulate ``num_events`` rounds and tally the same-basis detected events."""
    if num_events < 1:
        raise ValueError(f"num_events must be >= 1, got {num_events}")
    cache = _tables(source)
    branch_cum = cache["branch_cum"]
    counts = {"n": 0, "dbl": 0, "err": 0, "cor": 0, "mismatch": 0, "undetected": 0}
    for start in range(0, num_events, chunk):
        count = min(chunk, num_events - start)
        u = event_uniforms(seed, start, count)
        wa = (u[:, 0] >= 0.5).astype(np.int8)
        wb = (u[:, 1] >= 0.5).astype(np.int8)
        branch = np.minimum(
            np.searchsorted(branch_cum, u[:, 2], side="right"), len(branch_cum) - 1
        )
        out_a = np.empty(count, dtype=np.int8)
        out_b = np.empty(count, dtype=np.int8)
        for bi in range(len(source.branches)):
            for ia, basis_a in enumerate(_BASES):
                for ib, basis_b in enumerate(_BASES):
                    mask = (branch == bi) & (wa == ia) & (wb == ib)
                    if not mask.any():
                        continue
                    table = cache["tables"][(bi, basis_a, basis_b)]
                    k = np.minimum(
                        np.searchsorted(table.cum, u[mask, 3], side="right"),
                        len(table.cum) - 1,
                    )
                    out_a[mask] = table.codes_a[k]
                    out_b[mask] = table.codes_b[k]
        same = wa == wb
        detected = (out_a != Outcome.NO_DETECTION.value) & (
            out_b != Outcome.NO_DETECTION.value
        )
        reg = same & detected
        dbl = reg & ((out_a == Outcome.DOUBLE.value) | (out_b == Outcome.DOUBLE.value))
        err = reg & ~dbl & (out_a != out_b)
        counts["n"] += int(reg.sum())
        counts["dbl"] += int(dbl.sum())
        counts["err"] += int(err.sum())
        counts["cor"] += int((reg & ~dbl & (out_a == out_b)).sum())
        counts["mismatch"] += int((~same).sum())
        counts["undetected"] += int((~detected).sum())
    return SiftedTally(
        n=counts["n"],
        n_dbl=counts["dbl"],
        n_err=counts["err"],
        n_cor=counts["cor"],
        n_events=num_events,
        n_mismatched=counts["mismatch"],
        n_undetected=counts["undetected"],
    )


def analytic_fractions(source: SourceModel) -> tuple[float, float]:
    """Exact double-click and error fractions among same-basis detected events."""
    cache = _tables(source)
    detect_mass = 0.0
    dbl_mass = 0.0
    err_mass = 0.0
    for bi, branch in enumerate(source.branches):
        for w in _BASES:
            table = cache["tables"][(bi, w, w)]
            det = (table.codes_a != Outcome.NO_DETECTION.value) & (
                table.codes_b != Outcome.NO_DETECTION.value
            )
            dbl = det & (
                (table.codes_a == Outcome.DOUBLE.value)
                | (table.codes_b == Outcome.DOUBLE.value)
            )
            err = det & ~dbl & (table.codes_a != table.codes_b)
            scale = 0.5 * branch.weight
            detect_mass += scale * float(table.probs[det].sum())
            dbl_mass += scale * float(table.probs[dbl].sum())
            err_mass += scale * float(table.probs[err].sum())
    if detect_mass <= 0.0:
        raise ValueError("source never produces a same-basis detected event")
    return dbl_mass / detect_mass, err_mass / detect_mass


@dataclass(frozen=True)
class SimulationReport:
    """Sampled and analytic key-rate figures for one simulated run."""

    seed: int
    f_ec: float
    num_events: int
    tally: SiftedTally
    delta_hat: float
    eps_hat: float
    delta_se: float
    eps_se: float
    sampled: rates.KeyRateResult | None
    analytic_delta: float
    analytic_eps: float
    analytic: rates.KeyRateResult | None
    r_key_gap: float | None
    conjectured_rate_sampled: float | None
    conjectured_rate_analytic: float | None

    @property
    def sampled_feasible(self) -> bool:
        return self.sampled is not None

    @property
    def analytic_feasible(self) -> bool:
        return self.analytic is not None


def _try_key_rate(delta: float, eps: float, n: int | None, f: float):
    try:
        return rates.key_rate(rates.ObservedStats(delta, eps, n), f)
    except (InfeasibleError, ValueError):
        return None


def _try_conjectured(delta: float, eps: float) -> float | None:
    try:
        return rates.conjectured_random_assignment_rate(rates.ObservedStats(delta, eps))
    except ValueError:
        return None


def end_to_end(
    source: SourceModel, num_events: int, f: float = 1.0, seed: int = 0
) -> SimulationReport:
    """Run the protocol, apply the rate formulas to the sampled fractions.

    The report pairs the sampled key fraction with the analytic one from the
    source's exact fractions; infeasible sampled statistics are reported as
    such rather than raising.  Conjectured random-assignment rates are carried
    in explicitly labeled fields, never merged with proved rates.
    """
    tally = run_protocol(source, num_events, seed)
    a_delta, a_eps = analytic_fractions(source)
    sampled = _try_key_rate(tally.delta_hat, tally.eps_hat, tally.n, f)
    analytic = _try_key_rate(a_delta, a_eps, None, f)
    gap = None
    if sampled is not None and analytic is not None:
        gap = sampled.r_key - analytic.r_key
    return SimulationReport(
        seed=seed,
        f_ec=f,
        num_events=num_events,
        tally=tally,
        delta_hat=tally.delta_hat,
        eps_hat=tally.eps_hat,
        delta_se=tally.delta_se,
        eps_se=tally.eps_se,
        sampled=sampled,
        analytic_delta=a_delta,
        analytic_eps=a_eps,
        analytic=analytic,
        r_key_gap=gap,
        conjectured_rate_sampled=_try_conjectured(tally.delta_hat, tally.eps_hat),
        conjectured_rate_analytic=_try_conjectured(a_delta, a_eps),
    )
