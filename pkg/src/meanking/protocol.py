"""Seeded Monte Carlo of the three-step King's protocol.

Random streams are children of ``numpy.random.SeedSequence(seed)`` driving
counter-based Philox generators:

    stream 0: Bob's choice k
    stream 1: Bob's outcome beta
    stream 2: Alice's POVM outcome

so each stream is reproducible on its own and independent of batch layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import TOL_STATE, check_sign, expectation, spin_eigenstate, tensor
from .errors import ProbabilityLeak
from .povm import LABELS, SIGNS, TABLE_ROWS, PovmSet, as_triple, build_povm
from .states import bob_post_state, singlet

LEAK_TOL = 1e-8
ZERO_CUTOFF = TOL_STATE


def streams(seed: int, count: int = 3) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def infer(outcome: str, bob_choice: int) -> int:
    """Alice's guess: the beta that E_outcome does not rule out."""
    return -int(SIGNS[LABELS.index(outcome), bob_choice - 1])


def bob_outcome_probability(n, beta: int) -> float:
    """Born probability that Bob, measuring particle 2 of the singlet along
    n, finds ``beta``."""
    up = spin_eigenstate(n, check_sign(beta))
    proj = tensor(np.eye(2), np.outer(up, up.conj()))
    return expectation(proj, singlet())


def bob_measure(n, rng: np.random.Generator) -> tuple[int, np.ndarray]:
    beta = 1 if rng.random() < bob_outcome_probability(n, 1) else -1
    return beta, bob_post_state(n, beta)


def outcome_distribution(post_state, povm: PovmSet) -> np.ndarray:
    """Exact outcome probabilities prepared for sampling.

    Raises ProbabilityLeak if they do not sum to one within 1e-8. Entries
    below 1e-12 are set to exactly zero and the rest renormalized.
    """
    probs = povm.probabilities(post_state)
    total = float(probs.sum())
    if abs(total - 1.0) > LEAK_TOL:
        raise ProbabilityLeak(f"outcome probabilities sum to {total!r}")
    probs = np.where(probs < ZERO_CUTOFF, 0.0, probs)
    return probs / probs.sum()


def sampling_table(probs) -> np.ndarray:
    """Cumulative table for inverse-CDF sampling with u in [0, 1).

    Every entry from the last nonzero probability onward is pinned to 1, so a
    zero-probability label owns an empty interval and is never selected.
    """
    probs = np.asarray(probs, dtype=float)
    cdf = np.cumsum(probs)
    last = int(np.flatnonzero(probs)[-1])
    cdf[last:] = 1.0
    return cdf


def sample_labels(probs, u) -> np.ndarray:
    """Label indices for uniform draws ``u``."""
    return np.searchsorted(sampling_table(probs), u, side="right")


def alice_measure(post_state, povm: PovmSet, rng: np.random.Generator) -> str:
    probs = outcome_distribution(post_state, povm)
    return LABELS[int(sample_labels(probs, rng.random()))]


@dataclass(frozen=True)
class ProtocolConfig:
    triple: object
    r: float = 0.0
    seed: int = 0
    trials: int = 100_000
    bob_choice: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "triple", as_triple(self.triple))
        if self.trials < 0:
            raise ValueError("trials must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.bob_choice not in (None, 1, 2, 3):
            raise ValueError("bob_choice must be 1, 2 or 3")


@dataclass(frozen=True)
class ProtocolTranscript:
    bob_choice: int
    true_beta: int
    alice_outcome: str
    inferred_beta: int

    @property
    def correct(self) -> bool:
        return self.inferred_beta == self.true_beta


@dataclass
class Transcripts:
    """Column store of protocol rounds; indexing yields ProtocolTranscript."""

    bob_choice: np.ndarray
    true_beta: np.ndarray
    outcome: np.ndarray  # label indices
    inferred_beta: np.ndarray

    def __len__(self):
        return len(self.bob_choice)

    def __getitem__(self, i) -> ProtocolTranscript:
        return ProtocolTranscript(
            bob_choice=int(self.bob_choice[i]),
            true_beta=int(self.true_beta[i]),
            alice_outcome=LABELS[int(self.outcome[i])],
            inferred_beta=int(self.inferred_beta[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def correct(self) -> np.ndarray:
        return self.inferred_beta == self.true_beta


def _beta_index(beta):
    return (1 - np.asarray(beta)) // 2  # +1 -> 0, -1 -> 1


@dataclass
class RunStatistics:
    counts: np.ndarray  # (3, 2, 8): k-1, beta (+1, -1), label
    exact: np.ndarray  # (3, 2, 8) probabilities Tr(E_K rho_{k,beta})
    correct: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> Optional[float]:
        return self.correct / self.total if self.total else None

    def cell_totals(self) -> np.ndarray:
        return self.counts.sum(axis=2)

    def empirical(self) -> np.ndarray:
        n = self.cell_totals()[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n > 0, self.counts / np.maximum(n, 1), np.nan)

    def z_scores(self) -> np.ndarray:
        """(count - n p) / sqrt(n p (1 - p)) per cell; zero-variance cells
        give 0 when the count matches exactly and inf otherwise."""
        n = self.cell_totals()[..., None]
        mean = n * self.exact
        sd = np.sqrt(n * self.exact * (1.0 - self.exact))
        dev = np.abs(self.counts - mean)
        with np.errstate(invalid="ignore", divide="ignore"):
            z = np.where(sd > 0, dev / np.where(sd > 0, sd, 1.0), np.where(dev > 0, np.inf, 0.0))
        return z

    def within_binomial_bounds(self, nsigma: float = 5.0) -> bool:
        return bool(np.all(self.z_scores() <= nsigma))

    def merge(self, other: "RunStatistics") -> "RunStatistics":
        return RunStatistics(self.counts + other.counts, self.exact, self.correct + other.correct)


def exact_table(povm: PovmSet) -> np.ndarray:
    """(3, 2, 8) sampling distributions for each (k, beta)."""
    out = np.zeros((3, 2, 8))
    for k, beta in TABLE_ROWS:
        state = bob_post_state(povm.triple.vectors[k - 1], beta)
        out[k - 1, int(_beta_index(beta))] = outcome_distribution(state, povm)
    return out


def run(config: ProtocolConfig, povm: Optional[PovmSet] = None) -> tuple[RunStatistics, Transcripts]:
    """Play ``config.trials`` rounds and tally them.

    Each round: Bob picks k (uniform unless fixed), measures n_k . sigma on
    his half of the singlet, returns it; Alice measures her POVM and infers
    beta from the outcome and k.
    """
    if povm is None:
        povm = build_povm(config.triple, config.r)
    exact = exact_table(povm)
    s_k, s_beta, s_alice = streams(config.seed)
    trials = config.trials

    if config.bob_choice is None:
        k = s_k.integers(1, 4, size=trials)
    else:
        k = np.full(trials, config.bob_choice)
    p_plus = np.array([bob_outcome_probability(n, 1) for n in povm.triple.vectors])
    beta = np.where(s_beta.random(trials) < p_plus[k - 1], 1, -1)
    u = s_alice.random(trials)

    outcome = np.empty(trials, dtype=int)
    bi = _beta_index(beta)
    for kk in (1, 2, 3):
        for b in (0, 1):
            sel = (k == kk) & (bi == b)
            if np.any(sel):
                outcome[sel] = sample_labels(exact[kk - 1, b], u[sel])
    inferred = -SIGNS[outcome, k - 1] if trials else np.empty(0, dtype=int)

    counts = np.zeros((3, 2, 8), dtype=np.int64)
    np.add.at(counts, (k - 1, bi, outcome), 1)
    transcripts = Transcripts(k, beta, outcome, inferred)
    stats = RunStatistics(counts=counts, exact=exact, correct=int(np.sum(transcripts.correct)))
    return stats, transcripts

