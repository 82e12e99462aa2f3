"""Joint analog-phase and pattern-state beamforming.

Optimizes f (Tx phase shifters, |f_i|^2 = 1/N_T), w (Rx combiner,
|w_j|^2 = 1/N_R) and the one-hot per-element state selections on both ends,
maximizing |w^H D H_EM B^T f|. Phase updates are closed form; state updates
use either greedy entry elimination or exhaustive enumeration, wrapped in an
alternating loop with a non-decrease safeguard.

The alternating optimizer is an sklearn-style estimator: construct with
hyperparameters, ``fit`` on an EmChannel, read the solution from trailing-
underscore attributes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np
from sklearn.base import BaseEstimator

from .channel import EmChannel, select_em

EXHAUSTIVE_CAP = 10_000_000


@dataclass(frozen=True)
class StateSelection:
    """Per-element pattern-state choice (0-based indices, one per element)."""

    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return self.indices.size

    def blocks(self, n_states: int) -> np.ndarray:
        """Materialized one-hot rows, shape (n_elements, n_states)."""
        b = np.zeros((self.indices.size, n_states))
        b[np.arange(self.indices.size), self.indices] = 1.0
        return b

    def block_diagonal(self, n_states: int) -> np.ndarray:
        """The literal selection matrix (n_elements x n_states*n_elements)."""
        m = np.zeros((self.indices.size, n_states * self.indices.size))
        m[np.arange(self.indices.size), np.arange(self.indices.size) * n_states + self.indices] = 1.0
        return m


def unit_modulus(phases, n_elements: int | None = None) -> np.ndarray:
    """Constant-modulus vector (1/sqrt(n)) * exp(j*phases)."""
    phases = np.asarray(phases, dtype=float)
    n = phases.size if n_elements is None else n_elements
    return np.exp(1j * phases) / np.sqrt(n)


def _aligned_phase(v: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """Closed-form phase update (1/sqrt(n)) exp(j arg v); an all-zero v is
    degenerate and returns the previous vector unchanged."""
    if not np.any(v):
        return previous
    return np.exp(1j * np.angle(v)) / np.sqrt(v.size)


def update_phase(em: EmChannel, fixed, tx_sel, rx_sel, side: str,
                 previous=None) -> np.ndarray:
    """One closed-form phase-shifter update.

    side='tx': returns f* aligned with v = B H_EM^H D^T w (``fixed`` is w).
    side='rx': returns w* aligned with v = D H_EM B^T f (``fixed`` is f).

    An all-zero alignment vector is degenerate; the previous vector is
    returned unchanged when supplied, else a uniform-phase vector.
    """
    h_sel = select_em(em, tx_sel, rx_sel)
    if side == "tx":
        v = h_sel.conj().T @ np.asarray(fixed)
    elif side == "rx":
        v = h_sel @ np.asarray(fixed)
    else:
        raise ValueError(f"unknown side {side!r}")
    fallback = previous if previous is not None else unit_modulus(np.zeros(v.size))
    return _aligned_phase(v, fallback)


def selection_weights(em: EmChannel, f, w, tx_sel, rx_sel, side: str) -> np.ndarray:
    """The stacked per-(element, state) contribution vector d, reshaped to
    (n_elements, n_states) blocks.

    side='tx': d = (H_EM^T D^T w*) had (f kron 1_N), blocks over Tx elements.
    side='rx': d = (H_EM B^T f) had (w* kron 1_N), blocks over Rx elements.
    """
    n = em.n_states
    if side == "tx":
        d_idx = np.asarray(getattr(rx_sel, "indices", rx_sel), dtype=int)
        rows = np.arange(em.n_rx) * n + d_idx
        vec = em.matrix[rows, :].T @ np.conj(w)  # H_EM^T D^T w*
        d = vec * np.repeat(f, n)
        return d.reshape(em.n_tx, n)
    if side == "rx":
        b_idx = np.asarray(getattr(tx_sel, "indices", tx_sel), dtype=int)
        cols = np.arange(em.n_tx) * n + b_idx
        vec = em.matrix[:, cols] @ f  # H_EM B^T f
        d = vec * np.repeat(np.conj(w), n)
        return d.reshape(em.n_rx, n)
    raise ValueError(f"unknown side {side!r}")


def greedy_eliminate(d_blocks: np.ndarray, eager: bool = False) -> np.ndarray:
    """Greedy entry elimination over (n_elements, n_states) contributions.

    Starts with every state active, then for N-1 rounds removes from each
    block the entry whose removal leaves the largest |running sum|. The
    running sum is recomputed once per round; ``eager`` updates it after
    every removal instead. Ties break toward the lowest state index.
    Returns the surviving state index per element.
    """
    d = np.asarray(d_blocks)
    n_el, n_states = d.shape
    active = np.ones_like(d, dtype=bool)
    v = d.sum()
    for _ in range(n_states - 1):
        if not eager:
            v = d[active].sum()
        for m in range(n_el):
            cand = np.where(active[m], np.abs(v - d[m]), -np.inf)
            u = int(np.argmax(cand))
            active[m, u] = False
            if eager:
                v = v - d[m, u]
    return np.argmax(active, axis=1)


def greedy_select(em: EmChannel, f, w, other: StateSelection, side: str,
                  eager: bool = False) -> StateSelection:
    """Greedy state selection for one link end, the other end fixed."""
    if side == "tx":
        d = selection_weights(em, f, w, tx_sel=None, rx_sel=other, side="tx")
    else:
        d = selection_weights(em, f, w, tx_sel=other, rx_sel=None, side="rx")
    return StateSelection(greedy_eliminate(d, eager=eager))


def exhaustive_eliminate(d_blocks: np.ndarray, cap: int = EXHAUSTIVE_CAP) -> np.ndarray:
    """Full enumeration of |sum_m d[m, choice_m]| over all N^M choices.

    Candidates are visited in lexicographic index order and replaced only on
    strict improvement, so ties resolve to the lexicographically smallest
    index list. Cost is O(N^M * M) by construction.
    """
    d = np.asarray(d_blocks)
    n_el, n_states = d.shape
    if n_states ** n_el > cap:
        raise ValueError(
            f"search space too large: {n_states}^{n_el} exceeds cap {cap}"
        )
    rows = [list(row) for row in d]
    best_val = -1.0
    best = None
    for choice in product(range(n_states), repeat=n_el):
        s = 0j
        for m, u in enumerate(choice):
            s += rows[m][u]
        val = abs(s)
        if val > best_val:
            best_val = val
            best = choice
    return np.array(best, dtype=int)


def exhaustive_select(em: EmChannel, f, w, other: StateSelection, side: str,
                      cap: int = EXHAUSTIVE_CAP) -> StateSelection:
    """Globally optimal state selection for one link end by enumeration."""
    if side == "tx":
        d = selection_weights(em, f, w, tx_sel=None, rx_sel=other, side="tx")
    else:
        d = selection_weights(em, f, w, tx_sel=other, rx_sel=None, side="rx")
    return StateSelection(exhaustive_eliminate(d, cap=cap))


def objective_value(em: EmChannel, f, w, tx_sel, rx_sel) -> float:
    """|w^H D H_EM B^T f| (gamma excluded; it does not affect the argmax)."""
    return float(abs(np.conj(w) @ select_em(em, tx_sel, rx_sel) @ f))


def spectral_efficiency(h_er: np.ndarray, f, w, p_t: float, noise: float) -> float:
    """R = log2(1 + P_T |w^H H f|^2 / sigma^2), bps/Hz."""
    if p_t <= 0 or noise <= 0:
        raise ValueError("transmit power and noise must be positive")
    snr = p_t * abs(np.conj(w) @ h_er @ f) ** 2 / noise
    return float(np.log2(1.0 + snr))


@dataclass(frozen=True)
class BeamformerSolution:
    """Converged (f, w, B, D) with the achieved objective |w^H D H_EM B^T f|."""

    f: np.ndarray
    w: np.ndarray
    tx_states: StateSelection
    rx_states: StateSelection
    objective: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "tx_phases_rad": np.angle(self.f).tolist(),
            "rx_phases_rad": np.angle(self.w).tolist(),
            "tx_states": self.tx_states.indices.tolist(),
            "rx_states": self.rx_states.indices.tolist(),
            "objective": self.objective,
            "iterations": self.iterations,
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "BeamformerSolution":
        with open(path) as fh:
            doc = json.load(fh)
        n_t = len(doc["tx_phases_rad"])
        n_r = len(doc["rx_phases_rad"])
        return cls(
            f=unit_modulus(doc["tx_phases_rad"], n_t),
            w=unit_modulus(doc["rx_phases_rad"], n_r),
            tx_states=StateSelection(np.array(doc["tx_states"])),
            rx_states=StateSelection(np.array(doc["rx_states"])),
            objective=doc["objective"],
            iterations=doc["iterations"],
        )


class AlternatingBeamformer(BaseEstimator):
    """Alternating block-coordinate maximization of |w^H D H_EM B^T f|.

    Parameters
    ----------
    selector : 'greedy' or 'exhaustive'
        State-selection subroutine. 'greedy' is the entry-elimination
        heuristic; 'exhaustive' enumerates all N^M per-end candidates.
    optimize_states : bool
        When False, B and D stay at their initial values and only the phase
        shifters are optimized (the conventional-array benchmark).
    init_states : int, array pair, or None
        Fixed initial selection (scalar broadcast to both ends, or a
        (tx_indices, rx_indices) pair). None draws uniformly from the RNG.
    tol : float
        Relative objective-improvement stopping threshold.
    max_iter : int
        Maximum number of alternating sweeps.
    eager_greedy : bool
        Experimental variant: refresh the greedy running sum after each
        removal instead of once per round.
    fresh_rx_phase : bool
        Experimental variant: the w update uses the just-updated D instead
        of the previous one.
    random_state : int, Generator, or None
        Seeds the random initialization of f, w, B, D.

    Attributes (after fit)
    ----------------------
    f_, w_ : constant-modulus phase vectors
    tx_states_, rx_states_ : StateSelection
    objective_ : float, |w^H D H_EM B^T f|
    objective_path_ : list of per-sweep objectives (non-decreasing)
    n_iter_ : number of alternating sweeps performed
    """

    def __init__(
        self,
        selector: str = "greedy",
        optimize_states: bool = True,
        init_states=None,
        tol: float = 1e-8,
        max_iter: int = 100,
        eager_greedy: bool = False,
        fresh_rx_phase: bool = False,
        exhaustive_cap: int = EXHAUSTIVE_CAP,
        random_state=None,
    ):
        self.selector = selector
        self.optimize_states = optimize_states
        self.init_states = init_states
        self.tol = tol
        self.max_iter = max_iter
        self.eager_greedy = eager_greedy
        self.fresh_rx_phase = fresh_rx_phase
        self.exhaustive_cap = exhaustive_cap
        self.random_state = random_state

    def _select(self, em, f, w, other, side):
        if self.selector == "greedy":
            return greedy_select(em, f, w, other, side, eager=self.eager_greedy)
        if self.selector == "exhaustive":
            return exhaustive_select(em, f, w, other, side, cap=self.exhaustive_cap)
        raise ValueError(f"unknown selector {self.selector!r}")

    def _initial_states(self, em, rng):
        if self.init_states is None:
            return (
                StateSelection(rng.integers(0, em.n_states, em.n_tx)),
                StateSelection(rng.integers(0, em.n_states, em.n_rx)),
            )
        if np.isscalar(self.init_states):
            k = int(self.init_states)
            return (
                StateSelection(np.full(em.n_tx, k)),
                StateSelection(np.full(em.n_rx, k)),
            )
        tx_idx, rx_idx = self.init_states
        return StateSelection(np.asarray(tx_idx)), StateSelection(np.asarray(rx_idx))

    def fit(self, em: EmChannel, y=None):
        if not isinstance(em, EmChannel):
            raise TypeError("fit expects an EmChannel")
        rng = np.random.default_rng(self.random_state)
        f = unit_modulus(rng.uniform(0, 2 * np.pi, em.n_tx))
        w = unit_modulus(rng.uniform(0, 2 * np.pi, em.n_rx))
        b_sel, d_sel = self._initial_states(em, rng)

        obj = objective_value(em, f, w, b_sel, d_sel)
        path = [obj]
        n_iter = 0
        for _ in range(self.max_iter):
            n_iter += 1
            f = update_phase(em, w, b_sel, d_sel, side="tx", previous=f)
            if self.optimize_states:
                cand = self._select(em, f, w, d_sel, side="tx")
                # safeguard: adopt only if the objective does not decrease
                if objective_value(em, f, w, cand, d_sel) >= objective_value(
                    em, f, w, b_sel, d_sel
                ):
                    b_sel = cand
            # the w update uses the pre-update D (Algorithm step ordering);
            # fresh_rx_phase refreshes w after D is accepted instead
            w = update_phase(em, f, b_sel, d_sel, side="rx", previous=w)
            if self.optimize_states:
                cand = self._select(em, f, w, b_sel, side="rx")
                if objective_value(em, f, w, b_sel, cand) >= objective_value(
                    em, f, w, b_sel, d_sel
                ):
                    d_sel = cand
                if self.fresh_rx_phase:
                    w = update_phase(em, f, b_sel, d_sel, side="rx", previous=w)
            new_obj = objective_value(em, f, w, b_sel, d_sel)
            path.append(new_obj)
            if new_obj - obj <= self.tol * max(obj, 1e-300):
                obj = new_obj
                break
            obj = new_obj

        self.f_ = f
        self.w_ = w
        self.tx_states_ = b_sel
        self.rx_states_ = d_sel
        self.objective_ = obj
        self.objective_path_ = path
        self.n_iter_ = n_iter
        return self

    def solution_(self) -> BeamformerSolution:
        return BeamformerSolution(
            f=self.f_,
            w=self.w_,
            tx_states=self.tx_states_,
            rx_states=self.rx_states_,
            objective=self.objective_,
            iterations=self.n_iter_,
        )


def greedy_flops(n_states: int, n_tx: int, n_rx: int, n_iter: int = 1) -> float:
    """Leading-order operation count of the alternating greedy solver:
    I * (N^2 N_T^2 N_R + N^2 N_T N_R^2)."""
    n2 = n_states * n_states
    return float(n_iter * (n2 * n_tx * n_tx * n_rx + n2 * n_tx * n_rx * n_rx))


def exhaustive_flops(n_states: int, n_tx: int, n_rx: int, n_iter: int = 1) -> float:
    """Leading-order operation count of the exhaustive-selection variant:
    I * (N^2 N_T^2 N_R + N^N_T N N_T + N^2 N_T N_R^2 + N^N_R N N_R)."""
    n2 = n_states * n_states
    return float(
        n_iter
        * (
            n2 * n_tx * n_tx * n_rx
            + n_states**n_tx * n_states * n_tx
            + n2 * n_tx * n_rx * n_rx
            + n_states**n_rx * n_states * n_rx
        )
    )
