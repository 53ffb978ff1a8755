"""Event-driven SIR simulation on a configuration-model graph.

The graph itself is never built.  The Markov state is the degree measure of
the susceptibles plus, for every infectious and removed individual, the
number of her half-edges that still point into the susceptible class
("edges-to-S").  Events:

* removal: a uniformly chosen infectious individual recovers; her
  edges-to-S become removed-to-S edges;
* infection: an infectious-to-susceptible half-edge fires; the susceptible
  alter is chosen size-biased by degree, her remaining ``k-1`` half-edges
  are matched without replacement against the global half-edge pools
  (multivariate hypergeometric), and the touched infectious/removed
  individuals each lose the matched edges-to-S.

Waiting times are exponential with total rate ``r*N_IS + beta*I`` (direct
Gillespie selection between the two event classes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from sirnet.errors import ConfigurationError, InfeasibleDrawError, StateCorruptionError
from sirnet.measures import CountMeasure

INFINITE_TIME = math.inf


# ---------------------------------------------------------------------------
# Half-edge rosters
# ---------------------------------------------------------------------------


class Roster:
    """Per-individual edges-to-S counts with O(log n) uniform half-edge draws.

    A Fenwick tree over slot counts supports: append a new individual,
    add/subtract edges of one individual, and locate the owner of the
    m-th half-edge.  Slots are never reused; a removed-from-class
    individual simply holds count zero here.
    """

    __slots__ = ("_tree", "_counts", "_size", "_cap", "total")

    def __init__(self, capacity):
        self._cap = max(int(capacity), 1)
        self._tree = [0] * (self._cap + 1)
        self._counts = [0] * self._cap
        self._size = 0
        self.total = 0

    def __len__(self):
        return self._size

    def count(self, slot):
        return self._counts[slot]

    def counts(self):
        return self._counts[: self._size]

    def _grow(self):
        old = self._counts[: self._size]
        self._cap *= 2
        self._tree = [0] * (self._cap + 1)
        self._counts = [0] * self._cap
        self._size = 0
        self.total = 0
        for c in old:
            self.append(c)

    def append(self, count):
        if count < 0:
            raise StateCorruptionError("negative roster count")
        if self._size == self._cap:
            self._grow()
        slot = self._size
        self._size += 1
        if count:
            self.add(slot, count)
        return slot

    def add(self, slot, delta):
        if not 0 <= slot < self._size:
            raise IndexError(f"roster slot {slot} out of range")
        if self._counts[slot] + delta < 0:
            raise StateCorruptionError(
                f"roster slot {slot} would drop to {self._counts[slot] + delta} edges"
            )
        self._counts[slot] += delta
        self.total += delta
        i = slot + 1
        tree = self._tree
        while i <= self._cap:
            tree[i] += delta
            i += i & (-i)

    def _find(self, remainder):
        """Smallest slot whose cumulative count exceeds ``remainder``."""
        pos = 0
        mask = 1 << (self._cap.bit_length() - 1)
        tree = self._tree
        while mask:
            nxt = pos + mask
            if nxt <= self._cap and tree[nxt] <= remainder:
                remainder -= tree[nxt]
                pos = nxt
            mask >>= 1
        return pos  # 0-based slot

    def sample_half_edges(self, n_draw, rng):
        """Uniformly choose ``n_draw`` distinct half-edges; return
        ``{slot: multiplicity}``.  The roster is left unchanged."""
        if n_draw > self.total:
            raise InfeasibleDrawError(
                f"cannot draw {n_draw} half-edges from a pool of {self.total}"
            )
        picked = {}
        for _ in range(n_draw):
            slot = self._find(int(rng.integers(self.total)))
            picked[slot] = picked.get(slot, 0) + 1
            self.add(slot, -1)
        for slot, mult in picked.items():  # restore
            self.add(slot, mult)
        return picked


# ---------------------------------------------------------------------------
# Parameters, state, trajectory
# ---------------------------------------------------------------------------


@dataclass
class SimParams:
    r: float  # infection rate per I-S edge
    beta: float  # removal rate per infectious node
    t_max: float
    record_grid: float = 0.05
    seed: int | None = None
    snapshot_measures: bool = False

    def __post_init__(self):
        if self.r < 0 or self.beta < 0:
            raise ConfigurationError("rates must be nonnegative")
        if not self.t_max > 0:
            raise ConfigurationError("t_max must be positive")
        if not self.record_grid > 0:
            raise ConfigurationError("record_grid must be positive")


@dataclass
class Trajectory:
    times: np.ndarray
    S: np.ndarray
    I: np.ndarray
    R: np.ndarray
    N_S: np.ndarray
    N_IS: np.ndarray
    N_RS: np.ndarray
    terminal: str = "t_max"
    snapshots: list = field(default_factory=list)
    n_infections: int = 0
    n_removals: int = 0

    COLUMNS = ("t", "S", "I", "R", "N_S", "N_IS", "N_RS")

    def column(self, name):
        return getattr(self, name if name != "t" else "times")

    def to_csv_lines(self):
        yield ",".join(self.COLUMNS)
        for i in range(len(self.times)):
            yield (
                f"{self.times[i]:.10g},{int(self.S[i])},{int(self.I[i])},"
                f"{int(self.R[i])},{int(self.N_S[i])},{int(self.N_IS[i])},{int(self.N_RS[i])}"
            )


class PopulationState:
    """Full stochastic state: susceptible degree measure plus the two
    edges-to-S rosters, with cached class sizes and edge totals."""

    __slots__ = ("mu_S", "roster_I", "roster_R", "alive", "t", "mu_S0", "debug")

    def __init__(self, mu_S, infectious_counts, capacity=None):
        self.mu_S = mu_S
        cap = capacity or max(mu_S.mass + len(infectious_counts), 1)
        self.roster_I = Roster(cap)
        self.roster_R = Roster(cap)
        self.alive = []  # roster_I slots of currently infectious individuals
        for c in infectious_counts:
            self.alive.append(self.roster_I.append(int(c)))
        self.t = 0.0
        self.mu_S0 = mu_S.copy()
        self.debug = False

    # cached summaries -------------------------------------------------------

    @property
    def S(self):
        return self.mu_S.mass

    @property
    def I(self):
        return len(self.alive)

    @property
    def R(self):
        return len(self.roster_R)

    @property
    def N_S(self):
        return self.mu_S.first_moment

    @property
    def N_IS(self):
        return self.roster_I.total

    @property
    def N_RS(self):
        return self.roster_R.total

    def row(self):
        return (self.S, self.I, self.R, self.N_S, self.N_IS, self.N_RS)

    def infectious_counts(self):
        return [self.roster_I.count(s) for s in self.alive]

    def removed_counts(self):
        return self.roster_R.counts()

    def measure_snapshot(self):
        mu_IS = CountMeasure()
        mu_IS.apply_edits([(c, 1) for c in self.infectious_counts()])
        mu_RS = CountMeasure()
        mu_RS.apply_edits([(c, 1) for c in self.removed_counts()])
        return {"mu_S": self.mu_S.copy(), "mu_IS": mu_IS, "mu_RS": mu_RS}

    def feasible(self):
        """Whether another infection event is well defined: the matching
        pools need ``N_IS + N_RS <= N_S``.  Every infection consumes two
        free susceptible half-edges per edge-to-S it creates, so near total
        infection the half-edge construction can exhaust itself; the event
        loop then stops with terminal reason ``depleted``."""
        return self.N_IS + self.N_RS <= self.N_S

    def check_invariants(self):
        self.mu_S.validate()
        if not self.mu_S.dominated_by(self.mu_S0):
            raise StateCorruptionError("mu_S gained an atom over mu_S0")
        if any(c < 0 for c in self.infectious_counts()):
            raise StateCorruptionError("negative infectious roster entry")


def initialize_state(degrees, i0, selection="uniform", rng=None, pair_initial=False):
    """Split a degree sequence into initial susceptibles and infectives.

    ``selection`` is ``uniform`` or ``size_biased`` (probability of being an
    initial infective proportional to degree).  Initial infectives get
    ``d_x(S) = d_x`` unless ``pair_initial`` is set, in which case their
    half-edges are paired uniformly against the whole half-edge pool and
    matches landing on another initial infective are discounted.
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    n = len(degrees)
    if n == 0:
        raise ConfigurationError("empty degree sequence")
    if not 0 < i0 < 1:
        raise ConfigurationError("initial infected fraction must lie in (0,1)")
    n_inf = int(math.ceil(i0 * n))
    if n_inf >= n:
        raise ConfigurationError(
            f"i0={i0} on {n} nodes leaves no susceptibles"
        )
    rng = rng if rng is not None else np.random.default_rng()
    if selection == "uniform":
        infected = rng.choice(n, size=n_inf, replace=False)
    elif selection == "size_biased":
        total = degrees.sum()
        if total <= 0:
            raise ConfigurationError("size-biased selection needs positive total degree")
        infected = rng.choice(n, size=n_inf, replace=False, p=degrees / total)
    else:
        raise ConfigurationError(f"unknown selection mode {selection!r}")

    mask = np.zeros(n, dtype=bool)
    mask[infected] = True
    sus_degrees = degrees[~mask]
    inf_degrees = degrees[mask]

    inf_counts = inf_degrees.astype(np.int64).copy()
    if pair_initial:
        inf_counts = _discount_initial_pairs(inf_counts, int(degrees.sum()), rng)

    mu_S = CountMeasure()
    mu_S.apply_edits([(int(k), 1) for k in sus_degrees])
    return PopulationState(mu_S, inf_counts.tolist(), capacity=n + 1)


def _discount_initial_pairs(inf_counts, total_stubs, rng):
    """Uniformly pair initial-infective half-edges against the global stub
    pool; a stub matched to another initial-infective stub is not an
    edge-to-S, so both endpoints are discounted."""
    counts = inf_counts.copy()
    stubs = np.repeat(np.arange(len(counts)), counts)
    rng.shuffle(stubs)
    open_inf = len(stubs)  # unmatched infective stubs
    open_all = total_stubs
    matched = np.zeros(len(stubs), dtype=bool)
    for idx in range(len(stubs)):
        if matched[idx]:
            continue
        # this stub pairs with one of the (open_all - 1) other open stubs
        if open_inf > 1 and rng.random() < (open_inf - 1) / (open_all - 1):
            others = np.flatnonzero(~matched)
            others = others[others != idx]
            jdx = int(rng.choice(others))
            matched[idx] = matched[jdx] = True
            counts[stubs[idx]] -= 1
            counts[stubs[jdx]] -= 1
            open_inf -= 2
            open_all -= 2
        else:
            matched[idx] = True
            open_inf -= 1
            open_all -= 2  # its susceptible partner is also spoken for
    return counts


# ---------------------------------------------------------------------------
# Elementary operations
# ---------------------------------------------------------------------------


def total_event_rate(state, r, beta):
    return r * state.N_IS + beta * state.I


def sample_jl(k, n_S, n_IS, n_RS, rng):
    """Numbers (j, l) of infectious- and removed-alter half-edges among the
    ``k-1`` non-contaminating half-edges of a degree-k new infective.

    The pool holds ``n_S - 1`` half-edges: ``n_IS - 1`` of type I-S,
    ``n_RS`` of type R-S, the rest open susceptible stubs.  Sequential
    conditional hypergeometric draws realize the multivariate
    hypergeometric law exactly.
    """
    if k < 1 or n_IS < 1:
        raise InfeasibleDrawError("infection event needs k >= 1 and N_IS >= 1")
    draws = k - 1
    pool = n_S - 1
    if draws > pool:
        raise InfeasibleDrawError(
            f"cannot draw {draws} half-edges from a pool of {pool}"
        )
    if draws == 0:
        return 0, 0
    n_SS = n_S - n_IS - n_RS
    if n_SS < 0:
        raise InfeasibleDrawError("edge pools exhausted: N_IS + N_RS > N_S")
    j = int(rng.hypergeometric(n_IS - 1, pool - (n_IS - 1), draws)) if n_IS > 1 else 0
    rem = draws - j
    l = int(rng.hypergeometric(n_RS, n_SS, rem)) if (rem and n_RS) else 0
    return j, l


def sample_jl_batch(k, n_S, n_IS, n_RS, rng, size):
    """Vectorized version of :func:`sample_jl` (same law), for testing."""
    draws = k - 1
    pool = n_S - 1
    if draws > pool or k < 1 or n_IS < 1 or n_S - n_IS - n_RS < 0:
        raise InfeasibleDrawError("infeasible pool configuration")
    if draws == 0:
        return np.zeros(size, dtype=np.int64), np.zeros(size, dtype=np.int64)
    n_SS = n_S - n_IS - n_RS
    if n_IS > 1:
        j = rng.hypergeometric(n_IS - 1, pool - (n_IS - 1), draws, size=size)
    else:
        j = np.zeros(size, dtype=np.int64)
    rem = draws - j
    l = np.zeros(size, dtype=np.int64)
    if n_RS > 0:
        active = rem > 0
        if active.any():
            l[active] = rng.hypergeometric(n_RS, n_SS, rem[active])
    return j, l


def allocate(n_draw, roster_counts, rng):
    """Distribute ``n_draw`` uniformly chosen distinct half-edges over the
    individuals of a roster; returns per-individual multiplicities.

    Sequential hypergeometric chain: u_1 ~ Hyp(c_1, C - c_1, n), then
    condition, which is equivalent in law to a uniform n-subset of the C
    half-edges.
    """
    counts = [int(c) for c in roster_counts]
    total = sum(counts)
    if n_draw > total:
        raise InfeasibleDrawError(f"cannot draw {n_draw} from {total} half-edges")
    u = [0] * len(counts)
    remaining_pool = total
    remaining_draw = int(n_draw)
    for i, c in enumerate(counts):
        if remaining_draw == 0:
            break
        remaining_pool -= c
        if remaining_pool == 0:
            u[i] = remaining_draw
            remaining_draw = 0
            break
        u[i] = int(rng.hypergeometric(c, remaining_pool, remaining_draw)) if c else 0
        remaining_draw -= u[i]
    return u


def allocate_batch(n_draw, roster_counts, rng, size):
    """Vectorized version of :func:`allocate` (same chain), for testing."""
    counts = [int(c) for c in roster_counts]
    total = sum(counts)
    if n_draw > total:
        raise InfeasibleDrawError(f"cannot draw {n_draw} from {total} half-edges")
    u = np.zeros((size, len(counts)), dtype=np.int64)
    remaining_pool = total
    remaining_draw = np.full(size, int(n_draw), dtype=np.int64)
    for i, c in enumerate(counts):
        remaining_pool -= c
        if remaining_pool == 0:
            u[:, i] = remaining_draw
            break
        if c:
            active = remaining_draw > 0
            if active.any():
                u[active, i] = rng.hypergeometric(c, remaining_pool, remaining_draw[active])
            remaining_draw = remaining_draw - u[:, i]
    return u


def apply_infection(state, k, j, l, u, v):
    """Apply one infection event.

    ``u`` maps infectious roster slots to matched edge multiplicities and
    must total ``j + 1`` (the contaminating edge included); ``v`` likewise
    over removed slots, totalling ``l``.  Net effects:
    ``dN_IS = k - 2 - 2j - l`` and ``dN_RS = -l``.
    """
    if state.mu_S(k) < 1:
        raise StateCorruptionError(f"no susceptible of degree {k} left")
    if sum(u.values()) != j + 1 or sum(v.values()) != l:
        raise StateCorruptionError("allocation totals do not match (j+1, l)")
    state.mu_S.apply_edits([(k, -1)])
    for slot, mult in u.items():
        state.roster_I.add(slot, -mult)
    for slot, mult in v.items():
        state.roster_R.add(slot, -mult)
    new_slot = state.roster_I.append(k - 1 - j - l)
    state.alive.append(new_slot)
    return state


def apply_removal(state, alive_index):
    """Move the infectious individual at position ``alive_index`` of the
    alive list into the removed class, carrying her edges-to-S count."""
    if not 0 <= alive_index < state.I:
        raise IndexError(f"infectious index {alive_index} out of range")
    slot = state.alive[alive_index]
    c = state.roster_I.count(slot)
    state.roster_I.add(slot, -c)
    # swap-remove keeps the uniform pick O(1)
    state.alive[alive_index] = state.alive[-1]
    state.alive.pop()
    state.roster_R.append(c)
    return state


# ---------------------------------------------------------------------------
# Event loop
# ---------------------------------------------------------------------------


def _infection_event(state, rng):
    k = state.mu_S.sample_size_biased(rng)
    j, l = sample_jl(k, state.N_S, state.N_IS, state.N_RS, rng)
    u = state.roster_I.sample_half_edges(j + 1, rng)
    v = state.roster_R.sample_half_edges(l, rng) if l else {}
    if state.debug:
        before = (state.N_IS, state.N_RS, state.S + state.I + state.R)
    apply_infection(state, k, j, l, u, v)
    if state.debug:
        if state.N_IS - before[0] != k - 2 - 2 * j - l:
            raise StateCorruptionError("dN_IS mismatch on infection")
        if state.N_RS - before[1] != -l:
            raise StateCorruptionError("dN_RS mismatch on infection")
        if state.S + state.I + state.R != before[2]:
            raise StateCorruptionError("population not conserved on infection")
        state.check_invariants()


def _removal_event(state, rng):
    idx = int(rng.integers(state.I))
    if state.debug:
        c = state.roster_I.count(state.alive[idx])
        before = (state.N_IS, state.N_RS, state.S + state.I + state.R)
    apply_removal(state, idx)
    if state.debug:
        if state.N_IS - before[0] != -c or state.N_RS - before[1] != c:
            raise StateCorruptionError("edge-count mismatch on removal")
        if state.S + state.I + state.R != before[2]:
            raise StateCorruptionError("population not conserved on removal")
        state.check_invariants()


def simulate(state, params, rng=None, debug=False):
    """Run the epidemic to ``t_max`` or extinction; record rows on the grid.

    Grid rows take the state holding at each grid time (the last event at or
    before it).  After extinction the state is constant, so the remaining
    grid rows repeat it.  If an infection exhausts the susceptible half-edge
    pools (see :meth:`PopulationState.feasible`) recording stops there with
    terminal reason ``depleted``.  Identical seed and parameters reproduce
    the trajectory bit for bit.
    """
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    state.debug = debug
    r, beta = params.r, params.beta
    grid = params.record_grid
    n_grid = int(math.floor(params.t_max / grid + 1e-9))
    times = [0.0]
    rows = [state.row()]
    snapshots = []
    if params.snapshot_measures:
        snapshots.append((0.0, state.measure_snapshot()))
    next_idx = 1  # next grid row to emit
    terminal = "t_max"
    n_inf = 0
    n_rem = 0

    def emit_until(limit):
        nonlocal next_idx
        while next_idx <= n_grid and next_idx * grid <= limit + 1e-12:
            times.append(next_idx * grid)
            rows.append(state.row())
            if params.snapshot_measures:
                snapshots.append((next_idx * grid, state.measure_snapshot()))
            next_idx += 1

    while True:
        rate = r * state.N_IS + beta * state.I
        if rate <= 0.0:
            terminal = "extinct"
            emit_until(params.t_max)
            break
        dt = rng.exponential(1.0 / rate)
        t_new = state.t + dt
        emit_until(min(t_new, params.t_max))
        if t_new > params.t_max:
            state.t = params.t_max
            break
        state.t = t_new
        if rng.random() * rate < beta * state.I:
            _removal_event(state, rng)
            n_rem += 1
        else:
            _infection_event(state, rng)
            n_inf += 1
            if not state.feasible():
                # half-edge pools exhausted: further infections undefined
                terminal = "depleted"
                break

    rows = np.asarray(rows, dtype=np.int64)
    return Trajectory(
        times=np.asarray(times),
        S=rows[:, 0],
        I=rows[:, 1],
        R=rows[:, 2],
        N_S=rows[:, 3],
        N_IS=rows[:, 4],
        N_RS=rows[:, 5],
        terminal=terminal,
        snapshots=snapshots,
        n_infections=n_inf,
        n_removals=n_rem,
    )


def stopping_time(traj, eps, n):
    """First recorded time with ``N_IS / n < eps``; ``inf`` if never."""
    if eps <= 0:
        raise ConfigurationError("eps must be positive")
    below = traj.N_IS / n < eps
    idx = np.flatnonzero(below)
    return float(traj.times[idx[0]]) if len(idx) else INFINITE_TIME
