import math

import numpy as np
import pytest

from sirnet.degrees import DegreeSpec
from sirnet.errors import ConfigurationError, StateCorruptionError
from sirnet.measures import CountMeasure
from sirnet.simulation import (
    PopulationState,
    SimParams,
    apply_infection,
    apply_removal,
    initialize_state,
    simulate,
    stopping_time,
    total_event_rate,
)


def small_state():
    """3 susceptibles (degrees 2,2,3), 2 infectives with 2 and 1 edges-to-S."""
    mu_S = CountMeasure({2: 2, 3: 1})
    return PopulationState(mu_S, [2, 1])


def test_state_summaries():
    st = small_state()
    assert (st.S, st.I, st.R) == (3, 2, 0)
    assert (st.N_S, st.N_IS, st.N_RS) == (7, 3, 0)
    assert total_event_rate(st, 2.0, 0.5) == pytest.approx(2.0 * 3 + 0.5 * 2)
    st.check_invariants()


def test_apply_infection_deltas():
    st = small_state()
    # degree-3 susceptible infected; j=1 matched I-S edge (individual 0), l=0
    k, j, l = 3, 1, 0
    before = (st.S, st.I, st.R, st.N_IS, st.N_RS)
    apply_infection(st, k, j, l, u={0: 2}, v={})
    assert st.S == before[0] - 1 and st.I == before[1] + 1 and st.R == before[2]
    assert st.N_IS - before[3] == k - 2 - 2 * j - l
    assert st.N_RS - before[4] == -l
    # the new infective carries k-1-j-l edges-to-S
    assert st.roster_I.count(st.alive[-1]) == k - 1 - j - l
    st.check_invariants()


def test_apply_infection_validates_totals():
    st = small_state()
    with pytest.raises(StateCorruptionError):
        apply_infection(st, 3, 1, 0, u={0: 1}, v={})  # sum(u) != j+1
    with pytest.raises(StateCorruptionError):
        apply_infection(st, 5, 0, 0, u={0: 1}, v={})  # no degree-5 susceptible


def test_apply_removal_moves_edges():
    st = small_state()
    apply_removal(st, 0)  # infective with 2 edges-to-S
    assert (st.I, st.R) == (1, 1)
    assert st.N_IS == 1 and st.N_RS == 2
    assert st.S + st.I + st.R == 5
    st.check_invariants()
    with pytest.raises(IndexError):
        apply_removal(st, 5)


def test_initialize_state_counts():
    spec = DegreeSpec.poisson(5, 30)
    rng = np.random.default_rng(0)
    degrees = spec.sample(500, rng)
    st = initialize_state(degrees, 0.02, rng=rng)
    assert st.I == math.ceil(0.02 * 500)
    assert st.S == 500 - st.I
    # every initial infective keeps her full degree as edges-to-S
    assert st.N_IS + st.N_S == degrees.sum()
    st.check_invariants()


def test_initialize_state_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigurationError):
        initialize_state([2, 2], 0.0, rng=rng)
    with pytest.raises(ConfigurationError):
        initialize_state([2, 2], 0.9, rng=rng)  # no susceptibles left
    with pytest.raises(ConfigurationError):
        initialize_state([], 0.1, rng=rng)
    with pytest.raises(ConfigurationError):
        initialize_state([2, 2, 2], 0.1, selection="oops", rng=rng)


def test_initialize_size_biased_prefers_high_degree():
    degrees = np.array([1] * 500 + [50] * 20)
    hits = 0
    for seed in range(40):
        st = initialize_state(degrees, 0.01, selection="size_biased",
                              rng=np.random.default_rng(seed))
        # 6 infectives; with size bias most should be degree-50
        hits += sum(1 for s in st.alive if st.roster_I.count(s) == 50)
    assert hits > 150  # uniform selection would give ~9 in expectation


def test_initialize_pair_initial_discounts():
    degrees = np.array([3] * 100)
    st_plain = initialize_state(degrees, 0.2, rng=np.random.default_rng(4))
    st_pair = initialize_state(degrees, 0.2, rng=np.random.default_rng(4),
                               pair_initial=True)
    assert st_pair.N_IS <= st_plain.N_IS
    assert st_pair.N_IS % 1 == 0 and st_pair.N_IS >= 0
    st_pair.check_invariants()


def test_simulate_reproducible():
    spec = DegreeSpec.poisson(5, 30)
    params = SimParams(r=1.0, beta=0.5, t_max=3.0, record_grid=0.1, seed=99)

    def run():
        rng = np.random.default_rng(123)
        st = initialize_state(spec.sample(400, rng), 0.02, rng=rng)
        return simulate(st, params, rng=rng)

    a, b = run(), run()
    np.testing.assert_array_equal(a.times, b.times)
    for col in ("S", "I", "R", "N_S", "N_IS", "N_RS"):
        np.testing.assert_array_equal(a.column(col), b.column(col))
    assert a.terminal == b.terminal


def test_simulate_grid_and_extinction_fill():
    # beta only: the epidemic dies; remaining grid rows repeat the final state
    st = PopulationState(CountMeasure({2: 10}), [0, 0, 0])
    params = SimParams(r=1.0, beta=5.0, t_max=100.0, record_grid=10.0)
    traj = simulate(st, params, rng=np.random.default_rng(1))
    assert traj.terminal == "extinct"
    assert len(traj.times) == 11  # t=0 plus 10 grid rows
    assert traj.I[-1] == 0 and traj.R[-1] == 3
    assert np.all(traj.I[-5:] == 0)
    assert traj.S[-1] == 10  # nobody to infect through 0 edges


def test_simulate_conserves_population_with_debug():
    spec = DegreeSpec.geometric(0.6, 40)
    rng = np.random.default_rng(8)
    st = initialize_state(spec.sample(300, rng), 0.05, rng=rng)
    n = st.S + st.I
    traj = simulate(st, SimParams(r=2.0, beta=1.0, t_max=5.0), rng=rng, debug=True)
    assert np.all(traj.S + traj.I + traj.R == n)
    assert np.all(traj.N_IS + traj.N_RS <= traj.N_S[0])
    assert np.all(np.diff(traj.S) <= 0)
    assert np.all(np.diff(traj.R) >= 0)
    assert traj.n_infections + traj.n_removals > 0


def test_snapshots_recorded():
    st = PopulationState(CountMeasure({2: 5}), [1, 1])
    params = SimParams(r=1.0, beta=1.0, t_max=1.0, record_grid=0.5,
                       snapshot_measures=True)
    traj = simulate(st, params, rng=np.random.default_rng(2))
    assert len(traj.snapshots) == len(traj.times)
    t0, snap0 = traj.snapshots[0]
    assert t0 == 0.0
    assert snap0["mu_S"] == CountMeasure({2: 5})
    assert snap0["mu_IS"] == CountMeasure({1: 2})


def test_csv_lines_schema():
    st = PopulationState(CountMeasure({2: 5}), [1])
    traj = simulate(st, SimParams(r=1.0, beta=1.0, t_max=1.0, record_grid=0.5),
                    rng=np.random.default_rng(3))
    lines = list(traj.to_csv_lines())
    assert lines[0] == "t,S,I,R,N_S,N_IS,N_RS"
    assert len(lines) == len(traj.times) + 1


def test_stopping_time():
    traj_times = np.array([0.0, 0.1, 0.2, 0.3])
    traj = type("T", (), {})()
    traj.times = traj_times
    traj.N_IS = np.array([50, 30, 5, 0])
    assert stopping_time(traj, 0.02, 1000) == pytest.approx(0.2)
    assert stopping_time(traj, 1e-9, 1000) == pytest.approx(0.3)  # extinction
    traj.N_IS = np.array([50, 30, 25, 20])
    assert stopping_time(traj, 0.002, 1000) == math.inf
    with pytest.raises(ConfigurationError):
        stopping_time(traj, 0.0, 1000)
