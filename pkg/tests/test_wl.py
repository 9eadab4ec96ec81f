from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wanglandau import (ChainState, ProposalSpec, ScheduleSpec, builtin_model,
                        compute_theta_star, field_H, gamma, run_chain, update_linearized,
                        update_standard, wl_iterate)
from wanglandau.errors import DomainError, ObserverError
from wanglandau.wl import make_rng

simplex = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6).map(
    lambda v: np.asarray(v) / np.sum(v))


# -- schedule ------------------------------------------------------------------

def test_gamma_values():
    s = ScheduleSpec(0.5, 0.6)
    assert gamma(s, 1) == 0.5
    assert gamma(s, 100) == pytest.approx(0.5 / 100 ** 0.6, rel=1e-12)
    assert gamma(s, 100) == pytest.approx(0.0315479, abs=5e-8)
    assert gamma(ScheduleSpec(3.0, 1.0, cap=0.5), 6) == 0.5


def test_gamma_index_domain():
    with pytest.raises(DomainError):
        gamma(ScheduleSpec(0.5, 0.6), 0)
    with pytest.raises(DomainError):
        gamma(ScheduleSpec(0.5, 0.6), 2.5)


@pytest.mark.parametrize("alpha", [0.5, 0.3, 1.2])
def test_alpha_outside_range(alpha):
    with pytest.raises(DomainError, match="sum gamma_n"):
        ScheduleSpec(0.5, alpha)


def test_large_gamma_star_needs_cap():
    with pytest.raises(DomainError):
        ScheduleSpec(1.0, 0.8)
    s = ScheduleSpec(6.0, 1.0, cap=0.5)
    g = s.gammas(np.arange(1, 100))
    assert np.all(g < 1) and np.all(np.diff(g) <= 0)
    assert s.n0 == 12 and gamma(s, 12) == 0.5 and gamma(s, 13) == pytest.approx(6 / 13)


def test_clt_case():
    assert ScheduleSpec(0.5, 0.6).clt_case == "i"
    assert ScheduleSpec(0.5, 1.0).clt_case == "ii"


# -- field and updates ----------------------------------------------------------

def test_field_example():
    H = field_H([1 / 3, 1 / 3, 1 / 3], 0)
    np.testing.assert_allclose(H, [2 / 9, -1 / 9, -1 / 9], rtol=1e-12)


def test_field_saturates():
    for eta in [1e-2, 1e-5, 1e-9]:
        H = field_H([1 - eta, eta], 0)
        assert abs(H[0]) <= eta


def test_linearized_example_exact():
    th = [Fraction(1, 3)] * 3
    g = Fraction(1, 10)
    ref = [th[0] + g * th[0] * (1 - th[0]), th[1] - g * th[1] * th[0], th[2] - g * th[2] * th[0]]
    out = update_linearized([1 / 3] * 3, 0, 0.1)
    np.testing.assert_allclose(out, [float(r) for r in ref], rtol=1e-12)
    np.testing.assert_allclose(out, [0.3555556, 0.3222222, 0.3222222], atol=5e-8)


def test_standard_example_exact():
    g, t = Fraction(1, 10), Fraction(1, 3)
    ref = [t * (1 + g) / (1 + g * t), t / (1 + g * t), t / (1 + g * t)]
    out = update_standard([1 / 3] * 3, 0, 0.1)
    np.testing.assert_allclose(out, [float(r) for r in ref], rtol=1e-12)
    np.testing.assert_allclose(out, [0.3548387, 0.3225806, 0.3225806], atol=5e-8)


def test_zero_step_is_identity():
    th = np.array([0.2, 0.3, 0.5])
    np.testing.assert_array_equal(update_linearized(th, 1, 0.0), th)
    np.testing.assert_array_equal(update_standard(th, 1, 0.0), th)


@pytest.mark.parametrize("g", [1.0, 1.5, -0.1])
def test_step_size_domain(g):
    with pytest.raises(DomainError):
        update_linearized([0.5, 0.5], 0, g)
    with pytest.raises(DomainError):
        update_standard([0.5, 0.5], 0, g)


@settings(max_examples=300, deadline=None)
@given(simplex, st.data(), st.floats(0.0, 0.999))
def test_update_properties(th, data, g):
    i = data.draw(st.integers(0, th.size - 1))
    H = field_H(th, i)
    assert abs(H.sum()) < 1e-15
    lin = np.asarray(update_linearized(th, i, g))
    std = np.asarray(update_standard(th, i, g))
    # the linearized map is theta + g H exactly
    np.testing.assert_array_equal(lin, th + g * H)
    assert abs(lin.sum() - 1) < 1e-15 and abs(std.sum() - 1) < 1e-15
    assert np.all((lin > 0) & (lin < 1)) and np.all(std > 0)
    if g > 1e-6:  # below that the change can round away
        others = np.arange(th.size) != i
        assert lin[i] > th[i] and np.all(lin[others] < th[others])


def test_standard_is_first_order_close_to_linearized():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10_000):
        d = rng.integers(2, 8)
        th = rng.dirichlet(np.ones(d))
        i, g = rng.integers(d), rng.random() * 0.999
        diff = np.abs(np.asarray(update_standard(th, i, g)) - np.asarray(update_linearized(th, i, g)))
        worst = max(worst, float((diff / g ** 2).max()) if g > 0 else 0.0)
        assert np.all(diff <= g ** 2 + 1e-15)
    assert worst < 1.0


# -- iteration --------------------------------------------------------------------------

def _setup(name="discrete-skew", **kw):
    m = builtin_model(name, **kw)
    prop = ProposalSpec.discrete(1, 0.05) if m.space.is_discrete else ProposalSpec.torus(0.1, 0.05)
    return m, prop, ScheduleSpec(0.5, 0.6)


def test_zero_steps_unchanged():
    m, prop, sched = _setup()
    st0 = ChainState.start(m, 3)
    before = st0.rng.bit_generator.state
    out = wl_iterate(st0, m, prop, sched, "linearized", 0)
    assert out.n == 0 and out.x == 0 and np.array_equal(out.theta, [0.5, 0.5])
    assert out.rng.bit_generator.state == before
    st1, res = run_chain(ChainState.start(m, 3), m, prop, sched, "linearized", 0)
    assert st1.n == 0 and len(res.trace) == 0 and res.counts.sum() == 0


@pytest.mark.parametrize("name,kw,rule", [
    ("discrete-skew", dict(K=12), "linearized"),
    ("discrete-skew", dict(K=12), "standard"),
    ("torus-doublewell", dict(), "linearized"),
    ("torus-doublewell", dict(d=3), "standard"),
])
def test_compiled_loop_matches_reference(name, kw, rule):
    m, prop, sched = _setup(name, **kw)
    n = 3000
    rows = []
    ref = wl_iterate(ChainState.start(m, 17), m, prop, sched, rule, n,
                     observers=[lambda n, x, th: rows.append((n, x, th))])
    out, res = run_chain(ChainState.start(m, 17), m, prop, sched, rule, n)
    assert out.n == ref.n == n and out.x == ref.x
    assert np.array_equal(out.theta, ref.theta)
    assert np.array_equal(res.trace.theta, np.array([r[2] for r in rows]))
    assert np.array_equal(res.trace.x, np.array([r[1] for r in rows], dtype=float))
    assert ref.rng.random() == out.rng.random()


def test_run_chain_continues_across_calls():
    m, prop, sched = _setup(K=12)
    whole, _ = run_chain(ChainState.start(m, 5), m, prop, sched, "linearized", 200_000)
    s = ChainState.start(m, 5)
    for n in [70_000, 1, 65_535, 64_464]:
        s, _ = run_chain(s, m, prop, sched, "linearized", n)
    assert s.n == whole.n and s.x == whole.x and np.array_equal(s.theta, whole.theta)


def test_determinism_same_seed():
    m, prop, sched = _setup("torus-doublewell")
    a = run_chain(ChainState.start(m, 99), m, prop, sched, "linearized", 50_000, thinning=7)[1]
    b = run_chain(ChainState.start(m, 99), m, prop, sched, "linearized", 50_000, thinning=7)[1]
    for f in ["n", "x", "stratum", "theta", "gamma"]:
        assert np.array_equal(getattr(a.trace, f), getattr(b.trace, f))
    c = run_chain(ChainState.start(m, 100), m, prop, sched, "linearized", 50_000, thinning=7)[1]
    assert not np.array_equal(a.trace.x, c.trace.x)


def test_thinning_rows_and_statistics():
    m, prop, sched = _setup(K=12)
    full = run_chain(ChainState.start(m, 8), m, prop, sched, "linearized", 1001)[1]
    thin = run_chain(ChainState.start(m, 8), m, prop, sched, "linearized", 1001, thinning=10)[1]
    assert len(thin.trace) == 101
    assert thin.trace.n[-1] == 1001 and thin.trace.n[0] == 10
    idx = thin.trace.n - 1
    assert np.array_equal(thin.trace.theta, full.trace.theta[idx])
    assert np.array_equal(full.counts, thin.counts)
    assert np.array_equal(full.counts, np.bincount(full.trace.stratum, minlength=3))
    np.testing.assert_allclose(full.theta_sum, full.trace.theta.sum(axis=0), rtol=1e-13)
    assert full.min_theta == full.trace.theta.min()
    np.testing.assert_allclose(full.trace.gamma, sched.gammas(full.trace.n), rtol=1e-15)


def test_min_theta_window():
    m, prop, sched = _setup(K=12)
    res = run_chain(ChainState.start(m, 8), m, prop, sched, "linearized", 5000, min_theta_from=1000)[1]
    assert res.min_theta == res.trace.theta[999:].min()


def test_simplex_preserved_long_run():
    m, prop, _ = _setup(K=12)
    s, res = run_chain(ChainState.start(m, 1), m, prop, ScheduleSpec(0.9, 0.51), "linearized",
                       300_000, thinning=1000)
    assert np.all(res.trace.theta > 0) and np.all(res.trace.theta < 1)
    assert np.max(np.abs(res.trace.theta.sum(axis=1) - 1)) < 1e-12


def test_visited_weight_increases_in_trace():
    m, prop, sched = _setup(K=12)
    res = run_chain(ChainState.start(m, 2), m, prop, sched, "linearized", 2000)[1]
    th = np.vstack([[1 / 3] * 3, res.trace.theta])
    d = np.diff(th, axis=0)
    rows = np.arange(2000)
    assert np.all(d[rows, res.trace.stratum] > 0)
    mask = np.ones_like(d, dtype=bool)
    mask[rows, res.trace.stratum] = False
    assert np.all(d[mask] < 0)


def test_converges_near_theta_star():
    m, prop, sched = _setup(K=12)
    s, _ = run_chain(ChainState.start(m, 4), m, prop, sched, "linearized", 300_000, record=False)
    assert np.abs(s.theta - np.asarray(compute_theta_star(m))).sum() < 0.05


def test_observer_failure_reports_step():
    m, prop, sched = _setup()

    def bad(n, x, th):
        if n == 7:
            raise RuntimeError("boom")

    with pytest.raises(ObserverError, match="n=7"):
        wl_iterate(ChainState.start(m, 0), m, prop, sched, "linearized", 20, observers=[bad])


def test_observer_stride():
    m, prop, sched = _setup()
    seen = []
    wl_iterate(ChainState.start(m, 0), m, prop, sched, "linearized", 25,
               observers=[lambda n, x, th: seen.append(n)], stride=10)
    assert seen == [10, 20, 25]


def test_bad_inputs():
    m, prop, sched = _setup()
    with pytest.raises(DomainError):
        run_chain(ChainState.start(m, 0), m, prop, sched, "adaptive", 10)
    with pytest.raises(DomainError):
        run_chain(ChainState.start(m, 0), m, ProposalSpec.torus(), sched, "linearized", 10)
    with pytest.raises(DomainError):
        ChainState.start(m, 0, theta0=[0.2, 0.3, 0.5])
    with pytest.raises(DomainError):
        ChainState.start(m, 0, x0=4)


def test_make_rng_is_pcg64():
    a = make_rng(12345).random(4)
    b = np.random.Generator(np.random.PCG64(12345)).random(4)
    assert np.array_equal(a, b)
