import numpy as np
import pytest
from hypothesis import given, strategies as st

from dupsolve import problems
from dupsolve.catalog import exponential_formula
from dupsolve.duplication import (
    DuplicationConfig,
    Duplicator,
    approx_at,
    convergence_order,
    convergence_study,
    exact_interpolant,
    max_error,
    min_halvings,
    polygonal,
)
from dupsolve.errors import ConfigError, IterationError, SeedOutsideV0
from dupsolve.ivp import IvpProblem


def _fussy_R(x):
    if x > 1.4:
        raise ZeroDivisionError("pole")
    return x / (2.0 - x)


class TestConfig:
    def test_seed_neighbourhood_enforced(self):
        with pytest.raises(SeedOutsideV0):
            DuplicationConfig(n=1, interval=(-0.5, 0.5))

    def test_coupled_node_count(self):
        cfg = DuplicationConfig(n=5, interval=(-0.5, 0.5))
        ts = cfg.nodes()
        assert len(ts) == 2**5 + 1
        h = np.diff(ts)
        assert np.allclose(h, 1 / 32, rtol=0, atol=np.spacing(1.0))

    def test_effective_order(self):
        assert DuplicationConfig(n=4, m1=3, m2=7, interval=(0, 1)).effective_order == 4
        assert DuplicationConfig(n=4, m1=9, m2=2, interval=(0, 1)).effective_order == 3

    @pytest.mark.parametrize(
        "kw",
        [
            {"n": 4, "interval": (1.0, 0.0)},
            {"n": 4, "m1": 0},
            {"n": 4, "r0": 0.0},
            {"n": 4, "r_source": "magic"},
            {"n": None},
            {"points": 0},
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            DuplicationConfig(**kw)

    @pytest.mark.parametrize("t, r0, n", [(0.0, 0.1, 0), (0.1, 0.1, 0), (0.5, 0.1, 3), (-0.99, 0.1, 4)])
    def test_min_halvings(self, t, r0, n):
        assert min_halvings(t, r0) == n


class TestApproxAt:
    def test_two_thirds(self, ex1):
        cfg = DuplicationConfig(n=3, interval=(0, 2 / 3), r_source="exact")
        assert abs(approx_at(ex1, 2 / 3, cfg) - 3.0) <= 1e-12

    def test_two_thirds_single_halving(self, ex1):
        # with one halving the seed polynomial is used at s = 1/3, so the
        # order-20 truncation (~(1/3)^21) dominates
        cfg = DuplicationConfig(n=1, r0=0.5, interval=(0, 2 / 3), r_source="exact")
        assert abs(approx_at(ex1, 2 / 3, cfg) - 3.0) <= 1e-8

    def test_origin(self, ex1):
        cfg = DuplicationConfig(n=4, interval=(-1, 1), r_source="exact")
        assert approx_at(ex1, 0.0, cfg) == 1.0

    def test_half(self, ex1):
        cfg = DuplicationConfig(n=8, interval=(0, 0.5), r_source="exact")
        assert abs(approx_at(ex1, 0.5, cfg) - 2.0) <= 1e-9

    def test_seed_outside(self, ex1):
        dup = Duplicator(ex1, DuplicationConfig(n=3, interval=(0, 0.5), r_source="exact"))
        with pytest.raises(SeedOutsideV0):
            dup.at(2.0)

    def test_failure_carries_iteration_and_time(self, ex1):
        cfg = DuplicationConfig(n=3, interval=(0, 0.6), r_source="exact", exact_R=_fussy_R)
        with pytest.raises(IterationError) as err:
            approx_at(ex1, 0.6, cfg)
        # iterates x(0.075) ~ 1.08, x(0.15) ~ 1.18, x(0.3) ~ 1.43
        assert err.value.t == 0.6
        assert err.value.iteration == 3
        assert isinstance(err.value.cause, ZeroDivisionError)

    def test_degenerate_is_constant(self):
        p = IvpProblem.from_text("x^2 - 4", 2)
        cfg = DuplicationConfig(n=3, interval=(0, 0.5))
        assert approx_at(p, 0.5, cfg) == 2.0

    def test_exact_without_formula(self):
        with pytest.raises(ConfigError):
            Duplicator(IvpProblem.from_text("x", 1), DuplicationConfig(n=3, r_source="exact"))

    def test_auto_prefers_exact(self, ex1):
        assert Duplicator(ex1, DuplicationConfig(n=4)).source == "exact"
        assert Duplicator(IvpProblem.from_text("x", 1), DuplicationConfig(n=4)).source == "taylor"


class TestPolygonal:
    def test_i1_replication(self, ex1):
        ref = ex1.exact_solution
        P = polygonal(ex1, DuplicationConfig(n=8, interval=(-0.5, 0.5), r_source="exact"))
        assert len(P.ts) == 257
        assert max(abs(v - ref(t)) for t, v in zip(P.ts, P.values)) <= 1e-8

    def test_node_and_midpoint(self, ex1):
        P = polygonal(ex1, DuplicationConfig(n=4, interval=(-0.5, 0.5)))
        assert P(P.ts[3]) == P.values[3]
        mid = 0.5 * (P.ts[3] + P.ts[4])
        assert P(mid) == pytest.approx(0.5 * (P.values[3] + P.values[4]), rel=1e-15)

    def test_outside_interval(self, ex1):
        P = polygonal(ex1, DuplicationConfig(n=4, interval=(0, 0.5)))
        with pytest.raises(ValueError):
            P(0.6)

    def test_single_point(self, ex1):
        P = polygonal(ex1, DuplicationConfig(points=1, interval=(0.0, 0.0)))
        assert P.values.tolist() == [1.0]

    def test_deterministic_across_threads(self, ex1):
        cfg = DuplicationConfig(points=300, interval=(-0.5, 0.9))
        a = polygonal(ex1, cfg, threads=1)
        b = polygonal(ex1, cfg, threads=4)
        assert a.values.tobytes() == b.values.tobytes()

    def test_env_threads(self, ex1, monkeypatch):
        monkeypatch.setenv("DUPSOLVE_THREADS", "3")
        cfg = DuplicationConfig(points=50, interval=(-0.5, 0.5))
        assert polygonal(ex1, cfg).values.tobytes() == polygonal(ex1, cfg, threads=1).values.tobytes()

    def test_node_failure_names_time(self, ex1):
        # nodes 0, 0.3, 0.6: only the last one feeds R a value above 1.4
        cfg = DuplicationConfig(points=3, interval=(0, 0.6), r_source="exact", exact_R=_fussy_R)
        with pytest.raises(IterationError) as err:
            polygonal(ex1, cfg)
        assert err.value.t == pytest.approx(0.6)

    def test_error_grows_toward_asymptote(self, ex1):
        cfg = DuplicationConfig(points=2000, interval=(-0.5, 0.99), r_source="exact")
        P = polygonal(ex1, cfg)
        err = np.abs(P.values - np.array([ex1.exact_solution(t) for t in P.ts]))
        k = len(err) // 10
        assert err[-k:].max() > err[:k].max()

    @given(st.floats(-0.5, 0.5))
    def test_interpolant_between_neighbours(self, t):
        P = polygonal(problems.example1(), DuplicationConfig(n=4, interval=(-0.5, 0.5)))
        i = min(int(np.searchsorted(P.ts, t, side="right")) - 1, len(P.ts) - 2)
        lo, hi = sorted(P.values[i : i + 2])
        assert lo - 1e-15 <= P(t) <= hi + 1e-15


class TestConvergence:
    def test_example1_order(self, ex1):
        order = convergence_order(ex1, ex1.exact_solution, range(4, 10), (-0.5, 0.5), r_source="exact")
        assert 1.7 <= order <= 2.3

    def test_exponential_order(self):
        R = exponential_formula()
        p = IvpProblem.from_text("x", 1, exact_R=lambda x: R(x, x))
        order = convergence_order(p, np.exp, range(4, 10), (-0.5, 0.5), r_source="exact")
        assert 1.7 <= order <= 2.3

    def test_needs_three_levels(self, ex1):
        with pytest.raises(ValueError):
            convergence_order(ex1, ex1.exact_solution, [4, 5], (-0.5, 0.5))

    def test_floor_excludes_points(self, ex1):
        study = convergence_study(ex1, ex1.exact_solution, [4, 5, 6], (-0.5, 0.5), floor=1e-3)
        assert study.used.tolist() == [True, True, False]

    def test_monotone_until_floor(self, ex1):
        study = convergence_study(ex1, ex1.exact_solution, range(4, 12), (-0.5, 0.5))
        e = study.errors
        assert all(b <= 1.2 * a or b < 1e-13 for a, b in zip(e, e[1:]))

    def test_error_splits_into_interpolation_and_node_parts(self, ex1):
        # P_n^{m1,m2} - x = (P_n^{m1,m2} - P_n) + (P_n - x)
        ref = ex1.exact_solution
        P = polygonal(ex1, DuplicationConfig(n=6, interval=(-0.5, 0.5), r_source="exact"))
        Pn = exact_interpolant(P.ts, ref)
        node_part = np.abs(P.values - Pn.values).max()
        assert node_part <= 1e-13
        assert abs(max_error(P, ref) - max_error(Pn, ref)) <= node_part

    @pytest.mark.parametrize("m1", [1, 2, 3, 4])
    def test_seed_order_law(self, ex1, m1):
        # exact R, single point: error ~ s^(m1+1)
        ss = np.logspace(-3, -1.5, 6)
        errs = []
        for s in ss:
            cfg = DuplicationConfig(n=2, m1=m1, interval=(0, 4 * s), r_source="exact")
            errs.append(abs(Duplicator(ex1, cfg).at(4 * s) - ex1.exact_solution(4 * s)))
        slope = np.polyfit(np.log(ss), np.log(errs), 1)[0]
        assert abs(slope - (m1 + 1)) <= 0.5

    @pytest.mark.parametrize("m2", [1, 2, 3])
    def test_r_order_law(self, ex1, m2):
        # exact seed values: feed x(s) through the Taylor R
        from dupsolve.double_angle import iterate_R, taylor_general

        R = taylor_general(ex1.f, 1.0, m2)
        ss = np.logspace(-3, -1.5, 6)
        errs = [abs(iterate_R(R, ex1.exact_solution(s), 2) - ex1.exact_solution(4 * s)) for s in ss]
        slope = np.polyfit(np.log(ss), np.log(errs), 1)[0]
        assert abs(slope - (m2 + 1)) <= 0.5


def test_identical_configs_are_bit_identical(ex1):
    cfg = DuplicationConfig(points=100, interval=(-0.5, 0.5), r_source="taylor")
    assert polygonal(ex1, cfg).values.tobytes() == polygonal(ex1, cfg).values.tobytes()
