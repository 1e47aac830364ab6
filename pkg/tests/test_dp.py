import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqquant.dp import (
    DPConfig,
    PosteriorGrid,
    prefix_cost,
    posterior_update,
    schedule_cost,
    solve_periodic,
    solve_stationary,
    stop_cost,
    value_at,
)
from seqquant.errors import DegenerateChannel, DomainError, NoConvergence, ZeroMass
from seqquant.models import InducedChannel


class TestConfig:
    def test_defaults(self):
        cfg = DPConfig(c=0.01)
        assert (cfg.grid_size, cfg.max_iters, cfg.tol) == (100001, 500, 1e-7)

    @pytest.mark.parametrize("kw", [{"c": 0.0}, {"c": 0.01, "grid_size": 100}, {"c": 0.01, "tol": 0.0}, {"c": 0.01, "grid": "cubic"}])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            DPConfig(**kw)

    def test_small_cost_switches_grid(self):
        assert DPConfig(c=1e-3).grid_kind == "uniform"
        assert DPConfig(c=1e-4).grid_kind == "logodds"
        assert DPConfig(c=1e-4, grid="uniform").grid_kind == "uniform"


class TestPosteriorUpdate:
    def test_absorbing(self, channels):
        for u in (0, 1):
            assert posterior_update(0.0, u, channels["A"]) == 0.0
            assert posterior_update(1.0, u, channels["A"]) == 1.0

    def test_design_a_first_output(self, channels):
        expected = 0.08 * (1 / 3) / (0.08 * (1 / 3) + 0.92 * 0.8)
        assert posterior_update(0.08, 0, channels["A"]) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.03497, abs=1e-5)

    def test_zero_mass_output(self):
        ch = InducedChannel([0.5, 0.5, 0.0], [0.2, 0.8, 0.0])
        with pytest.raises(ZeroMass):
            posterior_update(0.3, 2, ch)

    def test_domain(self, channels):
        with pytest.raises(DomainError):
            posterior_update(1.5, 0, channels["A"])


class TestGoldenValues:
    def test_design_b(self, tables):
        assert tables["B"](0.08) == pytest.approx(0.0532, abs=5e-4)

    def test_design_a(self, tables):
        assert tables["A"](0.08) == pytest.approx(0.0567, abs=5e-4)

    def test_design_c_stops_immediately(self, tables):
        assert tables["C"](0.08) == pytest.approx(0.08, abs=5e-4)

    def test_prefix_a_then_b(self, channels, tables):
        assert prefix_cost([channels["A"]], tables["B"], 0.08) == pytest.approx(0.052767, abs=1e-4)

    def test_all_converged(self, tables):
        for vf in tables.values():
            assert vf.converged and vf.monotone
            assert vf.last_change < 1e-7


class TestInvariants:
    @pytest.mark.parametrize("name", ["A", "B", "C"])
    def test_bounded_by_stop_cost(self, tables, name):
        vf = tables[name]
        g = stop_cost(vf.p)
        assert np.all(vf.values >= 0)
        assert np.all(vf.values <= g + 1e-15)
        assert vf.values[0] == 0.0 and vf.values[-1] == 0.0

    @pytest.mark.parametrize("name", ["A", "B", "C"])
    def test_concave_on_grid(self, tables, name):
        second = np.diff(tables[name].values, 2)
        assert second.max() <= 1e-12

    def test_large_cost_never_samples(self, channels):
        vf = solve_stationary(channels["A"], DPConfig(c=0.5, grid_size=1001))
        np.testing.assert_array_equal(vf.values, stop_cost(vf.p))
        assert vf.continue_region() is None

    def test_grid_refinement(self, channels, tables):
        fine = solve_stationary(channels["B"], DPConfig(c=0.01, grid_size=200001))
        assert abs(fine(0.08) - tables["B"](0.08)) < 5e-5

    def test_bitwise_deterministic(self, channels, tables):
        again = solve_stationary(channels["B"], DPConfig(c=0.01))
        assert again.values.tobytes() == tables["B"].values.tobytes()

    def test_continue_region(self, tables):
        lo, hi = tables["B"].continue_region()
        assert 0 < lo < 0.08 < hi < 1


class TestPeriodic:
    def test_period_one_is_stationary(self, channels, tables, dp_cfg):
        (vf,) = solve_periodic([channels["B"]], dp_cfg)
        assert vf.values.tobytes() == tables["B"].values.tobytes()

    def test_identical_slots(self, channels, tables, dp_cfg):
        v1, v2 = solve_periodic([channels["B"], channels["B"]], dp_cfg)
        np.testing.assert_allclose(v1.values, tables["B"].values, atol=1e-7)
        np.testing.assert_array_equal(v1.values, v2.values)

    def test_rotation_permutes_tables(self, channels):
        cfg = DPConfig(c=0.01, grid_size=20001)
        ab = solve_periodic([channels["A"], channels["B"]], cfg)
        ba = solve_periodic([channels["B"], channels["A"]], cfg)
        np.testing.assert_allclose(ab[0].values, ba[1].values, atol=1e-7)
        np.testing.assert_allclose(ab[1].values, ba[0].values, atol=1e-7)

    def test_alternating_cost(self, channels, tables, dp_cfg):
        first = solve_periodic([channels["A"], channels["B"]], dp_cfg)[0]
        # finite-c value; recorded rather than ordered against the stationary designs
        assert first(0.08) == pytest.approx(0.053068, abs=2e-5)
        assert first(0.08) <= stop_cost(0.08)

    def test_degenerate_channel(self, dp_cfg):
        with pytest.raises(DegenerateChannel):
            solve_periodic([InducedChannel([0.5, 0.5], [0.5, 0.5])], dp_cfg)

    def test_empty(self, dp_cfg):
        with pytest.raises(DomainError):
            solve_periodic([], dp_cfg)


class TestPrefix:
    def test_empty_prefix(self, tables):
        assert prefix_cost([], tables["B"], 0.08) == tables["B"](0.08)

    def test_fixed_point(self, channels, tables):
        assert prefix_cost([channels["B"]], tables["B"], 0.08) == pytest.approx(tables["B"](0.08), abs=1e-7)

    def test_unconverged_tail(self, channels):
        tail = solve_stationary(channels["B"], DPConfig(c=0.01, grid_size=1001, max_iters=2))
        assert not tail.converged
        with pytest.raises(NoConvergence) as info:
            prefix_cost([channels["A"]], tail, 0.08)
        assert info.value.value is not None
        assert info.value.last_change > 0
        with pytest.raises(NoConvergence):
            tail.require_converged()

    def test_cost_mismatch(self, channels, tables):
        with pytest.raises(DomainError):
            prefix_cost([channels["A"]], tables["B"], 0.08, DPConfig(c=0.02))

    def test_schedule_cost_report(self, channels, dp_cfg):
        report, _ = schedule_cost([channels["A"]], [channels["B"]], 0.08, dp_cfg, design="A|B")
        obj = json.loads(report.to_json())
        assert {"design", "prior1", "c", "grid_size", "iterations", "cost"} <= set(obj)
        assert obj["cost"] == pytest.approx(0.052767, abs=1e-4)


class TestValueAt:
    def test_endpoints_and_nodes(self, tables):
        vf = tables["A"]
        assert value_at(vf, 0.0) == 0.0
        i = 12345
        assert value_at(vf, float(vf.p[i])) == vf.values[i]

    def test_between_nodes(self, tables):
        vf = tables["A"]
        i = 40000
        lo, hi = float(vf.p[i]), float(vf.p[i + 1])
        t = 0.3
        p = lo + t * (hi - lo)
        by_hand = (1 - t) * vf.values[i] + t * vf.values[i + 1]
        assert value_at(vf, p) == pytest.approx(by_hand, rel=1e-12)

    def test_domain(self, tables):
        with pytest.raises(DomainError):
            value_at(tables["A"], -0.1)

    @settings(max_examples=50)
    @given(st.floats(0.0, 1.0))
    def test_never_above_stop_cost(self, tables, p):
        assert value_at(tables["B"], p) <= min(p, 1 - p) + 1e-12


class TestLogOddsGrid:
    def test_agrees_with_uniform_grid(self, channels):
        uni = solve_stationary(channels["B"], DPConfig(c=1e-3, grid="uniform"))
        lo = solve_stationary(channels["B"], DPConfig(c=1e-3, grid="logodds"))
        assert lo.grid.kind == "logodds"
        assert abs(lo(0.08) - uni(0.08)) < 1e-5

    def test_grid_coordinates(self):
        grid = PosteriorGrid.build(DPConfig(c=1e-4, grid_size=101, logodds_halfwidth=10))
        assert grid.coords[0] == -10 and grid.coords[-1] == 10
        np.testing.assert_allclose(np.log(grid.p / (1 - grid.p)), grid.coords, atol=1e-9)

    def test_outside_range_equals_stop_cost(self, channels):
        vf = solve_stationary(channels["B"], DPConfig(c=1e-4, grid_size=2001, logodds_halfwidth=10, tol=1e-9))
        p = 1e-6  # log-odds about -13.8, outside the table
        assert vf(p) == pytest.approx(p, rel=1e-9)
        assert vf(0.0) == 0.0 and vf(1.0) == 0.0


class TestExport:
    def test_csv(self, channels):
        vf = solve_stationary(channels["A"], DPConfig(c=0.01, grid_size=101))
        rows = list(csv.reader(io.StringIO(vf.to_csv())))
        assert rows[0] == ["p", "J"]
        assert len(rows) == 102
        assert float(rows[51][0]) == pytest.approx(0.5)
        assert float(rows[51][1]) == vf.values[50]
