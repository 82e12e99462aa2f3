"""Tests for the Monte Carlo sweep harness and CSV emission."""

import numpy as np
import pytest

from erfas.beamform import unit_modulus
from erfas.patterns import isotropic_dictionary
from erfas.geometry import ArrayGeometry, wavelength_of
from erfas.scenario import (
    ExperimentConfig,
    SweepResult,
    beampattern_grid,
    beampattern_study,
    dbm_to_watts,
    emit_beampattern_csv,
    emit_csv,
    greedy_vs_exhaustive,
    near_field_geometries,
    near_field_sweep,
    run_sweep,
    sample_scene,
)

LAM = wavelength_of(3.55e9)


def small_cfg(**kw):
    base = dict(
        tx_n_h=2, tx_n_v=1, rx_n_h=2, rx_n_v=1,
        trials=5, n_clusters=2, paths_per_cluster=2,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_dbm_to_watts(self):
        assert dbm_to_watts(0.0) == pytest.approx(1e-3)
        assert dbm_to_watts(30.0) == pytest.approx(1.0)
        assert dbm_to_watts(-95.0) == pytest.approx(10 ** (-9.5) * 1e-3)

    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.carrier_hz == 3.55e9
        assert cfg.noise_dbm == -95.0
        assert cfg.trials == 100
        assert cfg.tx_geometry().n_elements == 16
        assert cfg.dictionary().n_states == 3

    def test_free_space_pathloss_default(self):
        cfg = ExperimentConfig(distance_m=10.0)
        assert cfg.pathloss_amplitude() == pytest.approx(LAM / (4 * np.pi * 10.0))

    def test_pathloss_db_override(self):
        cfg = ExperimentConfig(pathloss_db=60.0)
        assert cfg.pathloss_amplitude() == pytest.approx(10 ** (-60.0 / 20.0))

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            ExperimentConfig.from_dict({"powr_dbm": 0})

    def test_from_dict_coerces_lists(self):
        cfg = ExperimentConfig.from_dict({"power_range_dbm": [0, 5, 10]})
        assert cfg.power_range_dbm == (0, 5, 10)

    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(trials=0)
        with pytest.raises(ValueError):
            ExperimentConfig(carrier_hz=-1.0)


class TestSceneSampling:
    def test_counts_and_los_magnitude(self):
        cfg = small_cfg(n_clusters=3, paths_per_cluster=4, los_boost=2.0)
        scene = sample_scene(cfg, np.random.default_rng(0))
        assert len(scene.clusters) == 3
        assert scene.n_nlos_paths == 12
        assert abs(abs(scene.los.gain) - 2.0) < 1e-12

    def test_deterministic_given_rng_seed(self):
        cfg = small_cfg()
        s1 = sample_scene(cfg, np.random.default_rng(42))
        s2 = sample_scene(cfg, np.random.default_rng(42))
        assert s1 == s2

    def test_los_angles_from_config(self):
        cfg = small_cfg(aod_deg=30.0, aoa_deg=-10.0)
        scene = sample_scene(cfg, np.random.default_rng(1))
        assert scene.los.aod.azimuth == pytest.approx(np.deg2rad(30.0))
        assert scene.los.aoa.azimuth == pytest.approx(np.deg2rad(-10.0))


class TestFarSweep:
    def test_row_accounting_and_determinism(self):
        cfg = small_cfg()
        res1 = run_sweep(cfg, "power_dbm", values=(0.0, 10.0))
        res2 = run_sweep(cfg, "power_dbm", values=(0.0, 10.0))
        assert len(res1) == 2 * 3  # points x benchmarks
        assert res1 == res2
        for r in res1:
            assert r.trials == cfg.trials
            assert np.isfinite(r.mean_se) and r.mean_se > 0
            assert r.mean_runtime == 0.0  # timing off by default

    def test_benchmark_ordering(self):
        cfg = small_cfg(trials=20)
        res = run_sweep(cfg, "power_dbm", values=(10.0,))
        by = {r.benchmark: r for r in res}
        noise = 3.0 * max(r.std_se for r in res) / np.sqrt(cfg.trials)
        assert by["er_fas"].mean_se >= by["conventional_optimized"].mean_se - 1e-12
        assert (
            by["conventional_optimized"].mean_se
            >= by["conventional_random"].mean_se - noise
        )

    def test_high_snr_slope_one_bit_per_3db(self):
        # single-value sweeps share point index 0, so the channel draws are
        # paired across the two power levels and the slope is exact
        cfg = small_cfg(trials=10)
        lo = run_sweep(cfg, "power_dbm", values=(17.0,))
        hi = run_sweep(cfg, "power_dbm", values=(20.0,))
        er_lo = next(r.mean_se for r in lo if r.benchmark == "er_fas")
        er_hi = next(r.mean_se for r in hi if r.benchmark == "er_fas")
        # small deficit from the +1 inside log2(1 + SNR) at finite SNR
        assert er_hi - er_lo == pytest.approx(1.0, abs=0.01)

    def test_seed_changes_results(self):
        res_a = run_sweep(small_cfg(), "power_dbm", values=(0.0,))
        res_b = run_sweep(small_cfg(master_seed=999), "power_dbm", values=(0.0,))
        assert res_a[0].mean_se != res_b[0].mean_se

    def test_aod_axis(self):
        cfg = small_cfg(n_clusters=0)
        res = run_sweep(cfg, "aod_deg", values=(0.0, 60.0))
        assert {r.axis_value for r in res} == {0.0, 60.0}

    def test_multipath_axis_changes_path_count(self):
        cfg = small_cfg()
        res = run_sweep(cfg, "n_paths", values=(0, 6))
        assert len(res) == 6
        assert all(np.isfinite(r.mean_se) for r in res)

    def test_unknown_axis(self):
        with pytest.raises(ValueError):
            run_sweep(small_cfg(), "bandwidth")

    def test_threads_match_serial(self):
        cfg = small_cfg()
        serial = run_sweep(cfg, "power_dbm", values=(0.0,))
        parallel = run_sweep(small_cfg(threads=2), "power_dbm", values=(0.0,))
        assert serial == parallel


class TestNearField:
    def test_geometries_face_each_other(self):
        cfg = small_cfg(nf_n_rx=1)
        tx, rx = near_field_geometries(cfg, 4, 2.0)
        # Rx center sits on the Tx boresight axis at the requested distance
        offset = rx.center() - tx.center()
        assert offset[0] == pytest.approx(2.0)
        assert abs(offset[1]) < 1e-12 and abs(offset[2]) < 1e-12
        ang = rx.angle_to(tx.center())
        assert abs(ang.azimuth) < 1e-9  # Tx is on the Rx boresight too

    def test_sweep_rows(self):
        cfg = small_cfg(trials=3, nf_distances_m=(1.0,), nf_ntx_grid=(2, 4))
        res = near_field_sweep(cfg)
        assert len(res) == 2 * 2  # grid points x benchmarks
        assert all(r.axis_name == "n_tx[d=1m]" for r in res)
        assert all(np.isfinite(r.mean_se) and r.mean_se > 0 for r in res)

    def test_er_at_least_conventional(self):
        cfg = small_cfg(trials=5, nf_distances_m=(1.0,), nf_ntx_grid=(8,))
        res = near_field_sweep(cfg)
        by = {r.benchmark: r for r in res}
        assert by["er_fas"].mean_se >= by["conventional_optimized"].mean_se - 1e-12


class TestGreedyVsExhaustive:
    def test_paired_rows(self):
        cfg = small_cfg(trials=5, gve_ntx_list=(2, 3), gve_n_rx=2)
        res = greedy_vs_exhaustive(cfg)
        assert len(res) == 2 * 2
        by_ntx = {}
        for r in res:
            by_ntx.setdefault(r.axis_value, {})[r.benchmark] = r.mean_se
        for ntx, pair in by_ntx.items():
            # exhaustive per-step selection cannot lose on average by much;
            # individual runs may land in different local optima
            assert abs(pair["greedy"] - pair["exhaustive"]) < 1.0


class TestBeampattern:
    def test_uniform_isotropic_peak(self):
        n = 12
        tx = ArrayGeometry(n, 1, 0.5 * LAM, LAM)
        f = unit_modulus(np.zeros(n))
        rows = beampattern_grid(
            f, np.zeros(n, dtype=int), tx, isotropic_dictionary(),
            np.deg2rad(np.arange(-90.0, 90.5, 0.5)),
        )
        gains = np.array([g for _, g in rows])
        azs = np.array([a for a, _ in rows])
        peak = gains.max()
        assert abs(peak - 10 * np.log10(12)) < 0.01
        assert abs(azs[gains.argmax()]) < 1e-9

    def test_steered_argmax_lands_on_target(self):
        n = 12
        tx = ArrayGeometry(n, 1, 0.5 * LAM, LAM)
        target = np.deg2rad(25.0)
        th = 0.5 * np.sin(target)
        f = unit_modulus(-2 * np.pi * th * np.arange(n))
        grid = np.deg2rad(np.arange(-90.0, 90.5, 1.0))
        rows = beampattern_grid(f, np.zeros(n, dtype=int), tx,
                                isotropic_dictionary(), grid)
        gains = np.array([g for _, g in rows])
        best = grid[gains.argmax()]
        assert abs(best - target) <= np.deg2rad(1.0) + 1e-9

    def test_study_rows(self):
        cfg = small_cfg(tx_n_h=4, bp_target_az_deg=(0.0, 60.0), bp_grid_step_deg=5.0)
        rows = beampattern_study(cfg)
        labels = {b for _, b, _ in rows}
        assert labels == {
            "er_fas[target=0deg]", "conventional[target=0deg]",
            "er_fas[target=60deg]", "conventional[target=60deg]",
        }
        n_az = len(np.arange(-90.0, 90.1, 5.0))
        assert len(rows) == 4 * n_az


class TestCsv:
    def test_header_and_formatting(self, tmp_path):
        rows = [SweepResult("power_dbm", 0.0, "er_fas", 1.25, 0.5, 0.0, 10)]
        path = tmp_path / "out.csv"
        emit_csv(rows, path)
        text = path.read_text().splitlines()
        assert text[0] == (
            "axis_name,axis_value,benchmark,mean_se_bpshz,std_se_bpshz,"
            "mean_runtime_s,trials"
        )
        assert text[1] == "power_dbm,0,er_fas,1.25,0.5,0,10"

    def test_byte_identical_reruns(self, tmp_path):
        cfg = small_cfg(trials=3)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(run_sweep(cfg, "power_dbm", values=(0.0,)), p1)
        emit_csv(run_sweep(cfg, "power_dbm", values=(0.0,)), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="nothing to emit"):
            emit_csv([], tmp_path / "out.csv")
        with pytest.raises(ValueError, match="nothing to emit"):
            emit_beampattern_csv([], tmp_path / "out.csv")

    def test_beampattern_csv(self, tmp_path):
        path = tmp_path / "bp.csv"
        emit_beampattern_csv([(0.0, "er_fas[target=0deg]", 10.7918)], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "az_deg,benchmark,gain_dbi"
        assert lines[1] == "0,er_fas[target=0deg],10.7918"
