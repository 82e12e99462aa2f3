"""Monte Carlo experiment harness: scene sampling, sweeps, CSV emission.

Every random draw flows from a per-trial seed derived deterministically from
(master seed, axis point index, trial index), so benchmark variants inside a
trial see the same channel and whole runs replay bit-exactly.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .beamform import AlternatingBeamformer, spectral_efficiency, unit_modulus
from .channel import (
    ChannelScene,
    PathFar,
    ScattererNear,
    assemble_er,
    build_em_far,
    build_em_near,
)
from .geometry import ArrayGeometry, facing_negative_x, wavelength_of
from .patterns import Angle, PatternDictionary, default_dictionary, isotropic_dictionary

FAR_BENCHMARKS = ("er_fas", "conventional_optimized", "conventional_random")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description; every field is a config-file key."""

    # link
    carrier_hz: float = 3.55e9
    noise_dbm: float = -95.0
    power_dbm: float = 0.0
    distance_m: float = 10.0          # Tx-Rx LoS distance (far-field budget + near placement)
    pathloss_db: float | None = None  # None: free-space amplitude at distance_m
    # arrays
    tx_n_h: int = 4
    tx_n_v: int = 4
    rx_n_h: int = 4
    rx_n_v: int = 4
    spacing_wavelengths: float = 0.5
    # pattern dictionary
    pattern_q: float = 2.0
    pattern_boresights_deg: tuple = (-30.0, 0.0, 30.0)
    conventional_state: int = 1       # 0-based index of the fixed broadside state
    conventional_isotropic: bool = False  # benchmark with unit gains instead
    # scene statistics
    n_clusters: int = 3
    paths_per_cluster: int = 3
    cluster_spread_deg: float = 5.0
    los_boost: float = 1.0
    aod_deg: float = 0.0
    aoa_deg: float = 0.0
    # sweep axes
    power_range_dbm: tuple = (-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    aod_range_deg: tuple = tuple(float(x) for x in range(-90, 95, 5))
    multipath_range: tuple = (0, 3, 6, 9, 12, 18)
    # near field
    nf_distances_m: tuple = (0.5, 1.0, 2.0)
    nf_ntx_grid: tuple = (10, 17, 28, 46, 77, 129, 215, 359, 599, 1000)
    nf_n_rx: int = 1
    nf_include_nlos: bool = False
    # greedy-vs-exhaustive
    gve_ntx_list: tuple = (2, 4, 6, 8)
    gve_n_rx: int = 2
    # beampattern
    bp_target_az_deg: tuple = (0.0, 30.0, 60.0, 90.0)
    bp_grid_step_deg: float = 2.0
    # harness
    trials: int = 100
    master_seed: int = 12345
    benchmarks: tuple = FAR_BENCHMARKS
    measure_runtime: bool = False
    threads: int = 1
    optimizer_tol: float = 1e-8
    optimizer_max_iter: int = 100

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")
        if self.distance_m <= 0:
            raise ValueError("distance_m must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        for name in ("power_range_dbm", "aod_range_deg", "multipath_range",
                     "nf_distances_m", "nf_ntx_grid", "gve_ntx_list"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")

    @property
    def wavelength(self) -> float:
        return wavelength_of(self.carrier_hz)

    @property
    def spacing(self) -> float:
        return self.spacing_wavelengths * self.wavelength

    def tx_geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.tx_n_h, self.tx_n_v, self.spacing, self.wavelength)

    def rx_geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.rx_n_h, self.rx_n_v, self.spacing, self.wavelength)

    def dictionary(self) -> PatternDictionary:
        return default_dictionary(self.pattern_q, self.pattern_boresights_deg)

    def noise_watts(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    def pathloss_amplitude(self) -> float:
        """Scalar channel amplitude for the far-field link budget."""
        if self.pathloss_db is not None:
            return 10.0 ** (-self.pathloss_db / 20.0)
        return self.wavelength / (4.0 * np.pi * self.distance_m)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        coerced = {}
        for k, v in doc.items():
            coerced[k] = tuple(v) if isinstance(v, list) else v
        return cls(**coerced)


@dataclass(frozen=True)
class SweepResult:
    axis_name: str
    axis_value: float
    benchmark: str
    mean_se: float
    std_se: float
    mean_runtime: float
    trials: int


def _wrap_azimuth(a: float) -> float:
    a = (a + np.pi) % (2 * np.pi) - np.pi
    return np.pi if a <= -np.pi else a


def _in_plane(az: float) -> Angle:
    return Angle(_wrap_azimuth(az), np.pi / 2)


def _cn(rng: np.random.Generator, size=None):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def sample_scene(cfg: ExperimentConfig, rng: np.random.Generator) -> ChannelScene:
    """Draw one far-field clustered scene from the configured statistics.

    The LoS AoD/AoA come from the config geometry; cluster center azimuths
    are uniform on (-pi/2, pi/2) with Laplacian per-path spread, elevations
    fixed in-plane. NLoS gains are unit-variance circular Gaussian.
    """
    los = PathFar(
        gain=_los_gain(cfg, rng),
        aod=_in_plane(np.deg2rad(cfg.aod_deg)),
        aoa=_in_plane(np.deg2rad(cfg.aoa_deg)),
    )
    spread = np.deg2rad(cfg.cluster_spread_deg)
    clusters = []
    for _ in range(cfg.n_clusters):
        center_aod = rng.uniform(-np.pi / 2, np.pi / 2)
        center_aoa = rng.uniform(-np.pi / 2, np.pi / 2)
        paths = []
        for _ in range(cfg.paths_per_cluster):
            paths.append(
                PathFar(
                    gain=complex(_cn(rng)),
                    aod=_in_plane(center_aod + rng.laplace(0.0, spread)),
                    aoa=_in_plane(center_aoa + rng.laplace(0.0, spread)),
                )
            )
        clusters.append(tuple(paths))
    return ChannelScene(regime="far", los=los, clusters=tuple(clusters))


def _los_gain(cfg: ExperimentConfig, rng: np.random.Generator) -> complex:
    return complex(cfg.los_boost * np.exp(1j * rng.uniform(0.0, 2 * np.pi)))


def sample_near_scene(cfg: ExperimentConfig, tx: ArrayGeometry, rx: ArrayGeometry,
                      rng: np.random.Generator) -> ChannelScene:
    """Near-field scene: free-space per-pair LoS (computed at build time) and,
    when enabled, clusters of point scatterers around the link."""
    clusters = []
    if cfg.nf_include_nlos:
        d_link = float(np.linalg.norm(rx.center() - tx.center()))
        lam = tx.wavelength
        for _ in range(cfg.n_clusters):
            az = rng.uniform(-np.pi / 2, np.pi / 2)
            scatterers = []
            for _ in range(cfg.paths_per_cluster):
                r_dist = rng.uniform(0.3, 1.5) * d_link
                jitter = rng.normal(0.0, 0.05 * d_link, 3) * np.array([1.0, 1.0, 0.0])
                pos = tx.center() + r_dist * np.array([np.cos(az), np.sin(az), 0.0]) + jitter
                d_t = np.linalg.norm(tx.element_positions() - pos, axis=1)
                d_r = np.linalg.norm(rx.element_positions() - pos, axis=1)
                rho = complex(_cn(rng))  # one reflection coefficient per scatterer
                scatterers.append(
                    ScattererNear(
                        position=tuple(pos),
                        tx_gains=tuple(rho * lam / (4 * np.pi * d_t)),
                        rx_gains=tuple(lam / (4 * np.pi * d_r)),
                    )
                )
            clusters.append(tuple(scatterers))
    return ChannelScene(regime="near", clusters=tuple(clusters))


def _trial_seed(master_seed: int, point_index: int, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((master_seed, point_index, trial_index))


def _optimizer(cfg: ExperimentConfig, selector: str, seed, **kw) -> AlternatingBeamformer:
    return AlternatingBeamformer(
        selector=selector,
        tol=cfg.optimizer_tol,
        max_iter=cfg.optimizer_max_iter,
        random_state=seed,
        **kw,
    )


def _fit_and_rate(bf, em, amp, p_t, noise, measure_runtime):
    t0 = time.perf_counter() if measure_runtime else 0.0
    bf.fit(em)
    rt = time.perf_counter() - t0 if measure_runtime else 0.0
    h = amp * assemble_er(em, bf.tx_states_, bf.rx_states_)
    return spectral_efficiency(h, bf.f_, bf.w_, p_t, noise), rt


def _run_far_benchmark(bench, cfg, em_full, em_conv, amp, p_t, noise, seed):
    if bench == "er_fas":
        bf = _optimizer(cfg, "greedy", seed)
        return _fit_and_rate(bf, em_full, amp, p_t, noise, cfg.measure_runtime)
    if bench == "conventional_optimized":
        init = 0 if cfg.conventional_isotropic else cfg.conventional_state
        bf = _optimizer(cfg, "greedy", seed, optimize_states=False, init_states=init)
        return _fit_and_rate(bf, em_conv, amp, p_t, noise, cfg.measure_runtime)
    if bench == "conventional_random":
        rng = np.random.default_rng(seed)
        f = unit_modulus(rng.uniform(0, 2 * np.pi, em_conv.n_tx))
        w = unit_modulus(rng.uniform(0, 2 * np.pi, em_conv.n_rx))
        k = 0 if cfg.conventional_isotropic else cfg.conventional_state
        h = amp * assemble_er(em_conv, np.full(em_conv.n_tx, k), np.full(em_conv.n_rx, k))
        return spectral_efficiency(h, f, w, p_t, noise), 0.0
    raise ValueError(f"unknown benchmark {bench!r}")


def _apply_far_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "power_dbm":
        return replace(cfg, power_dbm=float(value))
    if axis == "aod_deg":
        return replace(cfg, aod_deg=float(value))
    if axis == "n_paths":
        return replace(cfg, paths_per_cluster=int(value))
    raise ValueError(f"unknown sweep axis {axis!r}")


def _far_trial(cfg: ExperimentConfig, axis: str, value, point_index: int,
               trial_index: int) -> dict:
    cfg_pt = _apply_far_axis(cfg, axis, value)
    ss = _trial_seed(cfg.master_seed, point_index, trial_index)
    children = ss.spawn(1 + len(cfg.benchmarks))
    scene = sample_scene(cfg_pt, np.random.default_rng(children[0]))
    tx, rx = cfg_pt.tx_geometry(), cfg_pt.rx_geometry()
    em_full = build_em_far(scene, tx, rx, cfg_pt.dictionary())
    em_conv = (
        build_em_far(scene, tx, rx, isotropic_dictionary())
        if cfg_pt.conventional_isotropic
        else em_full
    )
    amp = cfg_pt.pathloss_amplitude()
    p_t = dbm_to_watts(cfg_pt.power_dbm)
    noise = cfg_pt.noise_watts()
    out = {}
    for bench, child in zip(cfg_pt.benchmarks, children[1:]):
        out[bench] = _run_far_benchmark(
            bench, cfg_pt, em_full, em_conv, amp, p_t, noise, child
        )
    return out


def _far_trial_task(args):
    return _far_trial(*args)


def _pmap(task_fn, tasks, threads: int):
    if threads <= 1:
        return [task_fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task_fn, tasks))


def _aggregate(axis_name, value, per_trial, benchmarks) -> list:
    results = []
    for bench in benchmarks:
        ses = np.array([t[bench][0] for t in per_trial])
        rts = np.array([t[bench][1] for t in per_trial])
        results.append(
            SweepResult(
                axis_name=axis_name,
                axis_value=float(value),
                benchmark=bench,
                mean_se=float(ses.mean()),
                std_se=float(ses.std()),
                mean_runtime=float(rts.mean()),
                trials=ses.size,
            )
        )
    return results


def run_sweep(cfg: ExperimentConfig, axis: str, values=None) -> list:
    """Far-field Monte Carlo sweep over one axis; paired channels across
    benchmarks within each trial."""
    default_values = {
        "power_dbm": cfg.power_range_dbm,
        "aod_deg": cfg.aod_range_deg,
        "n_paths": cfg.multipath_range,
    }
    if axis not in default_values:
        raise ValueError(f"unknown sweep axis {axis!r}")
    if values is None:
        values = default_values[axis]
    results = []
    for k, value in enumerate(values):
        tasks = [(cfg, axis, value, k, t) for t in range(cfg.trials)]
        per_trial = _pmap(_far_trial_task, tasks, cfg.threads)
        results.extend(_aggregate(axis, value, per_trial, cfg.benchmarks))
    return results


# --- near field -------------------------------------------------------------


def near_field_geometries(cfg: ExperimentConfig, n_tx: int, distance: float):
    """Tx: n_tx x 1 ULA along Y; Rx: nf_n_rx x 1 ULA facing back at the Tx,
    centered in front of the Tx array center at the given distance."""
    tx = ArrayGeometry(n_tx, 1, cfg.spacing, cfg.wavelength)
    tx_cy = tx.center()[1]
    rx_origin = (distance, tx_cy + (cfg.nf_n_rx - 1) * cfg.spacing / 2.0, 0.0)
    rx = ArrayGeometry(
        cfg.nf_n_rx, 1, cfg.spacing, cfg.wavelength,
        origin=rx_origin, frame=facing_negative_x(),
    )
    return tx, rx


def _near_point(cfg: ExperimentConfig, n_tx: int, distance: float, point_index: int):
    tx, rx = near_field_geometries(cfg, n_tx, distance)
    p_t = dbm_to_watts(cfg.power_dbm)
    noise = cfg.noise_watts()
    per_trial = []
    for t in range(cfg.trials):
        ss = _trial_seed(cfg.master_seed, point_index, t)
        children = ss.spawn(3)
        scene = sample_near_scene(cfg, tx, rx, np.random.default_rng(children[0]))
        em = build_em_near(scene, tx, rx, cfg.dictionary())
        # the spherical model carries physical per-pair link gains, so the
        # array-size normalization gamma is divided back out of the link
        # budget: total radiated power stays fixed as N_T grows
        amp = 1.0 / em.gamma
        out = {}
        bf = _optimizer(cfg, "greedy", children[1])
        out["er_fas"] = _fit_and_rate(bf, em, amp, p_t, noise, cfg.measure_runtime)
        bf = _optimizer(cfg, "greedy", children[2], optimize_states=False,
                        init_states=cfg.conventional_state)
        out["conventional_optimized"] = _fit_and_rate(
            bf, em, amp, p_t, noise, cfg.measure_runtime
        )
        per_trial.append(out)
    return per_trial


def near_field_sweep(cfg: ExperimentConfig) -> list:
    """SE versus Tx array size at each configured Tx-Rx distance; total
    transmit power held constant by the unit-norm phase constraints."""
    results = []
    point = 0
    for distance in cfg.nf_distances_m:
        for n_tx in cfg.nf_ntx_grid:
            per_trial = _near_point(cfg, int(n_tx), float(distance), point)
            point += 1
            results.extend(
                _aggregate(
                    f"n_tx[d={distance:g}m]", n_tx, per_trial,
                    ("er_fas", "conventional_optimized"),
                )
            )
    return results


# --- greedy vs exhaustive -----------------------------------------------------


def greedy_vs_exhaustive(cfg: ExperimentConfig) -> list:
    """Paired comparison of the two selectors over Tx array size: mean SE and
    mean per-fit runtime for each selector at every array size."""
    results = []
    amp = cfg.pathloss_amplitude()
    p_t = dbm_to_watts(cfg.power_dbm)
    noise = cfg.noise_watts()
    for k, n_tx in enumerate(cfg.gve_ntx_list):
        cfg_pt = replace(cfg, tx_n_h=int(n_tx), tx_n_v=1,
                         rx_n_h=cfg.gve_n_rx, rx_n_v=1)
        per_trial = []
        for t in range(cfg.trials):
            ss = _trial_seed(cfg.master_seed, k, t)
            scene_child, init_child = ss.spawn(2)
            scene = sample_scene(cfg_pt, np.random.default_rng(scene_child))
            em = build_em_far(scene, cfg_pt.tx_geometry(), cfg_pt.rx_geometry(),
                              cfg_pt.dictionary())
            init_seed = int(init_child.generate_state(1)[0])
            out = {}
            for selector in ("greedy", "exhaustive"):
                bf = _optimizer(cfg_pt, selector, init_seed)
                out[selector] = _fit_and_rate(
                    bf, em, amp, p_t, noise, cfg.measure_runtime
                )
            per_trial.append(out)
        results.extend(
            _aggregate("n_tx", n_tx, per_trial, ("greedy", "exhaustive"))
        )
    return results


# --- beampattern -------------------------------------------------------------


GAIN_FLOOR_DBI = -300.0


def beampattern_grid(f, states, tx: ArrayGeometry, dictionary: PatternDictionary,
                     az_grid) -> list:
    """Analytical transmit beampattern over in-plane azimuths.

    field(az) = sqrt(N_T) (g_T(az) had a_T(az))^H f with each element's gain
    taken from its selected state; returns (az, gain_dBi) pairs with
    20*log10 |field| floored at GAIN_FLOOR_DBI.
    """
    az_grid = np.asarray(az_grid, dtype=float)
    f = np.asarray(f)
    idx = np.asarray(getattr(states, "indices", states), dtype=int)
    n_tx = tx.n_elements
    th = tx.spacing * np.sin(az_grid) / tx.wavelength  # el = pi/2
    k = np.arange(tx.n_h)
    a_h = np.exp(-2j * np.pi * np.outer(th, k))  # (n_az, n_h)
    # n_v copies per horizontal index, all with unit vertical phase (el = pi/2)
    a = np.repeat(a_h, tx.n_v, axis=1) / np.sqrt(n_tx)  # (n_az, n_tx)
    gm = dictionary.gain_matrix(az_grid, np.full_like(az_grid, np.pi / 2))  # (N, n_az)
    g = gm[idx, :].T  # (n_az, n_tx)
    field = np.sqrt(n_tx) * np.sum(g * np.conj(a) * f[None, :], axis=1)
    gain_dbi = 20.0 * np.log10(np.maximum(np.abs(field), 10 ** (GAIN_FLOOR_DBI / 20.0)))
    return list(zip(az_grid.tolist(), gain_dbi.tolist()))


def beampattern_study(cfg: ExperimentConfig) -> list:
    """ER-FAS vs conventional analytical beampatterns for each configured
    steering target. Returns (az_deg, benchmark, gain_dbi) row tuples."""
    tx = ArrayGeometry(cfg.tx_n_h, 1, cfg.spacing, cfg.wavelength) \
        if cfg.tx_n_v == 1 else cfg.tx_geometry()
    rx = ArrayGeometry(1, 1, cfg.spacing, cfg.wavelength)
    dictionary = cfg.dictionary()
    step = np.deg2rad(cfg.bp_grid_step_deg)
    az_grid = np.arange(np.deg2rad(-90.0), np.deg2rad(90.0) + step / 2, step)
    rows = []
    for j, target_deg in enumerate(cfg.bp_target_az_deg):
        scene = ChannelScene(
            regime="far",
            los=PathFar(1.0 + 0j, _in_plane(np.deg2rad(target_deg)), _in_plane(0.0)),
        )
        em = build_em_far(scene, tx, rx, dictionary)
        seed = int(_trial_seed(cfg.master_seed, j, 0).generate_state(1)[0])
        er = _optimizer(cfg, "greedy", seed).fit(em)
        conv = _optimizer(cfg, "greedy", seed, optimize_states=False,
                          init_states=cfg.conventional_state).fit(em)
        for label, bf in (("er_fas", er), ("conventional", conv)):
            for az, gain in beampattern_grid(bf.f_, bf.tx_states_, tx, dictionary, az_grid):
                rows.append((
                    float(np.rad2deg(az)),
                    f"{label}[target={target_deg:g}deg]",
                    gain,
                ))
    return rows


# --- CSV ---------------------------------------------------------------------

CSV_HEADER = "axis_name,axis_value,benchmark,mean_se_bpshz,std_se_bpshz,mean_runtime_s,trials"
BEAMPATTERN_HEADER = "az_deg,benchmark,gain_dbi"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def emit_csv(results, path) -> None:
    """Sweep results to CSV, deterministic column order and formatting."""
    if not results:
        raise ValueError("nothing to emit")
    lines = [CSV_HEADER]
    for r in results:
        lines.append(
            ",".join([
                r.axis_name,
                _fmt(r.axis_value),
                r.benchmark,
                _fmt(r.mean_se),
                _fmt(r.std_se),
                _fmt(r.mean_runtime),
                str(r.trials),
            ])
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_beampattern_csv(rows, path) -> None:
    if not rows:
        raise ValueError("nothing to emit")
    lines = [BEAMPATTERN_HEADER]
    for az_deg, benchmark, gain_dbi in rows:
        lines.append(",".join([_fmt(az_deg), benchmark, _fmt(gain_dbi)]))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
