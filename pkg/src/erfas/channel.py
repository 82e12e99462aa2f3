"""Far-field and near-field channel construction.

Three channel forms are produced here:

* the conventional fixed-pattern channel (N_R x N_T),
* the EM-domain channel H_EM (N*N_R x N*N_T) whose blocks enumerate every
  (element, pattern-state) combination,
* the effective reconfigured channel H_ER = gamma * D @ H_EM @ B^T obtained
  by one-hot state selection.

Builders are pure functions of immutable inputs; randomness lives entirely
in the scene objects passed in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import ArrayGeometry, arv
from .patterns import Angle, PatternDictionary, eval_gain


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class PathFar:
    """One far-field propagation path: complex gain, AoD, AoA."""

    gain: complex
    aod: Angle
    aoa: Angle

    def __post_init__(self):
        if not np.isfinite(self.gain):
            raise ChannelError("non-finite path gain")


@dataclass(frozen=True)
class ScattererNear:
    """Point scatterer with per-element link gains on both ends."""

    position: tuple
    tx_gains: tuple
    rx_gains: tuple


@dataclass(frozen=True)
class NearLosTable:
    """Per-(tx element, rx element) LoS parameters, all arrays (n_rx, n_tx).

    ``alpha`` carries the link gain magnitude only; the propagation phase
    exp(-j 2 pi d / lambda) is applied from ``distance`` at build time.
    """

    alpha: np.ndarray
    distance: np.ndarray
    aod_az: np.ndarray
    aod_el: np.ndarray
    aoa_az: np.ndarray
    aoa_el: np.ndarray


@dataclass(frozen=True)
class ChannelScene:
    """LoS plus clustered NLoS path parameters for one channel realization.

    ``regime`` is 'far' or 'near'. For far scenes ``los`` is a PathFar (or
    None for NLoS-only) and clusters hold PathFar entries; for near scenes
    ``los_near`` is a NearLosTable (or None, meaning free-space LoS derived
    from geometry at build time) and clusters hold ScattererNear entries.
    """

    regime: str
    los: PathFar | None = None
    los_near: NearLosTable | None = None
    clusters: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.regime not in ("far", "near"):
            raise ChannelError(f"unknown regime {self.regime!r}")

    @property
    def n_nlos_paths(self) -> int:
        return sum(len(c) for c in self.clusters)

    def gamma(self, n_tx: int, n_rx: int) -> float:
        """Normalization sqrt(N_T N_R / (1 + sum_c L_c)), recomputed from
        current scene contents."""
        return float(np.sqrt(n_tx * n_rx / (1.0 + self.n_nlos_paths)))


@dataclass(frozen=True)
class EmChannel:
    """EM-domain channel matrix with its selection-time normalization."""

    matrix: np.ndarray
    n_states: int
    n_tx: int
    n_rx: int
    gamma: float

    def __post_init__(self):
        expected = (self.n_states * self.n_rx, self.n_states * self.n_tx)
        if self.matrix.shape != expected:
            raise ChannelError(f"H_EM shape {self.matrix.shape}, expected {expected}")
        if not np.all(np.isfinite(self.matrix)):
            raise ChannelError("non-finite entries in H_EM")


def _iter_paths(scene: ChannelScene):
    if scene.los is not None:
        yield scene.los
    for cluster in scene.clusters:
        yield from cluster


def build_conventional_far(
    scene: ChannelScene,
    tx: ArrayGeometry,
    rx: ArrayGeometry,
    gain_tx,
    gain_rx,
) -> np.ndarray:
    """Fixed-pattern far-field channel H_CV (N_R x N_T)."""
    if scene.regime != "far":
        raise ChannelError("build_conventional_far requires a far-field scene")
    h = np.zeros((rx.n_elements, tx.n_elements), dtype=complex)
    for path in _iter_paths(scene):
        g = eval_gain(gain_rx, path.aoa) * eval_gain(gain_tx, path.aod)
        h += path.gain * g * np.outer(arv(rx, path.aoa), arv(tx, path.aod).conj())
    return scene.gamma(tx.n_elements, rx.n_elements) * h


def build_em_far(
    scene: ChannelScene,
    tx: ArrayGeometry,
    rx: ArrayGeometry,
    dictionary: PatternDictionary,
) -> EmChannel:
    """Far-field EM-domain channel: sum over paths of
    alpha * (a_R kron gbar(aoa)) (a_T kron gbar(aod))^H.

    The gamma normalization is stored on the result and applied only when
    the physical channel is assembled by state selection.
    """
    if scene.regime != "far":
        raise ChannelError("build_em_far requires a far-field scene")
    n = dictionary.n_states
    m = np.zeros((n * rx.n_elements, n * tx.n_elements), dtype=complex)
    for path in _iter_paths(scene):
        u = np.kron(arv(rx, path.aoa), dictionary.vector(path.aoa))
        v = np.kron(arv(tx, path.aod), dictionary.vector(path.aod))
        m += path.gain * np.outer(u, v.conj())
    return EmChannel(
        matrix=m,
        n_states=n,
        n_tx=tx.n_elements,
        n_rx=rx.n_elements,
        gamma=scene.gamma(tx.n_elements, rx.n_elements),
    )


def _selection_indices(sel, n_elements: int, n_states: int) -> np.ndarray:
    idx = np.asarray(getattr(sel, "indices", sel), dtype=int)
    if idx.shape != (n_elements,):
        raise ChannelError(f"selection length {idx.shape} != {n_elements}")
    if np.any(idx < 0) or np.any(idx >= n_states):
        raise ChannelError("selection index out of range")
    return idx


def select_em(em: EmChannel, tx_sel, rx_sel) -> np.ndarray:
    """D @ H_EM @ B^T without the gamma factor (N_R x N_T)."""
    b = _selection_indices(tx_sel, em.n_tx, em.n_states)
    d = _selection_indices(rx_sel, em.n_rx, em.n_states)
    rows = np.arange(em.n_rx) * em.n_states + d
    cols = np.arange(em.n_tx) * em.n_states + b
    return em.matrix[np.ix_(rows, cols)]


def assemble_er(em: EmChannel, tx_sel, rx_sel) -> np.ndarray:
    """Effective reconfigured channel H_ER = gamma * D @ H_EM @ B^T."""
    return em.gamma * select_em(em, tx_sel, rx_sel)


def per_pair_los_params(tx: ArrayGeometry, rx: ArrayGeometry) -> NearLosTable:
    """Free-space per-pair LoS table: |alpha| = lambda / (4 pi d), angles
    from exact pairwise geometry in each array's body frame."""
    pt = tx.element_positions()
    pr = rx.element_positions()
    diff = pr[None, :, :] - pt[:, None, :]  # (n_tx, n_rx, 3)
    dist = np.linalg.norm(diff, axis=-1)
    if np.any(dist == 0):
        raise ChannelError("zero distance between a Tx and an Rx element")
    aod_az, aod_el = tx.angles_to_points(pr)  # (n_tx, n_rx)
    aoa_az, aoa_el = rx.angles_to_points(pt)  # (n_rx, n_tx)
    return NearLosTable(
        alpha=(tx.wavelength / (4 * np.pi * dist)).T,
        distance=dist.T,
        aod_az=aod_az.T,
        aod_el=aod_el.T,
        aoa_az=aoa_az,
        aoa_el=aoa_el,
    )


def build_em_near(
    scene: ChannelScene,
    tx: ArrayGeometry,
    rx: ArrayGeometry,
    dictionary: PatternDictionary,
) -> EmChannel:
    """Near-field (spherical wave) EM-domain channel.

    LoS block (i, j) = alpha_ij exp(-j 2 pi d_ij / lambda)
                       gbar(aoa_ij) gbar(aod_ij)^T,
    plus rank-one scatterer contributions built from per-element spherical
    phases and AoD/AoA.
    """
    if scene.regime != "near":
        raise ChannelError("build_em_near requires a near-field scene")
    if not np.isclose(tx.wavelength, rx.wavelength):
        raise ChannelError("Tx and Rx wavelengths differ")
    lam = tx.wavelength
    n = dictionary.n_states
    n_tx, n_rx = tx.n_elements, rx.n_elements

    los = scene.los_near if scene.los_near is not None else per_pair_los_params(tx, rx)
    amp = np.asarray(los.alpha, dtype=complex) * np.exp(
        -2j * np.pi * np.asarray(los.distance) / lam
    )  # (n_rx, n_tx)
    g_tx = dictionary.gain_matrix(los.aod_az, los.aod_el)  # (N, n_rx, n_tx)
    g_rx = dictionary.gain_matrix(los.aoa_az, los.aoa_el)
    m = np.einsum("ji,aji,bji->jaib", amp, g_rx, g_tx).reshape(n * n_rx, n * n_tx)

    pt = tx.element_positions()
    pr = rx.element_positions()
    for cluster in scene.clusters:
        for sc in cluster:
            r = np.asarray(sc.position, dtype=float)
            d_t = np.linalg.norm(pt - r, axis=1)
            d_r = np.linalg.norm(pr - r, axis=1)
            if np.any(d_t == 0) or np.any(d_r == 0):
                raise ChannelError("zero distance: scatterer coincides with an element")
            az_t, el_t = tx.angles_to_points(r[None, :])
            az_r, el_r = rx.angles_to_points(r[None, :])
            gt = dictionary.gain_matrix(az_t[:, 0], el_t[:, 0])  # (N, n_tx)
            gr = dictionary.gain_matrix(az_r[:, 0], el_r[:, 0])  # (N, n_rx)
            a_t = (
                np.asarray(sc.tx_gains, dtype=complex)
                * np.exp(-2j * np.pi * d_t / lam)
            )[None, :] * gt  # (N, n_tx)
            a_r = (
                np.asarray(sc.rx_gains, dtype=complex)
                * np.exp(-2j * np.pi * d_r / lam)
            )[None, :] * gr
            m += np.outer(a_r.T.ravel(), a_t.T.ravel().conj())
    return EmChannel(
        matrix=m,
        n_states=n,
        n_tx=n_tx,
        n_rx=n_rx,
        gamma=scene.gamma(n_tx, n_rx),
    )


# --- scene serialization (deterministic JSON, complex as [re, im]) ---------


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _angle_dict(a: Angle) -> dict:
    return {"azimuth": a.azimuth, "elevation": a.elevation}


def _path_dict(p: PathFar) -> dict:
    return {"gain": _c(p.gain), "aod": _angle_dict(p.aod), "aoa": _angle_dict(p.aoa)}


def _path_from(d: dict) -> PathFar:
    return PathFar(
        gain=complex(*d["gain"]),
        aod=Angle(**d["aod"]),
        aoa=Angle(**d["aoa"]),
    )


def scene_to_dict(scene: ChannelScene) -> dict:
    doc: dict = {"regime": scene.regime}
    if scene.regime == "far":
        doc["los"] = None if scene.los is None else _path_dict(scene.los)
        doc["clusters"] = [[_path_dict(p) for p in c] for c in scene.clusters]
    else:
        if scene.los_near is None:
            doc["los_near"] = None
        else:
            t = scene.los_near
            doc["los_near"] = {
                "alpha": np.asarray(t.alpha).tolist(),
                "distance": np.asarray(t.distance).tolist(),
                "aod_az": np.asarray(t.aod_az).tolist(),
                "aod_el": np.asarray(t.aod_el).tolist(),
                "aoa_az": np.asarray(t.aoa_az).tolist(),
                "aoa_el": np.asarray(t.aoa_el).tolist(),
            }
        doc["clusters"] = [
            [
                {
                    "position": list(map(float, sc.position)),
                    "tx_gains": [_c(g) for g in sc.tx_gains],
                    "rx_gains": [_c(g) for g in sc.rx_gains],
                }
                for sc in c
            ]
            for c in scene.clusters
        ]
    return doc


def scene_from_dict(doc: dict) -> ChannelScene:
    regime = doc["regime"]
    if regime == "far":
        los = None if doc.get("los") is None else _path_from(doc["los"])
        clusters = tuple(
            tuple(_path_from(p) for p in c) for c in doc.get("clusters", [])
        )
        return ChannelScene(regime="far", los=los, clusters=clusters)
    t = doc.get("los_near")
    los_near = None
    if t is not None:
        los_near = NearLosTable(
            alpha=np.asarray(t["alpha"], dtype=float),
            distance=np.asarray(t["distance"], dtype=float),
            aod_az=np.asarray(t["aod_az"], dtype=float),
            aod_el=np.asarray(t["aod_el"], dtype=float),
            aoa_az=np.asarray(t["aoa_az"], dtype=float),
            aoa_el=np.asarray(t["aoa_el"], dtype=float),
        )
    clusters = tuple(
        tuple(
            ScattererNear(
                position=tuple(sc["position"]),
                tx_gains=tuple(complex(*g) for g in sc["tx_gains"]),
                rx_gains=tuple(complex(*g) for g in sc["rx_gains"]),
            )
            for sc in c
        )
        for c in doc.get("clusters", [])
    )
    return ChannelScene(regime="near", los_near=los_near, clusters=clusters)


def save_scene(scene: ChannelScene, path) -> None:
    with open(path, "w") as fh:
        json.dump(scene_to_dict(scene), fh, sort_keys=True, separators=(",", ":"))


def load_scene(path) -> ChannelScene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))
