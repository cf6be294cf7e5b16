"""Seeded Rician channel realizations for the BS-RIS-UE uplink.

The BS is a ULA, the RIS a UPA with the horizontal index running fastest.
NLOS components are spatially correlated on the RIS side only, using a
Gaussian local-scattering model in the azimuth domain; the BS side is i.i.d.
All outputs are in linear units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ris_sesd.errors import ConfigError, NumericError

__all__ = [
    "SystemDimensions",
    "ChannelParams",
    "Scenario",
    "ula_response",
    "upa_response",
    "local_scattering_correlation",
    "ris_correlation",
    "psd_sqrt",
    "pathloss_db",
    "db_to_linear",
    "dbm_to_watts",
    "sample_ris_bs_channel",
    "sample_ue_ris_channel",
    "sample_scenario",
]

PSD_TOL = 1e-10


@dataclass(frozen=True)
class SystemDimensions:
    M: int = 10
    N_h: int = 8
    N_v: int = 8
    K: int = 6
    q: int = 1

    def __post_init__(self):
        for name in ("M", "N_h", "N_v", "K", "q"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")

    @property
    def N(self) -> int:
        return self.N_h * self.N_v

    @classmethod
    def for_ris_size(cls, N: int, **kwargs) -> "SystemDimensions":
        """Dimensions with an 8-wide RIS of ``N`` elements (N=64 -> 8x8, N=32 -> 8x4)."""
        n_h = kwargs.pop("N_h", 8)
        if N < 1 or N % n_h:
            raise ConfigError(f"N={N} is not a multiple of N_h={n_h}")
        return cls(N_h=n_h, N_v=N // n_h, **kwargs)


@dataclass(frozen=True)
class ChannelParams:
    kappa_H: float = 5.0
    kappa_g: float = 5.0
    d_H: float = 20.0
    ue_distance_range: tuple[float, float] = (20.0, 40.0)
    theta_aoa_bs: float = np.pi / 6
    aod_azimuth: float = -np.pi / 3
    aod_elevation: float = np.pi / 6
    ue_azimuth_range: tuple[float, float] = (-np.pi / 3, np.pi / 3)
    ue_elevation_range: tuple[float, float] = (-np.pi / 6, 0.0)
    ris_spacing: float = 0.25
    bs_spacing: float = 0.5
    asd: float = np.deg2rad(15.0)
    sigma2_dbm: float = -160.0
    p_dbm: tuple[float, ...] = (20.0,)

    def __post_init__(self):
        if self.kappa_H < 0 or self.kappa_g < 0:
            raise ConfigError("Rician factors must be >= 0")
        if self.d_H <= 0:
            raise ConfigError("d_H must be > 0")
        lo, hi = self.ue_distance_range
        if not 0 < lo <= hi:
            raise ConfigError(f"ue_distance_range must satisfy 0 < lo <= hi, got {self.ue_distance_range}")
        for name in ("ue_azimuth_range", "ue_elevation_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} must satisfy lo <= hi")
        if self.ris_spacing <= 0 or self.bs_spacing <= 0:
            raise ConfigError("element spacings must be > 0")
        if self.asd <= 0:
            raise ConfigError("asd must be > 0")
        if len(self.p_dbm) == 0:
            raise ConfigError("p_dbm must list one power per UE")

    def powers_for(self, K: int) -> np.ndarray:
        """Per-UE powers in dBm; a single entry is broadcast to all ``K`` UEs."""
        p = np.asarray(self.p_dbm, dtype=float)
        if p.size == 1:
            return np.full(K, p[0])
        if p.size != K:
            raise ConfigError(f"p_dbm has {p.size} entries but K={K}")
        return p


@dataclass(frozen=True)
class Scenario:
    """One channel realization. ``G[k] = H @ diag(g[k])``, shape (K, M, N)."""

    H: np.ndarray
    g: np.ndarray
    G: np.ndarray
    p_lin: np.ndarray
    sigma2_lin: float

    @property
    def M(self) -> int:
        return self.H.shape[0]

    @property
    def N(self) -> int:
        return self.H.shape[1]

    @property
    def K(self) -> int:
        return self.g.shape[0]

    @classmethod
    def from_channels(cls, H, g, p_lin, sigma2_lin) -> "Scenario":
        H = np.asarray(H, dtype=complex)
        g = np.atleast_2d(np.asarray(g, dtype=complex))
        p_lin = np.atleast_1d(np.asarray(p_lin, dtype=float))
        if g.shape[1] != H.shape[1] or p_lin.shape != (g.shape[0],):
            raise ConfigError("inconsistent scenario shapes")
        if np.any(p_lin < 0) or not sigma2_lin > 0:
            raise ConfigError("powers must be >= 0 and noise power > 0")
        G = H[None, :, :] * g[:, None, :]
        return cls(H=H, g=g, G=G, p_lin=p_lin, sigma2_lin=float(sigma2_lin))

    def with_powers(self, p_lin) -> "Scenario":
        return Scenario.from_channels(self.H, self.g, p_lin, self.sigma2_lin)

    def fingerprint(self) -> str:
        """Short hash of H and g; equal fingerprints mean identical channels."""
        import hashlib

        h = hashlib.sha1()
        h.update(np.ascontiguousarray(self.H).tobytes())
        h.update(np.ascontiguousarray(self.g).tobytes())
        return h.hexdigest()[:16]


def ula_response(angle: float, count: int, spacing: float) -> np.ndarray:
    m = np.arange(count)
    return np.exp(1j * 2 * np.pi * spacing * m * np.sin(angle))


def upa_response(azimuth: float, elevation: float, n_h: int, n_v: int, spacing: float) -> np.ndarray:
    """Planar steering vector, horizontal index fastest.

    Entry ``v * n_h + h`` has phase
    ``2*pi*spacing*(h*sin(az)*cos(el) + v*sin(el))``.
    """
    h = np.tile(np.arange(n_h), n_v)
    v = np.repeat(np.arange(n_v), n_h)
    phase = h * np.sin(azimuth) * np.cos(elevation) + v * np.sin(elevation)
    return np.exp(1j * 2 * np.pi * spacing * phase)


def _gaussian_scattering(u: np.ndarray, w: np.ndarray, asd: float) -> np.ndarray:
    # element phase u_i + w_i * delta with delta ~ N(0, asd^2)
    du = u[:, None] - u[None, :]
    dw = w[:, None] - w[None, :]
    R = np.exp(1j * du) * np.exp(-0.5 * asd**2 * dw**2)
    _check_psd(R)
    return R


def _check_psd(R: np.ndarray) -> None:
    lam_min = np.linalg.eigvalsh(R).min()
    if lam_min < -PSD_TOL * max(1.0, R.shape[0]):
        raise NumericError(f"correlation matrix not PSD (min eigenvalue {lam_min:.3e})")


def local_scattering_correlation(nominal_azimuth: float, asd: float, count: int, spacing: float) -> np.ndarray:
    """Gaussian local-scattering correlation of a ULA (closed form)."""
    if asd <= 0 or count < 1:
        raise ConfigError("asd must be > 0 and count >= 1")
    m = np.arange(count)
    k = 2 * np.pi * spacing * m
    return _gaussian_scattering(k * np.sin(nominal_azimuth), k * np.cos(nominal_azimuth), asd)


def ris_correlation(azimuth: float, elevation: float, asd: float, n_h: int, n_v: int, spacing: float) -> np.ndarray:
    """Azimuth-domain local scattering around the RIS UPA.

    Same construction as :func:`local_scattering_correlation`, with the
    phase of each element linearised in azimuth around the nominal
    direction. Reduces to the ULA form for ``n_v == 1`` and zero elevation.
    """
    if asd <= 0:
        raise ConfigError("asd must be > 0")
    h = np.tile(np.arange(n_h), n_v)
    v = np.repeat(np.arange(n_v), n_h)
    k = 2 * np.pi * spacing
    u = k * (h * np.sin(azimuth) * np.cos(elevation) + v * np.sin(elevation))
    w = k * h * np.cos(azimuth) * np.cos(elevation)
    return _gaussian_scattering(u, w, asd)


def psd_sqrt(R: np.ndarray) -> np.ndarray:
    """Hermitian square root with negative eigenvalues clipped to zero."""
    lam, U = np.linalg.eigh(R)
    lam = np.clip(lam, 0.0, None)
    return (U * np.sqrt(lam)) @ U.conj().T


def pathloss_db(distance: float) -> float:
    """Path loss at 3 GHz, ``-37.5 - 22 log10(d / 1 m)`` dB."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ConfigError("distance must be > 0")
    return -37.5 - 22.0 * np.log10(distance)


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def dbm_to_watts(value_dbm):
    return 10.0 ** ((np.asarray(value_dbm, dtype=float) - 30.0) / 10.0)


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _rician_mix(kappa: float, los: np.ndarray, nlos: np.ndarray) -> np.ndarray:
    return np.sqrt(kappa / (kappa + 1.0)) * los + np.sqrt(1.0 / (kappa + 1.0)) * nlos


def sample_ris_bs_channel(dims: SystemDimensions, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Draw the M x N BS-RIS channel ``H``."""
    r_bs = ula_response(params.theta_aoa_bs, dims.M, params.bs_spacing)
    r_ris = upa_response(params.aod_azimuth, params.aod_elevation, dims.N_h, dims.N_v, params.ris_spacing)
    h_los = np.outer(r_bs, r_ris)
    C = ris_correlation(params.aod_azimuth, params.aod_elevation, params.asd, dims.N_h, dims.N_v, params.ris_spacing)
    h_nlos = _cn(rng, (dims.M, dims.N)) @ psd_sqrt(C)
    beta = db_to_linear(pathloss_db(params.d_H))
    return np.sqrt(beta) * _rician_mix(params.kappa_H, h_los, h_nlos)


def sample_ue_ris_channel(
    dims: SystemDimensions, params: ChannelParams, ue_index: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``g_k``; distance and angles are sampled from ``rng`` first.

    ``ue_index`` only labels the draw; the stream position decides the value.
    """
    del ue_index
    d = rng.uniform(*params.ue_distance_range)
    az = rng.uniform(*params.ue_azimuth_range)
    el = rng.uniform(*params.ue_elevation_range)
    los = upa_response(az, el, dims.N_h, dims.N_v, params.ris_spacing)
    C = ris_correlation(az, el, params.asd, dims.N_h, dims.N_v, params.ris_spacing)
    nlos = psd_sqrt(C) @ _cn(rng, dims.N)
    beta = db_to_linear(pathloss_db(d))
    return np.sqrt(beta) * _rician_mix(params.kappa_g, los, nlos)


def sample_scenario(dims: SystemDimensions, params: ChannelParams, rng: np.random.Generator) -> Scenario:
    H = sample_ris_bs_channel(dims, params, rng)
    g = np.stack([sample_ue_ris_channel(dims, params, k, rng) for k in range(dims.K)])
    p_lin = dbm_to_watts(params.powers_for(dims.K))
    return Scenario.from_channels(H, g, p_lin, float(dbm_to_watts(params.sigma2_dbm)))
