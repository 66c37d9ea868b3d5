"""Received power, interference and the four USF/CSF SIRs per UE.

Two code paths share the same formulas: per-UE functions
(:func:`nearest_cells`, :func:`interference_sum`, :func:`compute_sir_bundle`)
and array functions (:func:`macro_field`, :func:`uabs_field`,
:func:`sir_arrays`) that the evaluation and optimization loops use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .deployment import NetworkLayout

__all__ = [
    "DegenerateGeometryError",
    "PowerModel",
    "Subframe",
    "SirBundle",
    "SirArrays",
    "TierField",
    "dbm_to_watts",
    "db_to_linear",
    "linear_to_db",
    "received_power",
    "nearest_cells",
    "interference_sum",
    "compute_sir_bundle",
    "macro_field",
    "uabs_field",
    "sir_arrays",
    "compute_sir_arrays",
]

DEFAULT_SIR_CAP = 1e9
BAND14_DOWNLINK_MHZ = 763.0  # metadata only, the distance-power law has no frequency term
_CHUNK = 4096


class DegenerateGeometryError(ValueError):
    """A UE sits exactly on a transmitter (zero link distance)."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


@dataclass(frozen=True)
class PowerModel:
    """Transmit powers (W), antenna attenuation factors and path-loss exponent."""

    p_mbs: float
    p_uabs: float
    k_mbs: float = 1.0
    k_uabs: float = 1.0
    delta: float = 4.0
    sir_cap: float = DEFAULT_SIR_CAP

    def __post_init__(self):
        if self.p_mbs <= 0 or self.p_uabs <= 0:
            raise ValueError("transmit powers must be positive")
        if not (0 < self.k_mbs <= 1 and 0 < self.k_uabs <= 1):
            raise ValueError("attenuation factors must lie in (0, 1]")
        if self.delta < 2:
            raise ValueError("path-loss exponent must be >= 2")
        if self.sir_cap <= 0:
            raise ValueError("sir_cap must be positive")

    @classmethod
    def from_dbm(cls, p_mbs_dbm: float = 46.0, p_uabs_dbm: float = 30.0, **kwargs) -> "PowerModel":
        return cls(p_mbs=dbm_to_watts(p_mbs_dbm), p_uabs=dbm_to_watts(p_uabs_dbm), **kwargs)

    @property
    def eff_mbs(self) -> float:
        return self.k_mbs * self.p_mbs

    @property
    def eff_uabs(self) -> float:
        return self.k_uabs * self.p_uabs


class Subframe(str, Enum):
    USF = "usf"
    CSF = "csf"


def received_power(effective_power: float, distance: float, delta: float) -> float:
    """Reference-signal power ``P' / d**delta`` at ``distance`` meters."""
    if distance <= 0:
        raise DegenerateGeometryError("zero link distance: UE collocated with a transmitter")
    return effective_power / distance ** delta


def safe_ratio(num, den, cap: float):
    """``num / den`` with a zero denominator mapped to ``cap`` (or 0 if ``num`` is 0)."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    pos = den > 0
    out = np.divide(num, den, out=np.zeros(np.broadcast(num, den).shape), where=pos)
    return np.where(pos, out, np.where(num > 0, cap, 0.0))


def _ratio(num: float, den: float, cap: float) -> float:
    if den > 0:
        return num / den
    return cap if num > 0 else 0.0


# -- per-UE path -------------------------------------------------------------

class NearestCells(NamedTuple):
    moi: Optional[int]
    d_mn: Optional[float]
    uoi: Optional[int]
    d_un: Optional[float]


def _mbs_distance(ue, mbs_xy, mbs_height: float) -> float:
    return math.sqrt((ue[0] - mbs_xy[0]) ** 2 + (ue[1] - mbs_xy[1]) ** 2 + mbs_height ** 2)


def _uabs_distance(ue, uabs_xyz) -> float:
    return math.sqrt((ue[0] - uabs_xyz[0]) ** 2 + (ue[1] - uabs_xyz[1]) ** 2 + uabs_xyz[2] ** 2)


def nearest_cells(ue, layout: NetworkLayout) -> NearestCells:
    """MOI (planar-nearest MBS) and UOI (3D-nearest UABS) for one UE.

    Ties go to the lowest index. Either side is ``None`` when its tier is
    empty.
    """
    if layout.n_mbs == 0 and layout.n_uabs == 0:
        raise ValueError("no serving candidates: layout has neither MBSs nor UABSs")
    moi = d_mn = uoi = d_un = None
    for i, p in enumerate(layout.mbs):
        d = _mbs_distance(ue, p, layout.mbs_height)
        if d_mn is None or d < d_mn:
            moi, d_mn = i, d
    for j, p in enumerate(layout.uabs):
        d = _uabs_distance(ue, p)
        if d_un is None or d < d_un:
            uoi, d_un = j, d
    return NearestCells(moi, d_mn, uoi, d_un)


def interference_sum(ue, layout: NetworkLayout, subframe_class, alpha: float,
                     power_model: PowerModel, exclude: tuple = (None, None)) -> float:
    """Total power at ``ue`` from every cell except the MOI and UOI.

    In CSF each macro interferer is scaled by ``alpha``; aerial interferers
    always transmit at full power.
    """
    subframe_class = Subframe(subframe_class)
    moi, uoi = exclude
    scale = alpha if subframe_class is Subframe.CSF else 1.0
    z = 0.0
    for i, p in enumerate(layout.mbs):
        if i == moi:
            continue
        d = _mbs_distance(ue, p, layout.mbs_height)
        z += scale * received_power(power_model.eff_mbs, d, power_model.delta)
    for j, p in enumerate(layout.uabs):
        if j == uoi:
            continue
        d = _uabs_distance(ue, p)
        z += received_power(power_model.eff_uabs, d, power_model.delta)
    return z


@dataclass(frozen=True)
class SirBundle:
    gamma_usf_moi: float
    gamma_csf_moi: float
    gamma_usf_uoi: float
    gamma_csf_uoi: float
    moi_index: Optional[int]
    uoi_index: Optional[int]


def compute_sir_bundle(ue, layout: NetworkLayout, alpha: float, power_model: PowerModel) -> SirBundle:
    near = nearest_cells(ue, layout)
    pm = power_model
    s_m = 0.0 if near.moi is None else received_power(pm.eff_mbs, near.d_mn, pm.delta)
    s_u = 0.0 if near.uoi is None else received_power(pm.eff_uabs, near.d_un, pm.delta)
    excl = (near.moi, near.uoi)
    z_usf = interference_sum(ue, layout, Subframe.USF, alpha, pm, excl)
    z_csf = interference_sum(ue, layout, Subframe.CSF, alpha, pm, excl)
    cap = pm.sir_cap
    return SirBundle(
        gamma_usf_moi=_ratio(s_m, s_u + z_usf, cap),
        gamma_csf_moi=_ratio(alpha * s_m, s_u + z_csf, cap),
        gamma_usf_uoi=_ratio(s_u, s_m + z_usf, cap),
        gamma_csf_uoi=_ratio(s_u, alpha * s_m + z_csf, cap),
        moi_index=near.moi,
        uoi_index=near.uoi,
    )


# -- array path --------------------------------------------------------------

@dataclass(frozen=True)
class TierField:
    """Per-UE view of one tier: nearest cell, its power, and the rest of the tier.

    ``serving`` is -1 and ``signal``/``interference`` are 0 when the tier is
    empty.
    """

    serving: np.ndarray
    distance: np.ndarray
    signal: np.ndarray
    interference: np.ndarray


def _empty_field(n_ue: int) -> TierField:
    z = np.zeros(n_ue)
    return TierField(np.full(n_ue, -1, dtype=np.intp), np.full(n_ue, np.inf), z, z.copy())


def _path_gain(d2: np.ndarray, delta: float) -> np.ndarray:
    # d**-delta from squared distances; integer exponents avoid the generic pow
    half = delta / 2.0
    if half == 2.0:
        g = d2 * d2
    elif half == int(half):
        g = d2 ** int(half)
    else:
        g = d2 ** half
    return 1.0 / g


def _tier_field(ue: np.ndarray, tx_xy: np.ndarray, tx_height, eff_power: float, delta: float) -> TierField:
    n_ue = len(ue)
    if len(tx_xy) == 0:
        return _empty_field(n_ue)
    serving = np.empty(n_ue, dtype=np.intp)
    dist = np.empty(n_ue)
    sig = np.empty(n_ue)
    intf = np.empty(n_ue)
    h2 = np.asarray(tx_height, dtype=float) ** 2
    tx_x = tx_xy[None, :, 0]
    tx_y = tx_xy[None, :, 1]
    for lo in range(0, n_ue, _CHUNK):
        blk = ue[lo:lo + _CHUNK]
        dx = blk[:, 0:1] - tx_x
        dy = blk[:, 1:2] - tx_y
        d2 = dx * dx + dy * dy + h2
        if not (d2 > 0).all():
            raise DegenerateGeometryError("zero link distance: UE collocated with a transmitter")
        k = np.argmin(d2, axis=1)
        rows = np.arange(len(blk))
        p = eff_power * _path_gain(d2, delta)
        sl = slice(lo, lo + len(blk))
        serving[sl] = k
        dist[sl] = np.sqrt(d2[rows, k])
        sig[sl] = p[rows, k]
        p[rows, k] = 0.0
        intf[sl] = p.sum(axis=1)
    return TierField(serving, dist, sig, intf)


def macro_field(layout: NetworkLayout, power_model: PowerModel) -> TierField:
    return _tier_field(layout.ue, layout.mbs, layout.mbs_height, power_model.eff_mbs, power_model.delta)


def uabs_field(ue: np.ndarray, uabs: np.ndarray, power_model: PowerModel) -> TierField:
    uabs = np.asarray(uabs, dtype=float).reshape(-1, 3)
    return _tier_field(ue, uabs[:, :2], uabs[:, 2][None, :], power_model.eff_uabs, power_model.delta)


@dataclass(frozen=True)
class SirArrays:
    gamma: np.ndarray
    gamma_csf: np.ndarray
    gamma_p: np.ndarray
    gamma_p_csf: np.ndarray
    moi: np.ndarray
    uoi: np.ndarray

    def bundle(self, n: int) -> SirBundle:
        return SirBundle(
            float(self.gamma[n]), float(self.gamma_csf[n]),
            float(self.gamma_p[n]), float(self.gamma_p_csf[n]),
            None if self.moi[n] < 0 else int(self.moi[n]),
            None if self.uoi[n] < 0 else int(self.uoi[n]),
        )


def sir_arrays(macro: TierField, aerial: TierField, alpha: float, cap: float = DEFAULT_SIR_CAP) -> SirArrays:
    s_m, s_u = macro.signal, aerial.signal
    z_usf = macro.interference + aerial.interference
    z_csf = alpha * macro.interference + aerial.interference
    return SirArrays(
        gamma=safe_ratio(s_m, s_u + z_usf, cap),
        gamma_csf=safe_ratio(alpha * s_m, s_u + z_csf, cap),
        gamma_p=safe_ratio(s_u, s_m + z_usf, cap),
        gamma_p_csf=safe_ratio(s_u, alpha * s_m + z_csf, cap),
        moi=macro.serving,
        uoi=aerial.serving,
    )


def compute_sir_arrays(layout: NetworkLayout, alpha: float, power_model: PowerModel) -> SirArrays:
    """SIR bundle of every UE in ``layout`` at once."""
    if layout.n_mbs == 0 and layout.n_uabs == 0:
        raise ValueError("no serving candidates: layout has neither MBSs nor UABSs")
    macro = macro_field(layout, power_model)
    aerial = uabs_field(layout.ue, layout.uabs, power_model)
    return sir_arrays(macro, aerial, alpha, power_model.sir_cap)
