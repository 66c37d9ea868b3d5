"""CRE-biased cell selection, USF/CSF scheduling and spectral efficiency."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Sequence

import numpy as np

from .deployment import NetworkLayout
from .radio import PowerModel, SirArrays, SirBundle, compute_sir_arrays, db_to_linear

__all__ = [
    "IcicMode",
    "IcicConfig",
    "UeClass",
    "UeAssignment",
    "ScheduleCounts",
    "NetworkEvaluation",
    "assign_ue",
    "assign_classes",
    "tally_counts",
    "ue_spectral_efficiency",
    "fifth_percentile_se",
    "evaluate_network",
    "evaluate_sir",
]


class IcicMode(str, Enum):
    NONE = "none"
    EICIC = "eicic"
    FEICIC = "feicic"

    @property
    def fixed_alpha(self):
        """Power reduction factor imposed by the mode, ``None`` for FeICIC."""
        return {IcicMode.NONE: 1.0, IcicMode.EICIC: 0.0}.get(self)


@dataclass(frozen=True)
class IcicConfig:
    """Shared ICIC parameters, all linear.

    Use :meth:`from_db` to build one from dB-valued thresholds and bias.
    """

    mode: IcicMode
    alpha: float
    rho: float
    rho_prime: float
    tau: float
    beta: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "mode", IcicMode(self.mode))
        fixed = self.mode.fixed_alpha
        if fixed is not None and self.alpha != fixed:
            raise ValueError(f"alpha must be {fixed} in mode {self.mode.value!r}, got {self.alpha}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        for name in ("rho", "rho_prime", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be a positive linear ratio")

    @classmethod
    def from_db(cls, mode, tau_db: float = 0.0, alpha: float | None = None,
                rho_db: float = 30.0, rho_prime_db: float = -15.0, beta: float = 0.5) -> "IcicConfig":
        mode = IcicMode(mode)
        if alpha is None:
            alpha = mode.fixed_alpha if mode.fixed_alpha is not None else 0.5
        return cls(mode=mode, alpha=float(alpha), rho=db_to_linear(rho_db),
                   rho_prime=db_to_linear(rho_prime_db), tau=db_to_linear(tau_db), beta=beta)


class UeClass(IntEnum):
    USF_MUE = 0
    CSF_MUE = 1
    USF_UUE = 2
    CSF_UUE = 3

    @property
    def tier(self) -> str:
        return "moi" if self < 2 else "uoi"

    @property
    def subframe(self) -> str:
        return "usf" if self in (UeClass.USF_MUE, UeClass.USF_UUE) else "csf"


@dataclass(frozen=True)
class UeAssignment:
    ue: int
    ue_class: UeClass
    cell: int
    sir_used: float

    @property
    def tier(self) -> str:
        return self.ue_class.tier

    @property
    def subframe(self) -> str:
        return self.ue_class.subframe


def _select(gamma, gamma_p, icic: IcicConfig):
    to_mbs = gamma > icic.tau * gamma_p
    if np.ndim(to_mbs) == 0:
        if to_mbs:
            return UeClass.USF_MUE if gamma <= icic.rho else UeClass.CSF_MUE
        return UeClass.USF_UUE if gamma_p > icic.rho_prime else UeClass.CSF_UUE
    return np.where(
        to_mbs,
        np.where(gamma <= icic.rho, UeClass.USF_MUE, UeClass.CSF_MUE),
        np.where(gamma_p > icic.rho_prime, UeClass.USF_UUE, UeClass.CSF_UUE),
    ).astype(np.int8)


def assign_ue(bundle: SirBundle, icic: IcicConfig, ue: int = 0) -> UeAssignment:
    """Cell selection and subframe class for one UE.

    The MOI wins only if ``Γ > τΓ'``; a tie goes to the UOI.
    """
    c = UeClass(_select(bundle.gamma_usf_moi, bundle.gamma_usf_uoi, icic))
    sir = (bundle.gamma_usf_moi, bundle.gamma_csf_moi, bundle.gamma_usf_uoi, bundle.gamma_csf_uoi)[c]
    cell = bundle.moi_index if c.tier == "moi" else bundle.uoi_index
    if cell is None:
        raise ValueError(f"UE {ue} assigned to an empty tier")
    return UeAssignment(ue=ue, ue_class=c, cell=cell, sir_used=sir)


def assign_classes(sir: SirArrays, icic: IcicConfig) -> np.ndarray:
    """Vector form of :func:`assign_ue`: class code per UE."""
    return _select(sir.gamma, sir.gamma_p, icic)


@dataclass
class ScheduleCounts:
    """Number of UEs per (cell, class); index arrays by cell id."""

    usf_mbs: np.ndarray
    csf_mbs: np.ndarray
    usf_uabs: np.ndarray
    csf_uabs: np.ndarray

    def for_class(self, c: UeClass) -> np.ndarray:
        return (self.usf_mbs, self.csf_mbs, self.usf_uabs, self.csf_uabs)[c]

    def totals(self) -> tuple[int, int, int, int]:
        return tuple(int(a.sum()) for a in (self.usf_mbs, self.csf_mbs, self.usf_uabs, self.csf_uabs))


def _counts_from_arrays(classes: np.ndarray, cells: np.ndarray, n_mbs: int, n_uabs: int) -> ScheduleCounts:
    out = []
    for c in UeClass:
        n_cells = n_mbs if c.tier == "moi" else n_uabs
        sel = cells[classes == c]
        out.append(np.bincount(sel, minlength=n_cells).astype(np.int64))
    return ScheduleCounts(*out)


def tally_counts(assignments: Sequence[UeAssignment], layout: NetworkLayout) -> ScheduleCounts:
    classes = np.array([a.ue_class for a in assignments], dtype=np.int8)
    cells = np.array([a.cell for a in assignments], dtype=np.intp)
    for a in assignments:
        limit = layout.n_mbs if a.tier == "moi" else layout.n_uabs
        if not 0 <= a.cell < limit:
            raise ValueError(f"UE {a.ue} references unknown {a.tier} cell {a.cell}")
    return _counts_from_arrays(classes, cells, layout.n_mbs, layout.n_uabs)


def ue_spectral_efficiency(assignment: UeAssignment, counts: ScheduleCounts, icic: IcicConfig) -> float:
    """Round-robin share of ``log2(1 + SIR)`` for one UE, in bps/Hz.

    Macro classes carry the duty-cycle factor (β for USF, 1-β for CSF);
    aerial classes do not.
    """
    c = assignment.ue_class
    n = int(counts.for_class(c)[assignment.cell])
    assert n >= 1, "UE's own cell/class count must include the UE"
    share = {UeClass.USF_MUE: icic.beta, UeClass.CSF_MUE: 1.0 - icic.beta}.get(c, 1.0)
    return share * math.log2(1.0 + assignment.sir_used) / n


def fifth_percentile_se(se_values) -> float:
    """Nearest-rank 5th percentile: the ``ceil(0.05 N)``-th smallest value."""
    se = np.asarray(se_values, dtype=float).ravel()
    n = se.size
    if n == 0:
        raise ValueError("cannot take a percentile of an empty list")
    k = (n + 19) // 20  # ceil(n / 20) without float rounding
    return float(np.partition(se, k - 1)[k - 1])


@dataclass
class NetworkEvaluation:
    se_5pct: float
    se: np.ndarray
    classes: np.ndarray
    cells: np.ndarray
    sir_used: np.ndarray
    counts: ScheduleCounts

    @property
    def assignments(self) -> list[UeAssignment]:
        return [UeAssignment(i, UeClass(int(c)), int(k), float(s))
                for i, (c, k, s) in enumerate(zip(self.classes, self.cells, self.sir_used))]

    def class_totals(self) -> tuple[int, int, int, int]:
        return tuple(int(x) for x in np.bincount(self.classes, minlength=4))


def evaluate_sir(sir: SirArrays, icic: IcicConfig, n_mbs: int, n_uabs: int) -> NetworkEvaluation:
    """Association, scheduling and SE for precomputed SIR arrays."""
    classes = assign_classes(sir, icic)
    is_mue = classes < 2
    cells = np.where(is_mue, sir.moi, sir.uoi)
    if (cells < 0).any():
        raise ValueError("UE assigned to an empty tier")
    counts = _counts_from_arrays(classes, cells, n_mbs, n_uabs)

    sir_table = np.stack([sir.gamma, sir.gamma_csf, sir.gamma_p, sir.gamma_p_csf])
    rows = np.arange(classes.size)
    sir_used = sir_table[classes, rows]
    share = np.array([icic.beta, 1.0 - icic.beta, 1.0, 1.0])[classes]
    n_own = np.empty(classes.size, dtype=np.int64)
    for c in UeClass:
        m = classes == c
        n_own[m] = counts.for_class(c)[cells[m]]
    se = share * np.log2(1.0 + sir_used) / n_own
    return NetworkEvaluation(fifth_percentile_se(se), se, classes, cells, sir_used, counts)


def evaluate_network(layout: NetworkLayout, icic: IcicConfig, power_model: PowerModel) -> NetworkEvaluation:
    """5pSE of ``layout`` under ``icic``, with per-UE SE and assignments."""
    layout.validate()
    sir = compute_sir_arrays(layout, icic.alpha, power_model)
    return evaluate_sir(sir, icic, layout.n_mbs, layout.n_uabs)
