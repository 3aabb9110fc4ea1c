"""Probing the convergence domain of the truncated tree expansion.

A scan evaluates the expansion on a grid of ``g = |g| e^{2 i gamma}`` and
records per cell the convergence flag, the last increment ratio, the
quadrature error and, where ``Re g >= 0``, the gap to the exact oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import MLVEError
from .lve import DEFAULT_ATOL, DEFAULT_RTOL, LVE_WSCHEME, cumulant_lve
from .model import DEFAULT_RHO, CouplingPoint, ExternalMomenta, SliceConfig
from .oracle import cumulant_oracle
from .replica import GaussScheme

COLUMNS = ("modulus", "gamma", "g_re", "g_im", "in_cardioid", "status", "converged",
           "resolved", "last_ratio", "value_re", "value_im", "error", "quadrature_error",
           "oracle_re", "oracle_im", "oracle_gap", "oracle_consistent")


def parse_grid(spec: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {spec!r} is not start:step:stop")
        start, step, stop = (float(x) for x in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"grid {spec!r} needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    return [float(x) for x in spec.split(",") if x.strip()]


@dataclass
class ScanTable:
    sc: SliceConfig
    momenta: tuple[int, ...]
    n_max: int
    rho: float
    rows: list[dict] = field(default_factory=list)

    def flags(self) -> dict[tuple[float, float], bool]:
        return {(r["modulus"], r["gamma"]): r["converged"] for r in self.rows}

    def decided(self) -> dict[tuple[float, float], bool]:
        """Cells whose flag is trustworthy: resolved, or failed with a definite error."""
        return {(r["modulus"], r["gamma"]): bool(r["resolved"]) or not r["status"].startswith("ok")
                for r in self.rows}

    def empirical_rho(self) -> tuple[float, bool]:
        """``min_gamma  |g|_conv(gamma) / cos^2 gamma``.

        ``|g|_conv`` is the largest modulus up to which every cell at that
        angle converged.  Angles with ``cos gamma = 0`` are skipped.  The
        second value is True when some angle converged up to the grid edge,
        in which case the estimate is limited by the grid.
        """
        by_angle: dict[float, list[dict]] = {}
        for r in self.rows:
            by_angle.setdefault(r["gamma"], []).append(r)
        best, limited = math.inf, False
        for gamma, rows in by_angle.items():
            c2 = math.cos(gamma) ** 2
            if c2 < 1e-12:
                continue
            rows = sorted(rows, key=lambda r: r["modulus"])
            reach = 0.0
            for r in rows:
                if not r["converged"]:
                    break
                reach = r["modulus"]
            if reach == rows[-1]["modulus"]:
                limited = True
            best = min(best, reach / c2)
        return (best if best < math.inf else 0.0), limited


def scan_cell(cp: CouplingPoint, sc: SliceConfig, pm: ExternalMomenta, n_max: int,
              gauss: GaussScheme, wscheme, oracle: bool, threads: int | None,
              rtol: float | None, atol: float) -> dict:
    row = {c: "" for c in COLUMNS}
    row.update(g_re=cp.g.real, g_im=cp.g.imag, in_cardioid=cp.in_cardioid,
               converged=False, resolved=False)
    try:
        res = cumulant_lve(cp, sc, pm, n_max, gauss, wscheme, threads, rtol=rtol, atol=atol)
    except MLVEError as exc:
        row["status"] = type(exc).__name__
        return row
    inc = [abs(d) for d in res.increments]
    row.update(status="ok", converged=bool(res.converged),
               resolved=bool(res.quadrature_error < (inc[-1] if inc else 0.0)
                             or res.quadrature_error == 0.0),
               last_ratio=(inc[-1] / inc[-2]) if len(inc) > 1 and inc[-2] > 0 else "",
               value_re=res.value.real, value_im=res.value.imag, error=res.error,
               quadrature_error=res.quadrature_error)
    if oracle and cp.g.real >= 0:
        try:
            o, oerr = cumulant_oracle(cp, sc, pm, with_error=True)
        except MLVEError as exc:
            row["status"] = f"ok;oracle:{type(exc).__name__}"
            return row
        gap = abs(res.value - o)
        row.update(oracle_re=o.real, oracle_im=o.imag, oracle_gap=gap,
                   oracle_consistent=bool(gap <= res.error + oerr))
    return row


def cardioid_scan(sc: SliceConfig, pm: ExternalMomenta, moduli: Iterable[float],
                  angles: Iterable[float], n_max: int = 3, rho: float = DEFAULT_RHO,
                  gauss: GaussScheme = GaussScheme(), wscheme=LVE_WSCHEME, oracle: bool = True,
                  threads: int | None = None, rtol: float | None = DEFAULT_RTOL,
                  atol: float = DEFAULT_ATOL) -> ScanTable:
    """One row per ``(|g|, gamma)`` cell, moduli varying fastest within an angle."""
    table = ScanTable(sc, pm.momenta, n_max, rho)
    for gamma in angles:
        for modulus in moduli:
            cp = CouplingPoint.from_polar(modulus, gamma, rho)
            row = scan_cell(cp, sc, pm, n_max, gauss, wscheme, oracle, threads, rtol, atol)
            row.update(modulus=modulus, gamma=gamma)
            table.rows.append(row)
    return table


@dataclass
class UniformityReport:
    tables: dict[tuple[int, int], ScanTable]
    compared: int
    excluded: int
    mismatches: list[tuple[float, float]]
    half_pi_converged: list[tuple[int, int, float]]

    @property
    def uniform(self) -> bool:
        return not self.mismatches

    @property
    def half_pi_never_converges(self) -> bool:
        return not self.half_pi_converged


def uniformity_probe(moduli: Sequence[float], angles: Sequence[float], M: int = 2,
                     j_max_values: Sequence[int] = (2, 3), n_max: int = 3,
                     gauss: GaussScheme = GaussScheme(), wscheme=LVE_WSCHEME,
                     threads: int | None = None) -> UniformityReport:
    """Compare convergence flags across ``p_1 in {1, N/2, N}`` and across ``j_max``.

    Flags are compared on cells decided in every run (quadrature error below
    the last increment, or a definite failure such as a branch cut); the
    others are counted as excluded.
    """
    tables = {}
    for j_max in j_max_values:
        sc = SliceConfig(M, j_max)
        for p1 in sorted({1, sc.N // 2, sc.N}):
            tables[j_max, p1] = cardioid_scan(sc, ExternalMomenta([p1]), moduli, angles, n_max,
                                              gauss=gauss, wscheme=wscheme, oracle=False,
                                              threads=threads)
    cells = list(next(iter(tables.values())).flags())
    compared, excluded, mismatches = 0, 0, []
    for cell in cells:
        if all(t.decided()[cell] for t in tables.values()):
            compared += 1
            if len({t.flags()[cell] for t in tables.values()}) > 1:
                mismatches.append(cell)
        else:
            excluded += 1
    half_pi = [(j, p, cell[0]) for (j, p), t in tables.items() for cell, f in t.flags().items()
               if f and abs(abs(cell[1]) - math.pi / 2) < 1e-12]
    return UniformityReport(tables, compared, excluded, mismatches, half_pi)


def angle_grid_with_boundary(angles: Sequence[float]) -> list[float]:
    """Append ``pi/2`` so every scan probes the closed end of the cardioid."""
    out = list(angles)
    if not any(abs(a - math.pi / 2) < 1e-12 for a in out):
        out.append(math.pi / 2)
    return out


def as_matrix(table: ScanTable, column: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(moduli, angles, values)`` with values shaped ``(angles, moduli)``."""
    moduli = sorted({r["modulus"] for r in table.rows})
    angles = sorted({r["gamma"] for r in table.rows})
    vals = np.full((len(angles), len(moduli)), np.nan)
    for r in table.rows:
        v = r[column]
        if v == "":
            continue
        vals[angles.index(r["gamma"]), moduli.index(r["modulus"])] = float(v)
    return np.array(moduli), np.array(angles), vals
