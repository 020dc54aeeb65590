"""Placement optimizers.

Three entry points:

* ``coverage_range`` -- how far one AP-IRS pair extends the SNR-threshold
  coverage radius when the surface sits at distance l on the AP-UE axis.

* ``line_search`` -- exhaustive max-min optimization over ring radii on a
  uniform grid and integer IRS splits, for a fixed ring count I.  The power
  split never has to be searched: every region's frame energy is linear in
  the common SNR threshold, so the optimal ratios are closed-form for each
  candidate placement and maximizing throughput reduces to minimizing the
  summed energy coefficients.

* ``algorithm1`` -- the fast constructive heuristic: fill the near-AP circle
  first, then lay rings inward with equal-interval tentative radii, sizing
  each ring so one sector carries the per-IRS UE cap.

The enumeration's hot loop amortizes sector energy integrals through a
per-configuration coefficient table (fixed 16-point tensor quadrature over
the half sector, batched over candidate inner radii) and re-derives the
winning configuration through the adaptive-quadrature contract path before
returning it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .channel import IrsSpec, RadioConfig, composite_stats_arrays
from .geometry import CellConfig, RingPlan, make_ring_plan, validate_plan
from .numerics import bisect, get_tail_quantile
from .powerctl import (PowerAllocation, ap_annulus_coefficient,
                       ap_region_coefficient, equalize_power,
                       irs_region_coefficient)


class PlanInfeasibleError(RuntimeError):
    """No feasible placement; .bindings lists the constraints that bit."""

    def __init__(self, bindings):
        super().__init__("no feasible placement: " + "; ".join(bindings))
        self.bindings = list(bindings)


@dataclass(frozen=True)
class SearchGrid:
    radius_step: float = 5.0    # ring-radius grid pitch [m]
    rho_step: float = 0.05      # kept for compatibility; the power split is
                                # closed-form, so no rho grid is ever scanned
    I_max: int = 3
    R_in0_search: bool = False  # also search the exterior boundary R_in[0]

    def __post_init__(self):
        if self.radius_step <= 0 or not (0 < self.rho_step < 1) or self.I_max < 1:
            raise ValueError("SearchGrid: invalid field values")


@dataclass(frozen=True)
class CoverageResult:
    r_star: float
    limited: bool = False  # threshold unreachable even at the closest point


@dataclass(frozen=True)
class PlanResult:
    plan: RingPlan
    allocation: PowerAllocation
    nu_bar: float
    method: str
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# coverage-range study
# ---------------------------------------------------------------------------

def coverage_range(cfg: RadioConfig, irs: IrsSpec, p, gamma_thresh,
                   l: Optional[float] = None) -> CoverageResult:
    """Maximum AP-UE distance meeting mean-SNR threshold gamma_thresh.

    Without an IRS the mean SNR is p g_d(r) / W and the radius is closed-form.
    With an IRS at AP distance l (surface on the AP-UE axis, d = r - l), the
    mean channel power E{Z^2} replaces g_d and the radius is bisected on
    [l, 10 x no-IRS radius].
    """
    if p <= 0 or gamma_thresh <= 0:
        raise ValueError("coverage_range: p and gamma_thresh must be positive")
    arg = (p * cfg.alpha0 / (cfg.W * gamma_thresh)) ** (2.0 / cfg.n0) - cfg.H_A ** 2
    if arg <= 0.0:
        direct = CoverageResult(r_star=0.0, limited=True)
    else:
        direct = CoverageResult(r_star=math.sqrt(arg), limited=False)
    if l is None:
        return direct

    l = float(l)
    if l < 0:
        raise ValueError("coverage_range: l must be nonnegative")

    def margin(r):
        mean, _, _, _ = composite_stats_arrays(cfg, irs, r, l, r - l)
        return p * float(mean) / cfg.W - gamma_thresh

    if margin(l) < 0.0:
        return CoverageResult(r_star=l, limited=True)
    hi = max(10.0 * direct.r_star, 2.0 * l + 1.0)
    for _ in range(8):  # the mean gain decays like r^-n0, so this terminates
        if margin(hi) < 0.0:
            break
        hi *= 2.0
    r_star = bisect(margin, l, hi)
    return CoverageResult(r_star=r_star, limited=False)


# ---------------------------------------------------------------------------
# ring-coefficient table for the enumeration loops
# ---------------------------------------------------------------------------

class _RingCoefficientTable:
    """Cached per-ring energy coefficients on a fixed radius grid.

    ``ring_vec(hi_idx, m, near_ap)`` returns the coefficient of a ring
    [radii[lo], radii[hi]] with m surfaces for every lo < hi at once, using
    a 16-point tensor Gauss-Legendre rule over the half sector (doubled by
    mirror symmetry).  near_ap selects the L = L_min circle of ring 1; other
    rings take the annulus mid-radius.
    """

    NODES = 16

    def __init__(self, cell, cfg, irs, p_no, step):
        self.cell = cell
        self.cfg = cfg
        self.irs = irs
        self.p_no = p_no
        self.radii = np.arange(0.0, cell.R_ex + 0.5 * step, step)
        if abs(self.radii[-1] - cell.R_ex) > 1e-9:
            self.radii = np.append(self.radii, cell.R_ex)
        self.quantile = get_tail_quantile(p_no)
        x, w = np.polynomial.legendre.leggauss(self.NODES)
        self._glx = x
        self._glw = w
        e = 0.5 * (cfg.n0 + 2.0)
        f0 = ((self.radii ** 2 + cfg.H_A ** 2) ** e - cfg.H_A ** (cfg.n0 + 2.0)) / (cfg.n0 + 2.0)
        self.c0_grid = (2.0 * math.pi * cell.ue_density * cfg.W * cfg.t0 * f0
                        / (cfg.alpha0 * math.log(1.0 / p_no)))
        self._cache = {}

    def max_span2(self, m):
        """Largest hi^2 - lo^2 a ring of m surfaces may cover under the load cap."""
        return self.cell.K_irs_max * m / (self.cell.ue_density * math.pi)

    def ring_vec(self, hi_idx, m, near_ap):
        key = (int(hi_idx), int(m), bool(near_ap))
        got = self._cache.get(key)
        if got is not None:
            return got
        cfg = self.cfg
        hi = self.radii[hi_idx]
        lo = self.radii[:hi_idx]  # candidate inner radii
        half = math.pi / m        # half sector angle
        r_hat = 0.5 * (hi + lo)[:, None] + 0.5 * (hi - lo)[:, None] * self._glx[None, :]
        r_w = 0.5 * (hi - lo)[:, None] * self._glw[None, :]
        az = 0.5 * half + 0.5 * half * self._glx
        az_w = 0.5 * half * self._glw
        if near_ap:
            L = np.full((hi_idx, 1, 1), self.cell.L_min)
        else:
            L = (0.5 * (hi + lo))[:, None, None]
        rr = r_hat[:, :, None]
        d = np.sqrt(rr ** 2 + L ** 2 - 2.0 * rr * L * np.cos(az[None, None, :]))
        _, _, alpha, beta = composite_stats_arrays(cfg, self.irs, rr, L, d)
        vals = beta / self.quantile(alpha.ravel()).reshape(alpha.shape)
        F = 2.0 * np.einsum("bi,j,bij->b", r_w * r_hat, az_w, vals)
        C = m * self.cell.ue_density * cfg.W * cfg.t0 * F
        self._cache[key] = C
        return C


_TABLE_CACHE: dict[tuple, _RingCoefficientTable] = {}


def _coefficient_table(cell, cfg, irs, p_no, step) -> _RingCoefficientTable:
    key = (cell, cfg, irs.N, float(p_no), float(step))
    table = _TABLE_CACHE.get(key)
    if table is None:
        table = _RingCoefficientTable(cell, cfg, irs, p_no, step)
        _TABLE_CACHE[key] = table
    return table


# ---------------------------------------------------------------------------
# exhaustive line search at fixed ring count
# ---------------------------------------------------------------------------

def _finalize(cell, cfg, irs, p_no, R_in, M, method, diagnostics=None) -> PlanResult:
    """Re-derive a candidate through the adaptive contract path and package it."""
    plan = make_ring_plan(cell, R_in, M)
    coeffs = [ap_region_coefficient(cfg, cell, p_no, plan.R_in[-1])]
    if plan.R_in[0] < cell.R_ex - 1e-12:
        coeffs[0] = replace(coeffs[0], C=coeffs[0].C + ap_annulus_coefficient(
            cfg, cell, p_no, plan.R_in[0], cell.R_ex))
    for i in range(1, plan.I + 1):
        coeffs.append(irs_region_coefficient(cfg, cell, irs, plan, i, p_no))
    alloc = equalize_power(coeffs, cfg, p_no)
    plan = replace(plan, rho=alloc.rho)
    violations = validate_plan(cell, plan, total_irs=sum(M))
    if violations:
        raise AssertionError(f"{method} produced an invalid plan: {violations}")
    diag = dict(diagnostics or {})
    diag["region_coefficients_J"] = {c.region: c.C for c in coeffs}
    return PlanResult(plan=plan, allocation=alloc, nu_bar=alloc.nu_bar,
                      method=method, diagnostics=diag)


def line_search(cell: CellConfig, cfg: RadioConfig, irs: IrsSpec, M, I,
                grid: SearchGrid = SearchGrid(), p_no=0.95) -> PlanResult:
    """Exhaustive search over ring radii (grid) and IRS splits with <= I rings.

    A split that leaves a ring empty is the same deployment as one with fewer
    rings, so the enumeration runs every ring count from 1 up to I and keeps
    the overall winner.  Maximizing the common throughput is equivalent to
    minimizing the summed region energy coefficients, so the scan tracks
    coefficient sums; ties within 1e-9 relative prefer the smaller outermost
    inner radius R_in[1].  Raises PlanInfeasibleError when no assignment
    satisfies the near-AP slot limit and per-sector load cap.
    """
    M = int(M)
    I = int(I)
    if M < 1 or I < 1:
        raise ValueError("line_search: M >= 1 and I >= 1 required")
    if cell.M1_max < 1:
        raise PlanInfeasibleError(["no near-AP slots available (M1_max = 0)"])

    table = _coefficient_table(cell, cfg, irs, p_no, grid.radius_step)
    radii = table.radii
    n = len(radii)
    if grid.R_in0_search:
        r0_candidates = [i for i in range(1, n)]
    else:
        r0_candidates = [n - 1]

    best = {"cost": math.inf, "R": None, "M": None, "r1": math.inf}

    def consider(cost, R_idx, Ms):
        r1 = radii[R_idx[1]]
        if (cost < best["cost"] * (1.0 - 1e-9)
                or (abs(cost - best["cost"]) <= 1e-9 * best["cost"] and r1 < best["r1"] - 1e-12)):
            best.update(cost=cost, R=[radii[j] for j in R_idx], M=list(Ms), r1=r1)

    for I_run in range(1, min(I, M) + 1):
        for r0_idx in r0_candidates:
            # AP cost of an open exterior annulus (zero when R_in[0] = R_ex)
            annulus = table.c0_grid[n - 1] - table.c0_grid[r0_idx]

            def descend(ring, hi_idx, m_left, acc, R_idx, Ms):
                deeper = I_run - ring  # rings still to place after this one
                m_cap = min(cell.M1_max, m_left - deeper) if ring == 1 else m_left - deeper
                if ring == I_run:
                    m = m_left
                    if ring == 1 and m > cell.M1_max:
                        return
                    vec = table.ring_vec(hi_idx, m, near_ap=(ring == 1))
                    lo_ok = radii[hi_idx] ** 2 - radii[:hi_idx] ** 2 <= table.max_span2(m) * (1 + 1e-12)
                    if not lo_ok.any():
                        return
                    cost_vec = acc + vec + table.c0_grid[:hi_idx]
                    cost_vec = np.where(lo_ok, cost_vec, math.inf)
                    k = int(np.argmin(cost_vec))
                    consider(float(cost_vec[k]), R_idx + [k], Ms + [m])
                    return
                for m in range(1, m_cap + 1):
                    span2 = table.max_span2(m)
                    lo_min_sq = radii[hi_idx] ** 2 - span2
                    vec = None
                    # deeper rings need `deeper` strictly descending indices below
                    # lo_idx (the innermost may reach index 0); spans grow as lo
                    # falls, so the load cap cuts the scan off monotonically
                    for lo_idx in range(hi_idx - 1, deeper - 1, -1):
                        if radii[lo_idx] ** 2 < lo_min_sq * (1 - 1e-12):
                            break
                        if vec is None:
                            vec = table.ring_vec(hi_idx, m, near_ap=(ring == 1))
                        descend(ring + 1, lo_idx, m_left - m, acc + vec[lo_idx],
                                R_idx + [lo_idx], Ms + [m])

            descend(1, r0_idx, M, annulus, [r0_idx], [])

    if best["R"] is None:
        raise PlanInfeasibleError([
            "per-sector load cap and near-AP slot limit exclude every split "
            f"of M={M} over ring counts 1..{I} on the {grid.radius_step:g} m grid"])
    return _finalize(cell, cfg, irs, p_no, best["R"], best["M"], "line-search",
                     {"grid_step_m": grid.radius_step, "searched_R_in0": grid.R_in0_search})


# ---------------------------------------------------------------------------
# constructive heuristic
# ---------------------------------------------------------------------------

def algorithm1(cell: CellConfig, cfg: RadioConfig, irs: IrsSpec, M, I_max,
               p_no=0.95) -> PlanResult:
    """Fast ring construction: near-AP circle first, then equal-interval rings.

    For M <= M1_max every surface sits on the near-AP circle and serves an
    outermost ring sized to the per-sector cap.  Otherwise ring 1 takes all
    M1_max near-AP slots and, for each candidate ring count, the remaining
    surfaces fill rings laid inward from equal-interval tentative radii, each
    ring sized so one sector carries the cap; the best ring count wins.  The
    integer rounding of ring sizes is repaired against the remaining budget
    (never starving a deeper ring, last ring absorbs the remainder).
    """
    M = int(M)
    if M < 1:
        raise ValueError("algorithm1: M >= 1 required")
    if cell.M1_max < 1:
        raise PlanInfeasibleError(["no near-AP slots available (M1_max = 0)"])
    lam = cell.ue_density
    cap_area = cell.K_irs_max / lam  # sector area at the UE cap

    if M <= cell.M1_max:
        inner_sq = cell.R_ex ** 2 - M * cap_area / math.pi
        R1 = math.sqrt(max(inner_sq, 0.0))
        return _finalize(cell, cfg, irs, p_no, [cell.R_ex, R1], [M], "algorithm1",
                         {"I_candidates": [1]})

    if I_max < 2:
        raise PlanInfeasibleError([
            f"M={M} exceeds the near-AP slots (M1_max={cell.M1_max}) and "
            f"I_max={I_max} forbids deeper rings"])

    best = None
    tried = []
    R1 = math.sqrt(max(cell.R_ex ** 2 - cell.M1_max * cap_area / math.pi, 0.0))
    for I in range(2, I_max + 1):
        budget = M - cell.M1_max
        if budget < I - 1:
            continue
        tried.append(I)
        total_area = M * cap_area
        if total_area >= math.pi * cell.R_ex ** 2:
            R_target = 0.0
            kbar_rest = lam * math.pi * R1 ** 2 / (M - cell.M1_max)
        else:
            R_target = math.sqrt(cell.R_ex ** 2 - total_area / math.pi)
            kbar_rest = cell.K_irs_max
        area_rest = kbar_rest / lam
        Rs = [cell.R_ex, R1]
        Ms = [cell.M1_max]
        r_prev = R1
        for i in range(2, I + 1):
            delta = (r_prev - R_target) / (I - i + 1)
            r_tent = r_prev - delta
            need = math.ceil(lam * math.pi * (r_prev ** 2 - r_tent ** 2) / kbar_rest - 1e-9)
            if i < I:
                m_i = max(1, min(need, budget - (I - i)))
            else:
                m_i = budget
            r_i = math.sqrt(max(r_prev ** 2 - m_i * area_rest / math.pi, 0.0))
            Rs.append(r_i)
            Ms.append(m_i)
            budget -= m_i
            r_prev = r_i
        result = _finalize(cell, cfg, irs, p_no, Rs, Ms, "algorithm1", {})
        if best is None or result.nu_bar > best.nu_bar * (1.0 + 1e-9):
            best = result
    if best is None:
        raise PlanInfeasibleError([
            f"budget M-M1_max={M - cell.M1_max} cannot populate any ring count "
            f"2..{I_max} with at least one surface per ring"])
    best.diagnostics["I_candidates"] = tried
    return best
