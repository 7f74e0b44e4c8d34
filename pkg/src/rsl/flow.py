"""Spectral flow of one-parameter operator families and eigenvalue branch tracking.

Sign convention: each eigenvalue moving from negative to positive as the
parameter increases contributes +1.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._util import sup_norm, worker_count
from .errors import BranchMatchingError
from .operator import OperatorCoefficients, constant_operator
from .spectral import discretize, eigensolve

EDGE_MARGIN = 1.0


@dataclass(frozen=True)
class OperatorFamily:
    s0: float
    s1: float
    generator: Callable[[float], OperatorCoefficients]
    kind: str = "synthetic"
    N: Optional[int] = None
    """Discretization size (defaults to the generated operator's sample count)."""

    def reversed(self) -> "OperatorFamily":
        return OperatorFamily(self.s1, self.s0, self.generator, self.kind, self.N)

    def grid(self, grid_N: int) -> np.ndarray:
        return self.s0 + (self.s1 - self.s0) * np.arange(grid_N + 1) / grid_N

    def eigenvalues(self, s: float, window: float) -> np.ndarray:
        return self.node(s, window)[0]

    def node(self, s: float, window: float):
        """Eigenvalues in the window and the coefficient samples at parameter s."""
        op = self.generator(float(s))
        disc = discretize(op, N=self.N)
        return eigensolve(disc, window, method="lapack").mus, op.S


def synthetic_family(S_of_s: Callable[[float], np.ndarray], s0: float, s1: float,
                     N: int = 64) -> OperatorFamily:
    """Family with prescribed (constant-in-t) coefficient matrices S(s)."""
    return OperatorFamily(s0, s1, lambda s: constant_operator(S_of_s(s), N), "synthetic", N)


def j_path_family(op: OperatorCoefficients, B, s0: float, s1: float) -> OperatorFamily:
    """J-path s -> A(J_s) through the compatible retraction in direction B."""
    from .perturb import perturbed_operator

    return OperatorFamily(s0, s1, lambda s: perturbed_operator(op, B, s), "J_path")


@dataclass
class FlowResult:
    crossings: List[Tuple[float, int, int]] = field(default_factory=list)
    net_flow: int = 0
    branches: List[Tuple[float, int, float]] = field(default_factory=list)
    grid: Optional[np.ndarray] = None
    negative_counts: Tuple[int, int] = (0, 0)
    edge_flux: int = 0
    conservation_ok: bool = True

    def as_dict(self) -> dict:
        return {
            "crossings": [{"s": s, "direction": d, "multiplicity": m} for s, d, m in self.crossings],
            "net_flow": self.net_flow,
            "negative_counts": list(self.negative_counts),
            "edge_flux": self.edge_flux,
            "conservation_ok": self.conservation_ok,
        }


def _solve_nodes(family: OperatorFamily, grid: np.ndarray, window: float):
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        out = list(pool.map(lambda s: family.node(s, window), grid))
    nodes = [mus for mus, _ in out]
    bounds = [_coefficient_jump(a, b) for (_, a), (_, b) in zip(out[:-1], out[1:])]
    return nodes, bounds


def _coefficient_jump(Sa: np.ndarray, Sb: np.ndarray) -> float:
    if Sa.shape != Sb.shape:
        n = min(Sa.shape[0], Sb.shape[0])
        Sa, Sb = Sa[:: Sa.shape[0] // n], Sb[:: Sb.shape[0] // n]
    return sup_norm(Sb - Sa)


def _match(a: np.ndarray, b: np.ndarray, bound: float, tol: float):
    """Nearest-neighbour assignment a -> b; flags links breaking Weyl's bound.

    Consecutive discrete operators differ by a multiplication operator of
    norm ``bound``, so a correct link never moves by more than that; a
    larger jump means two branches were confused (grid too coarse).
    """
    if a.size == 0 or b.size == 0:
        return [], False
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    jumps = np.abs(a[rows] - b[cols])
    ambiguous = bool(np.any(jumps > bound + tol * (1.0 + np.abs(a[rows]))))
    return list(zip(rows.tolist(), cols.tolist())), ambiguous


def _link(nodes, bounds, track_window, tol):
    """Chain per-node eigenvalues into branches; returns (links, ambiguous).

    Eigenvalues within ``bound`` of the tracking edge may legitimately have no
    partner and are left unlinked.
    """
    links = []
    amb = False
    for a, b, bound in zip(nodes[:-1], nodes[1:], bounds):
        ia = np.nonzero(np.abs(a) <= track_window)[0]
        ib = np.nonzero(np.abs(b) <= track_window + bound)[0]
        pairs, bad = _match(a[ia], b[ib], bound, tol)
        amb |= bad
        links.append([(int(ia[i]), int(ib[j])) for i, j in pairs])
    return links, amb


def _nearest(values: np.ndarray, target: float) -> float:
    return float(values[np.argmin(np.abs(values - target))])


def _locate(family, lo, hi, mlo, mhi, level, window, tol, iters=40):
    """Bisect a branch crossing of ``level`` between parameters lo and hi."""
    for _ in range(iters):
        if abs(hi - lo) <= tol * max(1.0, abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        guess = mlo + (mhi - mlo) * 0.5
        mm = _nearest(family.eigenvalues(mid, window), guess)
        if (mm - level) * (mlo - level) > 0:
            lo, mlo = mid, mm
        else:
            hi, mhi = mid, mm
    return 0.5 * (lo + hi)


def spectral_flow(family: OperatorFamily, window: float, grid_N: int = 32,
                  tol: float = 1e-8, _refined: bool = False) -> FlowResult:
    """Signed count of zero crossings along the family.

    Eigenvalues are computed on a uniform parameter grid (in parallel),
    linked into branches by optimal nearest-neighbour assignment, and each
    sign change of a branch is localized by bisection in s. The direction is
    the sign of a centered-difference slope at the crossing; coincident
    crossings are merged with their multiplicity.
    """
    grid = family.grid(grid_N)
    track = window + EDGE_MARGIN
    nodes, bounds = _solve_nodes(family, grid, track + EDGE_MARGIN)
    for end in (nodes[0], nodes[-1]):
        if np.any(np.abs(end) <= tol) or np.any(np.abs(np.abs(end) - window) <= tol):
            raise ValueError("endpoint eigenvalue within tol of 0 or of the window edge")
    links, amb = _link(nodes, bounds, track, tol)
    if amb:
        if _refined:
            raise BranchMatchingError("adjacent branches too close to match after refinement")
        return spectral_flow(family, window, 2 * grid_N, tol, _refined=True)

    raw = []
    edge = 0
    for j, pairs in enumerate(links):
        a, b = nodes[j], nodes[j + 1]
        for ia, ib in pairs:
            ma, mb = a[ia], b[ib]
            if ma < 0 <= mb or mb < 0 <= ma:
                s_star = _locate(family, grid[j], grid[j + 1], ma, mb, 0.0, track + EDGE_MARGIN, tol)
                delta = max(1e-6 * abs(grid[j + 1] - grid[j]), 10 * tol)
                ev_p = family.eigenvalues(s_star + delta, track + EDGE_MARGIN)
                ev_m = family.eigenvalues(s_star - delta, track + EDGE_MARGIN)
                slope = (_nearest(ev_p, 0.0) - _nearest(ev_m, 0.0)) / (2 * delta)
                if slope == 0.0:
                    slope = mb - ma
                raw.append((float(s_star), 1 if slope * (grid[j + 1] - grid[j]) > 0 else -1))
            if ma < -window <= mb:
                edge += 1
            elif mb < -window <= ma:
                edge -= 1

    raw.sort()
    merged: List[Tuple[float, int, int]] = []
    for s_star, d in raw:
        if merged and abs(merged[-1][0] - s_star) <= 1e3 * tol * max(1.0, abs(s_star)) \
                and merged[-1][1] == d:
            s_prev, _, m = merged[-1]
            merged[-1] = (s_prev, d, m + 1)
        else:
            merged.append((s_star, d, 1))
    net = sum(d * m for _, d, m in merged)

    neg0 = int(np.sum((nodes[0] < 0) & (nodes[0] >= -window)))
    neg1 = int(np.sum((nodes[-1] < 0) & (nodes[-1] >= -window)))
    ok = net == neg0 - neg1 + edge
    branches = _branch_rows(grid, nodes, links, window)
    return FlowResult(merged, net, branches, grid, (neg0, neg1), edge, ok)


def _branch_rows(grid, nodes, links, window):
    rows = []
    ids = {}
    nxt = 0
    for i, mu in enumerate(nodes[0]):
        if abs(mu) <= window:
            ids[i] = nxt
            nxt += 1
    for j in range(len(grid)):
        for i, bid in sorted(ids.items(), key=lambda kv: kv[1]):
            rows.append((float(grid[j]), bid, float(nodes[j][i])))
        if j == len(grid) - 1:
            break
        new = {}
        for ia, ib in links[j]:
            if abs(nodes[j + 1][ib]) > window:
                continue
            if ia in ids:
                new[ib] = ids[ia]
        for ib, mu in enumerate(nodes[j + 1]):
            if abs(mu) <= window and ib not in new:
                new[ib] = nxt
                nxt += 1
        ids = new
    return rows


def track_branches(family: OperatorFamily, window: float, grid_N: int = 32,
                   tol: float = 1e-8) -> dict:
    """Branch table rows (s, branch, mu) plus a Lipschitz continuity check.

    Consecutive values on a branch may differ by at most sup|S(s_j+1) - S(s_j)|
    (Weyl's inequality), up to a small discretization slack.
    """
    grid = family.grid(grid_N)
    nodes, bounds = _solve_nodes(family, grid, window + 2 * EDGE_MARGIN)
    links, amb = _link(nodes, bounds, window + EDGE_MARGIN, tol)
    if amb:
        raise BranchMatchingError("adjacent branches too close to match")
    rows = _branch_rows(grid, nodes, links, window)
    last = {}
    worst = 0.0
    for s, bid, mu in rows:
        if bid in last:
            j = int(np.argmin(np.abs(grid - s)))
            excess = abs(mu - last[bid]) - bounds[j - 1]
            worst = max(worst, excess)
        last[bid] = mu
    return {"rows": rows, "lipschitz_ok": bool(worst <= 1e-6), "lipschitz_excess": float(worst)}


def write_branch_csv(rows, path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "branch", "mu"])
        for s, bid, mu in rows:
            w.writerow([format(s, ".17g"), bid, format(mu, ".17g")])
