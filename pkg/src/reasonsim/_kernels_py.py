"""Pure-Python kernels; the fallback when the compiled extension is absent.

The lattice search performs the same floating-point operations in the same
order as the compiled version and returns identical results. The QP solver
factorizes with LAPACK here and with a hand-written Cholesky there, so the
two agree only to rounding.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

ARMIJO = 0.1
STEP_DEC = 0.6
MIN_STEP = 1e-22


def _objective(H, g, x):
    return 0.5 * float(x @ (H @ x)) + float(g @ x)


def kkt_residual(H, g, lower, upper, x) -> float:
    grad = g + H @ x
    return float(np.max(np.abs(x - np.clip(x - grad, lower, upper)), initial=0.0))


def solve_box_qp(H, g, lower, upper, x0, tol=1e-8, max_iter=100):
    """Minimize 0.5 x'Hx + g'x subject to lower <= x <= upper.

    Projected Newton: Newton step on the free variables, Armijo search
    along the projected arc. Returns ``(x, iterations, residual, converged)``
    where residual is the inf-norm of the projected gradient.
    """
    H = np.asarray(H, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    x = np.clip(np.asarray(x0, dtype=np.float64), lower, upper)
    value = _objective(H, g, x)
    it = 0
    while True:
        grad = g + H @ x
        res = float(np.max(np.abs(x - np.clip(x - grad, lower, upper)), initial=0.0))
        if res <= tol:
            return x, it, res, True
        if it >= max_iter:
            return x, it, res, False
        clamped = ((x <= lower) & (grad > 0)) | ((x >= upper) & (grad < 0))
        free = ~clamped
        Hff = H[np.ix_(free, free)]
        rhs = g[free] + H[np.ix_(free, clamped)] @ x[clamped]
        try:
            chol = np.linalg.cholesky(Hff)
        except np.linalg.LinAlgError:
            return x, it, res, False
        z = np.linalg.solve(chol, rhs)
        xf = -np.linalg.solve(chol.T, z)
        search = np.zeros_like(x)
        search[free] = xf - x[free]
        sdotg = float(search @ grad)
        if sdotg >= 0.0:
            return x, it, res, False
        step = 1.0
        xc = np.clip(x + step * search, lower, upper)
        vc = _objective(H, g, xc)
        while (vc - value) > ARMIJO * step * sdotg:
            step *= STEP_DEC
            if step < MIN_STEP:
                return x, it, res, False
            xc = np.clip(x + step * search, lower, upper)
            vc = _objective(H, g, xc)
        x, value = xc, vc
        it += 1


def lattice_astar(
    nx, ny, nh, nk, ox, oy, res,
    end_dix, end_diy, end_ih, prim_k, prim_len, sdx, sdy, kappa,
    fx0, fy0, fres, pen, prohibited, blocked,
    w1, w2, w3, w4,
    six, siy, sih, sik, gx, gy, gtol, max_expansions,
):
    """A* over (ix, iy, heading, incoming-curvature) lattice states.

    Returns ``(cost, states, prims, expansions)``; ``cost`` is inf when the
    goal disc is unreachable. States are flat indices
    ``((ih * ny + iy) * nx + ix) * nk + ik``.
    """
    n_prims = end_dix.shape[1]
    n_samples = sdx.shape[2]
    fny, fnx = pen.shape
    n_states = nx * ny * nh * nk
    gcost = [math.inf] * n_states
    parent = [-1] * n_states
    parent_prim = [-1] * n_states
    closed = bytearray(n_states)

    end_dix = end_dix.tolist()
    end_diy = end_diy.tolist()
    end_ih = end_ih.tolist()
    prim_k = prim_k.tolist()
    prim_len = prim_len.tolist()
    sdx = sdx.tolist()
    sdy = sdy.tolist()
    kappa = kappa.tolist()
    pen_l = pen.tolist()
    proh_l = prohibited.tolist()
    blk_l = blocked.tolist()

    def heuristic(px, py):
        dx = px - gx
        dy = py - gy
        d = math.sqrt(dx * dx + dy * dy) - gtol
        return w1 * d if d > 0.0 else 0.0

    s0 = ((sih * ny + siy) * nx + six) * nk + sik
    gcost[s0] = 0.0
    h0 = heuristic(ox + six * res, oy + siy * res)
    heap = [(h0, h0, 0, s0)]
    seq = 1
    expansions = 0
    while heap:
        f, h, _, s = heapq.heappop(heap)
        if closed[s]:
            continue
        closed[s] = 1
        ik = s % nk
        rest = s // nk
        ix = rest % nx
        rest //= nx
        iy = rest % ny
        ih = rest // ny
        px = ox + ix * res
        py = oy + iy * res
        dx = px - gx
        dy = py - gy
        if math.sqrt(dx * dx + dy * dy) <= gtol:
            return _unwind(gcost[s], s, parent, parent_prim, expansions)
        expansions += 1
        if expansions > max_expansions:
            break
        g_here = gcost[s]
        k_prev = kappa[ik]
        for p in range(n_prims):
            jx = ix + end_dix[ih][p]
            jy = iy + end_diy[ih][p]
            if jx < 0 or jx >= nx or jy < 0 or jy >= ny:
                continue
            pen_sum = 0.0
            proh_cnt = 0
            feasible = True
            row_dx = sdx[ih][p]
            row_dy = sdy[ih][p]
            for q in range(n_samples):
                cx = math.floor((px + row_dx[q] - fx0) / fres)
                cy = math.floor((py + row_dy[q] - fy0) / fres)
                if cx < 0 or cx >= fnx or cy < 0 or cy >= fny or blk_l[cy][cx]:
                    feasible = False
                    break
                pen_sum += pen_l[cy][cx]
                proh_cnt += proh_l[cy][cx]
            if not feasible:
                continue
            kp = prim_k[ih][p]
            cost = w1 * prim_len[ih][p] + w2 * abs(kappa[kp] - k_prev) + w3 * pen_sum + w4 * proh_cnt
            jh = end_ih[ih][p]
            t = ((jh * ny + jy) * nx + jx) * nk + kp
            if closed[t]:
                continue
            g_new = g_here + cost
            if g_new < gcost[t]:
                gcost[t] = g_new
                parent[t] = s
                parent_prim[t] = p
                ht = heuristic(ox + jx * res, oy + jy * res)
                heapq.heappush(heap, (g_new + ht, ht, seq, t))
                seq += 1
    return math.inf, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int32), expansions


def _unwind(cost, s, parent, parent_prim, expansions):
    states = [s]
    prims = []
    while parent[s] >= 0:
        prims.append(int(parent_prim[s]))
        s = int(parent[s])
        states.append(s)
    states.reverse()
    prims.reverse()
    return float(cost), np.array(states, dtype=np.int64), np.array(prims, dtype=np.int32), expansions
