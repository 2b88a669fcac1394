"""Numba-compiled training kernels.

These replay the exact decision stream of the reference loops in
`trainer` (same LCG, same draw order, same update rule), run at C speed,
and release the GIL so lock-free multi-worker training actually runs in
parallel. Importing this module requires numba; `trainer` falls back to
the pure loops when the import fails.
"""

import math

import numpy as np
from numba import njit

LCG_MUL = np.uint64(6364136223846793005)
LCG_INC = np.uint64(1442695040888963407)
SHIFT32 = np.uint64(32)
TWO32 = 4294967296.0


@njit(cache=True, nogil=True)
def _ns_step(out, table, u, grad, target, negatives, lr, rows, coeffs, state):
    """Negative-sampling step core: draw negatives, compute loss and the
    gradient on u against entry values, update the output rows. Input-row
    updates are the caller's job (composition weights differ by mode).
    Returns (loss, state, ok)."""
    tsize = np.uint64(table.shape[0])
    rows[0] = target
    for k in range(1, negatives + 1):
        while True:
            state = state * LCG_MUL + LCG_INC
            w = table[(state >> SHIFT32) % tsize]
            if w != target:
                break
        rows[k] = w
    dim = u.shape[0]
    loss = 0.0
    for k in range(negatives + 1):
        r = rows[k]
        dot = 0.0
        for d in range(dim):
            dot += u[d] * out[r, d]
        if not math.isfinite(dot):
            return 0.0, state, False
        if dot >= 0.0:
            e = math.exp(-dot)
            p = 1.0 / (1.0 + e)
            softplus_pos = dot + math.log1p(e)
            softplus_neg = math.log1p(e)
        else:
            e = math.exp(dot)
            p = e / (1.0 + e)
            softplus_pos = math.log1p(e)
            softplus_neg = -dot + math.log1p(e)
        if k == 0:
            loss += softplus_neg
            coeffs[k] = (1.0 - p) * lr
        else:
            loss += softplus_pos
            coeffs[k] = -p * lr
    for d in range(dim):
        grad[d] = 0.0
    for k in range(negatives + 1):
        r = rows[k]
        g = coeffs[k]
        for d in range(dim):
            grad[d] += g * out[r, d]
    for k in range(negatives + 1):
        r = rows[k]
        g = coeffs[k]
        for d in range(dim):
            out[r, d] += g * u[d]
    return loss, state, True


@njit(cache=True, nogil=True)
def train_chunk(tokens, offsets, s_lo, s_hi, cum_tokens, total_tokens,
                epoch, epochs, inp, out, table, keep, window, negatives,
                initial_lr, cbow, ng_rows, ng_off, state, max_sentence, max_comp):
    """Train on sentences [s_lo, s_hi). Returns (loss_sum, positions, err):
    err is -1 on success, otherwise the position count at which a
    non-finite dot product appeared."""
    window_u = np.uint64(window)
    dim = inp.shape[1]
    u = np.zeros(dim, dtype=np.float64)
    grad = np.zeros(dim, dtype=np.float64)
    rows = np.zeros(negatives + 1, dtype=np.int64)
    coeffs = np.zeros(negatives + 1, dtype=np.float64)
    comp_rows = np.zeros(max_comp, dtype=np.int64)
    comp_w = np.zeros(max_comp, dtype=np.float64)
    reduced = np.zeros(max_sentence, dtype=np.int64)
    denom = float(epochs) * float(total_tokens)
    total_loss = 0.0
    positions = 0
    for s in range(s_lo, s_hi):
        progress = (float(epoch) * float(total_tokens) + float(cum_tokens[s])) / denom
        decay = 1.0 - progress
        if decay < 1e-4:
            decay = 1e-4
        lr = initial_lr * decay
        # per-occurrence subsampling of frequent words
        m = 0
        for i in range(offsets[s], offsets[s + 1]):
            w = tokens[i]
            p = keep[w]
            if p < 1.0:
                state = state * LCG_MUL + LCG_INC
                if float(state >> SHIFT32) / TWO32 >= p:
                    continue
            reduced[m] = w
            m += 1
        for pos in range(m):
            state = state * LCG_MUL + LCG_INC
            b = 1 + int((state >> SHIFT32) % window_u)
            lo = pos - b
            if lo < 0:
                lo = 0
            hi = pos + b + 1
            if hi > m:
                hi = m
            if hi - lo - 1 <= 0:
                continue
            if cbow == 1:
                center = reduced[pos]
                inv = 1.0 / (hi - lo - 1)
                ncomp = 0
                for d in range(dim):
                    u[d] = 0.0
                for cpos in range(lo, hi):
                    if cpos == pos:
                        continue
                    c = reduced[cpos]
                    g0 = ng_off[c]
                    g1 = ng_off[c + 1]
                    wt = inv / (1.0 + (g1 - g0))
                    comp_rows[ncomp] = c
                    comp_w[ncomp] = wt
                    ncomp += 1
                    for d in range(dim):
                        u[d] += wt * inp[c, d]
                    for j in range(g0, g1):
                        rr = ng_rows[j]
                        comp_rows[ncomp] = rr
                        comp_w[ncomp] = wt
                        ncomp += 1
                        for d in range(dim):
                            u[d] += wt * inp[rr, d]
                loss, state, ok = _ns_step(out, table, u, grad, center,
                                           negatives, lr, rows, coeffs, state)
                if not ok:
                    return total_loss, positions, positions
                for ci in range(ncomp):
                    rr = comp_rows[ci]
                    wt = comp_w[ci]
                    for d in range(dim):
                        inp[rr, d] += wt * grad[d]
                total_loss += loss
                positions += 1
            else:
                center = reduced[pos]
                g0 = ng_off[center]
                g1 = ng_off[center + 1]
                wt = 1.0 / (1.0 + (g1 - g0))
                for cpos in range(lo, hi):
                    if cpos == pos:
                        continue
                    target = reduced[cpos]
                    # recompose: the center rows may have just been updated
                    ncomp = 0
                    comp_rows[0] = center
                    comp_w[0] = wt
                    ncomp = 1
                    for d in range(dim):
                        u[d] = wt * inp[center, d]
                    for j in range(g0, g1):
                        rr = ng_rows[j]
                        comp_rows[ncomp] = rr
                        comp_w[ncomp] = wt
                        ncomp += 1
                        for d in range(dim):
                            u[d] += wt * inp[rr, d]
                    loss, state, ok = _ns_step(out, table, u, grad, target,
                                               negatives, lr, rows, coeffs, state)
                    if not ok:
                        return total_loss, positions, positions
                    for ci in range(ncomp):
                        rr = comp_rows[ci]
                        wtc = comp_w[ci]
                        for d in range(dim):
                            inp[rr, d] += wtc * grad[d]
                    total_loss += loss
                positions += 1
    return total_loss, positions, -1
