"""NumPy reference implementations of the hot kernels.

These are the import-time fallback when the compiled extension is not
available, and the ground truth the compiled kernels are tested against.
Signatures must stay in lockstep with ``_fast.pyx``.
"""

import numpy as np

# head modes for mlp_forward1
HEAD_LINEAR = 0
HEAD_TANH = 1
HEAD_GAUSSIAN = 2

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0

_EPS_T = 1e-12  # slack on ray parameter sign and segment extent


def raycast(px, py, angles, seg_table, arc_table, max_range):
    """Distance from (px, py) along each angle to the first boundary hit.

    seg_table rows: x0, y0, tx, ty, length (tx, ty unit tangent).
    arc_table rows: cx, cy, radius, ang0, sweep (sweep signed, radians).
    Rays that hit nothing are capped at max_range.
    """
    angles = np.asarray(angles, dtype=np.float64)
    dx = np.cos(angles)
    dy = np.sin(angles)
    best = np.full(angles.shape[0], max_range, dtype=np.float64)

    if seg_table.shape[0]:
        ax = seg_table[:, 0]
        ay = seg_table[:, 1]
        ex = seg_table[:, 2]
        ey = seg_table[:, 3]
        ln = seg_table[:, 4]
        # solve origin + t*d == a + u*e for each (ray, segment) pair
        denom = dx[:, None] * ey[None, :] - dy[:, None] * ex[None, :]
        rx = ax[None, :] - px
        ry = ay[None, :] - py
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (rx * ey[None, :] - ry * ex[None, :]) / denom
            u = (rx * dy[:, None] - ry * dx[:, None]) / denom
        ok = (
            (np.abs(denom) > 1e-15)
            & (t >= -_EPS_T)
            & (u >= -1e-9)
            & (u <= ln[None, :] + 1e-9)
        )
        t = np.where(ok, np.maximum(t, 0.0), np.inf)
        best = np.minimum(best, t.min(axis=1, initial=np.inf))

    if arc_table.shape[0]:
        cx = arc_table[:, 0]
        cy = arc_table[:, 1]
        rad = arc_table[:, 2]
        ang0 = arc_table[:, 3]
        sweep = arc_table[:, 4]
        ox = px - cx[None, :]
        oy = py - cy[None, :]
        b = dx[:, None] * ox + dy[:, None] * oy
        c = ox * ox + oy * oy - (rad * rad)[None, :]
        disc = b * b - c
        has = disc >= 0.0
        root = np.sqrt(np.where(has, disc, 0.0))
        for sign in (-1.0, 1.0):
            t = -b + sign * root
            hx = px + t * dx[:, None] - cx[None, :]
            hy = py + t * dy[:, None] - cy[None, :]
            phi = np.arctan2(hy, hx)
            rel = np.where(
                sweep[None, :] >= 0.0,
                np.mod(phi - ang0[None, :], 2.0 * np.pi),
                np.mod(ang0[None, :] - phi, 2.0 * np.pi),
            )
            ok = has & (t >= -_EPS_T) & (rel <= np.abs(sweep)[None, :] + 1e-12)
            t = np.where(ok, np.maximum(t, 0.0), np.inf)
            best = np.minimum(best, t.min(axis=1, initial=np.inf))

    return np.minimum(best, max_range)


def mlp_forward1(x, weights, biases, head_mode):
    """Single-sample dense forward pass.

    All transitions but the last apply ReLU. The last transition is the
    head: one linear or tanh layer, or (gaussian) the final two entries of
    ``weights`` are parallel mean / log-std layers, the log-std output
    clamped to [LOG_STD_MIN, LOG_STD_MAX]. Returns a list of output arrays
    (one entry, or two for the gaussian head).
    """
    n_head = 2 if head_mode == HEAD_GAUSSIAN else 1
    a = np.asarray(x, dtype=np.float64)
    for w, b in zip(weights[: len(weights) - n_head], biases):
        a = np.maximum(a @ w + b, 0.0)
    if head_mode == HEAD_LINEAR:
        return [a @ weights[-1] + biases[-1]]
    if head_mode == HEAD_TANH:
        return [np.tanh(a @ weights[-1] + biases[-1])]
    mean = a @ weights[-2] + biases[-2]
    log_std = np.clip(a @ weights[-1] + biases[-1], LOG_STD_MIN, LOG_STD_MAX)
    return [mean, log_std]


def adam_update(params, grads, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam step, in place on params/m/v."""
    np.multiply(m, beta1, out=m)
    m += (1.0 - beta1) * grads
    np.multiply(v, beta2, out=v)
    v += (1.0 - beta2) * grads * grads
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    params -= lr * mhat / (np.sqrt(vhat) + eps)
