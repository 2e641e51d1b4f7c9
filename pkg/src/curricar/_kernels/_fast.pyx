# Compiled versions of the hot kernels. Semantics mirror reference.py;
# keep the two files in lockstep.

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, fmod, pow, sin, sqrt, tanh

cnp.import_array()

HEAD_LINEAR = 0
HEAD_TANH = 1
HEAD_GAUSSIAN = 2
LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0

cdef double TWO_PI = 6.283185307179586
cdef double C_LOG_STD_MIN = -20.0
cdef double C_LOG_STD_MAX = 2.0


cdef inline double _posmod(double x) nogil:
    cdef double r = fmod(x, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    return r


def raycast(double px, double py, double[::1] angles,
            double[:, ::1] seg_table, double[:, ::1] arc_table, double max_range):
    cdef Py_ssize_t n = angles.shape[0]
    cdef Py_ssize_t ns = seg_table.shape[0]
    cdef Py_ssize_t na = arc_table.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef int si
    cdef double dx, dy, best, ax, ay, ex, ey, ln, denom, rx, ry, t, u
    cdef double cx, cy, rad, ang0, sweep, sw, ox, oy, b, c, disc, root, hx, hy, phi, rel, tt

    for i in range(n):
        dx = cos(angles[i])
        dy = sin(angles[i])
        best = max_range
        for j in range(ns):
            ax = seg_table[j, 0]
            ay = seg_table[j, 1]
            ex = seg_table[j, 2]
            ey = seg_table[j, 3]
            ln = seg_table[j, 4]
            denom = dx * ey - dy * ex
            if denom > 1e-15 or denom < -1e-15:
                rx = ax - px
                ry = ay - py
                t = (rx * ey - ry * ex) / denom
                u = (rx * dy - ry * dx) / denom
                if t >= -1e-12 and u >= -1e-9 and u <= ln + 1e-9:
                    if t < 0.0:
                        t = 0.0
                    if t < best:
                        best = t
        for j in range(na):
            cx = arc_table[j, 0]
            cy = arc_table[j, 1]
            rad = arc_table[j, 2]
            ang0 = arc_table[j, 3]
            sweep = arc_table[j, 4]
            ox = px - cx
            oy = py - cy
            b = dx * ox + dy * oy
            c = ox * ox + oy * oy - rad * rad
            disc = b * b - c
            if disc >= 0.0:
                root = sqrt(disc)
                sw = sweep if sweep >= 0.0 else -sweep
                for si in range(2):
                    tt = (-b - root) if si == 0 else (-b + root)
                    if tt >= -1e-12:
                        hx = px + tt * dx - cx
                        hy = py + tt * dy - cy
                        phi = atan2(hy, hx)
                        rel = _posmod(phi - ang0) if sweep >= 0.0 else _posmod(ang0 - phi)
                        if rel <= sw + 1e-12:
                            if tt < 0.0:
                                tt = 0.0
                            if tt < best:
                                best = tt
        out[i] = best
    return out_arr


cdef void _affine(double[::1] src, Py_ssize_t n_in, double[:, ::1] w, double[::1] b,
                  double[::1] dst, Py_ssize_t n_out) nogil:
    cdef Py_ssize_t i, j
    cdef double xi
    for j in range(n_out):
        dst[j] = b[j]
    for i in range(n_in):
        xi = src[i]
        if xi != 0.0:
            for j in range(n_out):
                dst[j] += xi * w[i, j]


def mlp_forward1(x, list weights, list biases, int head_mode):
    cdef int n_head = 2 if head_mode == HEAD_GAUSSIAN else 1
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t n_trunk = n_layers - n_head
    cdef Py_ssize_t k, j, n_in, n_out, width

    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    width = x_arr.shape[0]
    for k in range(n_layers):
        if (<object>weights[k]).shape[1] > width:
            width = (<object>weights[k]).shape[1]

    buf_a = np.empty(width, dtype=np.float64)
    buf_b = np.empty(width, dtype=np.float64)
    cdef double[::1] cur = x_arr
    cdef double[::1] nxt = buf_a
    cdef double[::1] spare = buf_b
    cdef double[::1] tmp
    cdef double[:, ::1] w
    cdef double[::1] b
    cdef Py_ssize_t cur_n = x_arr.shape[0]

    for k in range(n_trunk):
        w = weights[k]
        b = biases[k]
        n_in = w.shape[0]
        n_out = w.shape[1]
        _affine(cur, n_in, w, b, nxt, n_out)
        for j in range(n_out):
            if nxt[j] < 0.0:
                nxt[j] = 0.0
        tmp = cur
        cur = nxt
        nxt = spare if k == 0 else tmp
        spare = tmp if k == 0 else spare
        cur_n = n_out

    outs = []
    cdef double[::1] o
    cdef double z
    for k in range(n_trunk, n_layers):
        w = weights[k]
        b = biases[k]
        n_out = w.shape[1]
        out_arr = np.empty(n_out, dtype=np.float64)
        o = out_arr
        _affine(cur, w.shape[0], w, b, o, n_out)
        if head_mode == HEAD_TANH:
            for j in range(n_out):
                o[j] = tanh(o[j])
        elif head_mode == HEAD_GAUSSIAN and k == n_layers - 1:
            for j in range(n_out):
                z = o[j]
                if z < C_LOG_STD_MIN:
                    z = C_LOG_STD_MIN
                elif z > C_LOG_STD_MAX:
                    z = C_LOG_STD_MAX
                o[j] = z
        outs.append(out_arr)
    return outs


def adam_update(double[::1] params, double[::1] grads, double[::1] m, double[::1] v,
                long t, double lr, double beta1, double beta2, double eps):
    cdef Py_ssize_t i, n = params.shape[0]
    cdef double bc1 = 1.0 - pow(beta1, <double>t)
    cdef double bc2 = 1.0 - pow(beta2, <double>t)
    cdef double g
    for i in range(n):
        g = grads[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        params[i] -= lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)
