# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: a transcription of kernels/reference.py.

Keep every arithmetic expression and branch in the same order as the
reference module; threshold decisions must agree bit for bit between the two
backends. The extension is built with -ffp-contract=off for that reason.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, M_PI, cos, fabs, hypot, sin, sqrt

cnp.import_array()

DISK = 0
BOX = 1

cdef double CONTACT_TOL = 1e-3
cdef double PENETRATION_LIMIT = 3e-3
cdef double REFINE_TRIGGER = 3e-3
cdef int SEG_SAMPLES = 9
cdef int REFINE_ITERS = 32

STATUS_OK = 0
STATUS_PREGRASP_COLLISION = 1
STATUS_CLOSING_COLLISION = 2

BACKEND_NAME = "compiled"

# module-level copies for parity checks against the reference
CONTACT_TOL_VALUE = CONTACT_TOL
PENETRATION_LIMIT_VALUE = PENETRATION_LIMIT

cdef int[6][3] PERM_TABLE
PERM_TABLE[0][:] = [0, 1, 2]
PERM_TABLE[1][:] = [0, 2, 1]
PERM_TABLE[2][:] = [1, 0, 2]
PERM_TABLE[3][:] = [1, 2, 0]
PERM_TABLE[4][:] = [2, 0, 1]
PERM_TABLE[5][:] = [2, 1, 0]


cdef inline double _signed_dist(int kind, double oa, double ob, double oc,
                                double px, double py, double pz) nogil:
    cdef double rho, dr, dz, a, b
    cdef double qx, qy, qz, ax, ay, az
    if kind == 0:
        rho = hypot(px, py)
        dr = rho - oa
        dz = fabs(pz) - ob
        if dr > 0.0 or dz > 0.0:
            a = dr if dr > 0.0 else 0.0
            b = dz if dz > 0.0 else 0.0
            return hypot(a, b)
        return dz if dz >= dr else dr
    qx = fabs(px) - oa
    qy = fabs(py) - ob
    qz = fabs(pz) - oc
    if qx > 0.0 or qy > 0.0 or qz > 0.0:
        ax = qx if qx > 0.0 else 0.0
        ay = qy if qy > 0.0 else 0.0
        az = qz if qz > 0.0 else 0.0
        return sqrt(ax * ax + ay * ay + az * az)
    if qx >= qy and qx >= qz:
        return qx
    if qy >= qz:
        return qy
    return qz


cdef inline void _surface_full(int kind, double oa, double ob, double oc,
                               double px, double py, double pz,
                               double* out) nogil:
    # out: d, cx, cy, cz, nx, ny, nz
    cdef double rho, dr, dz, sz, ux, uy, a, b, d, rr, zz
    cdef double qx, qy, qz, cx, cy, cz, dx, dy, dz2, s
    if kind == 0:
        rho = hypot(px, py)
        dr = rho - oa
        dz = fabs(pz) - ob
        sz = 1.0 if pz >= 0.0 else -1.0
        if rho > 0.0:
            ux = px / rho
            uy = py / rho
        else:
            ux = 1.0
            uy = 0.0
        if dr > 0.0 or dz > 0.0:
            a = dr if dr > 0.0 else 0.0
            b = dz if dz > 0.0 else 0.0
            d = hypot(a, b)
            rr = rho if rho < oa else oa
            zz = fabs(pz) if fabs(pz) < ob else ob
            out[0] = d
            out[1] = ux * rr
            out[2] = uy * rr
            out[3] = sz * zz
            out[4] = a * ux / d
            out[5] = a * uy / d
            out[6] = b * sz / d
            return
        if dz >= dr:
            out[0] = dz
            out[1] = px
            out[2] = py
            out[3] = sz * ob
            out[4] = 0.0
            out[5] = 0.0
            out[6] = sz
            return
        out[0] = dr
        out[1] = ux * oa
        out[2] = uy * oa
        out[3] = pz
        out[4] = ux
        out[5] = uy
        out[6] = 0.0
        return
    qx = fabs(px) - oa
    qy = fabs(py) - ob
    qz = fabs(pz) - oc
    if qx > 0.0 or qy > 0.0 or qz > 0.0:
        cx = px
        if cx < -oa: cx = -oa
        if cx > oa: cx = oa
        cy = py
        if cy < -ob: cy = -ob
        if cy > ob: cy = ob
        cz = pz
        if cz < -oc: cz = -oc
        if cz > oc: cz = oc
        dx = px - cx
        dy = py - cy
        dz2 = pz - cz
        d = sqrt(dx * dx + dy * dy + dz2 * dz2)
        out[0] = d
        out[1] = cx
        out[2] = cy
        out[3] = cz
        out[4] = dx / d
        out[5] = dy / d
        out[6] = dz2 / d
        return
    if qx >= qy and qx >= qz:
        s = 1.0 if px >= 0.0 else -1.0
        out[0] = qx
        out[1] = s * oa
        out[2] = py
        out[3] = pz
        out[4] = s
        out[5] = 0.0
        out[6] = 0.0
        return
    if qy >= qz:
        s = 1.0 if py >= 0.0 else -1.0
        out[0] = qy
        out[1] = px
        out[2] = s * ob
        out[3] = pz
        out[4] = 0.0
        out[5] = s
        out[6] = 0.0
        return
    s = 1.0 if pz >= 0.0 else -1.0
    out[0] = qz
    out[1] = px
    out[2] = py
    out[3] = s * oc
    out[4] = 0.0
    out[5] = 0.0
    out[6] = s


cdef inline void _seg_min(int kind, double oa, double ob, double oc,
                          double ax, double ay, double az,
                          double bx, double by, double bz,
                          double* d_out, double* t_out) nogil:
    cdef double best_d = INFINITY
    cdef double best_t = 0.0
    cdef double t, px, py, pz, d, span, lo, hi, h, m1, m2, d1, d2
    cdef int i
    for i in range(SEG_SAMPLES):
        t = i / <double>(SEG_SAMPLES - 1)
        px = ax + t * (bx - ax)
        py = ay + t * (by - ay)
        pz = az + t * (bz - az)
        d = _signed_dist(kind, oa, ob, oc, px, py, pz)
        if d < best_d:
            best_d = d
            best_t = t
    if 0.0 < best_d and best_d <= REFINE_TRIGGER:
        span = 1.0 / <double>(SEG_SAMPLES - 1)
        lo = best_t - span
        if lo < 0.0:
            lo = 0.0
        hi = best_t + span
        if hi > 1.0:
            hi = 1.0
        for i in range(REFINE_ITERS):
            h = (hi - lo) / 3.0
            m1 = lo + h
            m2 = hi - h
            d1 = _signed_dist(kind, oa, ob, oc,
                              ax + m1 * (bx - ax), ay + m1 * (by - ay), az + m1 * (bz - az))
            d2 = _signed_dist(kind, oa, ob, oc,
                              ax + m2 * (bx - ax), ay + m2 * (by - ay), az + m2 * (bz - az))
            if d1 < d2:
                hi = m2
            else:
                lo = m1
        t = 0.5 * (lo + hi)
        d = _signed_dist(kind, oa, ob, oc,
                         ax + t * (bx - ax), ay + t * (by - ay), az + t * (bz - az))
        if d < best_d:
            best_d = d
            best_t = t
    d_out[0] = best_d
    t_out[0] = best_t


cdef inline void _rot_axis_angle(double ux, double uy, double uz, double angle,
                                 double* M) nogil:
    cdef double c = cos(angle)
    cdef double s = sin(angle)
    cdef double t = 1.0 - c
    M[0] = c + ux * ux * t
    M[1] = ux * uy * t - uz * s
    M[2] = ux * uz * t + uy * s
    M[3] = uy * ux * t + uz * s
    M[4] = c + uy * uy * t
    M[5] = uy * uz * t - ux * s
    M[6] = uz * ux * t - uy * s
    M[7] = uz * uy * t + ux * s
    M[8] = uz * uz * t + c


cdef inline void _mat_mul(double* A, double* B, double* out) nogil:
    out[0] = A[0] * B[0] + A[1] * B[3] + A[2] * B[6]
    out[1] = A[0] * B[1] + A[1] * B[4] + A[2] * B[7]
    out[2] = A[0] * B[2] + A[1] * B[5] + A[2] * B[8]
    out[3] = A[3] * B[0] + A[4] * B[3] + A[5] * B[6]
    out[4] = A[3] * B[1] + A[4] * B[4] + A[5] * B[7]
    out[5] = A[3] * B[2] + A[4] * B[5] + A[5] * B[8]
    out[6] = A[6] * B[0] + A[7] * B[3] + A[8] * B[6]
    out[7] = A[6] * B[1] + A[7] * B[4] + A[8] * B[7]
    out[8] = A[6] * B[2] + A[7] * B[5] + A[8] * B[8]


cdef void _finger_geometry(double[:, ::1] base_R, double[:, ::1] base_p,
                           int[:] link_start, int[:] link_count,
                           int[:] link_joint, double[:, ::1] link_axis,
                           double[:] link_len,
                           int fi, double* q, double[:, ::1] segs) nogil:
    # segs rows (indexed by absolute link id): ax ay az bx by bz wx wy wz
    cdef double R[9]
    cdef double M[9]
    cdef double RN[9]
    cdef int i, k, start, count
    cdef double px, py, pz, ux, uy, uz, wx, wy, wz, ln, nx, ny, nz
    for i in range(9):
        R[i] = base_R[fi, i]
    px = base_p[fi, 0]
    py = base_p[fi, 1]
    pz = base_p[fi, 2]
    start = link_start[fi]
    count = link_count[fi]
    for k in range(start, start + count):
        ux = link_axis[k, 0]
        uy = link_axis[k, 1]
        uz = link_axis[k, 2]
        wx = R[0] * ux + R[1] * uy + R[2] * uz
        wy = R[3] * ux + R[4] * uy + R[5] * uz
        wz = R[6] * ux + R[7] * uy + R[8] * uz
        _rot_axis_angle(ux, uy, uz, q[link_joint[k]], M)
        _mat_mul(R, M, RN)
        for i in range(9):
            R[i] = RN[i]
        ln = link_len[k]
        nx = px + ln * R[0]
        ny = py + ln * R[3]
        nz = pz + ln * R[6]
        segs[k, 0] = px
        segs[k, 1] = py
        segs[k, 2] = pz
        segs[k, 3] = nx
        segs[k, 4] = ny
        segs[k, 5] = nz
        segs[k, 6] = wx
        segs[k, 7] = wy
        segs[k, 8] = wz
        px = nx
        py = ny
        pz = nz


cdef int _scan_finger(int fi, int okind, double oa, double ob, double oc,
                      double ox, double oy, double oz,
                      double[:, ::1] base_R, double[:, ::1] base_p,
                      int[:] link_start, int[:] link_count, int[:] link_joint,
                      double[:, ::1] link_axis, double[:] link_len,
                      double* q, double[:, ::1] segs,
                      double[:] last_d, double[:] last_t,
                      int[:] new_contacts, int* penetrated) nogil:
    """Rescan one finger; return the number of newly contacting links."""
    cdef int kk, st, ct, nn = 0
    cdef double dd, tt
    cdef bint was_c
    st = link_start[fi]
    ct = link_count[fi]
    _finger_geometry(base_R, base_p, link_start, link_count, link_joint,
                     link_axis, link_len, fi, q, segs)
    for kk in range(st, st + ct):
        _seg_min(okind, oa, ob, oc,
                 segs[kk, 0] - ox, segs[kk, 1] - oy, segs[kk, 2] - oz,
                 segs[kk, 3] - ox, segs[kk, 4] - oy, segs[kk, 5] - oz,
                 &dd, &tt)
        if dd < -PENETRATION_LIMIT:
            penetrated[0] = 1
        was_c = last_d[kk] <= CONTACT_TOL
        last_d[kk] = dd
        last_t[kk] = tt
        if dd <= CONTACT_TOL and not was_c:
            new_contacts[nn] = kk
            nn += 1
    return nn


def close_fingers(packed, int okind, double oa, double ob, double oc,
                  double ox, double oy, double oz, q_start):
    cdef double[:] jmin = packed.jmin
    cdef double[:] jmax = packed.jmax
    cdef unsigned char[:] flexion = packed.flexion
    cdef double[:, ::1] base_R = packed.base_R
    cdef double[:, ::1] base_p = packed.base_p
    cdef int[:] link_start = packed.link_start
    cdef int[:] link_count = packed.link_count
    cdef int[:] link_joint = packed.link_joint
    cdef double[:, ::1] link_axis = packed.link_axis
    cdef double[:] link_len = packed.link_len
    cdef int N = packed.n_joints
    cdef int F = packed.n_fingers
    cdef int L = packed.n_links
    cdef double step = packed.close_step
    cdef double sweep = packed.sweep_per_step
    cdef int max_steps = packed.max_steps

    q_arr = np.zeros(N, dtype=float)
    cdef double[:] q = q_arr
    q_in = np.asarray(q_start, dtype=float)
    cdef double[:] q0 = q_in
    cdef int j, fi, k, m, start, count, i
    cdef double v, lo, hi
    for j in range(N):
        v = q0[j]
        lo = jmin[j]
        hi = jmax[j]
        q[j] = lo if v < lo else (hi if v > hi else v)

    last_d_arr = np.full(L, np.inf)
    last_t_arr = np.zeros(L)
    segs_arr = np.zeros((L, 9))
    cdef double[:] last_d = last_d_arr
    cdef double[:] last_t = last_t_arr
    cdef double[:, ::1] segs = segs_arr

    cdef int penetrated = 0
    cdef double d, t
    new_arr = np.zeros(L, dtype=np.int32)
    cdef int[:] new_contacts = new_arr

    for fi in range(F):
        _scan_finger(fi, okind, oa, ob, oc, ox, oy, oz, base_R, base_p,
                     link_start, link_count, link_joint, link_axis, link_len,
                     &q[0], segs, last_d, last_t, new_contacts, &penetrated)
    if penetrated:
        return q_arr, [], STATUS_PREGRASP_COLLISION

    dirs_arr = np.zeros(N, dtype=np.int32)
    active_arr = np.zeros(N, dtype=np.uint8)
    cdef int[:] dirs = dirs_arr
    cdef unsigned char[:] active = active_arr
    cdef double tx, ty, tz, rx, ry, rz, cx, cy, cz, deriv
    seen_arr = np.zeros(N, dtype=np.uint8)
    cdef unsigned char[:] seen = seen_arr
    for fi in range(F):
        start = link_start[fi]
        count = link_count[fi]
        tx = segs[start + count - 1, 3]
        ty = segs[start + count - 1, 4]
        tz = segs[start + count - 1, 5]
        for j in range(N):
            seen[j] = 0
        for k in range(start, start + count):
            j = link_joint[k]
            if (not flexion[j]) or seen[j] or dirs[j] != 0:
                seen[j] = 1
                continue
            seen[j] = 1
            rx = tx - segs[k, 0]
            ry = ty - segs[k, 1]
            rz = tz - segs[k, 2]
            cx = segs[k, 7] * rz - segs[k, 8] * ry
            cy = segs[k, 8] * rx - segs[k, 6] * rz
            cz = segs[k, 6] * ry - segs[k, 7] * rx
            deriv = (tx - ox) * cx + (ty - oy) * cy + (tz - oz) * cz
            dirs[j] = -1 if deriv > 0.0 else 1
            active[j] = 1

    for fi in range(F):
        start = link_start[fi]
        count = link_count[fi]
        for k in range(start, start + count):
            if last_d[k] <= CONTACT_TOL:
                for m in range(start, k + 1):
                    active[link_joint[m]] = 0

    cdef int remaining = max_steps + 16
    cdef bint any_active
    moving_arr = np.zeros(F, dtype=np.uint8)
    cdef unsigned char[:] moving = moving_arr
    cdef double dmin, margin, nj
    cdef int steps, nn
    while remaining > 0:
        any_active = False
        for j in range(N):
            if active[j]:
                any_active = True
                break
        if not any_active:
            break
        remaining -= 1
        for fi in range(F):
            moving[fi] = 0
            start = link_start[fi]
            count = link_count[fi]
            for k in range(start, start + count):
                if active[link_joint[k]]:
                    moving[fi] = 1
                    break
        dmin = INFINITY
        for fi in range(F):
            if not moving[fi]:
                continue
            start = link_start[fi]
            count = link_count[fi]
            for k in range(start, start + count):
                if last_d[k] < dmin:
                    dmin = last_d[k]
        margin = dmin - CONTACT_TOL
        if margin > 2.0 * sweep:
            steps = <int>(margin / sweep) - 1
        else:
            steps = 1
        for j in range(N):
            if active[j]:
                nj = q[j] + dirs[j] * (step * <double>steps)
                lo = jmin[j]
                hi = jmax[j]
                if nj <= lo:
                    q[j] = lo
                    active[j] = 0
                elif nj >= hi:
                    q[j] = hi
                    active[j] = 0
                else:
                    q[j] = nj
        for fi in range(F):
            if not moving[fi]:
                continue
            nn = _scan_finger(fi, okind, oa, ob, oc, ox, oy, oz, base_R, base_p,
                              link_start, link_count, link_joint, link_axis,
                              link_len, &q[0], segs, last_d, last_t,
                              new_contacts, &penetrated)
            start = link_start[fi]
            for i in range(nn):
                k = new_contacts[i]
                for m in range(start, k + 1):
                    active[link_joint[m]] = 0
        if penetrated:
            break

    if penetrated:
        return q_arr, [], STATUS_CLOSING_COLLISION

    contacts = []
    cdef double surf[7]
    cdef double px, py, pz
    for fi in range(F):
        _finger_geometry(base_R, base_p, link_start, link_count, link_joint,
                         link_axis, link_len, fi, &q[0], segs)
        start = link_start[fi]
        count = link_count[fi]
        for k in range(start, start + count):
            _seg_min(okind, oa, ob, oc,
                     segs[k, 0] - ox, segs[k, 1] - oy, segs[k, 2] - oz,
                     segs[k, 3] - ox, segs[k, 4] - oy, segs[k, 5] - oz,
                     &d, &t)
            if d < -PENETRATION_LIMIT:
                return q_arr, [], STATUS_CLOSING_COLLISION
            if d <= CONTACT_TOL:
                px = segs[k, 0] - ox + t * (segs[k, 3] - segs[k, 0])
                py = segs[k, 1] - oy + t * (segs[k, 4] - segs[k, 1])
                pz = segs[k, 2] - oz + t * (segs[k, 5] - segs[k, 2])
                _surface_full(okind, oa, ob, oc, px, py, pz, surf)
                contacts.append(
                    (k,
                     np.array([surf[1], surf[2], surf[3]]),
                     np.array([surf[4], surf[5], surf[6]]),
                     d)
                )
    return q_arr, contacts, STATUS_OK


def wrench_quality(rel_pos, normals, double mu, double torque_scale, directions):
    rp = np.ascontiguousarray(rel_pos, dtype=float)
    nm = np.ascontiguousarray(normals, dtype=float)
    dr = np.ascontiguousarray(directions, dtype=float)
    cdef double[:, ::1] rel = rp
    cdef double[:, ::1] nrm = nm
    cdef const double[:, ::1] dirs = dr
    cdef int n_contacts = rel.shape[0]
    if n_contacts == 0:
        return 0.0
    cdef int K = dirs.shape[0]
    wr = np.zeros((n_contacts * 8, 6))
    cdef double[:, ::1] wrenches = wr
    cdef double scale = 1.0 / sqrt(1.0 + mu * mu)
    cdef int i, e, w = 0, kk, iw
    cdef double nx, ny, nz, rx, ry, rz, hx, hy, hz
    cdef double t1x, t1y, t1z, t1n, t2x, t2y, t2z
    cdef double ang, ca, sa, fx, fy, fz
    cdef double s, dot, best, qual
    for i in range(n_contacts):
        nx = nrm[i, 0]
        ny = nrm[i, 1]
        nz = nrm[i, 2]
        rx = rel[i, 0]
        ry = rel[i, 1]
        rz = rel[i, 2]
        if fabs(nx) <= 0.5773502691896258:
            hx = 1.0
            hy = 0.0
            hz = 0.0
        elif fabs(ny) <= 0.5773502691896258:
            hx = 0.0
            hy = 1.0
            hz = 0.0
        else:
            hx = 0.0
            hy = 0.0
            hz = 1.0
        t1x = ny * hz - nz * hy
        t1y = nz * hx - nx * hz
        t1z = nx * hy - ny * hx
        t1n = sqrt(t1x * t1x + t1y * t1y + t1z * t1z)
        t1x /= t1n
        t1y /= t1n
        t1z /= t1n
        t2x = ny * t1z - nz * t1y
        t2y = nz * t1x - nx * t1z
        t2z = nx * t1y - ny * t1x
        for e in range(8):
            ang = 2.0 * M_PI * e / 8.0
            ca = cos(ang)
            sa = sin(ang)
            fx = (-nx + mu * (ca * t1x + sa * t2x)) * scale
            fy = (-ny + mu * (ca * t1y + sa * t2y)) * scale
            fz = (-nz + mu * (ca * t1z + sa * t2z)) * scale
            wrenches[w, 0] = fx
            wrenches[w, 1] = fy
            wrenches[w, 2] = fz
            wrenches[w, 3] = (ry * fz - rz * fy) / torque_scale
            wrenches[w, 4] = (rz * fx - rx * fz) / torque_scale
            wrenches[w, 5] = (rx * fy - ry * fx) / torque_scale
            w += 1
    qual = INFINITY
    for kk in range(K):
        best = -INFINITY
        for iw in range(n_contacts * 8):
            dot = (wrenches[iw, 0] * dirs[kk, 0] + wrenches[iw, 1] * dirs[kk, 1]
                   + wrenches[iw, 2] * dirs[kk, 2] + wrenches[iw, 3] * dirs[kk, 3]
                   + wrenches[iw, 4] * dirs[kk, 4] + wrenches[iw, 5] * dirs[kk, 5])
            if dot > best:
                best = dot
        if best < qual:
            qual = best
    return qual if qual > 0.0 else 0.0


def ransac_scan(G_in, obj_ids_in, int n_objects, o_idx_in, i_size_in, i_curl_in,
                i_spread_in, perm_code_in, double xi, long long index_offset=0):
    G_arr = np.ascontiguousarray(G_in, dtype=float)
    cdef double[:, ::1] G = G_arr
    cdef int[:] obj_ids = np.ascontiguousarray(obj_ids_in, dtype=np.int32)
    cdef long long[:] o_idx = np.ascontiguousarray(o_idx_in, dtype=np.int64)
    cdef long long[:] i_size = np.ascontiguousarray(i_size_in, dtype=np.int64)
    cdef long long[:] i_curl = np.ascontiguousarray(i_curl_in, dtype=np.int64)
    cdef long long[:] i_spread = np.ascontiguousarray(i_spread_in, dtype=np.int64)
    cdef long long[:] perm = np.ascontiguousarray(perm_code_in, dtype=np.int64)

    cdef int n = G.shape[0]
    cdef int N = G.shape[1]
    cdef long long m_total = o_idx.shape[0]

    raw_arr = np.zeros((3, N))
    ortho_arr = np.zeros((3, N))
    basis_arr = np.zeros((3, N))
    best_basis_arr = np.zeros((3, N))
    vbuf_arr = np.zeros(N)
    per_obj_arr = np.zeros(n_objects, dtype=np.int64)
    best_per_obj_arr = np.zeros(n_objects, dtype=np.int64)
    cdef double[:, ::1] raw = raw_arr
    cdef double[:, ::1] ortho = ortho_arr
    cdef double[:, ::1] basis = basis_arr
    cdef double[:, ::1] best_basis = best_basis_arr
    cdef double[:] vbuf = vbuf_arr
    cdef long long[:] per_obj = per_obj_arr
    cdef long long[:] best_per_obj = best_per_obj_arr

    cdef long long best_idx = -1
    cdef long long bt1 = 0, bt2 = 0, bt3 = 0
    cdef double bt4 = 0.0
    cdef long long n_degenerate = 0

    cdef long long m
    cdef int j, g, r, p, pos, oi
    cdef double norm, dot, v, vv, p0, p1, p2, d2, d, t4
    cdef long long t1, t2, t3
    cdef bint degenerate, found_contact, better
    cdef int order0, order1, order2
    cdef long long orow

    for m in range(m_total):
        orow = o_idx[m]
        degenerate = False
        for j in range(N):
            raw[0, j] = G[i_spread[m], j] - G[orow, j]
            raw[1, j] = G[i_size[m], j] - G[orow, j]
            raw[2, j] = G[i_curl[m], j] - G[orow, j]
        for r in range(3):
            norm = 0.0
            for j in range(N):
                norm += raw[r, j] * raw[r, j]
            norm = sqrt(norm)
            if norm < 1e-12:
                degenerate = True
                break
            for j in range(N):
                raw[r, j] = raw[r, j] / norm
        if degenerate:
            n_degenerate += 1
            continue
        order0 = PERM_TABLE[perm[m]][0]
        order1 = PERM_TABLE[perm[m]][1]
        order2 = PERM_TABLE[perm[m]][2]
        # Gram-Schmidt in permuted order, mirroring reference._gs_rows
        for pos in range(3):
            p = order0 if pos == 0 else (order1 if pos == 1 else order2)
            for j in range(N):
                ortho[pos, j] = raw[p, j]
            for r in range(pos):
                dot = 0.0
                for j in range(N):
                    dot += ortho[pos, j] * ortho[r, j]
                for j in range(N):
                    ortho[pos, j] -= dot * ortho[r, j]
            norm = 0.0
            for j in range(N):
                norm += ortho[pos, j] * ortho[pos, j]
            norm = sqrt(norm)
            if norm < 1e-8:
                degenerate = True
                break
            for j in range(N):
                ortho[pos, j] = ortho[pos, j] / norm
        if degenerate:
            n_degenerate += 1
            continue
        for pos in range(3):
            p = order0 if pos == 0 else (order1 if pos == 1 else order2)
            for j in range(N):
                basis[p, j] = ortho[pos, j]

        for oi in range(n_objects):
            per_obj[oi] = 0
        t3 = 0
        t4 = 0.0
        for g in range(n):
            p0 = 0.0
            p1 = 0.0
            p2 = 0.0
            for j in range(N):
                v = G[g, j] - G[orow, j]
                vbuf[j] = v
                p0 += basis[0, j] * v
                p1 += basis[1, j] * v
                p2 += basis[2, j] * v
            d2 = 0.0
            for j in range(N):
                v = vbuf[j] - (p0 * basis[0, j] + p1 * basis[1, j] + p2 * basis[2, j])
                d2 += v * v
            d = sqrt(d2)
            t4 += d
            if d < xi:
                t3 += 1
                per_obj[obj_ids[g]] += 1
        t1 = per_obj[0]
        for oi in range(1, n_objects):
            if per_obj[oi] < t1:
                t1 = per_obj[oi]
        t2 = 0
        for oi in range(n_objects):
            if per_obj[oi] == t1:
                t2 += 1

        if best_idx < 0:
            better = True
        elif t1 != bt1:
            better = t1 > bt1
        elif t2 != bt2:
            better = t2 < bt2
        elif t3 != bt3:
            better = t3 > bt3
        else:
            better = t4 < bt4
        if better:
            best_idx = index_offset + m
            bt1 = t1
            bt2 = t2
            bt3 = t3
            bt4 = t4
            for pos in range(3):
                for j in range(N):
                    best_basis[pos, j] = basis[pos, j]
            for oi in range(n_objects):
                best_per_obj[oi] = per_obj[oi]

    if best_idx < 0:
        return -1, 0, 0, 0, 0.0, None, None, int(n_degenerate)
    return (int(best_idx), int(bt1), int(bt2), int(bt3), float(bt4),
            best_basis_arr.copy(), best_per_obj_arr.copy(), int(n_degenerate))
