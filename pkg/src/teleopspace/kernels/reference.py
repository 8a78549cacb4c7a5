"""Pure-Python reference kernels.

This module is the readable specification of the hot loops; the compiled
extension transcribes it operation for operation (same expressions, same
branch order) so both backends take identical decisions wherever a threshold
is compared. Scalar arithmetic is deliberate: elementwise IEEE ops match the C
code bit for bit, which numpy reductions would not.
"""

from __future__ import annotations

import math

import numpy as np

DISK = 0
BOX = 1

CONTACT_TOL = 1e-3  # link within this of the surface counts as contact
PENETRATION_LIMIT = 3e-3  # deeper than this invalidates the evaluation
REFINE_TRIGGER = 3e-3  # refine a segment minimum when coarse pass gets this close
SEG_SAMPLES = 9
REFINE_ITERS = 32

STATUS_OK = 0
STATUS_PREGRASP_COLLISION = 1
STATUS_CLOSING_COLLISION = 2

PERMS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))

BACKEND_NAME = "python"


def _signed_dist(kind, oa, ob, oc, px, py, pz):
    """Signed distance from an object-centered point to the primitive surface."""
    if kind == DISK:
        rho = math.hypot(px, py)
        dr = rho - oa
        dz = abs(pz) - ob
        if dr > 0.0 or dz > 0.0:
            a = dr if dr > 0.0 else 0.0
            b = dz if dz > 0.0 else 0.0
            return math.hypot(a, b)
        return dz if dz >= dr else dr
    qx = abs(px) - oa
    qy = abs(py) - ob
    qz = abs(pz) - oc
    if qx > 0.0 or qy > 0.0 or qz > 0.0:
        ax = qx if qx > 0.0 else 0.0
        ay = qy if qy > 0.0 else 0.0
        az = qz if qz > 0.0 else 0.0
        return math.sqrt(ax * ax + ay * ay + az * az)
    if qx >= qy and qx >= qz:
        return qx
    if qy >= qz:
        return qy
    return qz


def _surface_full(kind, oa, ob, oc, px, py, pz):
    """(signed distance, closest surface point, outward normal), object frame."""
    if kind == DISK:
        rho = math.hypot(px, py)
        dr = rho - oa
        dz = abs(pz) - ob
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
            d = math.hypot(a, b)
            rr = rho if rho < oa else oa
            zz = abs(pz) if abs(pz) < ob else ob
            return d, (ux * rr, uy * rr, sz * zz), (a * ux / d, a * uy / d, b * sz / d)
        if dz >= dr:
            return dz, (px, py, sz * ob), (0.0, 0.0, sz)
        return dr, (ux * oa, uy * oa, pz), (ux, uy, 0.0)
    qx = abs(px) - oa
    qy = abs(py) - ob
    qz = abs(pz) - oc
    if qx > 0.0 or qy > 0.0 or qz > 0.0:
        cx = min(max(px, -oa), oa)
        cy = min(max(py, -ob), ob)
        cz = min(max(pz, -oc), oc)
        dx = px - cx
        dy = py - cy
        dz2 = pz - cz
        d = math.sqrt(dx * dx + dy * dy + dz2 * dz2)
        return d, (cx, cy, cz), (dx / d, dy / d, dz2 / d)
    if qx >= qy and qx >= qz:
        s = 1.0 if px >= 0.0 else -1.0
        return qx, (s * oa, py, pz), (s, 0.0, 0.0)
    if qy >= qz:
        s = 1.0 if py >= 0.0 else -1.0
        return qy, (px, s * ob, pz), (0.0, s, 0.0)
    s = 1.0 if pz >= 0.0 else -1.0
    return qz, (px, py, s * oc), (0.0, 0.0, s)


def _seg_min(kind, oa, ob, oc, ax, ay, az, bx, by, bz):
    """Minimum signed distance over a segment, with the achieving parameter t."""
    best_d = math.inf
    best_t = 0.0
    for i in range(SEG_SAMPLES):
        t = i / (SEG_SAMPLES - 1)
        px = ax + t * (bx - ax)
        py = ay + t * (by - ay)
        pz = az + t * (bz - az)
        d = _signed_dist(kind, oa, ob, oc, px, py, pz)
        if d < best_d:
            best_d = d
            best_t = t
    if 0.0 < best_d <= REFINE_TRIGGER:
        span = 1.0 / (SEG_SAMPLES - 1)
        lo = best_t - span
        if lo < 0.0:
            lo = 0.0
        hi = best_t + span
        if hi > 1.0:
            hi = 1.0
        for _ in range(REFINE_ITERS):
            h = (hi - lo) / 3.0
            m1 = lo + h
            m2 = hi - h
            d1 = _signed_dist(
                kind, oa, ob, oc, ax + m1 * (bx - ax), ay + m1 * (by - ay), az + m1 * (bz - az)
            )
            d2 = _signed_dist(
                kind, oa, ob, oc, ax + m2 * (bx - ax), ay + m2 * (by - ay), az + m2 * (bz - az)
            )
            if d1 < d2:
                hi = m2
            else:
                lo = m1
        t = 0.5 * (lo + hi)
        d = _signed_dist(
            kind, oa, ob, oc, ax + t * (bx - ax), ay + t * (by - ay), az + t * (bz - az)
        )
        if d < best_d:
            best_d = d
            best_t = t
    return best_d, best_t


def _rot_axis_angle(ux, uy, uz, angle):
    c = math.cos(angle)
    s = math.sin(angle)
    t = 1.0 - c
    return (
        c + ux * ux * t,
        ux * uy * t - uz * s,
        ux * uz * t + uy * s,
        uy * ux * t + uz * s,
        c + uy * uy * t,
        uy * uz * t - ux * s,
        uz * ux * t - uy * s,
        uz * uy * t + ux * s,
        c + uz * uz * t,
    )


def _mat_mul(A, B):
    return (
        A[0] * B[0] + A[1] * B[3] + A[2] * B[6],
        A[0] * B[1] + A[1] * B[4] + A[2] * B[7],
        A[0] * B[2] + A[1] * B[5] + A[2] * B[8],
        A[3] * B[0] + A[4] * B[3] + A[5] * B[6],
        A[3] * B[1] + A[4] * B[4] + A[5] * B[7],
        A[3] * B[2] + A[4] * B[5] + A[5] * B[8],
        A[6] * B[0] + A[7] * B[3] + A[8] * B[6],
        A[6] * B[1] + A[7] * B[4] + A[8] * B[7],
        A[6] * B[2] + A[7] * B[5] + A[8] * B[8],
    )


def _finger_geometry(packed, fi, q):
    """Segments plus per-link joint origin and world axis for one finger."""
    R = tuple(float(v) for v in packed.base_R[fi])
    px = float(packed.base_p[fi, 0])
    py = float(packed.base_p[fi, 1])
    pz = float(packed.base_p[fi, 2])
    start = int(packed.link_start[fi])
    count = int(packed.link_count[fi])
    segs = []
    for k in range(start, start + count):
        ux = float(packed.link_axis[k, 0])
        uy = float(packed.link_axis[k, 1])
        uz = float(packed.link_axis[k, 2])
        wx = R[0] * ux + R[1] * uy + R[2] * uz
        wy = R[3] * ux + R[4] * uy + R[5] * uz
        wz = R[6] * ux + R[7] * uy + R[8] * uz
        R = _mat_mul(R, _rot_axis_angle(ux, uy, uz, q[packed.link_joint[k]]))
        ln = float(packed.link_len[k])
        nx = px + ln * R[0]
        ny = py + ln * R[3]
        nz = pz + ln * R[6]
        segs.append((px, py, pz, nx, ny, nz, wx, wy, wz))
        px, py, pz = nx, ny, nz
    return segs


def close_fingers(packed, okind, oa, ob, oc, ox, oy, oz, q_start):
    """Drive flexion joints toward the object until contact or joint limit.

    Each active flexion joint advances by a fixed step toward the object (the
    approach direction is read off the fingertip-distance derivative at the
    start pose); touching a link freezes every flexion joint between it and
    the finger base. Free-space spans are jumped over in blocks whose safety
    follows from the per-step sweep bound.

    Returns (q, contacts, status) where contacts is a list of
    (link_id, rel_pos, normal, dist) with positions relative to the object
    center and outward normals.
    """
    N = packed.n_joints
    F = packed.n_fingers
    L = packed.n_links
    jmin = packed.jmin
    jmax = packed.jmax
    step = packed.close_step
    sweep = packed.sweep_per_step

    q = [0.0] * N
    for j in range(N):
        v = float(q_start[j])
        lo = float(jmin[j])
        hi = float(jmax[j])
        q[j] = lo if v < lo else hi if v > hi else v

    last_d = [math.inf] * L
    last_t = [0.0] * L
    seg_cache = [None] * L

    def scan_finger(fi):
        nonlocal status
        segs = _finger_geometry(packed, fi, q)
        start = int(packed.link_start[fi])
        new_contacts = []
        for off, seg in enumerate(segs):
            k = start + off
            d, t = _seg_min(
                okind,
                oa,
                ob,
                oc,
                seg[0] - ox,
                seg[1] - oy,
                seg[2] - oz,
                seg[3] - ox,
                seg[4] - oy,
                seg[5] - oz,
            )
            if d < -PENETRATION_LIMIT:
                status = STATUS_CLOSING_COLLISION
            was = last_d[k] <= CONTACT_TOL
            last_d[k] = d
            last_t[k] = t
            seg_cache[k] = seg
            if d <= CONTACT_TOL and not was:
                new_contacts.append(k)
        return new_contacts

    status = STATUS_OK
    for fi in range(F):
        scan_finger(fi)
    if status != STATUS_OK:
        return np.array(q), [], STATUS_PREGRASP_COLLISION

    # closing direction: sign that moves the fingertip toward the object center
    dirs = [0] * N
    active = [False] * N
    for fi in range(F):
        start = int(packed.link_start[fi])
        count = int(packed.link_count[fi])
        tip = seg_cache[start + count - 1]
        tx, ty, tz = tip[3], tip[4], tip[5]
        seen = set()
        for k in range(start, start + count):
            j = int(packed.link_joint[k])
            if not packed.flexion[j] or j in seen or dirs[j] != 0:
                seen.add(j)
                continue
            seen.add(j)
            seg = seg_cache[k]
            rx = tx - seg[0]
            ry = ty - seg[1]
            rz = tz - seg[2]
            # d|tip - c|/dq has the sign of (tip - c) . (axis x (tip - joint))
            cx = seg[7] * rz - seg[8] * ry
            cy = seg[8] * rx - seg[6] * rz
            cz = seg[6] * ry - seg[7] * rx
            deriv = (tx - ox) * cx + (ty - oy) * cy + (tz - oz) * cz
            dirs[j] = -1 if deriv > 0.0 else 1
            active[j] = True

    # freeze whatever already touches at the start pose
    for fi in range(F):
        start = int(packed.link_start[fi])
        count = int(packed.link_count[fi])
        for k in range(start, start + count):
            if last_d[k] <= CONTACT_TOL:
                for m in range(start, k + 1):
                    active[int(packed.link_joint[m])] = False

    def advance(j, amount):
        nj = q[j] + amount
        lo = float(jmin[j])
        hi = float(jmax[j])
        if nj <= lo:
            q[j] = lo
            active[j] = False
        elif nj >= hi:
            q[j] = hi
            active[j] = False
        else:
            q[j] = nj

    def rescan_and_freeze(moving):
        for fi in range(F):
            if not moving[fi]:
                continue
            start = int(packed.link_start[fi])
            for k in scan_finger(fi):
                for m in range(start, k + 1):
                    active[int(packed.link_joint[m])] = False

    remaining = packed.max_steps + 16
    while any(active) and remaining > 0:
        remaining -= 1
        moving = [False] * F
        for fi in range(F):
            start = int(packed.link_start[fi])
            count = int(packed.link_count[fi])
            for k in range(start, start + count):
                if active[int(packed.link_joint[k])]:
                    moving[fi] = True
                    break
        dmin = math.inf
        for fi in range(F):
            if not moving[fi]:
                continue
            start = int(packed.link_start[fi])
            count = int(packed.link_count[fi])
            for k in range(start, start + count):
                if last_d[k] < dmin:
                    dmin = last_d[k]
        margin = dmin - CONTACT_TOL
        if margin > 2.0 * sweep:
            steps = int(margin / sweep) - 1
        else:
            steps = 1
        for j in range(N):
            if active[j]:
                advance(j, dirs[j] * (step * steps))
        rescan_and_freeze(moving)
        if status != STATUS_OK:
            break

    if status != STATUS_OK:
        return np.array(q), [], status

    contacts = []
    for fi in range(F):
        segs = _finger_geometry(packed, fi, q)
        start = int(packed.link_start[fi])
        for off, seg in enumerate(segs):
            k = start + off
            d, t = _seg_min(
                okind,
                oa,
                ob,
                oc,
                seg[0] - ox,
                seg[1] - oy,
                seg[2] - oz,
                seg[3] - ox,
                seg[4] - oy,
                seg[5] - oz,
            )
            if d < -PENETRATION_LIMIT:
                return np.array(q), [], STATUS_CLOSING_COLLISION
            if d <= CONTACT_TOL:
                px = seg[0] - ox + t * (seg[3] - seg[0])
                py = seg[1] - oy + t * (seg[4] - seg[1])
                pz = seg[2] - oz + t * (seg[5] - seg[2])
                _, cpt, nrm = _surface_full(okind, oa, ob, oc, px, py, pz)
                contacts.append((k, np.array(cpt), np.array(nrm), d))
    return np.array(q), contacts, STATUS_OK


def wrench_quality(rel_pos, normals, mu, torque_scale, directions):
    """Sampled support of the contact wrench hull; 0 when the origin falls outside.

    Each contact contributes an 8-edge discretized friction cone of unit
    forces (pointing into the object) with torques about the object center
    scaled by 1/torque_scale.
    """
    n_contacts = len(rel_pos)
    if n_contacts == 0:
        return 0.0
    wrenches = np.zeros((n_contacts * 8, 6))
    scale = 1.0 / math.sqrt(1.0 + mu * mu)
    w = 0
    for i in range(n_contacts):
        nx, ny, nz = (float(v) for v in normals[i])
        rx, ry, rz = (float(v) for v in rel_pos[i])
        if abs(nx) <= 0.5773502691896258:
            hx, hy, hz = 1.0, 0.0, 0.0
        elif abs(ny) <= 0.5773502691896258:
            hx, hy, hz = 0.0, 1.0, 0.0
        else:
            hx, hy, hz = 0.0, 0.0, 1.0
        t1x = ny * hz - nz * hy
        t1y = nz * hx - nx * hz
        t1z = nx * hy - ny * hx
        t1n = math.sqrt(t1x * t1x + t1y * t1y + t1z * t1z)
        t1x /= t1n
        t1y /= t1n
        t1z /= t1n
        t2x = ny * t1z - nz * t1y
        t2y = nz * t1x - nx * t1z
        t2z = nx * t1y - ny * t1x
        for e in range(8):
            ang = 2.0 * math.pi * e / 8.0
            ca = math.cos(ang)
            sa = math.sin(ang)
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
    support = (wrenches @ np.asarray(directions).T).max(axis=0)
    qual = float(support.min())
    return qual if qual > 0.0 else 0.0


def _gs_rows(rows):
    """Orthonormalize three unit rows in order; None on degeneracy."""
    out = []
    for i in range(3):
        vx = [float(v) for v in rows[i]]
        for u in out:
            dot = 0.0
            for a in range(len(vx)):
                dot += vx[a] * u[a]
            for a in range(len(vx)):
                vx[a] -= dot * u[a]
        norm = 0.0
        for a in range(len(vx)):
            norm += vx[a] * vx[a]
        norm = math.sqrt(norm)
        if norm < 1e-8:
            return None
        out.append([v / norm for v in vx])
    return out


def ransac_scan(G, obj_ids, n_objects, o_idx, i_size, i_curl, i_spread, perm_code, xi, index_offset=0):
    """Score a block of subspace hypotheses; return the tier-best.

    Hypothesis m: origin row o_idx[m]; raw directions toward rows i_spread,
    i_size, i_curl (label order spread/size/curl); the permutation code picks
    the Gram-Schmidt processing order. Returns (best_index, t1, t2, t3, t4,
    basis, per_object, n_degenerate) with best_index == -1 when every
    hypothesis degenerates.
    """
    G = np.asarray(G, dtype=float)
    n, N = G.shape
    best_idx = -1
    best_key = None
    best_basis = None
    best_per_obj = None
    n_degenerate = 0
    m_total = len(o_idx)
    for m in range(m_total):
        o = G[o_idx[m]]
        raw = np.stack([G[i_spread[m]], G[i_size[m]], G[i_curl[m]]]) - o
        norms = np.sqrt((raw * raw).sum(axis=1))
        if (norms < 1e-12).any():
            n_degenerate += 1
            continue
        raw = raw / norms[:, None]
        order = PERMS[perm_code[m]]
        ortho = _gs_rows([raw[order[0]], raw[order[1]], raw[order[2]]])
        if ortho is None:
            n_degenerate += 1
            continue
        basis = np.zeros((3, N))
        for pos in range(3):
            basis[order[pos]] = ortho[pos]
        V = G - o
        residual = V - (V @ basis.T) @ basis
        d = np.sqrt((residual * residual).sum(axis=1))
        inlier = d < xi
        per_obj = np.bincount(obj_ids[inlier], minlength=n_objects)
        t1 = int(per_obj.min())
        t2 = int((per_obj == t1).sum())
        t3 = int(inlier.sum())
        t4 = float(d.sum())
        key = (t1, -t2, t3, -t4)
        if best_key is None or key > best_key:
            best_key = key
            best_idx = index_offset + m
            best_basis = basis
            best_per_obj = per_obj
    if best_idx < 0:
        return -1, 0, 0, 0, 0.0, None, None, n_degenerate
    t1, nt2, t3, nt4 = best_key
    return best_idx, t1, -nt2, t3, -nt4, best_basis, best_per_obj, n_degenerate
