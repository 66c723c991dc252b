"""Compiled inner loops. Everything here works on plain arrays."""
from __future__ import annotations

import numpy as np
from numba import njit

# time-tabulated perturbation ------------------------------------------------


@njit(cache=True, nogil=True)
def hermite_eval(h, ht, dtn, t, x):
    """Cubic Hermite interpolant in time of ``H(., x/N)`` at time ``t``."""
    K = h.shape[0] - 1
    k = int(t / dtn)
    if k >= K:
        k = K - 1
    if k < 0:
        k = 0
    s = (t - k * dtn) / dtn
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return (h00 * h[k, x] + h10 * dtn * ht[k, x]
            + h01 * h[k + 1, x] + h11 * dtn * ht[k + 1, x])


@njit(cache=True, nogil=True)
def bond_delta(h, ht, dtn, t, x, n):
    y = x + 1
    if y == n:
        y = 0
    return hermite_eval(h, ht, dtn, t, y) - hermite_eval(h, ht, dtn, t, x)


# lattice dynamics -----------------------------------------------------------


@njit(cache=True, nogil=True)
def simulate_kernel(occ0, T, weak, h, ht, dtn, cap, floor, observe, rng, record):
    """Event-driven exclusion dynamics with thinning.

    Bonds fall in two rate classes: the N-1 fast bonds and the slow bond.
    Active fast bonds (unequal occupancies) sit in a swap-remove list, so a
    proposal is drawn in O(1): pick the class by its total bound, then a
    uniform member. ``cap[x]`` bounds the rate of bond ``x``; the fast class
    uses the largest fast cap. ``floor[x]`` bounds the acceptance ratio from
    below; uniforms under it accept without evaluating the field.

    Returns event times, event bonds, snapshots, final configuration,
    number of events, number of proposals and a flag set if a proposal
    exceeded its bound.
    """
    n = occ0.size
    occ = occ0.copy()
    n2 = float(n) * float(n)
    cf = cap[:n - 1].max()
    cs = cap[n - 1]
    ff = floor[:n - 1].min()
    fs = floor[n - 1]
    pos = np.full(n, -1, dtype=np.int64)
    lst = np.empty(n, dtype=np.int64)
    k = 0
    for x in range(n - 1):
        if occ[x] != occ[x + 1]:
            pos[x] = k
            lst[k] = x
            k += 1
    slow = occ[n - 1] != occ[0]

    nobs = observe.size
    snaps = np.zeros((nobs, n), dtype=np.uint8)
    iobs = 0

    capacity = 1024 if record else 1
    ev_t = np.empty(capacity)
    ev_b = np.empty(capacity, dtype=np.int32)
    ne = 0
    proposals = 0
    violated = False

    t = 0.0
    while True:
        fast_total = cf * k
        total = fast_total + (cs if slow else 0.0)
        if total <= 0.0:
            break
        t += rng.standard_exponential() / total
        while iobs < nobs and observe[iobs] < t:
            snaps[iobs, :] = occ
            iobs += 1
        if t > T:
            break
        r = rng.random() * total
        if r < fast_total:
            i = int(r / cf)
            if i >= k:
                i = k - 1
            x = lst[i]
            c = cf
            fl = ff
        else:
            x = n - 1
            c = cs
            fl = fs
        proposals += 1
        y = x + 1 if x + 1 < n else 0
        if weak:
            u = rng.random()
            if u >= fl:
                d = bond_delta(h, ht, dtn, t, x, n)
                xi = 1.0 if x < n - 1 else 1.0 / n
                if occ[x] == 1:
                    rate = n2 * xi * np.exp(d)
                else:
                    rate = n2 * xi * np.exp(-d)
                ratio = rate / c
                if ratio > 1.0:
                    violated = True
                if u >= ratio:
                    continue
        tmp = occ[x]
        occ[x] = occ[y]
        occ[y] = tmp
        if record:
            if ne == capacity:
                capacity *= 2
                nt = np.empty(capacity)
                nb = np.empty(capacity, dtype=np.int32)
                nt[:ne] = ev_t[:ne]
                nb[:ne] = ev_b[:ne]
                ev_t = nt
                ev_b = nb
            ev_t[ne] = t
            ev_b[ne] = x
        ne += 1
        # bond x stays active; its neighbours may switch
        for b in (x - 1, x + 1):
            if b < 0:
                b += n
            elif b >= n:
                b -= n
            e = b + 1 if b + 1 < n else 0
            act = occ[b] != occ[e]
            if b == n - 1:
                slow = act
            elif act and pos[b] < 0:
                pos[b] = k
                lst[k] = b
                k += 1
            elif not act and pos[b] >= 0:
                # swap-remove
                k -= 1
                last = lst[k]
                lst[pos[b]] = last
                pos[last] = pos[b]
                pos[b] = -1
    while iobs < nobs:
        snaps[iobs, :] = occ
        iobs += 1
    ne_rec = ne if record else 0
    return ev_t[:ne_rec].copy(), ev_b[:ne_rec].copy(), snaps, occ, ne, proposals, violated


# Girsanov accumulation -------------------------------------------------------


@njit(cache=True, nogil=True)
def _bond_state(occ, x, n):
    y = x + 1 if x + 1 < n else 0
    if occ[x] == 1 and occ[y] == 0:
        return 1
    if occ[x] == 0 and occ[y] == 1:
        return -1
    return 0


@njit(cache=True, nogil=True)
def _compensator_piece(h, ht, dtn, a, b, x, n, state):
    """``int_a^b (e^{s d} - 1) dt`` and ``int_a^b Gamma(s d) dt`` with
    ``s = state``, ``d = delta_x(t)`` and ``Gamma(y) = 1 - e^y + y e^y``,
    by 2-point Gauss on each tabulation interval met by ``[a, b]``."""
    if state == 0 or b <= a:
        return 0.0, 0.0
    g = 0.5773502691896257
    total = 0.0
    total_g = 0.0
    lo = a
    while lo < b:
        k = int(lo / dtn)
        hi = (k + 1) * dtn
        if hi <= lo:
            hi = lo + dtn
        if hi > b:
            hi = b
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        for sgn in (-1.0, 1.0):
            tt = mid + sgn * g * half
            d = state * bond_delta(h, ht, dtn, tt, x, n)
            e = np.exp(d)
            total += half * (e - 1.0)
            total_g += half * (1.0 - e + d * e)
        lo = hi
    return total, total_g


@njit(cache=True, nogil=True)
def log_rn_kernel(occ0, ev_t, ev_b, T, h, ht, dtn):
    """Terms of log dP^H/dP along one trajectory.

    Returns boundary term, time integral, bulk compensator, slow-bond
    compensator, the jump-sum form of the same log-likelihood, and the
    bulk and slow-bond compensators of the log-likelihood under the
    perturbed law (Gamma-weighted).
    """
    n = occ0.size
    n2 = float(n) * float(n)
    occ = occ0.copy()

    boundary0 = 0.0
    for x in range(n):
        if occ[x] == 1:
            boundary0 += hermite_eval(h, ht, dtn, 0.0, x)

    occ_since = np.zeros(n)
    time_int = 0.0

    state = np.empty(n, dtype=np.int8)
    since = np.zeros(n)
    comp = np.zeros(n)
    gam = np.zeros(n)
    for x in range(n):
        state[x] = _bond_state(occ, x, n)

    jump_sum = 0.0
    for i in range(ev_t.size):
        t = ev_t[i]
        x = np.int64(ev_b[i])
        y = x + 1 if x + 1 < n else 0
        d = bond_delta(h, ht, dtn, t, x, n)
        if occ[x] == 1:
            jump_sum += d
        else:
            jump_sum -= d
        # close bond intervals whose state will change
        for k in range(3):
            b = x - 1 + k
            if b < 0:
                b += n
            elif b >= n:
                b -= n
            c1, c2 = _compensator_piece(h, ht, dtn, since[b], t, b, n, state[b])
            comp[b] += c1
            gam[b] += c2
            since[b] = t
        # close site occupancy intervals
        for s in (x, y):
            if occ[s] == 1:
                time_int += hermite_eval(h, ht, dtn, t, s) - hermite_eval(h, ht, dtn, occ_since[s], s)
        tmp = occ[x]
        occ[x] = occ[y]
        occ[y] = tmp
        for s in (x, y):
            if occ[s] == 1:
                occ_since[s] = t
        for k in range(3):
            b = x - 1 + k
            if b < 0:
                b += n
            elif b >= n:
                b -= n
            state[b] = _bond_state(occ, b, n)

    boundaryT = 0.0
    for x in range(n):
        c1, c2 = _compensator_piece(h, ht, dtn, since[x], T, x, n, state[x])
        comp[x] += c1
        gam[x] += c2
        if occ[x] == 1:
            time_int += hermite_eval(h, ht, dtn, T, x) - hermite_eval(h, ht, dtn, occ_since[x], x)
            boundaryT += hermite_eval(h, ht, dtn, T, x)

    bulk = 0.0
    bulk_g = 0.0
    for x in range(n - 1):
        bulk += n2 * comp[x]
        bulk_g += n2 * gam[x]
    slow = n2 / n * comp[n - 1]
    slow_g = n2 / n * gam[n - 1]
    return boundaryT - boundary0, time_int, bulk, slow, jump_sum, bulk_g, slow_g


# finite volumes ---------------------------------------------------------------


@njit(cache=True, nogil=True, fastmath=True)
def _fv_interior(rho, flux, dhdu_tab, k, w, perturbed, mm):
    m = rho.size
    if perturbed:
        for j in range(1, m):
            a = 0.5 * (rho[j] + rho[j - 1])
            g = (1 - w) * dhdu_tab[k, j] + w * dhdu_tab[k + 1, j]
            flux[j] = -mm * (rho[j] - rho[j - 1]) + 2.0 * a * (1 - a) * g
    else:
        for j in range(1, m):
            flux[j] = -mm * (rho[j] - rho[j - 1])


@njit(cache=True, nogil=True)
def fv_kernel(rho0, dt, nsteps, stride, perturbed, dhdu_tab, dh_tab, tab_every):
    """Explicit Euler finite-volume steps on the cut torus.

    ``dhdu_tab[k]`` holds ``d_u H`` on the m+1 faces and ``dh_tab[k]`` the
    jump ``H(0) - H(1)`` at time ``k * tab_every * dt``; values in between
    are linear in time. Returns snapshots every ``stride`` steps, the
    cut-face flux per step, and the running extrema of the density.
    """
    m = rho0.size
    rho = rho0.copy()
    nsnap = nsteps // stride + 1
    snaps = np.empty((nsnap, m))
    snaps[0, :] = rho
    cut_flux = np.empty(nsteps)
    flux = np.empty(m + 1)
    lo = rho.min()
    hi = rho.max()
    isnap = 1
    mm = float(m)
    c = dt * mm
    for step in range(nsteps):
        plus = 1.5 * rho[0] - 0.5 * rho[1]
        minus = 1.5 * rho[m - 1] - 0.5 * rho[m - 2]
        plus = min(max(plus, 0.0), 1.0)
        minus = min(max(minus, 0.0), 1.0)
        k = 0
        w = 0.0
        if perturbed:
            k = step // tab_every
            w = (step - k * tab_every) / tab_every
            if k + 1 >= dhdu_tab.shape[0]:
                k = dhdu_tab.shape[0] - 2
                w = 1.0
            jump = (1 - w) * dh_tab[k] + w * dh_tab[k + 1]
            fc = (minus * (1 - plus) * np.exp(jump)
                  - plus * (1 - minus) * np.exp(-jump))
        else:
            fc = minus - plus
        _fv_interior(rho, flux, dhdu_tab, k, w, perturbed, mm)
        flux[0] = fc
        flux[m] = fc
        cut_flux[step] = fc
        for j in range(m):
            rho[j] += c * (flux[j] - flux[j + 1])
        if (step + 1) % stride == 0:
            snaps[isnap, :] = rho
            isnap += 1
            a = rho.min()
            b = rho.max()
            if a < lo:
                lo = a
            if b > hi:
                hi = b
    return snaps, cut_flux, lo, hi
