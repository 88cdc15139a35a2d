# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled solver kernel: twin of mimo_ee._core_py.run_level.

Operation order matches the Python kernel exactly (and the extension is
built with -ffp-contract=off), so both backends produce identical
iterates bit for bit.
"""

from libc.math cimport log, sqrt, fabs

import numpy as np

cdef double LN2 = log(2.0)

cdef int OK = 0
cdef int NONPOS_DENOM = 1
cdef int INNER_EXHAUSTED = 2
cdef int BACKOFF_EXHAUSTED = 3

cdef int CLAMP_FREE = 0
cdef int CLAMP_FLOOR = 1
cdef int CLAMP_CAP = 2


cdef int _inner_solve(double[::1] pl, double[::1] laml, signed char[::1] clamp,
                      double q, double wc, double we,
                      double[::1] binv, double[::1] nk, signed char[::1] grp,
                      double gamma_rm, double edt, double floor_noise,
                      double b_c, double b_e, double inner_tol, int max_inner,
                      int* sweeps_out) nogil:
    cdef int n_users = pl.shape[0]
    cdef double s1 = 0.0
    cdef int j, k, sweeps
    cdef double max_rel, pref, pre_g, floor_k, f, chi, wj, cross
    cdef double alpha, beta_aff, s_a_own, s_b_own, s_a_x, s_b_x, fa, fb
    cdef double budget, hi_x
    cdef double lam_j, wg, den, p_un, hi, lo, p_new, old, ref, rel
    cdef int code

    for j in range(n_users):
        s1 += binv[j] * pl[j]
    sweeps = 0
    while sweeps < max_inner:
        sweeps += 1
        max_rel = 0.0
        for k in range(n_users):
            # floor at current powers; self-consistent caps with later
            # users at the floors induced by p_k (affine in p_k), both for
            # the own-group budget and the edge budget seen from center
            pref = 0.0
            pre_g = 0.0
            floor_k = 0.0
            for j in range(k + 1):
                f = gamma_rm * (pref + nk[j])
                if j == k:
                    floor_k = f
                elif grp[j] == grp[k]:
                    pre_g += pl[j]
                pref += pl[j]
            alpha = pref - pl[k]
            beta_aff = 1.0
            s_a_own = 0.0
            s_b_own = 0.0
            s_a_x = 0.0
            s_b_x = 0.0
            for j in range(k + 1, n_users):
                fa = gamma_rm * (alpha + nk[j])
                fb = gamma_rm * beta_aff
                if grp[j] == grp[k]:
                    s_a_own += fa
                    s_b_own += fb
                else:
                    s_a_x += fa
                    s_b_x += fb
                alpha = alpha + fa
                beta_aff = beta_aff + fb
            chi = laml[k]
            for j in range(k):
                if grp[j] == 0:
                    wj = wc
                else:
                    wj = we
                chi -= (wj - 1.0) * laml[j]
            cross = 0.0
            for j in range(n_users):
                if j == k:
                    continue
                lam_j = edt * (s1 - binv[j] * pl[j]) + floor_noise
                cross += 1.0 / lam_j
            cross *= edt * binv[k] / LN2
            if grp[k] == 0:
                wg = wc
            else:
                wg = we
            den = q + wg + chi + cross
            if den <= 0.0:
                sweeps_out[0] = sweeps
                return NONPOS_DENOM
            p_un = 1.0 / (LN2 * den)
            if grp[k] == 0:
                budget = b_c
            else:
                budget = b_e
            hi = (budget - pre_g - s_a_own) / (1.0 + s_b_own)
            if grp[k] == 0 and s_b_x > 0.0:
                hi_x = (b_e - s_a_x) / s_b_x
                if hi_x < hi:
                    hi = hi_x
            lo = floor_k
            if hi < lo:
                hi = lo
            code = CLAMP_FREE
            p_new = p_un
            if p_new < lo:
                p_new = lo
                code = CLAMP_FLOOR
            elif p_new > hi:
                p_new = hi
                code = CLAMP_CAP
            s1 = s1 + binv[k] * (p_new - pl[k])
            old = pl[k]
            pl[k] = p_new
            clamp[k] = <signed char> code
            if p_new > old:
                ref = p_new
            else:
                ref = old
            if ref > 0.0:
                rel = fabs(p_new - old) / ref
                if rel > max_rel:
                    max_rel = rel
            elif p_new != old:
                max_rel = 1.0
        if max_rel < inner_tol:
            sweeps_out[0] = sweeps
            return OK
    sweeps_out[0] = sweeps
    return INNER_EXHAUSTED


cdef void _subgradient_step(double[::1] pl, double[::1] laml,
                            double* wc, double* we, double sc,
                            double step_wc, double step_we, double step_lam,
                            double[::1] nk, signed char[::1] grp,
                            double gamma_rm, double b_c, double b_e,
                            double[::1] floors) nogil:
    cdef int n_users = pl.shape[0]
    cdef double pref = 0.0
    cdef double s_c = 0.0
    cdef double s_e = 0.0
    cdef int j
    cdef double w, lj
    for j in range(n_users):
        floors[j] = gamma_rm * (pref + nk[j])
        if grp[j] == 0:
            s_c += pl[j]
        else:
            s_e += pl[j]
        pref += pl[j]
    w = wc[0] - step_wc * sc * (b_c - s_c)
    if w < 0.0:
        w = 0.0
    wc[0] = w
    w = we[0] - step_we * sc * (b_e - s_e)
    if w < 0.0:
        w = 0.0
    we[0] = w
    for j in range(n_users):
        lj = laml[j] - step_lam * sc * (pl[j] - floors[j])
        if lj > 0.0:
            laml[j] = lj
        else:
            laml[j] = 0.0


def run_level(double q, double[::1] p, double[::1] lam, signed char[::1] clamped,
              double[::1] binv_arr, double[::1] nk_arr, signed char[::1] grp_arr,
              double wc, double we, double gamma_rm, double edt,
              double floor_noise, double b_c, double b_e,
              double step_wc, double step_we, double step_lam, int n_steps,
              double inner_tol, int max_inner, int max_backoff):
    """Twin of _core_py.run_level; see that module for the contract."""
    cdef int n_users = p.shape[0]
    scratch_lam = np.empty(n_users, dtype=np.float64)
    scratch_p = np.empty(n_users, dtype=np.float64)
    scratch_floors = np.empty(n_users, dtype=np.float64)
    cdef double[::1] lam_s = scratch_lam
    cdef double[::1] p_s = scratch_p
    cdef double[::1] floors = scratch_floors

    cdef int total_sweeps = 0
    cdef int backoffs = 0
    cdef double scale = 1.0
    cdef int status, sw, n, retry, i
    cdef double sc, wc_s, we_s

    sw = 0
    status = _inner_solve(p, lam, clamped, q, wc, we, binv_arr, nk_arr,
                          grp_arr, gamma_rm, edt, floor_noise, b_c, b_e,
                          inner_tol, max_inner, &sw)
    total_sweeps += sw
    if status == NONPOS_DENOM:
        wc = 0.0
        we = 0.0
        for i in range(n_users):
            lam[i] = 0.0
        status = _inner_solve(p, lam, clamped, q, wc, we, binv_arr, nk_arr,
                              grp_arr, gamma_rm, edt, floor_noise, b_c, b_e,
                              inner_tol, max_inner, &sw)
        total_sweeps += sw
    if status != OK:
        return status, wc, we, total_sweeps, backoffs

    n = 0
    while n < n_steps:
        n += 1
        sc = scale / sqrt(<double> n)
        wc_s = wc
        we_s = we
        for i in range(n_users):
            lam_s[i] = lam[i]
            p_s[i] = p[i]
        _subgradient_step(p, lam, &wc, &we, sc, step_wc, step_we, step_lam,
                          nk_arr, grp_arr, gamma_rm, b_c, b_e, floors)
        status = _inner_solve(p, lam, clamped, q, wc, we, binv_arr, nk_arr,
                              grp_arr, gamma_rm, edt, floor_noise, b_c, b_e,
                              inner_tol, max_inner, &sw)
        total_sweeps += sw
        retry = 0
        while status == NONPOS_DENOM and retry < max_backoff:
            wc = wc_s
            we = we_s
            for i in range(n_users):
                lam[i] = lam_s[i]
                p[i] = p_s[i]
            scale *= 0.5
            sc = scale / sqrt(<double> n)
            _subgradient_step(p, lam, &wc, &we, sc, step_wc, step_we,
                              step_lam, nk_arr, grp_arr, gamma_rm, b_c, b_e,
                              floors)
            status = _inner_solve(p, lam, clamped, q, wc, we, binv_arr,
                                  nk_arr, grp_arr, gamma_rm, edt, floor_noise,
                                  b_c, b_e, inner_tol, max_inner, &sw)
            total_sweeps += sw
            retry += 1
            backoffs += 1
        if status == NONPOS_DENOM:
            return BACKOFF_EXHAUSTED, wc, we, total_sweeps, backoffs
        if status != OK:
            return status, wc, we, total_sweeps, backoffs

    return OK, wc, we, total_sweeps, backoffs
