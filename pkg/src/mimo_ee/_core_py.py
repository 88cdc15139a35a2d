"""Pure-Python solver kernel: the hot loop of one bisection level.

`run_level` alternates closed-form Gauss-Seidel power updates with
projected-subgradient multiplier updates for a fixed EE parameter q.
The compiled extension `mimo_ee._core` implements the same function with
identical operation order; either module can back `optimizer.solve`.

Users are indexed in descending large-scale-gain order here; callers sort
before invoking the kernel and unsort afterwards.  Errors are reported as
status codes (not exceptions) so the two kernels stay twin-compatible.
"""

from __future__ import annotations

import math

LN2 = math.log(2.0)

OK = 0
NONPOS_DENOM = 1          # power-update denominator <= 0
INNER_EXHAUSTED = 2       # Gauss-Seidel sweep budget exhausted
BACKOFF_EXHAUSTED = 3     # step-size backoff budget exhausted

CLAMP_FREE = 0
CLAMP_FLOOR = 1
CLAMP_CAP = 2
CLAMP_BUDGET = 3          # set by the feasibility repair, outside the kernel


def update_user(k, pl, s1, q, wc, we, laml, binv, nk, grp,
                gamma_rm, edt, floor_noise, b_c, b_e):
    """One closed-form update of user k's power at the current iterate.

    Returns (status, p_new, p_unclamped, clamp_code, s1_new) without
    mutating `pl`; `s1` is the running sum of p_j / beta_j.
    """
    n_users = len(pl)

    # Floor of user k at the current powers, and self-consistent caps: the
    # largest p_k keeping every group budget satisfiable with earlier users
    # at their committed powers and all later users at the floors induced
    # by p_k.  Induced floors are affine in p_k (prefix = alpha +
    # beta * p_k), so each cap solves a linear equation; using induced
    # rather than lagged floors keeps the sweep stable, and the cross-group
    # bound stops center spending from pricing the edge floors out of the
    # edge budget (no multiplier can push a floor-pinned user down).
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

    # chi collects the minimum-rate prices of user k and its predecessors.
    chi = laml[k]
    for j in range(k):
        wj = wc if grp[j] == 0 else we
        chi -= (wj - 1.0) * laml[j]

    # Cross-interference stationarity term: each other user's lower-bound
    # denominator evaluated at the current powers.
    cross = 0.0
    for j in range(n_users):
        if j == k:
            continue
        lam_j = edt * (s1 - binv[j] * pl[j]) + floor_noise
        cross += 1.0 / lam_j
    cross *= edt * binv[k] / LN2

    wg = wc if grp[k] == 0 else we
    den = q + wg + chi + cross
    if den <= 0.0:
        return NONPOS_DENOM, 0.0, 0.0, CLAMP_FREE, s1

    p_un = 1.0 / (LN2 * den)
    budget = b_c if grp[k] == 0 else b_e
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
    s1_new = s1 + binv[k] * (p_new - pl[k])
    return OK, p_new, p_un, code, s1_new


def inner_solve(pl, laml, clamp, q, wc, we, binv, nk, grp, gamma_rm, edt,
                floor_noise, b_c, b_e, inner_tol, max_inner):
    """Gauss-Seidel sweeps of `update_user` to the coupled fixed point.

    Mutates pl and clamp in place; returns (status, sweeps).
    """
    n_users = len(pl)
    s1 = 0.0
    for j in range(n_users):
        s1 += binv[j] * pl[j]
    sweeps = 0
    while sweeps < max_inner:
        sweeps += 1
        max_rel = 0.0
        for k in range(n_users):
            status, p_new, _p_un, code, s1 = update_user(
                k, pl, s1, q, wc, we, laml, binv, nk, grp,
                gamma_rm, edt, floor_noise, b_c, b_e)
            if status != OK:
                return status, sweeps
            old = pl[k]
            pl[k] = p_new
            clamp[k] = code
            ref = p_new if p_new > old else old
            if ref > 0.0:
                rel = abs(p_new - old) / ref
                if rel > max_rel:
                    max_rel = rel
            elif p_new != old:
                max_rel = 1.0
        if max_rel < inner_tol:
            return OK, sweeps
    return INNER_EXHAUSTED, sweeps


def subgradient_step(pl, laml, wc, we, sc, step_wc, step_we, step_lam,
                     binv, nk, grp, gamma_rm, b_c, b_e):
    """One projected subgradient step on (omega_c, omega_e, lambda) with
    step scale `sc`; mutates laml, returns (wc, we)."""
    n_users = len(pl)
    pref = 0.0
    s_c = 0.0
    s_e = 0.0
    floors = [0.0] * n_users
    for j in range(n_users):
        floors[j] = gamma_rm * (pref + nk[j])
        if grp[j] == 0:
            s_c += pl[j]
        else:
            s_e += pl[j]
        pref += pl[j]
    wc = wc - step_wc * sc * (b_c - s_c)
    if wc < 0.0:
        wc = 0.0
    we = we - step_we * sc * (b_e - s_e)
    if we < 0.0:
        we = 0.0
    for j in range(n_users):
        lj = laml[j] - step_lam * sc * (pl[j] - floors[j])
        laml[j] = lj if lj > 0.0 else 0.0
    return wc, we


def run_level(q, p, lam, clamped, binv_arr, nk_arr, grp_arr, wc, we,
              gamma_rm, edt, floor_noise, b_c, b_e,
              step_wc, step_we, step_lam, n_steps,
              inner_tol, max_inner, max_backoff):
    """Multiplier/power loop for one bisection level.

    p (float64), lam (float64) and clamped (int8) are numpy arrays updated
    in place.  Returns (status, wc, we, inner_iters, backoffs).
    """
    n_users = p.shape[0]
    pl = [float(p[i]) for i in range(n_users)]
    laml = [float(lam[i]) for i in range(n_users)]
    clamp = [int(clamped[i]) for i in range(n_users)]
    binv = [float(binv_arr[i]) for i in range(n_users)]
    nk = [float(nk_arr[i]) for i in range(n_users)]
    grp = [int(grp_arr[i]) for i in range(n_users)]

    def finish(status):
        for i in range(n_users):
            p[i] = pl[i]
            lam[i] = laml[i]
            clamped[i] = clamp[i]
        return status

    total_sweeps = 0
    backoffs = 0
    scale = 1.0

    status, sw = inner_solve(pl, laml, clamp, q, wc, we, binv, nk, grp,
                             gamma_rm, edt, floor_noise, b_c, b_e,
                             inner_tol, max_inner)
    total_sweeps += sw
    if status == NONPOS_DENOM:
        # Warm-started multipliers are infeasible at this q; restart cold.
        wc = 0.0
        we = 0.0
        for i in range(n_users):
            laml[i] = 0.0
        status, sw = inner_solve(pl, laml, clamp, q, wc, we, binv, nk, grp,
                                 gamma_rm, edt, floor_noise, b_c, b_e,
                                 inner_tol, max_inner)
        total_sweeps += sw
    if status != OK:
        return finish(status), wc, we, total_sweeps, backoffs

    n = 0
    while n < n_steps:
        n += 1
        sc = scale / math.sqrt(n)
        wc_s = wc
        we_s = we
        lam_s = laml[:]
        p_s = pl[:]
        wc, we = subgradient_step(pl, laml, wc, we, sc, step_wc, step_we,
                                  step_lam, binv, nk, grp, gamma_rm, b_c, b_e)
        status, sw = inner_solve(pl, laml, clamp, q, wc, we, binv, nk, grp,
                                 gamma_rm, edt, floor_noise, b_c, b_e,
                                 inner_tol, max_inner)
        total_sweeps += sw
        retry = 0
        while status == NONPOS_DENOM and retry < max_backoff:
            # Undo the update and retry the same step with half the scale.
            wc = wc_s
            we = we_s
            for i in range(n_users):
                laml[i] = lam_s[i]
                pl[i] = p_s[i]
            scale *= 0.5
            sc = scale / math.sqrt(n)
            wc, we = subgradient_step(pl, laml, wc, we, sc, step_wc, step_we,
                                      step_lam, binv, nk, grp, gamma_rm,
                                      b_c, b_e)
            status, sw = inner_solve(pl, laml, clamp, q, wc, we, binv, nk,
                                     grp, gamma_rm, edt, floor_noise,
                                     b_c, b_e, inner_tol, max_inner)
            total_sweeps += sw
            retry += 1
            backoffs += 1
        if status == NONPOS_DENOM:
            return finish(BACKOFF_EXHAUSTED), wc, we, total_sweeps, backoffs
        if status != OK:
            return finish(status), wc, we, total_sweeps, backoffs

    return finish(OK), wc, we, total_sweeps, backoffs
