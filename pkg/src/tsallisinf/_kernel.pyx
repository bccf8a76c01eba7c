# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled episode loop.

Mirrors _kernel_py.run_episode operation for operation: per round, a
safeguarded Newton solve for the playing distribution, inverse-CDF
sampling from a pre-drawn uniform, then the estimator update. Kept in one
function so the whole horizon runs without touching the interpreter.
"""

from libc.math cimport NAN, fabs, sqrt

import numpy as np

from .errors import SolverError


def run_episode(double[:, ::1] losses, double[::1] uniforms, int estimator_code):
    """Play one episode; returns (actions, incurred losses, weight rows)."""
    cdef Py_ssize_t n_rounds = losses.shape[0]
    cdef Py_ssize_t n_arms = losses.shape[1]
    if uniforms.shape[0] != n_rounds:
        raise ValueError("uniforms length must match the number of rounds")
    if estimator_code != 0 and estimator_code != 1:
        raise ValueError(f"unknown estimator code {estimator_code}")

    actions_arr = np.empty(n_rounds, dtype=np.int64)
    incurred_arr = np.empty(n_rounds, dtype=np.float64)
    weights_arr = np.empty((n_rounds, n_arms), dtype=np.float64)
    cdef long long[::1] actions = actions_arr
    cdef double[::1] incurred = incurred_arr
    cdef double[:, ::1] weights = weights_arr

    estimates_arr = np.zeros(n_arms, dtype=np.float64)
    shifted_arr = np.empty(n_arms, dtype=np.float64)
    cdef double[::1] estimates = estimates_arr
    cdef double[::1] shifted = shifted_arr

    cdef double tol = 1e-12
    cdef double gap_floor = 1e-14
    cdef double sqrt_k = sqrt(<double> n_arms)
    cdef double warm = NAN
    cdef double eta, eta_sq, m, lo, hi, z, z_new, phi, dphi
    cdef double gap, ratio, w_i, u, cum, loss, b
    cdef Py_ssize_t r, i, arm, it
    cdef bint converged

    for r in range(n_rounds):
        eta = 4.0 / sqrt(<double> (r + 1))

        m = estimates[0]
        for i in range(1, n_arms):
            if estimates[i] < m:
                m = estimates[i]
        for i in range(n_arms):
            shifted[i] = estimates[i] - m

        lo = -2.0 * sqrt_k / eta
        hi = -2.0 / eta
        z = warm if lo < warm < hi else 0.5 * (lo + hi)

        converged = False
        phi = 0.0
        for it in range(100):
            phi = -1.0
            dphi = 0.0
            for i in range(n_arms):
                gap = shifted[i] - z
                if gap < gap_floor:
                    gap = gap_floor
                ratio = 2.0 / (eta * gap)
                w_i = ratio * ratio
                weights[r, i] = w_i
                phi += w_i
                dphi += w_i * (2.0 / gap)
            if fabs(phi) <= tol:
                converged = True
                break
            if phi > 0.0:
                hi = z
            else:
                lo = z
            z_new = z - phi / dphi
            if not (lo < z_new < hi):
                z_new = 0.5 * (lo + hi)
            z = z_new
        if not converged:
            raise SolverError(
                f"weight solve did not converge at round {r + 1} "
                f"(|sum w - 1| = {fabs(phi):.3e})",
                residual=phi,
                round_index=r + 1,
            )
        warm = z

        u = uniforms[r]
        arm = n_arms - 1
        cum = 0.0
        for i in range(n_arms):
            cum += weights[r, i]
            if u <= cum:
                arm = i
                break
        loss = losses[r, arm]
        actions[r] = arm
        incurred[r] = loss

        if estimator_code == 0:
            eta_sq = eta * eta
            for i in range(n_arms):
                if i != arm and weights[r, i] >= eta_sq:
                    estimates[i] += 0.5
            b = 0.5 if weights[r, arm] >= eta_sq else 0.0
            estimates[arm] += (loss - b) / weights[r, arm] + b
        else:
            estimates[arm] += loss / weights[r, arm]

    return actions_arr, incurred_arr, weights_arr
