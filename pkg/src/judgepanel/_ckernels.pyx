# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled vote-resolution kernels. Mirrors judgepanel._pykernels exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    VOTE_NONE = 0
    VOTE_GOOD = 1
    VOTE_BAD = 2
    DEC_UNKNOWN = 0
    DEC_GOOD = 1
    DEC_BAD = 2
    DEC_CONFLICT = 3

cdef double EPS = 1e-9


def vote_rows(const signed char[:, ::1] votes,
              const signed char[:, ::1] severities,
              double threshold,
              const signed char[::1] projection):
    cdef Py_ssize_t n_rows = votes.shape[0]
    cdef Py_ssize_t n_cols = votes.shape[1]
    cdef Py_ssize_t i, j
    cdef int g, b, u, valid, win, top, sev, sev_all, sev_win
    cdef signed char v

    good_arr = np.zeros(n_rows, dtype=np.int32)
    bad_arr = np.zeros(n_rows, dtype=np.int32)
    unknown_arr = np.zeros(n_rows, dtype=np.int32)
    decision_arr = np.zeros(n_rows, dtype=np.int8)
    severity_arr = np.full(n_rows, -1, dtype=np.int8)
    conflicted_arr = np.zeros(n_rows, dtype=np.int8)
    agreement_arr = np.full(n_rows, np.nan, dtype=np.float64)

    cdef int[::1] good_v = good_arr
    cdef int[::1] bad_v = bad_arr
    cdef int[::1] unknown_v = unknown_arr
    cdef signed char[::1] decision_v = decision_arr
    cdef signed char[::1] severity_v = severity_arr
    cdef signed char[::1] conflicted_v = conflicted_arr
    cdef double[::1] agreement_v = agreement_arr

    for i in range(n_rows):
        g = 0
        b = 0
        u = 0
        for j in range(n_cols):
            v = votes[i, j]
            if v == VOTE_GOOD:
                g += 1
            elif v == VOTE_BAD:
                b += 1
            else:
                u += 1
        good_v[i] = g
        bad_v[i] = b
        unknown_v[i] = u
        valid = g + b
        if valid == 0:
            continue
        if g >= b:
            top = g
            win = VOTE_GOOD
        else:
            top = b
            win = VOTE_BAD
        agreement_v[i] = <double>top / <double>valid

        sev_all = -1
        sev_win = -1
        for j in range(n_cols):
            v = votes[i, j]
            if v == VOTE_NONE:
                continue
            sev = severities[i, j]
            if sev > sev_all:
                sev_all = sev
            if v == win and sev > sev_win:
                sev_win = sev

        if g != b and <double>top / <double>valid >= threshold - EPS:
            decision_v[i] = DEC_GOOD if win == VOTE_GOOD else DEC_BAD
            severity_v[i] = sev_win
        else:
            conflicted_v[i] = 1
            severity_v[i] = sev_all
            if g == b:
                decision_v[i] = DEC_CONFLICT
            elif sev_all >= 0:
                decision_v[i] = projection[sev_all]
            else:
                decision_v[i] = DEC_CONFLICT

    return (good_arr, bad_arr, unknown_arr, decision_arr, severity_arr,
            conflicted_arr, agreement_arr)


def bin_counts(const double[::1] values, int n_bins):
    cdef Py_ssize_t i
    cdef Py_ssize_t n = values.shape[0]
    cdef int idx
    cdef double x
    counts_arr = np.zeros(n_bins, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    for i in range(n):
        x = values[i]
        if x != x:
            continue
        idx = <int>(x * n_bins + EPS)
        if idx < 0:
            idx = 0
        elif idx >= n_bins:
            idx = n_bins - 1
        counts[idx] += 1
    return counts_arr
