"""Pure-Python vote-resolution kernels.

Behaviourally identical to the compiled ``_ckernels`` module; used when the
extension is not built or ``JUDGEPANEL_PURE_PYTHON`` is set.

Vote codes: 0 = absent/unknown, 1 = Good, 2 = Bad. Severities are ladder
ranks 0..3 with -1 meaning none. Decision codes: 0 Unknown, 1 Good, 2 Bad,
3 Conflict.
"""

from __future__ import annotations

import math

import numpy as np

VOTE_NONE, VOTE_GOOD, VOTE_BAD = 0, 1, 2
DEC_UNKNOWN, DEC_GOOD, DEC_BAD, DEC_CONFLICT = 0, 1, 2, 3
EPS = 1e-9


def vote_rows(votes, severities, threshold, projection):
    n_rows = len(votes)
    good_out = np.zeros(n_rows, dtype=np.int32)
    bad_out = np.zeros(n_rows, dtype=np.int32)
    unknown_out = np.zeros(n_rows, dtype=np.int32)
    decision_out = np.zeros(n_rows, dtype=np.int8)
    severity_out = np.full(n_rows, -1, dtype=np.int8)
    conflicted_out = np.zeros(n_rows, dtype=np.int8)
    agreement_out = np.full(n_rows, np.nan, dtype=np.float64)

    votes_l = votes.tolist() if hasattr(votes, "tolist") else votes
    sev_l = severities.tolist() if hasattr(severities, "tolist") else severities
    proj = list(projection)

    for i in range(n_rows):
        row = votes_l[i]
        sev_row = sev_l[i]
        g = row.count(VOTE_GOOD)
        b = row.count(VOTE_BAD)
        good_out[i] = g
        bad_out[i] = b
        unknown_out[i] = len(row) - g - b
        valid = g + b
        if valid == 0:
            continue
        win, top = (VOTE_GOOD, g) if g >= b else (VOTE_BAD, b)
        agreement_out[i] = top / valid

        sev_all = -1
        sev_win = -1
        for v, s in zip(row, sev_row):
            if v == VOTE_NONE:
                continue
            if s > sev_all:
                sev_all = s
            if v == win and s > sev_win:
                sev_win = s

        if g != b and top / valid >= threshold - EPS:
            decision_out[i] = DEC_GOOD if win == VOTE_GOOD else DEC_BAD
            severity_out[i] = sev_win
        else:
            conflicted_out[i] = 1
            severity_out[i] = sev_all
            if g == b or sev_all < 0:
                decision_out[i] = DEC_CONFLICT
            else:
                decision_out[i] = proj[sev_all]

    return good_out, bad_out, unknown_out, decision_out, severity_out, conflicted_out, agreement_out


def bin_counts(values, n_bins):
    counts = np.zeros(n_bins, dtype=np.int64)
    for x in values:
        x = float(x)
        if math.isnan(x):
            continue
        idx = min(max(int(x * n_bins + EPS), 0), n_bins - 1)
        counts[idx] += 1
    return counts
