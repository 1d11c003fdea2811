"""Uncoded transmission over the semi-orthogonal MARC with the three-pair source.

Each source sends its symbol as is, so the destination sees ``X1 + X2``.
On the support {(0,0), (0,1), (1,1)} the sum identifies the pair, giving
zero errors without any coding.
"""

from __future__ import annotations

import time

import numpy as np

from .. import __version__
from ..models import somarc_source
from .core import STREAM_TRIAL, SimReport, rng_for

DEFAULT_DECODER = {0: (0, 0), 1: (0, 1), 2: (1, 1)}


def run_uncoded_somarc(trials: int, seed: int = 0, decoder: dict | None = None,
                       m: int = 1) -> SimReport:
    """Send ``m`` source letters per trial with ``X_i = S_i`` and decode the sum.

    Parameters
    ----------
    trials : int
        Number of independent trials.
    seed : int
        Base seed; one generator is derived for the whole batch.
    decoder : dict, optional
        Map from the received sum to the decoded pair. The default is the
        identifying map; passing another map is useful as a sanity check.
    m : int
        Letters per trial. A trial is wrong if any letter is.

    Returns
    -------
    SimReport
        Destination errors only (MARC accounting). The relay observes
        ``X1 xor X2`` and plays no part, so its counts stay at zero.
    """
    if trials < 1 or m < 1:
        raise ValueError("trials and m must be >= 1")
    dec = dict(DEFAULT_DECODER if decoder is None else decoder)
    if set(dec) != {0, 1, 2}:
        raise ValueError("decoder must map each sum in {0, 1, 2} to a pair")
    t0 = time.perf_counter()
    src = somarc_source().source_pair
    w = src.transpose(("S1", "S2")).weights
    rng = rng_for(seed, STREAM_TRIAL)
    flat = rng.choice(w.size, size=(trials, m), p=w.ravel())
    s1, s2 = np.unravel_index(flat, w.shape)
    y_s = s1 + s2  # destination output for X_i = S_i; X3 is unused
    table = np.array([dec[k] for k in range(3)])
    wrong = (table[y_s, 0] != s1) | (table[y_s, 1] != s2)
    errors = int(wrong.any(axis=1).sum())
    rep = SimReport("uncoded-somarc", trials, "marc", dest_block_errors=int(wrong.sum()),
                    dest_trial_errors=errors, union_trial_errors=errors,
                    relay_block_histogram=[0], dest_block_histogram=[errors],
                    first_error_histogram=[errors, trials - errors],
                    config={"trials": trials, "seed": seed, "m": m,
                            "decoder": {str(k): list(v) for k, v in dec.items()}, "version": __version__})
    rep.wall_clock_s = time.perf_counter() - t0
    return rep
