"""Finite-length Monte-Carlo simulators of the coding schemes."""

from .core import (
    MAX_CODEWORDS,
    BlockMarkovConfig,
    CodebookTooLarge,
    SimReport,
    sweep_csv,
    wilson_interval,
)
from .cpm import build_cpm_a_codebook, build_cpm_b_codebook, run_cpm_scheme_a, run_cpm_scheme_b
from .fading_frame import (
    ErgodicEstimate,
    GaussianMarcFrame,
    estimate_ergodic_rate,
    simulate_fading_frame,
)
from .separation import CodebookSpec, build_separation_codebook, run_separation_df
from .somarc import run_uncoded_somarc

_BUILDERS = {"sep": build_separation_codebook, "cpm-a": build_cpm_a_codebook, "cpm-b": build_cpm_b_codebook}
_RUNNERS = {"sep": run_separation_df, "cpm-a": run_cpm_scheme_a, "cpm-b": run_cpm_scheme_b}


def build_codebook(kind: str, model, ch, inp, cfg: BlockMarkovConfig) -> CodebookSpec:
    """Codebook for scheme ``kind`` ('sep', 'cpm-a' or 'cpm-b'), deterministic per ``cfg.seed``."""
    if kind not in _BUILDERS:
        raise ValueError(f"unknown scheme {kind!r}; expected one of {sorted(_BUILDERS)}")
    return _BUILDERS[kind](model, ch, inp, cfg)


def run_scheme(kind: str, model, ch, inp, cfg: BlockMarkovConfig, trials: int,
               codebook: CodebookSpec | None = None) -> SimReport:
    if kind not in _RUNNERS:
        raise ValueError(f"unknown scheme {kind!r}; expected one of {sorted(_RUNNERS)}")
    return _RUNNERS[kind](model, ch, inp, cfg, trials, codebook=codebook)


__all__ = [
    "MAX_CODEWORDS", "BlockMarkovConfig", "CodebookSpec", "CodebookTooLarge", "ErgodicEstimate",
    "GaussianMarcFrame", "SimReport", "build_codebook", "build_cpm_a_codebook", "build_cpm_b_codebook",
    "build_separation_codebook", "estimate_ergodic_rate", "run_cpm_scheme_a", "run_cpm_scheme_b",
    "run_scheme", "run_separation_df", "run_uncoded_somarc", "simulate_fading_frame", "sweep_csv",
    "wilson_interval",
]
