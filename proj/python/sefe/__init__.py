"""Structured exponential family embeddings.

Thin Python access to the C++ core: checkpoints and their analyses, the
exponential-family helpers, and the command-line driver.
"""

from ._sefe import (
    Checkpoint,
    amortize,
    dlogp_deta,
    drop_probability,
    log_prob,
    parameter_count,
    run_cli,
    spectrum,
)

__all__ = [
    "Checkpoint",
    "amortize",
    "dlogp_deta",
    "drop_probability",
    "log_prob",
    "parameter_count",
    "run_cli",
    "spectrum",
    "train",
]


def train(config, out_dir, seed=None, **overrides):
    """Train from a config file; returns the final checkpoint.

    Keyword arguments override config keys, e.g. ``train(conf, out, epochs=2)``.
    """
    args = ["train", "--config", str(config), "--out", str(out_dir)]
    for key, value in overrides.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        args += ["--set", f"{key}={value}"]
    if seed is not None:
        args += ["--seed", str(seed)]
    status, _, err = run_cli(args)
    if status != 0:
        raise RuntimeError(err.strip())
    import os

    return Checkpoint.load(os.path.join(str(out_dir), "checkpoint.sefe"))
