"""Ericson fluctuation statistics of simulated scattering spectra."""

import json
from os import PathLike
from typing import Any, Mapping, Union

from ._core import (
    ConfigError,
    DomainError,
    Error,
    autocorrelation,
    count_maxima,
    eval_ansatz,
    fit_ansatz,
    sample_goe,
    tetrahedron_s_matrix,
    version,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "autocorrelation",
    "count_maxima",
    "eval_ansatz",
    "fit_ansatz",
    "run",
    "sample_goe",
    "tetrahedron_s_matrix",
    "version",
]

__version__ = version()


def run(config: Union[Mapping[str, Any], str, PathLike], write: bool = False) -> dict:
    """Run the pipeline for a config given as a mapping, JSON text or file path.

    Returns product points, the ansatz fit, chi ratios and the exit code the
    command-line tool would report. Output files are written only with
    ``write=True``.
    """
    from ._core import run_json

    if isinstance(config, Mapping):
        text = json.dumps(config)
    elif isinstance(config, str) and config.lstrip().startswith("{"):
        text = config
    else:
        with open(config, encoding="utf-8") as handle:
            text = handle.read()
    return run_json(text, write)
