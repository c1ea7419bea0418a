"""Python access to the qcomp score-table compression library."""

from ._qcomp import (
    Advisory,
    GridSpec,
    NetworkArray,
    QcompError,
    ScoreTable,
    StateVector,
    coc_penalty,
    cpa,
    default_grid,
    evaluate_array,
    evaluate_table,
    generate_table,
    in_coc_band,
    load_array,
    load_table,
    optimal_action,
    quantize_score,
    run_cli,
    uniform_angles,
)

__all__ = [
    "Advisory",
    "GridSpec",
    "NetworkArray",
    "QcompError",
    "ScoreTable",
    "StateVector",
    "coc_penalty",
    "cpa",
    "default_grid",
    "evaluate_array",
    "evaluate_table",
    "generate_table",
    "in_coc_band",
    "load_array",
    "load_table",
    "optimal_action",
    "quantize_score",
    "run_cli",
    "uniform_angles",
]
