"""Concept typicality alignment harness."""

import sys

from ._typicality import (
    TypicalityError,
    cosine_similarity,
    format_fixed4,
    fractional_ranks,
    ols2_standardized,
    run_cli,
    single_image_stability,
    spearman,
    standardize,
    typicality_scores,
)

__all__ = [
    "TypicalityError",
    "cosine_similarity",
    "format_fixed4",
    "fractional_ranks",
    "ols2_standardized",
    "run_cli",
    "single_image_stability",
    "spearman",
    "standardize",
    "typicality_scores",
    "main",
]


def main(argv=None):
    code, out, err = run_cli(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
