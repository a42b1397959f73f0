#!/usr/bin/env python3
"""Noisy concentric-ellipse benchmark comparing normalization mappings.

Samples 75 points from three concentric ellipses (axis ratio 2:1, scaled
1:2:3, rotated 3pi/4), appends five linear mixture variables, centers, and
adds 5% Gaussian noise.  For both coefficient and gradient normalization it
searches for a tolerance producing exactly five linear vanishing
polynomials plus degree-2 structure, then reports basis sizes, norm ratios
under both mappings, and fit runtimes.  Run:

    python3 scripts/ellipse_experiment.py [seed]
"""

import math
import sys
import time

import numpy as np

from avibasis import (
    ConcentricEllipses,
    DatasetSpec,
    EpsilonTarget,
    FitConfig,
    NormalizationKind,
    epsilon_search,
    fit,
    generate_dataset,
    n_ratio,
)

MAX_DEGREE = 6


def build_dataset(seed):
    spec = DatasetSpec(
        variety=ConcentricEllipses(
            radii=(
                (math.sqrt(2.0), 1.0 / math.sqrt(2.0)),
                (2.0 * math.sqrt(2.0), 2.0 / math.sqrt(2.0)),
                (3.0 * math.sqrt(2.0), 3.0 / math.sqrt(2.0)),
            ),
            rotation=3.0 * math.pi / 4.0,
        ),
        samples=75,
        extra_linear_vars=(0.0, 0.2, 0.5, 0.8, 1.0),
        noise_std_fraction=0.05,
        seed=seed,
    )
    return generate_dataset(spec)


def run(dataset, label, kind, target, grid):
    result = epsilon_search(
        dataset, target, normalization=kind, grid=grid, max_degree=MAX_DEGREE
    )
    if not result.found:
        print(f"{label:>12} | no tolerance on the grid satisfies the target")
        return
    start = time.perf_counter()
    model = fit(
        dataset,
        FitConfig(epsilon=result.epsilon, normalization=kind, max_degree=MAX_DEGREE),
    )
    elapsed_ms = 1e3 * (time.perf_counter() - start)
    ratio_c = n_ratio(model, NormalizationKind.coefficient())
    ratio_g = n_ratio(model, NormalizationKind.gradient(), dataset)
    g_counts = [g for g, _ in model.degree_counts()]
    print(
        f"{label:>12} | eps {result.epsilon:8.3g} | bases {sum(g_counts):3d} "
        f"{g_counts} | coef-ratio {ratio_c:9.3g} | grad-ratio {ratio_g:9.3g} "
        f"| fit {elapsed_ms:6.1f} ms"
    )


def main():
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    dataset = build_dataset(seed)
    scale = float(np.linalg.norm(dataset.points, axis=1).mean())
    print(
        f"dataset: {dataset.num_points} points, {dataset.num_vars} variables "
        f"(seed {seed}); norm ratio = max/min basis norm under the mapping"
    )
    # The gradient lane is tuned for the five linear mixture relations plus
    # quadratic structure; the union of 2:1 ellipses admits no quadratic
    # vanishing polynomial, so the coefficient lane (which keeps quadratics
    # nonvanishing on this grid) is tuned for the linear relations only.
    # Its scan grid is kept coarse: symbolic expansions make every
    # coefficient-normalized fit orders of magnitude slower.
    run(
        dataset,
        "coefficient",
        NormalizationKind.coefficient(),
        EpsilonTarget(num_linear=5, d_min=2, num_at_dmin=0),
        np.geomspace(0.25, 1.3, 10) * scale,
    )
    run(
        dataset,
        "gradient",
        NormalizationKind.gradient(),
        EpsilonTarget(num_linear=5, d_min=2, num_at_dmin=2),
        np.geomspace(0.1, 1.5, 24) * scale,
    )


if __name__ == "__main__":
    main()
