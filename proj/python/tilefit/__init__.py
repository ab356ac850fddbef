"""Sparse quadtree-tile density estimation."""

from ._core import (
    ArgumentError,
    Bounds,
    ContractError,
    DegenerateDensityError,
    EmptyDataError,
    Error,
    GridSpec,
    ParseError,
    SolverError,
    SparseDensity,
    TileId,
    dictionary_size,
    eval_point,
    export_grid_csv,
    export_tiles_geojson,
    fit_points,
    gmm6_truth,
    intersect,
    load_density,
    region_sum,
    run_experiment,
    sample_gmm6,
    save_density,
    tile_at,
    tile_index,
    tile_of,
    tv_distance,
    union,
    unique_values,
)

__version__ = "0.1.0"
