"""Tile-indexed vectorized global map store with BEV prior heatmaps,
seeded map-corruption operators, and Chamfer-distance AP evaluation."""

from .errors import ConfigError, GeometryError, MapDecodeError
from .geometry import (
    EgoPose,
    PerceptionRange,
    as_polyline,
    ego_to_global,
    global_to_ego,
    intersects_range,
    polyline_length,
    resample_polyline,
    wrap_angle,
)
from .tilemap import (
    CLASS_NAMES,
    GlobalMap,
    Layer,
    MapClass,
    MapVector,
    RefreshConfig,
    TileIndex,
    adjacent_tiles,
    read_vector_file,
    tile_index,
    tile_indices,
    vectors_equal,
    write_vector_file,
)
from .perturb import (
    OPERATOR_TAGS,
    ElementPool,
    PerturbationSpec,
    read_spec_file,
    write_spec_file,
)
from .priors import (
    Mode,
    ModeRatio,
    PriorHeatmaps,
    RasterConfig,
    assemble_from_vectors,
    assemble_priors,
    rasterize,
    read_heatmap,
    sample_mode,
    select_inference_mode,
    vertical_filter,
    write_heatmap,
    write_pgm,
)
from .evaluation import (
    DEFAULT_THRESHOLDS,
    EXTENDED_THRESHOLDS,
    APReport,
    average_precision,
    chamfer_distance,
    evaluate,
)
from .sim import (
    ReplaySpec,
    RunReport,
    WorldSpec,
    bench,
    check_latency_budget,
    generate_world,
    read_trajectory_file,
    replay_predict,
    run_episode,
    write_trajectory_file,
)

__version__ = "0.1.0"
