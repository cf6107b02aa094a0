from ._hdbscan import HDBSCAN, hdbscan
from ._partitional import KMeans, KModes, KPrototypes, huang_gamma, kmeans, kmodes, kprototypes
from .twostep import (
    METHODS,
    Aggregation,
    CategoryModel,
    ScanRow,
    build_categories,
    derive_seed,
    group_buildings,
    normalized_coordinates,
    normalized_features,
    read_aggregation_csv,
    representative_bias,
    scan,
    two_step,
    write_aggregation_csv,
    write_scan_csv,
)

__all__ = [
    "HDBSCAN", "hdbscan", "KMeans", "KModes", "KPrototypes", "huang_gamma", "kmeans", "kmodes",
    "kprototypes", "METHODS", "Aggregation", "CategoryModel", "ScanRow", "build_categories",
    "derive_seed", "group_buildings", "normalized_coordinates", "normalized_features",
    "read_aggregation_csv", "representative_bias", "scan", "two_step", "write_aggregation_csv",
    "write_scan_csv",
]
