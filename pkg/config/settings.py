"""
Configuration settings for ghlab
Caps, tolerances and defaults shared by every computation
"""

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings using Pydantic for environment variable management"""

    # Tolerances
    metric_tolerance: float = 1e-9
    ball_tolerance: float = 1e-12

    # Exact solver caps
    packing_exact_cap: int = 64
    covering_exact_cap: int = 32
    gh_exact_cap: int = 7
    gh_heuristic_budget: int = 2000

    # Above this many points greedy covering switches to the net construction
    dense_max_points: int = 4000

    # Doubling
    doubling_grid_levels: int = 3

    # Euclidean domain checks
    directions_2d: int = 64
    directions_3d: int = 256
    cone_shells: int = 8
    jones_pair_budget: int = 200

    # Meshes and covers
    max_mesh_h: float = 0.05
    cone_refinement_depth: int = 3
    cover_margin_factor: float = 4.0
    cover_max_vertices: int = 3_000_000

    # Family verdicts
    divergence_min_members: int = 4
    divergence_growth: float = 1.5

    # Runs
    default_seed: int = 0
    threads: int = 1
    output_dir: str = "./reports"
    log_level: str = "INFO"
    report_schema_version: str = "1.0"

    class Config:
        env_file = ".env"
        case_sensitive = False
        env_prefix = "GHLAB_"


# Global settings instance
settings = Settings()
