from pydantic_settings import BaseSettings


class CisSettings(BaseSettings):
    """Numerical settings shared by the computation modules."""

    # Points within this distance of X are accepted by evaluate()
    state_tolerance: float = 1e-9

    # Round interval images outward at every arithmetic step
    outward_rounding: bool = True

    # Per-dimension partition of U used for models that are not affine in u
    default_input_parts: int = 8

    # Source cells handled per graph-construction task
    graph_chunk_size: int = 8192

    # Product graphs are for small-scale verification only
    max_product_cells: int = 4_000_000

    # Largest grid for which a dense occupancy array is allocated
    max_dense_cells: int = 200_000_000

    # Invariance audit defaults
    audit_input_grid: int = 11
    audit_samples: int = 10_000

    class Config:
        env_prefix = "CIS_"
        case_sensitive = False


# Global settings instance
SETTINGS = CisSettings()
