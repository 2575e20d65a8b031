from .catalog import CATALOG, CatalogEntry, get
from .config import ConfigError, ExperimentConfig

__all__ = ["CATALOG", "CatalogEntry", "ConfigError", "ExperimentConfig", "get"]
