"""Model store."""

from .model_store import FORMAT_VERSION, ModelStore, StoredModel, config_digest

__all__ = ["FORMAT_VERSION", "ModelStore", "StoredModel", "config_digest"]
