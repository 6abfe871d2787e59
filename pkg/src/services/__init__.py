from .artifact_store import ArtifactHeader, ArtifactStore, read_cellset, read_graph

__all__ = ["ArtifactHeader", "ArtifactStore", "read_cellset", "read_graph"]
