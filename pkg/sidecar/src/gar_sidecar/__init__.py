"""Scoring service for the gar reranking engine's remote scorer."""

from gar_sidecar.service import create_server, resolve_scorer, stable_hash_unit, stub_score

__all__ = ["create_server", "resolve_scorer", "stable_hash_unit", "stub_score"]
