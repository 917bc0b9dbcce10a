"""Multimodal (image + OpenStreetMap graph) self-supervised pretraining at desk scale."""

__version__ = "0.1.0"
