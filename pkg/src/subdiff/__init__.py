"""Implicit finite differences on non-uniform time meshes for subdiffusion."""
