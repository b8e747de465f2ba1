"""Rigging apparatus on lightlike hypersurfaces of GRW spacetimes."""
