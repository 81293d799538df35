"""SF-Loc desk-scale pipeline.

Geo-referenced sparse structure-frame mapping and coarse-to-fine map-aided
localization on synthetic worlds:
- geom: SE(3)/SO(3) algebra and the pinhole camera
- dba: dense bundle adjustment linearization, Schur reduction, co-visibility
- fgraph: factor-graph engine (IMU, GNSS, DBA Hessian factors, marginalization)
- simworld: deterministic synthetic sessions and perception providers
- mapstore: the visual-structure-frame map and its file format
- sasloc: multi-frame place recognition (SAS) and baselines
- fineloc: PnP-RANSAC and multi-frame fine pose estimation
- cli: orchestration, metrics and reports
"""

__version__ = "0.1.0"
