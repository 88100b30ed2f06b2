"""Semi-supervised acute ischemic stroke lesion segmentation pipeline.

Stages: ADC computation and slice preprocessing (:mod:`strokeseg.volume`),
dual-head CNN inference (:mod:`strokeseg.network`), CAM fusion into a
probability map (:mod:`strokeseg.cam`), K-Means candidate extraction
(:mod:`strokeseg.kmeans`), seeded region growing (:mod:`strokeseg.regiongrow`),
pixel- and lesion-wise evaluation (:mod:`strokeseg.metrics`), (delta, K) grid
tuning (:mod:`strokeseg.tuner`), and a synthetic phantom harness
(:mod:`strokeseg.phantom`). The ``strokeseg`` CLI composes them end to end.
"""

__version__ = "0.1.0"
