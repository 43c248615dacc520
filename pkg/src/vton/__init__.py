"""Virtual try-on toolkit.

Stages: person detection and cropping, body-region segmentation with a
nested-U network, conditional mask-to-cloth translation, and overlay
compositing — plus dataset tooling, paired geometric augmentation,
image-quality metrics, training harnesses, a CLI, and an HTTP service.
"""

__version__ = "0.1.0"
