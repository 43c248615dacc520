from .discriminator import (
    DiscriminatorSpec,
    FeatureStack,
    MultiScaleDiscriminator,
    PatchDiscriminator,
    build_discriminator,
    discriminator_forward,
    image_pyramid,
)
from .generator import (
    CoarseToFineGenerator,
    GeneratorError,
    GeneratorSpec,
    UNetGenerator,
    build_generator,
    generator_forward,
    masks_to_tensor,
)
from .losses import (
    GanLossError,
    GanTerms,
    IdentityExtractor,
    RandConvExtractor,
    fm_loss,
    gan_loss,
    get_extractor,
    perceptual_loss,
    register_extractor,
    total_objective,
)
from .train import (
    GanTrainConfig,
    TrainingDiverged,
    load_gan_generator,
    load_gan_models,
    save_gan_checkpoint,
    train_translation,
)

__all__ = [
    "GeneratorSpec",
    "GeneratorError",
    "CoarseToFineGenerator",
    "UNetGenerator",
    "build_generator",
    "generator_forward",
    "masks_to_tensor",
    "DiscriminatorSpec",
    "FeatureStack",
    "PatchDiscriminator",
    "MultiScaleDiscriminator",
    "build_discriminator",
    "discriminator_forward",
    "image_pyramid",
    "gan_loss",
    "fm_loss",
    "perceptual_loss",
    "total_objective",
    "GanTerms",
    "GanLossError",
    "IdentityExtractor",
    "RandConvExtractor",
    "get_extractor",
    "register_extractor",
    "GanTrainConfig",
    "train_translation",
    "TrainingDiverged",
    "save_gan_checkpoint",
    "load_gan_generator",
    "load_gan_models",
]
