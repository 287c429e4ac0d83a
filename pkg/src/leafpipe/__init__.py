"""leafpipe: leaf-disease image pipeline.

Preprocessing (resize, grayscale, normalization, Gaussian blur), Otsu
thresholding, Canny edge detection, six augmentation operators, a small
trainable CNN with SGD, and classification reporting.
"""

# the composite augment() stays on the submodule: re-exporting it here would
# shadow the leafpipe.augment module itself
from .augment import (AugmentConfig, ColorPCA, fit_color_pca, flip_vertical,
                      gamma_correct, inject_noise, pca_color_augment,
                      random_rotate, random_scale)
from .dataset import (Batch, BatchPipeline, LabeledDataset, SplitDataset,
                      scan_dataset, split)
from .edge import EdgeMap, GradientField, canny, gradient, hysteresis, nonmax_suppress
from .errors import DataError, NumericError, PipelineError
from .filters import (GaussianKernel, Kernel2D, convolve2d, gaussian_blur,
                      gaussian_kernel)
from .imgcore import (ImageBuffer, NormalizedImage, load_image, normalize,
                      resize, save_image, to_grayscale)
from .metrics import (ConfusionMatrix, EpochRecord, accuracy, confusion,
                      export_confusion, export_history, precision, recall)
from .nn import (DEFAULT_ARCH, Network, TrainConfig, build_network,
                 load_checkpoint, loss_softmax_xent, predict, save_checkpoint,
                 sgd_step, train)
from .rng import Rng, mix64
from .segment import Histogram256, OtsuResult, binarize, histogram, otsu_threshold

__version__ = "0.1.0"
