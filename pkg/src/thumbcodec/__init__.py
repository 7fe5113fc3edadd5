"""Thumbnail compression toolkit: sparse coding over a learned convolutional
dictionary (keep half the pixels, infer the rest) against a bottleneck
autoencoder baseline, with PSNR/SSIM reporting and a bit-exact codec."""

from .autoencoder import (AeConfig, AutoencoderParams, ae_backward,
                          ae_compress, ae_decompress, ae_forward, ae_loss,
                          init_autoencoder, train_autoencoder)
from .codec import (CompressedImage, compress, decompress, load_autoencoder,
                    load_compressed, load_dictionary, load_tensor,
                    read_manifest, save_autoencoder, save_compressed,
                    save_dictionary, save_tensor, write_manifest)
from .data import Dataset, from_bytes, load_cifar10, quantize_intensities, to_bytes
from .errors import (CorruptDatasetError, CorruptFileError,
                     DatasetNotFoundError, IncompatibleDictionaryError,
                     SolverDivergedError, TrainingDivergedError)
from .lca import (Dictionary, LcaParams, SparseCode, correlate, energy,
                  lca_encode, lca_encode_batch, reconstruct, sparsity,
                  threshold)
from .masks import (PixelMask, apply_mask, checkerboard_mask, parse_mask,
                    random_mask, serialize_mask)
from .metrics import QualityReport, evaluate_dataset, psnr, ssim
from .training import (TrainerConfig, TrainState, apply_update, dict_gradient,
                       init_dictionary, sweep_lambda, train_dictionary)

__version__ = "0.1.0"
