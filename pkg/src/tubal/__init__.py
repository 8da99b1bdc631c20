"""Randomized low tubal rank approximation of third-order tensors under the T-product."""
from .completion import (CompletionConfig, MaskedTensor, complete, gaussian_blur, psnr, rel_err,
                         upsample_mask)
from .core import (CountedTensor, FourierTensor, concat, counted_source, fft_mode3, fro_norm,
                   gauss_tensor, hadamard, identity_tensor, ifft_mode3, t_product, t_transpose)
from .errors import *  # noqa: F401,F403
from .fixed_precision import (FixedPrecisionConfig, alg9_fixed_precision, alg10_fixed_precision,
                              alg11_fixed_precision, residual_estimate, truncate_qb)
from .io import (RunRecord, read_image, read_records, read_tt3d, write_image, write_records,
                 write_tt3d)
from .linalg import (EigFactors, QbFactors, QrFactors, TsvdFactors, fdiag_sqrt, orth, t_eig,
                     t_inv, t_lu, t_pinv, t_qr, t_svd, t_svd_truncated, trace_first_slice,
                     tubal_rank)
from .single_pass import (CurFactors, SketchParams, SketchState, alg4_tcur, alg5_qb,
                          alg6_single_pass, alg7_single_pass, alg8_two_sided, sketch_finalize,
                          sketch_ingest)
from .synthetic import SyntheticSpec, gen_case, gen_lowrank, generate

__version__ = "0.1.0"
