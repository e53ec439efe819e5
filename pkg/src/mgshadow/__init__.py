"""Noise-calibrated matchgate classical shadows.

Simulates noisy random-matchgate measurement experiments on small systems,
calibrates the noisy measurement channel from vacuum rounds, and produces
bias-corrected estimates of Majorana-product expectations, Gaussian-state
overlaps, and Slater-determinant inner products, with closed-form oracles
for every estimated quantity.
"""

from .engine import (
    CalibrationEstimate,
    EstimatorConfig,
    GaussianStateSpec,
    MitigationFailure,
    SlaterSpec,
    calibrate,
    estimate_gaussian_overlap,
    estimate_majorana,
    estimate_slater_overlap,
    estimate_unmitigated,
    median_of_means,
    single_round_f_estimates,
)
from .noise import (
    Depolarizing,
    GaussianUnitary,
    GenAmpDamping,
    NoiseModel,
    Noiseless,
    XRotation,
    apply_noise,
    brute_force_B,
    fidelity_table,
)
from .rotations import (
    RotationQ,
    SeededRng,
    SignedPermutation,
    compile_matchgate,
    rotate_covariance,
    sample_haar_orthogonal,
    sample_signed_permutation,
)
from .simulator import (
    ShadowBatch,
    ShadowSample,
    random_pure_state,
    run_shadow_round,
    run_shadow_rounds,
    z_measurement_distribution,
)
from .skew import SkewMatrix, pfaffian, pfaffian_pencil_coeffs, skew_submatrix
from .theory import (
    SamplePlan,
    exact_f2k,
    exact_fhat_second_moment,
    plan_samples,
    variance_bound_general,
    variance_bound_majorana,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
