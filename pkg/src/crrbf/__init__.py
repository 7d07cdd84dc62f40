"""Cluster-based random RBF kernels with an SMO kernel SVM.

Bands are grouped with K-Means and each group gets one randomly drawn RBF
width, which removes the kernel-width search that a plain RBF kernel needs.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .band_clustering import BandClustering, KMeansConfig, cluster_bands, kmeans
from .dataset import LabeledDataset, SyntheticSpec, generate_synthetic, load_dataset, standardize
from .kernels import Crrbf, GammaSampler, Linear, Polynomial, Rbf, Rrbf, gram, sample_crrbf, sample_rrbf
from .metrics import cohen_kappa, confusion, overall_accuracy
from .svm import TrainConfig, predict, train_binary, train_ovo

__all__ = [
    "BACKEND",
    "BandClustering",
    "Crrbf",
    "GammaSampler",
    "KMeansConfig",
    "LabeledDataset",
    "Linear",
    "Polynomial",
    "Rbf",
    "Rrbf",
    "SyntheticSpec",
    "TrainConfig",
    "cluster_bands",
    "cohen_kappa",
    "confusion",
    "generate_synthetic",
    "gram",
    "kmeans",
    "load_dataset",
    "overall_accuracy",
    "predict",
    "sample_crrbf",
    "sample_rrbf",
    "standardize",
    "train_binary",
    "train_ovo",
]
