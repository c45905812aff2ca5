"""Multiview graph-convolutional subspace clustering for hyperspectral images."""

from .clustering import ClusterAssignment, kmeans, spectral_cluster, spectral_embedding
from .fusion import AttentionParams, attention_forward, fuse, train_attention
from .graph import graph_convolve, knn_adjacency, normalize_adjacency
from .hsi_io import HsiCube, LabelMap, SampleIndex, load_cube, load_labels, select_samples, write_cube
from .metrics import best_map, evaluate, kappa, nmi, overall_accuracy
from .pipeline import PipelineConfig, cluster_cube, run_pipeline
from .preprocess import emp_features, extract_patches, pca_fit_transform
from .subspace import build_affinity, solve_self_expression

__version__ = "0.1.0"
