"""Narrowed normality clusters: video anomaly detection on a CPU budget.

Two-stage outlier elimination over augmented spatio-temporal cube features:
k-means clusters normal motion/appearance patterns and drops small clusters,
then a one-class SVM tightens the border of each survivor. A test cube's
abnormality is minus its best per-cluster decision value.
"""

from .augment import (AppearanceProvider, AugmentedCube, FileAppearanceProvider,
                      HandcraftedAppearanceProvider, ZeroAppearanceProvider,
                      augment_cube, handcrafted_appearance, location_encoding,
                      mean_direction_features, read_nncf,
                      resize_activation_maps, write_nncf)
from .cluster import (ClusterModel, best_of_restarts, choose_k, kmeans_pp_init,
                      lloyd, prune_small_clusters)
from .config import RunConfig
from .cubes import (SpatioTemporalCube, extract_cubes, gradient_features,
                    is_static, l2_normalize)
from .detect import (AnomalyMap, FrameScoreSeries, NormalityModel,
                     PipelineError, load_model, normalize_scores, save_model,
                     score_cube, score_sequence, temporal_smooth, train,
                     upsample_map)
from .evaluation import (RocResult, frame_level_auc, load_ground_truth,
                         pixel_level_auc, smooth_pixel_maps)
from .ingest import (FormatError, FrameSequence, GrayFrame, load_sequence,
                     resize_frame, save_raw_gray)
from .ocsvm import (ConvergenceError, OneClassSvmModel, brute_force_qp,
                    decision, train_ocsvm)
from .synth import (ActorSpec, AnomalySpec, GroundTruth, SynthSpec,
                    benchmark_test_spec, benchmark_train_spec, generate)

__version__ = "0.1.0"
