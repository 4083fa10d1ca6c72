from .export import ExportJob, export, load_gray_frames, preprocess, write_nncf
from .model import (FeatureCnn, ShapeMismatchError, load_feature_cnn,
                    validate_output_shape)

__version__ = "0.1.0"
