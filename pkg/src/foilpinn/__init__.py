"""foil-pinn: a desk-scale, geometry-aware physics-informed surrogate for
incompressible turbulent flow over NACA 4-digit airfoils."""

from .data import CaseDataset, load_case_csv, manufactured_case, save_case_csv, synthetic_case
from .evaluation import ErrorReport, evaluate_case, predict_fields
from .geometry import AirfoilParams, Polyline, parse_naca_code, surface_polyline
from .network import MlpConfig, MlpParams, ModelVariant, load_checkpoint, save_checkpoint
from .physics import TurbulenceConstants
from .sampling import Domain
from .sdf import sdf_field, signed_distance
from .training import LossWeights, Schedule, TrainSetup, reynolds, train

__version__ = "0.1.0"

__all__ = [
    "AirfoilParams",
    "CaseDataset",
    "Domain",
    "ErrorReport",
    "LossWeights",
    "MlpConfig",
    "MlpParams",
    "ModelVariant",
    "Polyline",
    "Schedule",
    "TrainSetup",
    "TurbulenceConstants",
    "evaluate_case",
    "load_case_csv",
    "load_checkpoint",
    "manufactured_case",
    "parse_naca_code",
    "predict_fields",
    "reynolds",
    "save_case_csv",
    "save_checkpoint",
    "sdf_field",
    "signed_distance",
    "surface_polyline",
    "synthetic_case",
    "train",
]
