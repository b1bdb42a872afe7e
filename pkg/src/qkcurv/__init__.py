"""Pointwise curvature models of quaternion-Kähler symmetric spaces and their twistor spaces."""

from .curv_opt import Plane, extremize, kappa, kappa_h, wirtinger_angle
from .nk_algebra import NKAlgebraData, sigma_forms, split_curvature
from .qk_models import QKPoint, build_gr2c, build_hpn, build_model
from .report import CheckRecord, CheckReport
from .tensor_core import CurvTensor, FourForm, SymTensor, TwoForm
from .twistor import TwistorPoint, build_twistor

__version__ = "0.1.0"

__all__ = [
    "CheckRecord",
    "CheckReport",
    "CurvTensor",
    "FourForm",
    "NKAlgebraData",
    "Plane",
    "QKPoint",
    "SymTensor",
    "TwistorPoint",
    "TwoForm",
    "build_gr2c",
    "build_hpn",
    "build_model",
    "build_twistor",
    "extremize",
    "kappa",
    "kappa_h",
    "sigma_forms",
    "split_curvature",
    "wirtinger_angle",
]
