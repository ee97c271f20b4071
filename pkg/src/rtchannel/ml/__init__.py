from .baseline import MeanRegressor
from .linear import LinearRegressor
from .predictor import MODELS, TrainedPredictor, load_predictor, make_model, save_predictor
from .preprocessing import Standardizer
from .svr import ConvergenceError, SVRRegressor
from .tree import TreeRegressor

__all__ = [
    "ConvergenceError", "LinearRegressor", "MeanRegressor", "MODELS", "SVRRegressor",
    "Standardizer", "TrainedPredictor", "TreeRegressor", "load_predictor", "make_model",
    "save_predictor",
]
