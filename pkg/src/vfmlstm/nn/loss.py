import numpy as np

from ..errors import DimensionError


def mse_loss(y_hat, y) -> float:
    """Mean over all entries of the squared difference."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y_hat.shape != y.shape:
        raise DimensionError(f"shape mismatch {y_hat.shape} vs {y.shape}")
    d = y_hat - y
    return float(np.mean(d * d))


def mse_grad(y_hat: np.ndarray, y: np.ndarray) -> np.ndarray:
    return 2.0 * (y_hat - y) / y.size
