"""The worked example problems, as pencils and data series."""

from __future__ import annotations

import numpy as np

from .pencil import MultiParamPencil

__all__ = [
    "running_example",
    "other_example",
    "right_definite_example",
    "sysid_data",
    "EXAMPLES",
]


def running_example() -> MultiParamPencil:
    """3 x 2 two-parameter problem with spectrum {(1, 2), (3, 1), (1, 1)}."""
    a0 = -np.array([[6, 4], [0, 2], [2, 2]], dtype=float)
    a1 = np.array([[2, 1], [0, 0], [2, 0]], dtype=float)
    a2 = np.array([[2, 1], [0, 2], [0, 2]], dtype=float)
    return MultiParamPencil.linear([a0, a1, a2])


def other_example() -> MultiParamPencil:
    a0 = np.array([[2, 6], [4, 5], [0, 1]], dtype=float)
    a1 = np.array([[1, 0], [0, 1], [1, 1]], dtype=float)
    a2 = np.array([[4, 2], [0, 8], [1, 1]], dtype=float)
    return MultiParamPencil.linear([a0, a1, a2])


def right_definite_example() -> MultiParamPencil:
    """Hankel-structured 3 x 2 problem; entries are given to four decimals."""
    a0 = np.array([[0.0260, 0.4380], [0.4380, 0.6542], [0.6542, 1.4192]])
    a1 = np.array([[-1.6324, 0.1128], [0.1128, -0.4401], [-0.4401, -0.6968]])
    a2 = np.array([[3.3280, -0.3346], [-0.3346, 0.6774], [0.6774, -0.0754]])
    return MultiParamPencil.linear([a0, a1, a2])


def sysid_data() -> np.ndarray:
    """Output series generated by y_k = 0.5 y_{k-1} + 0.5 y_{k-2}."""
    return np.array([2.0, 4.0, 3.0, 3.5, 3.25])


EXAMPLES = {
    "running": running_example,
    "other": other_example,
    "right_definite": right_definite_example,
}
