"""Laplacian-family kernels: standard 4-neighbour, dilated 1-D and
directional dilated (DDL) 2-D.

Orientation convention: 0 degrees puts the taps along x (columns), 90 along
y (rows), 45 on the anti-diagonal (top-right / bottom-left) and 135 on the
main diagonal. Tap offsets are (row, col) relative to the kernel centre.
"""

from dataclasses import dataclass

import numpy as np

ANGLES = (0, 45, 90, 135)

# unit (row, col) step of the +1 taps for each orientation
_DIRECTION = {0: (0, 1), 45: (-1, 1), 90: (1, 0), 135: (1, 1)}


@dataclass(frozen=True)
class Kernel2D:
    """Square integer kernel.

    ``dilation`` is 1 for the standard Laplacian; ``orientation`` is an
    angle in :data:`ANGLES` or ``"isotropic"``.
    """

    taps: np.ndarray
    dilation: int = 1
    orientation: object = "isotropic"

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.int64)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1] or taps.shape[0] % 2 == 0:
            raise ValueError(f"kernel must be square with odd size, got {taps.shape}")
        taps = taps.copy()
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def size(self):
        return self.taps.shape[0]

    @property
    def center(self):
        return self.size // 2

    def nonzero(self):
        """(dy, dx, weight) for each nonzero tap in row-major order.

        ``dy``/``dx`` are offsets from the centre; convolution reads the
        input at ``p - (dy, dx)``.
        """
        c = self.center
        rows, cols = np.nonzero(self.taps)
        return [(int(i) - c, int(j) - c, int(self.taps[i, j])) for i, j in zip(rows, cols)]

    def __eq__(self, other):
        if not isinstance(other, Kernel2D):
            return NotImplemented
        return (np.array_equal(self.taps, other.taps) and self.dilation == other.dilation
                and self.orientation == other.orientation)

    def __hash__(self):
        return hash((self.taps.tobytes(), self.taps.shape, self.dilation, self.orientation))

    def to_text(self):
        width = max(len(str(v)) for v in self.taps.ravel())
        return "\n".join(" ".join(str(v).rjust(width) for v in row) for row in self.taps)


def _check_rate(r):
    if isinstance(r, bool) or int(r) != r or r < 1:
        raise ValueError(f"dilation rate must be a positive integer, got {r!r}")
    return int(r)


def laplacian_1d(r):
    """Dilated 1-D second difference: ``s(i+r) + s(i-r) - 2 s(i)`` as 2r+1 taps."""
    r = _check_rate(r)
    taps = [0] * (2 * r + 1)
    taps[0] = 1
    taps[r] = -2
    taps[2 * r] = 1
    return taps


def ddl_kernel(r, theta):
    """Directional dilated Laplacian of rate ``r`` at angle ``theta`` (degrees)."""
    r = _check_rate(r)
    if theta not in _DIRECTION:
        raise ValueError(f"orientation must be one of {ANGLES}, got {theta!r}")
    dy, dx = _DIRECTION[theta]
    taps = np.zeros((2 * r + 1, 2 * r + 1), dtype=np.int64)
    taps[r, r] = -2
    taps[r + r * dy, r + r * dx] = 1
    taps[r - r * dy, r - r * dx] = 1
    return Kernel2D(taps, dilation=r, orientation=theta)


def ddl_bank(r):
    return [ddl_kernel(r, t) for t in ANGLES]


def standard_laplacian():
    return Kernel2D([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dilation=1, orientation="isotropic")
