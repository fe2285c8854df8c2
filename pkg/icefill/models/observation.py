__all__ = [
    "Mode",
    "ObservationMatrix",
    "PowerAllocation",
    "PilotAllocation",
]

import numpy as np

from enum   import Enum
from typing import Optional, List, Dict, Any
from icefill.exceptions import InvalidInputError


class Mode(Enum):
    UNIT_NORM    = "unit-norm-columns"
    UNIT_MODULUS = "unit-modulus-entries"
    SCALED_EIGEN = "scaled-eigen"


class ObservationMatrix:

    def __init__(self,
                 matrix   : np.ndarray,
                 mode     : Mode,
                 selected : Optional[np.ndarray]=None,
                 history  : Optional[List[Dict[str, Any]]]=None,
                 tol      : float=1e-10,
        ):
            """
            M x Q receive combining matrix, one observation vector per pilot slot.

            Parameters:
            ----------
            matrix : np.ndarray
                M x Q complex matrix.
            mode : Mode
                Hardware constraint the columns obey.
            selected : np.ndarray, optional
                Eigen index used by every column (ice-filling and top-Q designs).
            history : list of dict, optional
                Per-timeslot diagnostics (MM objective traces).
            tol : float
                Tolerance of the mode invariant check.

            Raises:
            ------
            InvalidInputError
                If the columns violate the mode invariant.
            """
            matrix = np.array(matrix, dtype=complex, copy=True)
            if matrix.ndim == 1:
                matrix = matrix.reshape(-1, 1)
            if matrix.ndim != 2:
                raise InvalidInputError("ObservationMatrix", f"matrix must be 2-D, got shape {matrix.shape}")
            mode = Mode(mode)
            M, Q = matrix.shape

            if mode == Mode.UNIT_NORM:
                norms = np.linalg.norm(matrix, axis=0)
                if np.any(np.abs(norms - 1) > tol):
                    raise InvalidInputError("ObservationMatrix", "columns must have unit norm")
            elif mode == Mode.UNIT_MODULUS:
                if np.any(np.abs(np.abs(matrix) - 1 / np.sqrt(M)) > tol):
                    raise InvalidInputError("ObservationMatrix", "entries must have modulus 1/sqrt(M)")
            elif mode == Mode.SCALED_EIGEN:
                if abs(np.sum(np.abs(matrix) ** 2) - Q) > max(tol, 1e-8) * max(1.0, Q):
                    raise InvalidInputError("ObservationMatrix", f"total power must equal the {Q} pilots")

            if selected is not None:
                selected = np.asarray(selected, dtype=int).reshape(-1)
                if selected.size != Q:
                    raise InvalidInputError("ObservationMatrix", "one selected eigen index per column is required")
                selected.setflags(write=False)

            matrix.setflags(write=False)
            self.matrix = matrix
            self.mode = mode
            self.selected = selected
            self.history = history or []

    @property
    def num_antennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_pilots(self) -> int:
        return self.matrix.shape[1]

    @property
    def H(self) -> np.ndarray:
        return self.matrix.conj().T

    def gram(self) -> np.ndarray:
        """W W^H."""
        return self.matrix @ self.matrix.conj().T

    def __repr__(self) -> str:
        return f"ObservationMatrix(M={self.num_antennas}, Q={self.num_pilots}, mode={self.mode.value})"


class PowerAllocation:

    def __init__(self,
                 powers      : np.ndarray,
                 water_level : float,
                 eigenvalues : np.ndarray,
                 sigma2      : float,
                 budget      : float,
        ):
            """
            Continuous water-filling powers p_k = (β - σ²/λ_k)^+ with Σ p_k = Q.

            Raises:
            ------
            InvalidInputError
                If the powers do not sum to the budget or do not follow the water level.
            """
            powers = np.asarray(powers, dtype=float).reshape(-1)
            eigenvalues = np.asarray(eigenvalues, dtype=float).reshape(-1)
            tol = 1e-9 * max(1.0, budget)
            if powers.size != eigenvalues.size:
                raise InvalidInputError("PowerAllocation", "one power per eigenvalue is required")
            if np.any(powers < 0):
                raise InvalidInputError("PowerAllocation", "powers must be nonnegative")
            if abs(powers.sum() - budget) > tol:
                raise InvalidInputError("PowerAllocation", f"powers sum to {powers.sum()} instead of {budget}")
            if np.any(np.abs(powers - np.maximum(water_level - sigma2 / eigenvalues, 0)) > tol):
                raise InvalidInputError("PowerAllocation", "powers do not match the water level")
            powers.setflags(write=False)
            eigenvalues.setflags(write=False)
            self.powers = powers
            self.water_level = float(water_level)
            self.eigenvalues = eigenvalues
            self.sigma2 = float(sigma2)
            self.budget = float(budget)

    @property
    def active(self) -> int:
        """Number of eigen-directions receiving power."""
        return int(np.count_nonzero(self.powers > 0))

    def __repr__(self) -> str:
        return f"PowerAllocation(K={self.powers.size}, Q={self.budget:g}, beta={self.water_level:.6g})"


class PilotAllocation:

    def __init__(self,
                 reuse       : np.ndarray,
                 order       : np.ndarray,
                 eigenvalues : np.ndarray,
                 sigma2      : float,
                 trajectory  : Optional[np.ndarray]=None,
        ):
            """
            Integer pilot reuse frequencies produced by ice-filling.

            Parameters:
            ----------
            reuse : np.ndarray
                n_k, number of slots assigned to eigenvector k.
            order : np.ndarray
                Selected eigen index k_t for t = 1..Q (0-based).
            eigenvalues : np.ndarray
                Prior eigenvalues λ_k.
            sigma2 : float
                Noise variance.
            trajectory : np.ndarray, optional
                (Q+1) x K working eigenvalues λ_k^t, row t before slot t+1.

            The ice levels σ²/λ_k^Q are stored in the closed form n_k + σ²/λ_k.
            """
            reuse = np.asarray(reuse, dtype=int).reshape(-1)
            order = np.asarray(order, dtype=int).reshape(-1)
            eigenvalues = np.asarray(eigenvalues, dtype=float).reshape(-1)
            if reuse.size != eigenvalues.size:
                raise InvalidInputError("PilotAllocation", "one reuse frequency per eigenvalue is required")
            if np.any(reuse < 0) or reuse.sum() != order.size:
                raise InvalidInputError("PilotAllocation", "reuse frequencies must be nonnegative and sum to Q")
            if np.any(np.bincount(order, minlength=reuse.size)[:reuse.size] != reuse) or np.any(order >= reuse.size):
                raise InvalidInputError("PilotAllocation", "reuse frequencies disagree with the selection order")

            self.reuse = reuse
            self.order = order
            self.eigenvalues = eigenvalues
            self.sigma2 = float(sigma2)
            self.ice_levels = reuse + sigma2 / eigenvalues
            self.trajectory = trajectory
            for array in (self.reuse, self.order, self.eigenvalues, self.ice_levels):
                array.setflags(write=False)
            if trajectory is not None:
                trajectory.setflags(write=False)

    @property
    def num_pilots(self) -> int:
        return self.order.size

    def reuse_at(self, t : int) -> np.ndarray:
        """n_k^t, reuse frequencies after the first t slots."""
        return np.bincount(self.order[:t], minlength=self.reuse.size)

    def __repr__(self) -> str:
        return f"PilotAllocation(K={self.reuse.size}, Q={self.num_pilots}, n={self.reuse.tolist()})"
