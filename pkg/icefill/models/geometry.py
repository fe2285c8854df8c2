__all__ = [
    "UpaGeometry",
    "SPEED_OF_LIGHT",
]

import numpy as np

from typing import Dict, Tuple
from icefill.exceptions import InvalidInputError


SPEED_OF_LIGHT = 299792458.0


class UpaGeometry:

    def __init__(self,
                 mx         : int,
                 my         : int,
                 spacing    : float,
                 wavelength : float,
        ):
            """
            Uniform planar array with mx horizontal and my vertical antennas.

            Parameters:
            ----------
            mx : int
                Horizontal antenna count (>= 1).
            my : int
                Vertical antenna count (>= 1).
            spacing : float
                Antenna spacing d in meters.
            wavelength : float
                Carrier wavelength in meters.

            Antennas are linearized row-major over (x, y): antenna (ix, iy) sits at
            index ix*my + iy, which matches the Kronecker order x-factor (x) y-factor.
            """
            if int(mx) != mx or int(my) != my or mx < 1 or my < 1:
                raise InvalidInputError("UpaGeometry", f"antenna counts must be positive integers, got mx={mx}, my={my}")
            if not spacing > 0:
                raise InvalidInputError("UpaGeometry", f"spacing must be positive, got {spacing}")
            if not wavelength > 0:
                raise InvalidInputError("UpaGeometry", f"wavelength must be positive, got {wavelength}")
            self.mx = int(mx)
            self.my = int(my)
            self.spacing = float(spacing)
            self.wavelength = float(wavelength)

    @classmethod
    def from_ratio(cls, mx : int, my : int, ratio : float, carrier_freq : float=3.5e9) -> 'UpaGeometry':
        """Build a geometry from the spacing expressed in wavelengths (d/λ)."""
        wavelength = SPEED_OF_LIGHT / carrier_freq
        return cls(mx, my, ratio * wavelength, wavelength)

    @property
    def num_antennas(self) -> int:
        return self.mx * self.my

    @property
    def ratio(self) -> float:
        """Spacing in wavelengths, d/λ."""
        return self.spacing / self.wavelength

    @property
    def wavenumber_spacing(self) -> float:
        """2πd/λ, the phase advance per element at end-fire."""
        return 2 * np.pi * self.ratio

    @staticmethod
    def centered(count : int) -> np.ndarray:
        """Centered index vector [-(n-1)/2, ..., (n-1)/2]."""
        return np.arange(count) - (count - 1) / 2.0

    def centered_indices(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.centered(self.mx), self.centered(self.my)

    def key(self) -> Tuple:
        return (self.mx, self.my, round(self.ratio, 12))

    def to_dict(self) -> Dict:
        return {
            "mx"         : self.mx,
            "my"         : self.my,
            "spacing"    : self.spacing,
            "wavelength" : self.wavelength,
        }

    @classmethod
    def from_dict(cls, data : Dict) -> 'UpaGeometry':
        return cls(
            mx         = data["mx"],
            my         = data["my"],
            spacing    = data["spacing"],
            wavelength = data["wavelength"],
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, UpaGeometry) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(tuple(self.to_dict().values()))

    def __repr__(self) -> str:
        return f"UpaGeometry(mx={self.mx}, my={self.my}, d/λ={self.ratio:.4g})"
