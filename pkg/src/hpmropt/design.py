"""Design vector, bounds, derived core geometry and material mass inventory.

Lengths are in cm unless a name says otherwise, volumes in m^3, masses in kg.
All functions broadcast over numpy arrays so that a batch of designs can be
pushed through the geometry in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

PARAM_NAMES = ("x_ca", "x_B10", "x_fh", "x_pp", "x_e", "x_cr", "x_mr")

# fixed bounds; x_cr and x_mr bounds depend on the pitch and live in radius_bounds()
FIXED_BOUNDS = {
    "x_ca": (35.0, 180.0),
    "x_B10": (0.20, 0.95),
    "x_fh": (130.0, 190.0),
    "x_pp": (1.94, 2.78),
    "x_e": (0.17, 0.199),
}

MODERATOR_CLAD = 0.095  # cm
FLAKE_MARGIN = 0.858  # cm, width outside the pin lattice
DRUM_CLEARANCE = 0.252  # cm, flake width minus drum diameter

_BOUND_RTOL = 1e-12


class DesignBoundsError(ValueError):
    """A design parameter lies outside its admissible interval."""

    def __init__(self, name, value, lower, upper):
        self.name = name
        self.value = value
        self.lower = lower
        self.upper = upper
        super().__init__(f"{name}={value:g} outside [{lower:g}, {upper:g}]")


@dataclass(frozen=True)
class DesignPoint:
    """One candidate core: the seven free design parameters."""

    x_ca: float  # drum coating angle, degrees
    x_B10: float  # drum absorber B-10 atom fraction
    x_fh: float  # active fuel height, cm
    x_pp: float  # pin pitch (flat-to-flat), cm
    x_e: float  # U-235 mass fraction
    x_cr: float  # fuel compact radius, cm
    x_mr: float  # moderator radius, cm

    @classmethod
    def nominal(cls) -> "DesignPoint":
        return cls(90.0, 0.95, 160.0, 2.3, 0.197, 1.0, 0.825)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values) -> "DesignPoint":
        values = np.asarray(values, dtype=float).ravel()
        if values.size != len(PARAM_NAMES):
            raise ValueError(f"expected {len(PARAM_NAMES)} values, got {values.size}")
        return cls(*(float(v) for v in values))

    def to_row(self) -> dict:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    @classmethod
    def from_row(cls, row) -> "DesignPoint":
        return cls(*(float(row[n]) for n in PARAM_NAMES))

    def replace(self, **changes) -> "DesignPoint":
        return replace(self, **changes)


@dataclass(frozen=True)
class ReactorConstants:
    """Fixed reactor data shared by every candidate design."""

    thermal_power_mw: float = 2.0
    n_flakes: int = 30
    n_compacts_per_flake: int = 63
    n_heat_pipes_per_flake: int = 37
    n_moderator_rods_per_flake: int = 27
    n_drums: int = 12
    drum_coating_thickness: float = 1.0
    moderator_clad_thickness: float = MODERATOR_CLAD
    heat_pipe_outer_radius: float = 1.05
    radial_reflector_flat_to_flat: float = 260.0
    total_core_height: float = 200.0
    packing_fraction: float = 0.40
    # heavy metal per unit compact volume; pins the nominal core to 525.06 kgU
    uranium_loading_kg_per_m3: float = 552.6844869036412
    vessel_thickness: float = 2.0
    density: dict = field(
        default_factory=lambda: {
            "triso_compact": 3.35,
            "yhx": 4.45,
            "graphite": 2.1,
            "be": 1.85,
            "b4c": 2.52,
            "steel": 7.9,
        }
    )

    @property
    def n_compacts(self) -> int:
        return self.n_flakes * self.n_compacts_per_flake

    @property
    def n_heat_pipes(self) -> int:
        return self.n_flakes * self.n_heat_pipes_per_flake

    @classmethod
    def from_dict(cls, data: dict | None) -> "ReactorConstants":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown reactor constant(s): {sorted(unknown)}")
        if "density" in data:
            dens = cls().density
            dens.update(data["density"])
            data["density"] = dens
        return cls(**data)


@dataclass(frozen=True)
class GeometrySpec:
    flake_width: float  # cm
    drum_radius: float  # cm, outer
    drum_height: float  # cm
    axial_reflector_thickness: float  # cm, top + bottom
    fuel_volume: float  # m^3, all compacts
    moderator_volume: float  # m^3, YHx
    monolith_volume: float  # m^3, graphite in the flakes
    radial_reflector_volume: float  # m^3
    axial_reflector_volume: float  # m^3
    drum_body_volume: float  # m^3, all drums
    drum_coating_volume: float  # m^3, all drums
    vessel_volume: float  # m^3


@dataclass(frozen=True)
class MassInventory:
    triso: float
    yhx: float
    graphite_monolith: float
    graphite_radial_reflector: float
    axial_reflector: float  # Be
    drum_be: float
    b4c: float
    vessel_steel: float
    uranium: float  # heavy metal
    u235: float

    @property
    def graphite(self) -> float:
        return self.graphite_monolith + self.graphite_radial_reflector

    @property
    def be(self) -> float:
        return self.axial_reflector + self.drum_be


def radius_bounds(x_pp):
    """Pitch-dependent bounds ``((cr_lo, cr_hi), (mr_lo, mr_hi))``."""
    x_pp = np.asarray(x_pp, dtype=float)
    free = x_pp - 2.0 * MODERATOR_CLAD
    return (x_pp / 4.0, x_pp / 2.0), (free / 5.0, free / 2.0)


def bounds_for(design: DesignPoint) -> dict:
    (cr_lo, cr_hi), (mr_lo, mr_hi) = radius_bounds(design.x_pp)
    out = dict(FIXED_BOUNDS)
    out["x_cr"] = (float(cr_lo), float(cr_hi))
    out["x_mr"] = (float(mr_lo), float(mr_hi))
    return out


def _inside(value, lo, hi) -> bool:
    tol = _BOUND_RTOL * max(abs(lo), abs(hi), 1.0)
    return lo - tol <= value <= hi + tol


def validate(design: DesignPoint) -> DesignPoint:
    """Return ``design`` unchanged if every bound holds.

    Raises
    ------
    DesignBoundsError
        Naming the first violated parameter and both of its bounds. The pitch
        is checked before the radii because their bounds derive from it.
    """
    b = bounds_for(design)
    for name in PARAM_NAMES:
        value = getattr(design, name)
        lo, hi = b[name]
        if not math.isfinite(value) or not _inside(value, lo, hi):
            raise DesignBoundsError(name, value, lo, hi)
    return design


def is_valid(design: DesignPoint) -> bool:
    try:
        validate(design)
    except DesignBoundsError:
        return False
    return True


def flake_width(x_pp):
    return 13.0 * math.sqrt(3.0) / 2.0 * np.asarray(x_pp, dtype=float) + FLAKE_MARGIN


def drum_radius(width):
    return 0.5 * (np.asarray(width, dtype=float) - DRUM_CLEARANCE)


def hex_area(flat_to_flat):
    return math.sqrt(3.0) / 2.0 * np.asarray(flat_to_flat, dtype=float) ** 2


def _geometry_arrays(x_ca, x_fh, x_pp, x_cr, x_mr, c: ReactorConstants) -> dict:
    cm3 = 1e-6
    w = flake_width(x_pp)
    r_d = drum_radius(w)
    t = c.drum_coating_thickness
    a_env = hex_area(c.radial_reflector_flat_to_flat)
    a_flake = hex_area(w)
    a_drum = math.pi * r_d**2
    a_clad = math.pi * (x_mr + c.moderator_clad_thickness) ** 2
    holes = (
        c.n_compacts_per_flake * math.pi * x_cr**2
        + c.n_moderator_rods_per_flake * a_clad
        + c.n_heat_pipes_per_flake * math.pi * c.heat_pipe_outer_radius**2
    )
    coating = (x_ca / 360.0) * math.pi * (r_d**2 - (r_d - t) ** 2) * x_fh
    h_tot = c.total_core_height
    # vessel: steel can around the circumscribed circle of the envelope
    r_v = c.radial_reflector_flat_to_flat / math.sqrt(3.0)
    tv = c.vessel_thickness
    vessel = 2 * math.pi * r_v * tv * h_tot + 2 * math.pi * (r_v + tv) ** 2 * tv
    return {
        "flake_width": w,
        "drum_radius": r_d,
        "drum_height": np.asarray(x_fh, dtype=float),
        "axial_reflector_thickness": h_tot - x_fh,
        "fuel_volume": c.n_compacts * math.pi * x_cr**2 * x_fh * cm3,
        "moderator_volume": c.n_flakes * c.n_moderator_rods_per_flake * math.pi * x_mr**2 * x_fh * cm3,
        "monolith_volume": c.n_flakes * (a_flake - holes) * x_fh * cm3,
        "radial_reflector_volume": (a_env - c.n_flakes * a_flake - c.n_drums * a_drum) * x_fh * cm3,
        "axial_reflector_volume": a_env * (h_tot - x_fh) * cm3,
        "drum_body_volume": c.n_drums * (a_drum * x_fh - coating) * cm3,
        "drum_coating_volume": c.n_drums * coating * cm3,
        "vessel_volume": np.full_like(np.asarray(x_fh, dtype=float), vessel * cm3),
    }


def _mass_arrays(g: dict, x_e, c: ReactorConstants) -> dict:
    rho = {k: v * 1000.0 for k, v in c.density.items()}  # kg/m^3
    u = g["fuel_volume"] * c.uranium_loading_kg_per_m3
    return {
        "triso": g["fuel_volume"] * rho["triso_compact"],
        "yhx": g["moderator_volume"] * rho["yhx"],
        "graphite_monolith": g["monolith_volume"] * rho["graphite"],
        "graphite_radial_reflector": g["radial_reflector_volume"] * rho["graphite"],
        "axial_reflector": g["axial_reflector_volume"] * rho["be"],
        "drum_be": g["drum_body_volume"] * rho["be"],
        "b4c": g["drum_coating_volume"] * rho["b4c"],
        "vessel_steel": g["vessel_volume"] * rho["steel"],
        "uranium": u,
        "u235": x_e * u,
    }


def derive_geometry(design: DesignPoint, constants: ReactorConstants | None = None) -> GeometrySpec:
    c = constants or ReactorConstants()
    d = design
    g = _geometry_arrays(d.x_ca, d.x_fh, d.x_pp, d.x_cr, d.x_mr, c)
    return GeometrySpec(**{k: float(v) for k, v in g.items()})


def mass_inventory(geometry: GeometrySpec, design: DesignPoint, constants: ReactorConstants | None = None) -> MassInventory:
    c = constants or ReactorConstants()
    g = {f.name: getattr(geometry, f.name) for f in fields(geometry)}
    m = _mass_arrays(g, design.x_e, c)
    return MassInventory(**{k: float(v) for k, v in m.items()})


def batch_masses(X, constants: ReactorConstants | None = None) -> dict:
    """Geometry and masses for an ``(n, 7)`` array of designs (no validation)."""
    c = constants or ReactorConstants()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x_ca, _, x_fh, x_pp, x_e, x_cr, x_mr = X.T
    g = _geometry_arrays(x_ca, x_fh, x_pp, x_cr, x_mr, c)
    out = dict(g)
    out.update(_mass_arrays(g, x_e, c))
    return out


# ---------------------------------------------------------------- unit cube

def normalize(design) -> np.ndarray:
    """Map a design (DesignPoint or ``(..., 7)`` array) to the unit cube.

    The radii are normalized against their pitch-dependent interval, so any
    point of the cube denormalizes to an admissible design.
    """
    X = design.as_array() if isinstance(design, DesignPoint) else np.asarray(design, dtype=float)
    U = np.empty_like(X)
    for i, name in enumerate(PARAM_NAMES[:5]):
        lo, hi = FIXED_BOUNDS[name]
        U[..., i] = (X[..., i] - lo) / (hi - lo)
    (cr_lo, cr_hi), (mr_lo, mr_hi) = radius_bounds(X[..., 3])
    U[..., 5] = (X[..., 5] - cr_lo) / (cr_hi - cr_lo)
    U[..., 6] = (X[..., 6] - mr_lo) / (mr_hi - mr_lo)
    return U


def denormalize(u) -> np.ndarray:
    """Inverse of :func:`normalize`; returns an array of shape ``(..., 7)``.

    Components are clipped to [0, 1] first; the radii are then placed (and
    clamped) inside the bounds implied by the already-decoded pitch.
    """
    U = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    X = np.empty_like(U)
    for i, name in enumerate(PARAM_NAMES[:5]):
        lo, hi = FIXED_BOUNDS[name]
        X[..., i] = lo + U[..., i] * (hi - lo)
    (cr_lo, cr_hi), (mr_lo, mr_hi) = radius_bounds(X[..., 3])
    X[..., 5] = np.clip(cr_lo + U[..., 5] * (cr_hi - cr_lo), cr_lo, cr_hi)
    X[..., 6] = np.clip(mr_lo + U[..., 6] * (mr_hi - mr_lo), mr_lo, mr_hi)
    return X


def denormalize_design(u) -> DesignPoint:
    return DesignPoint.from_array(denormalize(u))


def sample_uniform(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` designs drawn uniformly in the normalized cube, as an ``(n, 7)`` array."""
    return denormalize(rng.random((n, len(PARAM_NAMES))))


def sample_lhs(n: int, rng: np.random.Generator) -> np.ndarray:
    """Latin-hypercube sample in the normalized cube, mapped to designs."""
    d = len(PARAM_NAMES)
    if n == 0:
        return np.empty((0, d))
    strata = np.stack([rng.permutation(n) for _ in range(d)], axis=1)
    U = (strata + rng.random((n, d))) / n
    return denormalize(U)
