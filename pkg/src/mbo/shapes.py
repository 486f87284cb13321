"""Initial configurations: declarative shape specs rasterized to partitions.

Rasterization is by cell-center membership, so a given spec on a given grid
is reproducible bit for bit.  Random variants (voronoi) draw their seeds from
a named RNG seed carried by the spec.  Distances are torus distances, and all
shapes must fit inside a single period.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid import Grid, Partition

SHAPE_KINDS = ("stripe", "disk", "two_disks", "triple_T", "voronoi")


@dataclass(frozen=True)
class ShapeSpec:
    """Declarative initial condition.

    stripe    phase 0 on {x_axis < fraction * period}
    disk      phase 0 on a ball of `radius` around `center` (fractions of period)
    two_disks two balls; separate phases when phase_count is 3, both phase 0
              when it is 2
    triple_T  phase 0 on the upper half, phases 1/2 on the lower left/right
              quadrants (T junctions at the half-height line)
    voronoi   torus-distance Voronoi cells of `phase_count` seeded points
    """

    kind: str
    axis: int = 0
    fraction: float = 0.5
    center: tuple = (0.5, 0.5, 0.5)
    radius: float = 0.25
    centers: tuple = ((0.3, 0.5, 0.5), (0.7, 0.5, 0.5))
    radii: tuple = (0.15, 0.15)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValidationError(f"unknown shape kind {self.kind!r}")


def parse_shape(text):
    """Parse the compact CLI form, e.g. 'disk:0.25' or 'voronoi:5:42'."""
    parts = str(text).split(":")
    kind = parts[0]
    if kind == "stripe":
        axis = int(parts[1]) if len(parts) > 1 else 0
        fraction = float(parts[2]) if len(parts) > 2 else 0.5
        return ShapeSpec("stripe", axis=axis, fraction=fraction)
    if kind == "disk":
        radius = float(parts[1]) if len(parts) > 1 else 0.25
        return ShapeSpec("disk", radius=radius)
    if kind == "two_disks":
        return ShapeSpec("two_disks")
    if kind in ("triple_T", "triple_t"):
        return ShapeSpec("triple_T")
    if kind == "voronoi":
        seed = int(parts[2]) if len(parts) > 2 else 0
        return ShapeSpec("voronoi", seed=seed)
    raise ValidationError(f"cannot parse shape {text!r}")


def default_phase_count(spec):
    return {"stripe": 2, "disk": 2, "two_disks": 3, "triple_T": 3, "voronoi": 3}[spec.kind]


def _torus_dist_sq(coords, center, period):
    d2 = 0.0
    for x, c in zip(coords, center):
        delta = np.abs(x - c)
        delta = np.minimum(delta, period - delta)
        d2 = d2 + delta**2
    return d2


def rasterize(spec, grid, phase_count=None):
    """Rasterize a ShapeSpec to a Partition by cell-center membership."""
    P = default_phase_count(spec) if phase_count is None else int(phase_count)
    L = grid.period
    coords = grid.cell_centers()
    labels = np.zeros(grid.shape, dtype=np.uint8)

    if spec.kind == "stripe":
        if P != 2:
            raise ValidationError("stripe needs exactly 2 phases")
        if not 0 <= spec.axis < grid.dim:
            raise ValidationError(f"stripe axis {spec.axis} out of range for dim {grid.dim}")
        if not 0.0 < spec.fraction < 1.0:
            raise ValidationError("stripe fraction must lie in (0, 1)")
        labels[coords[spec.axis] >= spec.fraction * L] = 1

    elif spec.kind == "disk":
        if P != 2:
            raise ValidationError("disk needs exactly 2 phases")
        if not 0.0 < spec.radius < 0.5:
            raise ValidationError("disk radius must lie in (0, period/2)")
        center = tuple(c * L for c in spec.center[: grid.dim])
        inside = _torus_dist_sq(coords, center, L) < (spec.radius * L) ** 2
        labels[~inside] = 1

    elif spec.kind == "two_disks":
        if P not in (2, 3):
            raise ValidationError("two_disks needs 2 or 3 phases")
        for r in spec.radii:
            if not 0.0 < r < 0.5:
                raise ValidationError("disk radius must lie in (0, period/2)")
        labels[:] = P - 1
        for i, (ctr, r) in enumerate(zip(spec.centers, spec.radii)):
            center = tuple(c * L for c in ctr[: grid.dim])
            inside = _torus_dist_sq(coords, center, L) < (r * L) ** 2
            labels[inside] = 0 if P == 2 else i

    elif spec.kind == "triple_T":
        if P != 3:
            raise ValidationError("triple_T needs exactly 3 phases")
        if grid.dim < 2:
            raise ValidationError("triple_T needs dim >= 2")
        lower = coords[1] < 0.5 * L
        right = coords[0] >= 0.5 * L
        labels[lower & ~right] = 1
        labels[lower & right] = 2

    elif spec.kind == "voronoi":
        rng = np.random.default_rng(spec.seed)
        seeds = rng.uniform(0.0, L, size=(P, grid.dim))
        dists = np.stack([_torus_dist_sq(coords, s, L) for s in seeds])
        labels = np.argmin(dists, axis=0).astype(np.uint8)

    return Partition(grid, P, labels)


def interface_area(spec, grid_or_period):
    """Total interfacial area of the sharp shape (closed forms only).

    On the torus a stripe carries two flat interfaces.  Returns None for
    shapes without a closed form.
    """
    L = grid_or_period.period if isinstance(grid_or_period, Grid) else float(grid_or_period)
    dim = grid_or_period.dim if isinstance(grid_or_period, Grid) else 2
    if spec.kind == "stripe":
        return 2.0 * L ** (dim - 1)
    if spec.kind == "disk":
        if dim == 2:
            return 2.0 * math.pi * spec.radius * L
        if dim == 3:
            return 4.0 * math.pi * (spec.radius * L) ** 2
    if spec.kind == "two_disks" and dim == 2:
        return 2.0 * math.pi * L * sum(spec.radii)
    return None


def ci_scenarios(seed=7):
    """The five small configurations exercised by the test suite."""
    return [
        ("stripe", ShapeSpec("stripe"), 2),
        ("disk", ShapeSpec("disk", radius=0.3), 2),
        ("two_disks", ShapeSpec("two_disks"), 3),
        ("triple_T", ShapeSpec("triple_T"), 3),
        ("voronoi", ShapeSpec("voronoi", seed=seed), 3),
    ]


def _wrap_delta(delta, period):
    return (delta + 0.5 * period) % period - 0.5 * period


def interface_midpoints(partition, pair):
    """Midpoints of cell faces separating the two phases of `pair` (dim 2)."""
    grid = partition.grid
    if grid.dim != 2:
        raise ValidationError("interface extraction implemented for dim 2 only")
    labels = partition.labels
    i, j = pair
    pts = []
    for axis in range(2):
        nbr = np.roll(labels, -1, axis=axis)
        hit = ((labels == i) & (nbr == j)) | ((labels == j) & (nbr == i))
        idx = np.argwhere(hit)
        mid = (idx + 0.5) * grid.dx
        mid[:, axis] += 0.5 * grid.dx
        pts.append(mid)
    return np.concatenate(pts, axis=0) % grid.period


def find_junctions(partition, merge_radius=None):
    """Torus points where three phases meet, from 2x2 label blocks (dim 2)."""
    grid = partition.grid
    labels = partition.labels
    if grid.dim != 2:
        raise ValidationError("junction detection implemented for dim 2 only")
    block = np.stack(
        [
            labels,
            np.roll(labels, -1, axis=0),
            np.roll(labels, -1, axis=1),
            np.roll(np.roll(labels, -1, axis=0), -1, axis=1),
        ]
    )
    distinct = (np.sort(block, axis=0)[1:] != np.sort(block, axis=0)[:-1]).sum(axis=0) + 1
    cand = np.argwhere(distinct >= 3)
    if cand.size == 0:
        return []
    pts = ((cand + 1.0) * grid.dx) % grid.period
    if merge_radius is None:
        merge_radius = 6.0 * grid.dx
    clusters = []
    for p in pts:
        for cl in clusters:
            delta = _wrap_delta(p - cl[0], grid.period)
            if np.hypot(*delta) < merge_radius:
                cl.append(p)
                break
        else:
            clusters.append([p])
    out = []
    for cl in clusters:
        base = cl[0]
        deltas = np.stack([_wrap_delta(p - base, grid.period) for p in cl])
        out.append((base + deltas.mean(axis=0)) % grid.period)
    return out


def junction_angles(partition, junction, r_inner, r_outer):
    """Sector angles (degrees) between the three interfaces at a junction.

    For each phase pair, interface face-midpoints within the annulus around
    the junction are fitted with a linear bearing-versus-radius model; the
    intercept extrapolates the interface direction down to the junction
    itself, cancelling most of the bias a plain direction average picks up
    from interface curvature.  The three fitted directions are sorted by
    bearing and consecutive differences returned; they sum to 360.
    """
    grid = partition.grid
    P = partition.phase_count
    junction = np.asarray(junction, dtype=np.float64)
    bearings = []
    for i in range(P):
        for j in range(i + 1, P):
            pts = interface_midpoints(partition, (i, j))
            if pts.size == 0:
                continue
            delta = _wrap_delta(pts - junction, grid.period)
            rho = np.hypot(delta[:, 0], delta[:, 1])
            sel = (rho >= r_inner) & (rho <= r_outer)
            if sel.sum() < 4:
                continue
            theta = np.arctan2(delta[sel, 1], delta[sel, 0])
            mean = math.atan2(float(np.sin(theta).mean()), float(np.cos(theta).mean()))
            rel = (theta - mean + math.pi) % (2.0 * math.pi) - math.pi
            if float(np.ptp(rel)) > math.pi:
                # cluster straddles the branch cut even after recentering;
                # these points belong to more than one interface arm
                continue
            basis = np.stack([np.ones(int(sel.sum())), rho[sel]], axis=1)
            coef = np.linalg.lstsq(basis, rel, rcond=None)[0]
            ang = mean + float(coef[0])
            bearings.append(math.atan2(math.sin(ang), math.cos(ang)))
    if len(bearings) != 3:
        raise ValidationError(
            f"expected 3 interface directions at the junction, found {len(bearings)}"
        )
    bearings.sort()
    angles = [
        math.degrees(bearings[1] - bearings[0]),
        math.degrees(bearings[2] - bearings[1]),
        math.degrees(2.0 * math.pi - (bearings[2] - bearings[0])),
    ]
    return angles
