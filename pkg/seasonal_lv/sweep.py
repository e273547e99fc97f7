"""Region maps over the (tau1, tau2) or (c1, c2) plane."""
import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
import toolz
from joblib import Parallel, delayed
from loguru import logger
from pydantic import BaseModel, Extra, Field, ValidationError, root_validator

from .errors import SeasonalModelError
from .integrator import (
    DEFAULT_SETTINGS,
    BasinOutcome,
    IntegratorSettings,
    State,
    sample_basins,
)
from .params import ModelParameters, Schedule
from .scalar import ScalarLabel, scalar_classify
from .stability import Region, classify
from .types import Interval, Species
from .utils import write_frame, write_json

# codes of the single-species maps, shared with Region where they overlap
SPECIES_LABELS = {
    Region.INVALID_SCHEDULE.code: Region.INVALID_SCHEDULE.value,
    1: ScalarLabel.EXTINCT.value,
    2: ScalarLabel.PERSISTENT_PERIODIC.value,
    Region.BOUNDARY.code: Region.BOUNDARY.value,
    Region.FAILED.code: Region.FAILED.value,
}

REGION_LABELS = {region.code: region.value for region in Region}


class GridSpec(BaseModel):
    class Config:
        frozen = True
        extra = Extra.forbid

    axis1: Literal["tau1", "c1"] = "tau1"
    axis2: Literal["tau2", "c2"] = "tau2"
    range1: Interval
    range2: Interval
    n1: int = Field(200, ge=2)
    n2: int = Field(200, ge=2)
    species: Optional[Species] = None

    @root_validator(skip_on_failure=True)
    def check_axes(cls, values):
        plane = (values["axis1"], values["axis2"])
        if plane not in (("tau1", "tau2"), ("c1", "c2")):
            raise ValueError(f"Axes {plane} do not span the tau or the c plane")
        if plane == ("c1", "c2"):
            for name in ("range1", "range2"):
                if values[name].left <= 0:
                    raise ValueError(f"Grazing intensities must be positive ({name})")
        else:
            for name in ("range1", "range2"):
                if values[name].left < 0:
                    raise ValueError(f"Phase times must be nonnegative ({name})")
        return values

    @property
    def tau_plane(self) -> bool:
        return self.axis1 == "tau1"

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n1, self.n2

    def centers1(self) -> np.ndarray:
        return self.range1.centers(self.n1)

    def centers2(self) -> np.ndarray:
        return self.range2.centers(self.n2)

    @property
    def cell_diagonal(self) -> float:
        return math.hypot(self.range1.width / self.n1, self.range2.width / self.n2)


class BoundaryLine(BaseModel):
    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    name: str
    x: np.ndarray
    y: np.ndarray

    def distance(self, x: float, y: float) -> float:
        """Euclidean distance from (x, y) to the polyline"""
        points = np.stack([self.x, self.y], axis=1)
        if len(points) == 1:
            return float(np.hypot(x - points[0, 0], y - points[0, 1]))
        a, b = points[:-1], points[1:]
        ab = b - a
        ap = np.array([x, y]) - a
        length2 = np.einsum("ij,ij->i", ab, ab)
        t = np.clip(
            np.einsum("ij,ij->i", ap, ab) / np.where(length2 > 0, length2, 1), 0, 1
        )
        closest = a + t[:, None] * ab
        return float(np.min(np.hypot(*(np.array([x, y]) - closest).T)))


class RegionGrid(BaseModel):
    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    spec: GridSpec
    cells: np.ndarray
    boundary_curves: List[BoundaryLine]
    labels: Dict[int, str]

    def label(self, i: int, j: int) -> str:
        return self.labels[int(self.cells[i, j])]

    def counts(self) -> Dict[str, int]:
        return {
            self.labels[code]: n
            for code, n in sorted(toolz.frequencies(self.cells.ravel().tolist()).items())
        }

    def contains(self, label: str) -> bool:
        return label in self.counts()

    def label_changes(self):
        """Adjacent cell pairs ((i, j), (k, l)) with different labels"""
        n1, n2 = self.cells.shape
        for i in range(n1):
            for j, l in toolz.sliding_window(2, range(n2)):
                if self.cells[i, j] != self.cells[i, l]:
                    yield (i, j), (i, l)
        for j in range(n2):
            for i, k in toolz.sliding_window(2, range(n1)):
                if self.cells[i, j] != self.cells[k, j]:
                    yield (i, j), (k, j)

    def unexplained_changes(self, ignore=(Region.INVALID_SCHEDULE.code,)):
        """Label changes with no boundary line within one cell diagonal.
        Changes involving a code in ignore are skipped.
        """
        x, y = self.spec.centers1(), self.spec.centers2()
        diagonal = self.spec.cell_diagonal
        unexplained = []
        for (i, j), (k, l) in self.label_changes():
            if self.cells[i, j] in ignore or self.cells[k, l] in ignore:
                continue
            mx, my = 0.5 * (x[i] + x[k]), 0.5 * (y[j] + y[l])
            if not any(
                line.distance(mx, my) <= diagonal for line in self.boundary_curves
            ):
                unexplained.append(((i, j), (k, l)))
        return unexplained


def cell_inputs(
    p: ModelParameters, s: Schedule, spec: GridSpec, x: float, y: float
) -> Optional[Tuple[ModelParameters, Schedule]]:
    """Parameters and schedule of the cell centered at (x, y),
    None for an inadmissible schedule.
    """
    if spec.tau_plane:
        if not 0 <= x <= y <= s.T:
            return None
        return p, s.copy(update={"tau1": x, "tau2": y})
    return p.copy(update={"c1": x, "c2": y}), s


def _cell_code(p: ModelParameters, s: Schedule, spec: GridSpec, x, y) -> int:
    inputs = cell_inputs(p, s, spec, x, y)
    if inputs is None:
        return Region.INVALID_SCHEDULE.code
    try:
        if spec.species is not None:
            regime = scalar_classify(*inputs, spec.species)
            if regime.degenerate:
                return Region.BOUNDARY.code
            return 2 if regime.persistent else 1
        return classify(*inputs).region.code
    except (SeasonalModelError, ValidationError, ValueError, ArithmeticError) as e:
        logger.warning(f"Cell ({x}, {y}) failed: {e}")
        return Region.FAILED.code


def _classify_row(p, s, spec: GridSpec, x: float) -> np.ndarray:
    return np.array([_cell_code(p, s, spec, x, y) for y in spec.centers2()], dtype=int)


def sweep_regions(
    p: ModelParameters, s: Schedule, spec: GridSpec, n_jobs: int = 1
) -> RegionGrid:
    """Classify the center of every grid cell.
    Rows may be evaluated in parallel, the result does not depend on it.
    """
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_classify_row)(p, s, spec, x) for x in spec.centers1()
    )
    cells = np.stack(rows)

    if spec.tau_plane:
        curves = boundary_lines(p, s, spec.range1, n=spec.n1)
    else:
        curves = c_plane_lines(p, s, spec.range1, spec.range2, n=spec.n1)
    if spec.species is not None:
        name = "tau2_star" if spec.species == Species.U else "tau2_star2"
        if not spec.tau_plane:
            name = "u_threshold" if spec.species == Species.U else "v_threshold"
        curves = [curve for curve in curves if curve.name == name]

    labels = SPECIES_LABELS if spec.species is not None else REGION_LABELS
    grid = RegionGrid(spec=spec, cells=cells, boundary_curves=curves, labels=labels)
    logger.info(f"Swept {spec.n1}x{spec.n2} grid: {grid.counts()}")
    return grid


def boundary_lines(
    p: ModelParameters, s: Schedule, tau1_range: Interval, n: int = 200
) -> List[BoundaryLine]:
    """Region boundaries in the (tau1, tau2) plane, all straight lines.

    tau2_star     u persistence threshold
    tau2_star2    v persistence threshold
    lambda2_unit  v neutral at (u*, 0)
    lambda4_unit  u neutral at (0, v*)
    """
    tau1_range = Interval.validate_field(tau1_range)
    T, r = s.T, p.r
    tau1 = tau1_range.linspace(n)
    A1 = (p.d1 + 1) * tau1 + (p.c1 - 1) * T
    A2 = (p.d2 + r) * tau1 + (p.c2 - r) * T

    lines = [
        BoundaryLine(name="tau2_star", x=tau1, y=A1 / p.c1),
        BoundaryLine(name="tau2_star2", x=tau1, y=A2 / p.c2),
    ]

    denominator = p.c2 - r * p.b2 * p.c1
    if denominator != 0:
        lines.append(
            BoundaryLine(
                name="lambda2_unit", x=tau1, y=(A2 - r * p.b2 * A1) / denominator
            )
        )
    else:
        logger.warning("lambda2 = 1 locus is degenerate (c2 = r b2 c1), skipped")

    denominator = p.c1 - p.b1 * p.c2 / r
    if denominator != 0:
        lines.append(
            BoundaryLine(
                name="lambda4_unit", x=tau1, y=(A1 - p.b1 / r * A2) / denominator
            )
        )
    else:
        logger.warning("lambda4 = 1 locus is degenerate (c1 = b1 c2 / r), skipped")

    return lines


def c_plane_lines(
    p: ModelParameters,
    s: Schedule,
    c1_range: Interval,
    c2_range: Interval,
    n: int = 200,
) -> List[BoundaryLine]:
    """Region boundaries in the (c1, c2) plane for a fixed schedule.
    With L = T - tau2 the exponents read gU = A - c1 L, gV = B - c2 L.
    """
    c1_range = Interval.validate_field(c1_range)
    c2_range = Interval.validate_field(c2_range)
    L = s.T - s.tau2
    if L == 0:
        logger.warning("No grazing phase, the exponents do not depend on c1 or c2")
        return []

    r = p.r
    A = s.T - (p.d1 + 1) * s.tau1
    B = r * s.T - (p.d2 + r) * s.tau1
    c1 = c1_range.linspace(n)
    c2 = c2_range.linspace(n)
    k = p.b1 / r
    return [
        BoundaryLine(name="u_threshold", x=np.full(2, A / L), y=c2[[0, -1]]),
        BoundaryLine(name="v_threshold", x=c1[[0, -1]], y=np.full(2, B / L)),
        BoundaryLine(
            name="lambda2_unit", x=c1, y=(B - r * p.b2 * A) / L + r * p.b2 * c1
        ),
        BoundaryLine(name="lambda4_unit", x=(A - k * B) / L + k * c2, y=c2),
    ]


# Outcomes of the basin sampler compatible with each region
EXPECTED_OUTCOMES = {
    Region.I_COLLAPSE: {BasinOutcome.COLLAPSE},
    Region.II_U_WINS: {BasinOutcome.U_BOUNDARY},
    Region.III_V_WINS: {BasinOutcome.V_BOUNDARY},
    Region.IV_COEXIST: {BasinOutcome.INTERIOR},
    Region.V_U_LAS_UNRESOLVED: {
        BasinOutcome.U_BOUNDARY,
        BasinOutcome.V_BOUNDARY,
        BasinOutcome.INTERIOR,
    },
    Region.VI_V_LAS_UNRESOLVED: {
        BasinOutcome.U_BOUNDARY,
        BasinOutcome.V_BOUNDARY,
        BasinOutcome.INTERIOR,
    },
    Region.VII_BISTABLE: {BasinOutcome.U_BOUNDARY, BasinOutcome.V_BOUNDARY},
}

AUDIT_STARTS = (
    State(u=0.5, v=0.5),
    State(u=0.9, v=0.1),
    State(u=0.1, v=0.9),
)


class AuditCell(BaseModel):
    i: int
    j: int
    x: float
    y: float
    region: Region
    outcomes: List[BasinOutcome]
    consistent: bool


class AuditReport(BaseModel):
    cells: List[AuditCell] = []

    @property
    def mismatches(self) -> List[AuditCell]:
        return [cell for cell in self.cells if not cell.consistent]


def audit(
    grid: RegionGrid,
    p: ModelParameters,
    s: Schedule,
    k: int,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    starts=AUDIT_STARTS,
    max_periods: int = 2000,
) -> AuditReport:
    """Cross-check k classified cells against simulated outcomes.
    Cells are chosen evenly over the resolved cells in row-major order.
    """
    if grid.spec.species is not None:
        raise ValueError("Audit applies to two-species grids only")

    resolved_codes = [region.code for region in EXPECTED_OUTCOMES]
    candidates = list(zip(*np.nonzero(np.isin(grid.cells, resolved_codes))))
    report = AuditReport()
    if not candidates or k <= 0:
        return report

    positions = np.linspace(0, len(candidates) - 1, min(k, len(candidates)))
    chosen = sorted(set(positions.astype(int).tolist()))
    x, y = grid.spec.centers1(), grid.spec.centers2()
    for index in chosen:
        i, j = candidates[index]
        region = Region.from_code(int(grid.cells[i, j]))
        cell_p, cell_s = cell_inputs(p, s, grid.spec, x[i], y[j])
        samples = sample_basins(cell_p, cell_s, starts, settings, max_periods=max_periods)
        outcomes = [sample.outcome for sample in samples]
        resolved = {o for o in outcomes if o != BasinOutcome.UNRESOLVED}
        consistent = resolved <= EXPECTED_OUTCOMES[region]
        if not consistent:
            logger.warning(
                f"Cell ({x[i]}, {y[j]}) classified {region.value} "
                f"but simulated {[o.value for o in outcomes]}"
            )
        report.cells.append(
            AuditCell(
                i=int(i),
                j=int(j),
                x=float(x[i]),
                y=float(y[j]),
                region=region,
                outcomes=outcomes,
                consistent=consistent,
            )
        )
    return report


def export(grid: RegionGrid, csv_url: str, json_url: str):
    """Write the code matrix as CSV and a JSON sidecar describing it"""
    spec = grid.spec
    frame = pd.DataFrame(
        grid.cells,
        index=pd.Index(spec.centers1(), name=spec.axis1),
        columns=spec.centers2(),
    )
    write_frame(csv_url, frame, index=True)

    sidecar = {
        "codes": grid.labels,
        "shape": list(grid.cells.shape),
        "axes": {
            spec.axis1: {"range": spec.range1.as_tuple(), "n": spec.n1, "rows": True},
            spec.axis2: {"range": spec.range2.as_tuple(), "n": spec.n2, "rows": False},
        },
        "species": spec.species,
        "counts": grid.counts(),
        "boundary_curves": [
            {"name": line.name, "x": line.x, "y": line.y} for line in grid.boundary_curves
        ],
    }
    write_json(json_url, sidecar)
    logger.info(f"Grid written to {csv_url} and {json_url}")
