"""
Figure data

Curves and region boundaries as FigureSeries; rendering is left to
external tools reading the CSV export.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from config import get_settings
from models.schemas import FigureSeries, Series
from services.analysis import params_from_overlaps
from services.closedform import (
    SSD_THRESHOLD,
    appendix_c_priors,
    critical_sc,
    optimal_ssd_stage,
    ssd_delta,
    theorem1_delta,
)
from services.errors import BracketingError, ParameterError, UnknownIdentifierError

logger = logging.getLogger(__name__)

FIGURES = ("fig3", "fig6", "fig7", "fig8")

FIG3_DEFAULTS = {"P1": 0.1, "s0": 0.7, "s0_tilde": 0.2, "s0_tilde_case_ii": 0.4, "r_min": 0.05, "r_max": 0.5}
FIG6_OVERLAPS = (0.2, 0.3, 0.4, 0.8)
FIG7_OVERLAPS = (0.2, 0.5, 0.9)


def _sweep(func: Callable[[float], float], xs: Sequence[float]) -> List[float]:
    """Evaluate func over xs concurrently; results keep the order of xs."""
    with ThreadPoolExecutor(max_workers=get_settings().mc_workers) as executor:
        return list(executor.map(func, xs))


def _open_grid(points: int) -> np.ndarray:
    """points values strictly inside (0, 1)."""
    return np.linspace(0.0, 1.0, points + 2)[1:-1]


def _fig3(params: Dict, points: int) -> FigureSeries:
    """Global pure-vs-mixed gap against the entanglement E = 2 sqrt(r (1 - r)), r1 = r2 = r."""
    r_values = np.linspace(params["r_min"], params["r_max"], points)
    series: Dict[str, List] = {"case_ii": [], "case_iii": [], "case_iv": []}

    def caption(r):
        return theorem1_delta(params_from_overlaps(params["P1"], r, r, params["s0"], params["s0_tilde"]))

    def case_ii(r):
        return theorem1_delta(params_from_overlaps(params["P1"], r, r, params["s0"], params["s0_tilde_case_ii"]))

    for r, report in zip(r_values, _sweep(caption, [float(r) for r in r_values])):
        if report.label in ("iii", "iv"):
            series[f"case_{report.label}"].append((2.0 * math.sqrt(r * (1.0 - r)), report.delta))
    for r, report in zip(r_values, _sweep(case_ii, [float(r) for r in r_values])):
        if report.label == "ii":
            series["case_ii"].append((2.0 * math.sqrt(r * (1.0 - r)), report.delta))
    return FigureSeries(
        figure_id="fig3",
        x_name="E",
        y_name="delta_P",
        series=[Series(label=k, x=[p[0] for p in v], y=[p[1] for p in v]) for k, v in series.items() if v],
        parameters={**params, "points": points, "r_range": [params["r_min"], params["r_max"]]},
    )


def _fig6(overlaps: Sequence[float], points: int) -> FigureSeries:
    """Optimal hybrid sequential gap against s' for fixed first-particle overlaps s."""
    xs = [float(x) for x in _open_grid(points)]
    series = []
    for s in overlaps:
        ys = _sweep(lambda s_prime, s=s: ssd_delta(s, s_prime).delta, xs)
        series.append(Series(label=f"s={s:g}", x=xs, y=ys))
    return FigureSeries(figure_id="fig6", x_name="s_prime", y_name="delta_P", series=series,
                        parameters={"s": list(overlaps), "points": points})


def _fig7(overlaps: Sequence[float], points: int) -> FigureSeries:
    """Optimal second-stage joint success against s' with the priors left by the first stage at s."""
    xs = [float(x) for x in _open_grid(points)]
    series = []
    switches: Dict[str, Optional[float]] = {}
    critical: Dict[str, float] = {}
    for s in overlaps:
        P_f1, P_f2 = appendix_c_priors(s)
        reports = _sweep(lambda s_prime, P_f1=P_f1: optimal_ssd_stage(P_f1, s_prime), xs)
        label = f"s={s:g}"
        series.append(Series(label=label, x=xs, y=[r.value for r in reports]))
        switches[label] = next((x for x, r in zip(xs, reports) if r.branch == "one-identified"), None)
        critical[label] = critical_sc(P_f1, P_f2)
    return FigureSeries(figure_id="fig7", x_name="s_prime", y_name="P_BD_opt", series=series,
                        parameters={"s": list(overlaps), "points": points, "branch_switch": switches,
                                    "critical_sc": critical})


def _fig8(points: int) -> FigureSeries:
    """Region boundaries in the (s, s') plane for s above the equal-prior threshold."""
    xs = np.linspace(SSD_THRESHOLD, 1.0, points + 1)[1:]
    bound = Series(label="ss_prime_bound", x=[float(x) for x in xs], y=[SSD_THRESHOLD / float(x) for x in xs])

    def trace(s):
        try:
            return critical_sc(*appendix_c_priors(s))
        except BracketingError as exc:
            logger.warning("critical overlap at s=%.6f skipped: %s", s, exc)
            return float("nan")

    inner = [float(x) for x in xs[:-1]]
    sc = _sweep(trace, inner)
    critical = Series(label="critical_sc", x=[x for x, y in zip(inner, sc) if math.isfinite(y)],
                      y=[y for y in sc if math.isfinite(y)])
    diagonal_x = [float(x) for x in np.linspace(SSD_THRESHOLD, math.sqrt(SSD_THRESHOLD), points + 1)[1:]]
    labels = _sweep(lambda s: ssd_delta(s, s).label, diagonal_x)
    on_diagonal = [s for s, label in zip(diagonal_x, labels) if label == "case_ii"]
    diagonal = Series(label="diagonal_case_ii", x=on_diagonal, y=on_diagonal)
    return FigureSeries(figure_id="fig8", x_name="s", y_name="s_prime", series=[bound, critical, diagonal],
                        parameters={"points": points, "threshold": SSD_THRESHOLD})


def emit_figure(figure_id: str, params: Optional[Dict] = None, points: Optional[int] = None) -> FigureSeries:
    """Generate the data of one figure.

    params overrides the defaults: fig3 takes P1, s0, s0_tilde, s0_tilde_case_ii,
    r_min, r_max; fig6 and fig7 take `s`, a list of first-particle overlaps.
    """
    settings = get_settings()
    params = params or {}
    if figure_id not in FIGURES:
        raise UnknownIdentifierError(f"unknown figure {figure_id!r}; expected one of {', '.join(FIGURES)}")
    if points is not None and points < 2:
        raise ParameterError("a figure needs at least two points", [f"points={points}"])
    if figure_id == "fig3":
        unknown = set(params) - set(FIG3_DEFAULTS)
        if unknown:
            raise ParameterError("unknown fig3 parameters", sorted(unknown))
        figure = _fig3({**FIG3_DEFAULTS, **params}, points or settings.curve_points)
    elif figure_id == "fig6":
        figure = _fig6(params.get("s", FIG6_OVERLAPS), points or settings.curve_points)
    elif figure_id == "fig7":
        figure = _fig7(params.get("s", FIG7_OVERLAPS), points or settings.curve_points)
    else:
        figure = _fig8(points or settings.region_points)
    logger.info("%s: %d series, %d points", figure_id, len(figure.series), sum(len(s.x) for s in figure.series))
    return figure


def export_figure(figure: FigureSeries, path: Path, fmt: str = "csv") -> Path:
    """Write the figure as CSV (x, y, series) or JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        figure.to_frame().to_csv(path, index=False)
    elif fmt == "json":
        path.write_text(figure.model_dump_json(indent=2))
    else:
        raise ParameterError("unknown output format", [f"format={fmt}"])
    logger.info("wrote %s to %s", figure.figure_id, path)
    return path
