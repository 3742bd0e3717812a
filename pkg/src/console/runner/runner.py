"""
Suite runner for the szmk command line.

This module provides the SuiteRunner class, which turns a RunConfig into rows of one of the
fixed output schemas, plus the writer that emits those rows as CSV or JSON lines.

Classes:
    SuiteRunner: computes the rows of every command.

Functions:
    write_rows: serialize rows in a fixed column order.
"""

import concurrent.futures
import itertools
import json
import math
import sys
from functools import partial
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from szmk.constants import ASYMPTOTIC_ENVELOPES, WINDOW_POINTS
from szmk.errors import EnvelopeError, NonFiniteError
from szmk.funcs import available_names, registry_get
from szmk.kernel import apply_operator, kernel_cdf, operator_on_grid
from szmk.moduli import lip_uv_constant
from szmk.polymoments import (
    asymptotic_check,
    central_moment_closed,
    central_moment_exact,
    check_lemma_l2,
    check_lemma_l3,
    moment_report,
    raw_moment_closed,
    raw_moment_exact,
)
from szmk.protocol import BoundReport, GridSpec, OperatorConfig, TestFunction, TheoremId, VoronovskayaReport
from szmk.theorems import (
    as_bv_function,
    bound_bv,
    bound_ditzian_totik,
    bound_lip_uv,
    bound_lipschitz_maximal,
    bound_voronovskaya,
    gruss_limit,
    gruss_quantity,
    uniform_convergence,
    voronovskaya_report,
)
from szmk.utils.config import ConfigObject, OutputFormat, load_config_from_file
from src.console.runner._config import Command, RunConfig, RunSettings
from src.console.utils import log

FIGURE_EXAMPLES = {1: "x2expx", 2: "xcos2x1"}
BOUND_THEOREMS = (
    TheoremId.LIP_MAXIMAL,
    TheoremId.DITZIAN_TOTIK,
    TheoremId.LIP_UV,
    TheoremId.BV_RATE,
    TheoremId.VORONOVSKAYA,
)
# theorems whose estimate is singular at x = 0
POSITIVE_X_ONLY = {TheoremId.DITZIAN_TOTIK, TheoremId.LIP_UV, TheoremId.BV_RATE}

RAW_ORDERS = range(0, 5)
CENTRAL_ORDERS = range(1, 7)

COLUMNS: Dict[Command, List[str]] = {
    Command.EVAL: ["x", "m", "a", "value", "terms_used", "tail_bound"],
    Command.MOMENTS: ["kind", "order", "m", "a", "x", "closed_form", "exact", "numeric", "max_discrepancy"],
    Command.VERIFY: ["suite", "check", "m", "a", "x", "expected", "observed", "discrepancy", "passed"],
    Command.BOUNDS: ["theorem_id", "x", "m", "a", "bound", "observed", "holds", "surrogate_flags"],
    Command.VORONOVSKAYA: ["x", "m", "a", "residual", "delta_f2", "proof_majorant"],
    Command.GRUSS: ["x", "m", "a", "quantity", "limit", "abs_error"],
    Command.CONVERGENCE: ["m", "a", "sup_error", "argmax"],
    Command.REGISTRY: ["name", "growth_class", "has_d1", "has_d2", "has_bv_metadata"],
}


def figure_columns(m_list: Sequence[int]) -> List[str]:
    return ["x", "f"] + [f"R{m}" for m in m_list] + [f"err{m}" for m in m_list]


class SuiteRunner:
    """
    Computes the rows of one command.

    Attributes:
        settings: resolved RunSettings (numerics, workers, log level).
        run_config: the validated RunConfig of this run.
        perturb: relative perturbation applied to every closed form in `verify`, 0 outside
            the negative-control mode.

    Methods:
        eval_rows, moment_rows, verify_rows, bound_rows, voronovskaya_rows, gruss_rows,
        figure_rows, convergence_rows, registry_rows: one producer per command.
    """

    def __init__(self, settings: RunSettings, run_config: RunConfig, perturb: float = 0.0) -> None:
        self.settings = settings
        self.run_config = run_config
        self.perturb = perturb
        self.failures = 0

        log.set_level(settings.log_level)
        log.debug(f"Running szmk {run_config.command.value} with the following configuration:")
        ConfigObject(settings.model_dump(mode="json")).pretty_print(indent=1, printer=log.debug)

    @property
    def function(self) -> TestFunction:
        return registry_get(self.run_config.function)

    @property
    def window(self) -> GridSpec:
        return GridSpec(
            lo=0.0,
            hi=self.settings.window_hi,
            points=WINDOW_POINTS,
            refine_levels=self.settings.refine_levels,
        )

    def operator_config(self, m: int, a: Optional[float] = None) -> OperatorConfig:
        return OperatorConfig(
            m=m,
            a=self.run_config.a if a is None else a,
            tail_tol=self.settings.tail_tol,
            quad_order=self.settings.quad_order,
        )

    def _map(self, producer: Callable[[float], Any], xs: Iterable[float]) -> List[Any]:
        # executor.map keeps x-order, so output does not depend on completion order
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.settings.workers) as executor:
            return [*executor.map(producer, xs)]

    def _xs(self) -> List[float]:
        return [float(x) for x in self.run_config.x_grid.nodes()]

    # == eval ==

    def eval_rows(self) -> List[Dict[str, Any]]:
        f = self.function
        rows = []
        for m in self.run_config.m_list:
            cfg = self.operator_config(m)
            xs = self._xs()
            results = operator_on_grid(f, cfg, xs, max_workers=self.settings.workers)
            rows += [
                {"x": x, "m": m, "a": cfg.a, **result.model_dump()}
                for x, result in zip(xs, results)
            ]
        return rows

    # == moments ==

    def _moment_rows_at(self, cfg: OperatorConfig, x: float) -> List[Dict[str, Any]]:
        reports = [moment_report("raw", order, cfg, x) for order in RAW_ORDERS]
        reports += [moment_report("central", order, cfg, x) for order in CENTRAL_ORDERS]
        return [{"m": cfg.m, "a": cfg.a, "x": x, **report.model_dump()} for report in reports]

    def moment_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for m in self.run_config.m_list:
            for chunk in self._map(partial(self._moment_rows_at, self.operator_config(m)), self._xs()):
                rows += chunk
        return rows

    # == verify ==

    def _check(self, suite, check, m, a, x, expected, observed, discrepancy, passed) -> Dict[str, Any]:
        if not passed:
            self.failures += 1
            log.warning(
                f"{suite}/{check} failed at m={m}, a={a:g}, x={x:g}: "
                f"expected {expected!r}, observed {observed!r}"
            )
        return {
            "suite": suite, "check": check, "m": m, "a": a, "x": x,
            "expected": expected, "observed": observed,
            "discrepancy": discrepancy, "passed": bool(passed),
        }

    def _identity_rows(self, grid: ConfigObject, tolerances: ConfigObject) -> List[Dict[str, Any]]:
        scale = 1.0 + self.perturb
        monomials = [registry_get(f"e{i}") for i in range(4)]
        rows = []
        for m, a, x in itertools.product(grid.m, grid.a, grid.x):
            cfg = self.operator_config(m, a)
            for i, monomial in enumerate(monomials):
                expected = raw_moment_closed(i, m, a, x) * scale
                observed = apply_operator(monomial, cfg, x).value
                gap = abs(observed - expected)
                rows.append(self._check(
                    "kernel_vs_closed", f"raw{i}", m, a, x, expected, observed, gap,
                    gap <= tolerances.kernel_closed * (1.0 + abs(expected)),
                ))
            for i in range(4):
                expected = raw_moment_closed(i, m, a, x) * scale
                observed = raw_moment_exact(i, m, a, x)
                gap = abs(observed - expected) / max(abs(expected), sys.float_info.min)
                rows.append(self._check(
                    "exact_vs_closed", f"raw{i}", m, a, x, expected, observed, gap,
                    gap <= tolerances.exact_closed,
                ))
            for j in range(1, 5):
                expected = central_moment_closed(j, m, a, x) * scale
                observed = central_moment_exact(j, m, a, x)
                gap = abs(observed - expected) / max(abs(expected), sys.float_info.min)
                rows.append(self._check(
                    "exact_vs_closed", f"central{j}", m, a, x, expected, observed, gap,
                    gap <= tolerances.exact_closed,
                ))
            first_ok, second_ok = check_lemma_l2(m, a, x)
            first, second = central_moment_closed(1, m, a, x), central_moment_closed(2, m, a, x)
            first_bound = 1.0 / (2 * m)
            second_bound = 1.0 / (3 * m ** 2) + x * (x + 1) / m
            rows.append(self._check(
                "moment_inequalities", "central1", m, a, x, first_bound, first, first - first_bound, first_ok,
            ))
            rows.append(self._check(
                "moment_inequalities", "central2", m, a, x, second_bound, second, second - second_bound, second_ok,
            ))
        return rows

    def _asymptotic_rows(self, grid: ConfigObject) -> List[Dict[str, Any]]:
        rows = []
        for x, a, order in itertools.product(grid.x, grid.a, sorted(ASYMPTOTIC_ENVELOPES)):
            check = asymptotic_check(order, a, x, grid.m_seq)
            for (m, value), error in zip(check.sequence, check.errors):
                rows.append(self._check(
                    "asymptotic", f"order{order}", m, a, x, check.limit_value, value, error,
                    check.converged and error <= ASYMPTOTIC_ENVELOPES[order] / m,
                ))
        return rows

    def _chebyshev_rows(self, grid: ConfigObject) -> List[Dict[str, Any]]:
        rows = []
        for m, a, (x, y, z) in itertools.product(grid.m, grid.a, grid.triples):
            cfg = self.operator_config(m, a)
            left_ok, right_ok = check_lemma_l3(m, a, x, y, z, cfg)
            second = central_moment_closed(2, m, a, x)
            left, left_bound = kernel_cdf(x, y, cfg), second / (x - y) ** 2
            right, right_bound = 1.0 - kernel_cdf(x, z, cfg), second / (z - x) ** 2
            rows.append(self._check("kernel_tails", f"left[y={y:g}]", m, a, x, left_bound, left, left - left_bound, left_ok))
            rows.append(self._check("kernel_tails", f"right[z={z:g}]", m, a, x, right_bound, right, right - right_bound, right_ok))
        return rows

    def verify_rows(self) -> List[Dict[str, Any]]:
        grids = load_config_from_file(self.settings.verify_config)
        self.failures = 0
        rows = self._identity_rows(grids.identities, grids.tolerances)
        rows += self._asymptotic_rows(grids.asymptotics)
        rows += self._chebyshev_rows(grids.chebyshev)
        if self.failures:
            log.error(f"{self.failures} of {len(rows)} checks failed")
        else:
            log.info(f"all {len(rows)} checks passed")
        return rows

    # == bounds ==

    def _bound(self, f: TestFunction, theorem: TheoremId, cfg: OperatorConfig, lip_uv_M: Optional[float], x: float) -> BoundReport:
        if theorem is TheoremId.LIP_MAXIMAL:
            return bound_lipschitz_maximal(f, self.settings.alpha, cfg, x, self.window)
        if theorem is TheoremId.DITZIAN_TOTIK:
            return bound_ditzian_totik(f, cfg, x, self.window, self.settings.majorant_m)
        if theorem is TheoremId.LIP_UV:
            return bound_lip_uv(f, lip_uv_M, 1.0, 1.0, self.settings.alpha, cfg, x)
        if theorem is TheoremId.BV_RATE:
            return bound_bv(as_bv_function(f), cfg, x, self.settings.bv_constant)
        if theorem is TheoremId.VORONOVSKAYA:
            return bound_voronovskaya(f, cfg, x, self.window)
        raise ValueError(f"{theorem.value} has no bound")

    def _bounds_at(self, f: TestFunction, theorems: Sequence[TheoremId], cfg: OperatorConfig, lip_uv_M: Optional[float], x: float) -> List[BoundReport]:
        reports = []
        for theorem in theorems:
            if x <= 0 and theorem in POSITIVE_X_ONLY:
                continue
            try:
                reports.append(self._bound(f, theorem, cfg, lip_uv_M, x))
            except (NonFiniteError, EnvelopeError) as e:
                log.warning(f"{theorem.value} not available for {f.name} at m={cfg.m}, x={x:g}: {e}")
        return reports

    def _usable_theorems(self, f: TestFunction, theorems: Sequence[TheoremId]) -> List[TheoremId]:
        usable = []
        for theorem in theorems:
            if theorem is TheoremId.GRUSS:
                log.warning("GRUSS has no bound; use the gruss command")
                continue
            if theorem is TheoremId.BV_RATE and f.d1 is None and f.bv_metadata is None:
                log.warning(f"skipping BV_RATE: {f.name} has no derivative")
                continue
            if theorem is TheoremId.VORONOVSKAYA and (f.d1 is None or f.d2 is None):
                log.warning(f"skipping VORONOVSKAYA: {f.name} lacks d1/d2")
                continue
            usable.append(theorem)
        return usable

    def bound_rows(self, theorems: Sequence[TheoremId] = BOUND_THEOREMS) -> List[Dict[str, Any]]:
        f = self.function
        theorems = self._usable_theorems(f, theorems)
        lip_uv_M = None
        if TheoremId.LIP_UV in theorems:
            lip_uv_M = lip_uv_constant(f, 1.0, 1.0, self.settings.alpha, self.window)
            log.info(f"empirical Lip(u=1, v=1) constant of {f.name}: {lip_uv_M:.6g}")
        rows = []
        for m in self.run_config.m_list:
            producer = partial(self._bounds_at, f, theorems, self.operator_config(m), lip_uv_M)
            for reports in self._map(producer, self._xs()):
                for report in reports:
                    row = report.model_dump()
                    row["theorem_id"] = report.theorem_id.value
                    row["surrogate_flags"] = "; ".join(report.surrogate_flags)
                    if not report.holds:
                        log.warning(f"{row['theorem_id']} bound exceeded at m={m}, x={report.x:g}")
                    rows.append(row)
        return rows

    # == voronovskaya / gruss ==

    def _voronovskaya_at(self, f: TestFunction, cfg: OperatorConfig, x: float) -> Optional[VoronovskayaReport]:
        try:
            return voronovskaya_report(f, cfg, x, self.window)
        except (NonFiniteError, EnvelopeError) as e:
            log.warning(f"Voronovskaya residual of {f.name} not available at m={cfg.m}, x={x:g}: {e}")
            return None

    def voronovskaya_rows(self) -> List[Dict[str, Any]]:
        f = self.function
        rows = []
        for m in self.run_config.m_list:
            producer = partial(self._voronovskaya_at, f, self.operator_config(m))
            rows += [report.model_dump() for report in self._map(producer, self._xs()) if report is not None]
        return rows

    def _gruss_row(self, mu: TestFunction, nu: TestFunction, cfg: OperatorConfig, x: float) -> Dict[str, Any]:
        quantity = gruss_quantity(mu, nu, cfg, x)
        limit = gruss_limit(mu, nu, x)
        return {"x": x, "m": cfg.m, "a": cfg.a, "quantity": quantity, "limit": limit, "abs_error": abs(quantity - limit)}

    def gruss_rows(self) -> List[Dict[str, Any]]:
        mu, nu = self.function, registry_get(self.settings.nu)
        rows = []
        for m in self.run_config.m_list:
            rows += self._map(partial(self._gruss_row, mu, nu, self.operator_config(m)), self._xs())
        return rows

    # == figure / convergence ==

    def _operator_value(self, f: TestFunction, cfg: OperatorConfig, x: float) -> float:
        try:
            return apply_operator(f, cfg, x).value
        except (NonFiniteError, EnvelopeError) as e:
            log.warning(f"R_{cfg.m}({f.name}; {x:g}) not available: {e}")
            return math.nan

    def figure_rows(self, example_id: int) -> List[Dict[str, Any]]:
        f = registry_get(FIGURE_EXAMPLES[example_id])
        xs = self._xs()
        values = f(np.asarray(xs))
        rows = [{"x": x, "f": float(value)} for x, value in zip(xs, values)]
        for m in self.run_config.m_list:
            operated = self._map(partial(self._operator_value, f, self.operator_config(m)), xs)
            for row, value in zip(rows, operated):
                row[f"R{m}"] = value
                row[f"err{m}"] = value - row["f"]
        for m in self.run_config.m_list:
            log.info(f"example {example_id}, m={m}: max |err| = {max(abs(row[f'err{m}']) for row in rows):.6g}")
        return rows

    def convergence_rows(self) -> List[Dict[str, Any]]:
        table = uniform_convergence(
            self.function,
            self.operator_config(self.run_config.m_list[0]),
            self.run_config.m_list,
            self.run_config.x_grid,
            max_workers=self.settings.workers,
        )
        return [row.model_dump() for row in table]

    def registry_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for name in available_names():
            f = registry_get(name)
            rows.append({
                "name": name,
                "growth_class": f.growth_class.value,
                "has_d1": f.d1 is not None,
                "has_d2": f.d2 is not None,
                "has_bv_metadata": f.bv_metadata is not None,
            })
        return rows


def _jsonable(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_rows(
    rows: List[Dict[str, Any]],
    columns: List[str],
    output_path: Optional[str],
    fmt: OutputFormat = OutputFormat.CSV,
) -> None:
    """
    Writes rows in the given column order to output_path, or to stdout when it is None.
    CSV floats carry 17 significant digits, JSON lines use round-trip float repr.
    """
    if fmt is OutputFormat.CSV:
        text = pd.DataFrame(rows, columns=columns).to_csv(
            index=False, float_format="%.17g", lineterminator="\n"
        )
    else:
        text = "".join(
            json.dumps({column: _jsonable(row.get(column)) for column in columns}) + "\n"
            for row in rows
        )
    if output_path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(output_path, "w", encoding="utf-8", newline="") as out:
        out.write(text)
    log.info(f"wrote {len(rows)} rows to {output_path}")
