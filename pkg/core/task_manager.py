#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
任务管理器
执行 spectrum / coeffs / verify / jsquare / crossings 命令并写出结果文件
"""

import math
import os
import time
from typing import Callable, Dict, List, Optional

import numpy as np
import psutil

from core.config_manager import ConfigError, ConfigManager, RunConfig
from core.fock_algebra import (
    ModelParams, RabiSymmetryError, annihilation, bogoliubov_pair,
    check_canonical, check_mixed_commutator, check_power_relations, check_su11,
    su11_generators,
)
from core.model import build_h0, build_h_tilde, build_lab_hamiltonian, rotate_to_transformed_frame
from core.result_writer import ResultWriter
from core.spectrum import detect_crossings, eigensolve, sweep, track_levels
from core.symmetry import (
    GaugeAmbiguity, MAX_CLOSED_FORM, NoSolution, SymmetryError, analytic_j1_poly,
    build_symmetry, closed_form_coeffs, commutator_residual, element_residuals,
    fit_state_count, intertwining_residual, jsquare_poly, nullspace_symmetry,
    parity_operator, solve_recurrence,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2


class CheckSuite:
    """一组带容差的检查，记录测量值与是否通过"""

    def __init__(self, name: str):
        self.name = name
        self.checks: List[dict] = []
        self.measurements: Dict[str, float] = {}
        self.started = time.perf_counter()
        self.seconds = 0.0

    def check(self, name: str, value: float, tolerance: float, above: bool = False) -> bool:
        """above=True 时要求 value > tolerance，否则要求 value <= tolerance"""
        value = float(value)
        passed = value > tolerance if above else value <= tolerance
        self.checks.append({
            "name": name,
            "value": value,
            "tolerance": tolerance,
            "relation": ">" if above else "<=",
            "passed": bool(passed),
        })
        return passed

    def measure(self, name: str, value: float):
        """只记录数值，不参与通过判断"""
        self.measurements[name] = float(value)

    def fail(self, name: str, message: str):
        self.checks.append({"name": name, "error": message, "passed": False})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def finish(self) -> dict:
        self.seconds = time.perf_counter() - self.started
        return self.report()

    def report(self) -> dict:
        return {"passed": self.passed, "seconds": self.seconds, "checks": self.checks,
                "measurements": self.measurements}


class TaskManager:
    """任务管理器"""

    def __init__(self, config_manager: Optional[ConfigManager] = None, verbose: bool = True):
        self.config_manager = config_manager or ConfigManager(verbose=verbose)
        self.verbose = verbose

    def _log(self, message: str):
        if self.verbose:
            print(message)

    def run(self, config: RunConfig) -> int:
        """校验配置并执行命令，返回退出码"""
        try:
            config = self.config_manager.resolve(config)
        except ConfigError as e:
            print(f"配置无效: {e}")
            return EXIT_INVALID

        commands: Dict[str, Callable[[RunConfig], int]] = {
            "spectrum": self.cmd_spectrum,
            "coeffs": self.cmd_coeffs,
            "verify": self.cmd_verify,
            "jsquare": self.cmd_jsquare,
            "crossings": self.cmd_crossings,
        }
        self._log(f"执行命令: {config.command} (Δ={config.delta:.6g}, g={config.g:g}, "
                  f"cutoff={config.cutoff}, sector={config.sector})")
        try:
            self.config_manager.save_config(config, config.output_dir)
            code = commands[config.command](config)
        except RabiSymmetryError as e:
            print(f"计算失败: {e}")
            self._writer(config).write_json("error.json", {
                "command": config.command,
                "error": type(e).__name__,
                "message": str(e),
            })
            return EXIT_FAILED
        except OSError as e:
            print(f"写入结果失败: {e}")
            return EXIT_FAILED

        self._log("完成" if code == EXIT_OK else f"存在未通过的检查，退出码 {code}")
        return code

    def _writer(self, config: RunConfig) -> ResultWriter:
        return ResultWriter(config.output_dir, verbose=self.verbose)

    # ---- spectrum / crossings ----

    def _scan(self, config: RunConfig):
        cm = self.config_manager
        base = ModelParams(config.delta, config.epsilon or 0.0, config.g)
        workers = cm.worker_count(config)
        grid = cm.g_grid(config)
        mode = cm.bias_mode(config)
        self._log(f"扫描 {len(grid)} 个 g 点 ({mode.describe()}, {workers} 个线程)...")
        scan = sweep(base, mode, grid, config.sector, config.cutoff, config.n_levels, workers=workers)
        self._log("检测能级交叉...")
        events = detect_crossings(scan)
        writer = self._writer(config)
        writer.write_csv("spectrum.csv", ("g", "level_index", "energy_rescaled", "parity"), scan.csv_rows())
        n_true = sum(1 for e in events if e.is_true)
        writer.write_json("crossings.json", {
            "delta": config.delta,
            "bias_mode": {"kind": mode.kind, "value": mode.value},
            "sector": config.sector,
            "cutoff": config.cutoff,
            "labelled": scan.labelled,
            "n_true": n_true,
            "n_avoided": len(events) - n_true,
            "events": [e.to_dict() for e in events],
        })
        self._log(f"真交叉 {n_true} 个，避免交叉 {len(events) - n_true} 个")
        return scan

    def cmd_spectrum(self, config: RunConfig) -> int:
        """能谱扫描: spectrum.csv、crossings.json、spectrum.svg"""
        scan = self._scan(config)
        from gui.spectrum_svg import render_spectrum_svg
        path = render_spectrum_svg(scan, os.path.join(config.output_dir, "spectrum.svg"),
                                   branches=track_levels(scan))
        self._log(f"结果已保存: {path}")
        return EXIT_OK

    def cmd_crossings(self, config: RunConfig) -> int:
        """只做扫描与交叉检测，不画图"""
        self._scan(config)
        return EXIT_OK

    # ---- coeffs ----

    def cmd_coeffs(self, config: RunConfig) -> int:
        """递推求解系数表，N <= 3 时与闭式解比较"""
        writer = self._writer(config)
        params = self.config_manager.model_params(config)
        n_bias = config.n_bias

        if n_bias is None:
            ansatz = int(math.ceil(config.bias_ratio))
            diagnostic = {"N": ansatz, "ratio": config.bias_ratio, "params": params.to_dict()}
            try:
                solve_recurrence(ansatz, params, ratio=config.bias_ratio)
                diagnostic["recurrence"] = {"error": None}
            except NoSolution as e:
                diagnostic["recurrence"] = {"error": "NoSolution", "message": str(e), "residual": e.residual}
            try:
                nullspace_symmetry(ansatz, params, config.sector)
                diagnostic["nullspace"] = {"error": None}
            except SymmetryError as e:
                diagnostic["nullspace"] = {"error": type(e).__name__, "message": str(e),
                                           "smallest": getattr(e, "smallest", None)}
            writer.write_json("coeffs_diagnostics.json", diagnostic)
            print(f"ε/(2β) = {config.bias_ratio:g} 不是整数，不存在对称算符")
            return EXIT_FAILED

        try:
            table = solve_recurrence(n_bias, params, strict=True)
        except GaugeAmbiguity as e:
            writer.write_json("coeffs_diagnostics.json", {
                "N": n_bias,
                "error": "GaugeAmbiguity",
                "message": str(e),
                "table": e.table.to_dict() if e.table is not None else None,
            })
            print(f"解不唯一: {e}")
            return EXIT_FAILED
        except NoSolution as e:
            writer.write_json("coeffs_diagnostics.json", {
                "N": n_bias, "error": "NoSolution", "message": str(e), "residual": e.residual,
            })
            print(f"递推无解: {e}")
            return EXIT_FAILED

        writer.write_json(f"coeffs_{n_bias}.json", table.to_dict())
        if n_bias > MAX_CLOSED_FORM:
            return EXIT_OK

        closed = closed_form_coeffs(n_bias, params)
        writer.write_json(f"coeffs_{n_bias}_closed.json", closed.to_dict())
        error = table.max_relative_difference(closed)
        passed = error <= 1e-10
        writer.write_json(f"coeffs_{n_bias}_diff.json", {
            "N": n_bias,
            "max_relative_error": error,
            "tolerance": 1e-10,
            "passed": passed,
            "hermiticity_error": table.hermiticity_error(),
            "top_tier": table.top_tier(),
        })
        self._log(f"与闭式解的最大相对误差: {error:.3e}")
        return EXIT_OK if passed else EXIT_FAILED

    # ---- verify ----

    def _algebra_suite(self, params: ModelParams, full_cutoff: int, max_power: int) -> CheckSuite:
        suite = CheckSuite("algebra")
        a = annihilation(full_cutoff)
        pair = bogoliubov_pair(params, full_cutoff)
        modes = {"a": (a, a.dag()),
                 "a+": (pair.a_plus, pair.a_plus.dag()),
                 "a-": (pair.a_minus, pair.a_minus.dag())}
        generators = {}
        for name, (b, b_dag) in modes.items():
            suite.check(f"[{name},{name}†]=1", check_canonical(b, b_dag), 1e-12)
            generators[name] = su11_generators(b, b_dag)
            for relation, value in check_su11(generators[name]).items():
                suite.check(f"{name}: {relation}", value, 1e-10)
        suite.check("[a-,a+†]=1/β", check_mixed_commutator(pair, params.beta), 1e-10)
        for n in range(1, max_power + 1):
            for relation, value in check_power_relations(generators["a-"], generators["a+"], n).items():
                suite.check(relation, value, 1e-10)
        return suite

    def _model_suite(self, params: ModelParams, sector: str, cutoff: int) -> CheckSuite:
        suite = CheckSuite("model")
        hamiltonians = build_h0(params, sector, cutoff)
        h0 = hamiltonians.h0
        suite.check("h0 symmetric", h0.asymmetry(), 1e-12)
        for block, value in hamiltonians.lie_form_error.items():
            suite.check(f"{block} Lie form", value, 1e-11)
        tilde = build_h_tilde(params, sector, cutoff).to_dense()
        suite.check("h_tilde = Z h0 Z", np.abs(tilde - hamiltonians.h_tilde.to_dense()).max(), 1e-11)
        lab = build_lab_hamiltonian(params, cutoff, sector)
        rotated = rotate_to_transformed_frame(lab).to_dense()
        suite.check("rotated lab frame = h0", np.abs(rotated - h0.to_dense()).max(), 1e-11)
        lab_levels = eigensolve(lab, 10)[0]
        h0_levels = eigensolve(h0, 10)[0]
        suite.check("lab vs transformed spectrum", np.abs(lab_levels - h0_levels).max(), 1e-10)
        return suite

    def _symmetry_suite(self, params: ModelParams, sector: str, cutoff: int, n_bias: int) -> CheckSuite:
        suite = CheckSuite("symmetry")
        table = solve_recurrence(n_bias, params)
        suite.check("recurrence residual", table.residual, 1e-8)
        suite.check("gauge dimension", table.gauge_dim, 1)
        suite.check("hermiticity of coefficients", table.hermiticity_error(), 1e-12)
        for name, value in table.top_tier().items():
            suite.check(f"top tier {name}", abs(value), 1e-10)
        if n_bias <= MAX_CLOSED_FORM:
            suite.check("closed form oracle", table.max_relative_difference(closed_form_coeffs(n_bias, params)), 1e-10)
        try:
            suite.check("nullspace oracle",
                        nullspace_symmetry(n_bias, params, sector).max_relative_difference(table), 1e-8)
        except SymmetryError as e:
            suite.fail("nullspace oracle", str(e))

        bundle = build_symmetry(params, sector, cutoff, table)
        suite.check("intertwining QH = H̃Q", intertwining_residual(bundle.q, bundle.hamiltonians, n_bias), 1e-9)
        suite.measure("max|QH - H̃Q|_win",
                      intertwining_residual(bundle.q, bundle.hamiltonians, n_bias, relative=False))
        for name, value in element_residuals(bundle.q, bundle.hamiltonians, n_bias).items():
            suite.check(f"element equation {name}", value, 1e-9)
        h0 = bundle.hamiltonians.h0
        suite.check("commutator [J, H]", commutator_residual(bundle.j, h0, n_bias), 1e-9)
        suite.measure("max|[J, H]|_win", commutator_residual(bundle.j, h0, n_bias, relative=False))
        suite.check("J hermiticity", bundle.j.hermiticity_error(2 * n_bias + 2), 1e-10)
        if n_bias == 0:
            r = bundle.j.real.to_dense()
            suite.check("J0² = I", np.abs(r @ r - np.eye(r.shape[0])).max(), 1e-12)

        degree = 2 * n_bias
        states = fit_state_count(params, sector, cutoff, degree)
        poly = jsquare_poly(bundle.j, h0, degree, states, n_bias)
        suite.check("J² polynomial fit", poly.residual, 1e-8)
        suite.check("J² off-diagonal", poly.offdiag, 1e-8)
        labels = parity_operator(bundle.j, h0, poly, states)
        suite.check("|⟨J⟩| = sqrt(poly(E))",
                    np.abs(np.abs(labels.rescaled(poly)) - 1.0).max(), 1e-7)
        return suite

    def cmd_verify(self, config: RunConfig) -> int:
        """运行不变量检查并写出 verify.json"""
        n_bias = config.n_bias
        params = self.config_manager.model_params(config)
        sector = config.sector
        self._log(f"验证 N={n_bias}...")
        suites = [self._algebra_suite(params, 2 * config.cutoff, max(n_bias, 1))]
        suites[-1].finish()
        suites.append(self._model_suite(params, sector, config.cutoff))
        suites[-1].finish()
        symmetry = CheckSuite("symmetry")
        try:
            symmetry = self._symmetry_suite(params, sector, config.cutoff, n_bias)
        except RabiSymmetryError as e:
            symmetry.fail(type(e).__name__, str(e))
        symmetry.finish()
        suites.append(symmetry)

        report = {
            "N": n_bias,
            "params": params.to_dict(),
            "sector": sector,
            "cutoff": config.cutoff,
            "passed": all(s.passed for s in suites),
            "suites": {s.name: s.report() for s in suites},
            "memory_rss_mb": psutil.Process().memory_info().rss / 2 ** 20,
        }
        self._writer(config).write_json("verify.json", report)
        for suite in suites:
            failed = [c["name"] for c in suite.checks if not c["passed"]]
            self._log(f"  {suite.name}: {'通过' if not failed else '未通过 ' + ', '.join(failed)}")
        return EXIT_OK if report["passed"] else EXIT_FAILED

    # ---- jsquare ----

    def cmd_jsquare(self, config: RunConfig) -> int:
        """拟合 J†J 多项式，N = 1 时与解析式对照"""
        n_bias = config.n_bias
        params = self.config_manager.model_params(config)
        bundle = build_symmetry(params, config.sector, config.cutoff)
        h0 = bundle.hamiltonians.h0
        degree = 2 * n_bias
        states = fit_state_count(params, config.sector, config.cutoff, degree)
        self._log(f"使用 {states} 个收敛本征态拟合 {degree} 次多项式")
        poly = jsquare_poly(bundle.j, h0, degree, states, n_bias)

        suite = CheckSuite("jsquare")
        suite.check("fit residual", poly.residual, 1e-12 if n_bias == 0 else 1e-8)
        suite.check("off-diagonal", poly.offdiag, 1e-8)
        report = {"N": n_bias, "params": params.to_dict(), "sector": config.sector,
                  "cutoff": config.cutoff, "fit": poly.to_dict()}
        if n_bias >= 2:
            lower = jsquare_poly(bundle.j, h0, degree - 1, states, n_bias)
            report["lower_degree_fit"] = lower.to_dict()
            suite.check("degree 2N-1 residual", lower.residual, 1e-3, above=True)
        if n_bias == 1:
            analytic = analytic_j1_poly(params)
            report["analytic"] = list(analytic)
            report["abs_error"] = [abs(f - a) for f, a in zip(poly.coeffs, analytic)]
            suite.check("analytic y_i", max(report["abs_error"]), 1e-8)
        labels = parity_operator(bundle.j, h0, poly, states)
        report["labels"] = {
            "energies": labels.energies,
            "parity": labels.labels,
            "positive": int(np.sum(labels.labels > 0)),
            "negative": int(np.sum(labels.labels < 0)),
        }
        report["checks"] = suite.finish()
        self._writer(config).write_json(f"jsquare_{n_bias}.json", report)
        return EXIT_OK if suite.passed else EXIT_FAILED
