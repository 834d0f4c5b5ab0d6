#!/usr/bin/env python3
"""
Batch runner behind the command-line interface: sets up logging, runs the
requested experiment step by step and writes its report.
"""

import datetime
import logging
import os
import sys

import pandas as pd

from .critical_bands import (
    BOUNDARY,
    C_km,
    asymptotic_optimal_risk,
    h_m,
    kappa,
    m_star,
    risk_coefficient,
    stage_count_limit,
    z_star,
)
from .errors import ConfigError, ConvergenceError
from .mc_engine import RISK_COLUMNS, estimate_risk
from .reports import format_table1, write_frame, write_record, write_text
from .seq_test import SimpleHypotheses, table1


class ExperimentRunner:
    def __init__(self, config):
        self.config = config
        self.progress = not config.quiet
        self.setup_logging()

    def setup_logging(self):
        """Log to standard error, and to a timestamped file when a log directory is set."""
        handlers = [logging.StreamHandler(sys.stderr)]
        self.run_log = None
        if self.config.log_dir:
            os.makedirs(self.config.log_dir, exist_ok=True)
            timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
            self.run_log = os.path.join(self.config.log_dir, f"stagecross_{timestamp}.log")
            handlers.append(logging.FileHandler(self.run_log))

        logging.basicConfig(
            level=logging.DEBUG if self.config.verbose else logging.INFO,
            format='%(asctime)s - %(levelname)s - %(message)s',
            handlers=handlers,
            force=True,
        )
        self.logger = logging.getLogger(__name__)
        if self.run_log:
            self.logger.info(f"Logging initialized. Run log: {self.run_log}")

    def run_step(self, step_name, func, *args, **kwargs):
        """Run one step between banner lines and log its completion."""
        self.logger.info("=" * 50)
        self.logger.info(f"Starting {step_name}")
        self.logger.info("=" * 50)
        result = func(*args, **kwargs)
        self.logger.info(f"{step_name} completed")
        return result

    def run(self):
        command = self.config.command
        self.logger.info(f"stagecross {command} (seed={self.config.seed}, workers={self.config.workers})")
        if command == "simulate":
            return self.run_simulate()
        if command == "bands":
            return self.run_bands()
        return self.run_table1()

    # --- simulate ---

    def simulate_frame(self):
        config = self.config
        spec, solved = config.resolve_sampler()
        h = config.h_spec()
        rows = []
        for a in config.a_grid:
            estimate = self.run_step(
                f"{spec.label} at a={a:g}", estimate_risk, spec, a, h, config.reps, config.seed,
                workers=config.workers, progress=self.progress,
            )
            row = estimate.to_row()
            if solved is not None:
                row["z_star"] = solved
            rows.append(row)
        columns = RISK_COLUMNS + (["z_star"] if solved is not None else [])
        return pd.DataFrame(rows, columns=columns)

    def run_simulate(self):
        frame = self.simulate_frame()
        write_frame(frame, self.config.out, self.config.format)
        return frame

    # --- bands ---

    def bands_record(self):
        config = self.config
        h = config.h_spec()
        if h is None:
            raise ConfigError("h", "bands needs --h")
        band = config.band()
        record = {
            "h": h.to_string(),
            "mu": config.mu,
            "m": band.m,
            "kind": band.kind,
            "Q": band.Q,
            "kappa_m": kappa(band.m, config.mu),
            "C_mm": C_km(band.m, band.m),
            "z_star": None,
        }
        if band.kind == BOUNDARY:
            record["z_star"] = z_star(band.m, config.mu, h)
        record["risk_coefficient"] = risk_coefficient(band.m, band.kind, record["z_star"])
        record["stage_count_limit"] = stage_count_limit(band.kind, m=band.m, z=record["z_star"])
        if config.a_grid is not None:
            if len(config.a_grid) != 1:
                raise ConfigError("a", f"bands takes a single boundary, got {len(config.a_grid)}")
            a = config.a_grid[0]
            if not a > 1.0:
                raise ConfigError("a", f"boundary-dependent band values need a > 1, got {a!r}")
            record["a"] = a
            record["h_m_a"] = h_m(band.m, a)
            record["asymptotic_risk"] = asymptotic_optimal_risk(band.m, band.kind, record["z_star"], h(a))
            for ratio in config.d_over_c:
                key = f"m_star(d/c={ratio:g})"
                try:
                    record[key] = m_star(config.mu, a, ratio)
                except ConvergenceError as e:
                    self.logger.warning(str(e))
                    record[key] = None
        return record

    def run_bands(self):
        record = self.run_step("band classification", self.bands_record)
        write_record(record, self.config.out, self.config.format)
        return record

    # --- table1 ---

    def run_table1(self):
        config = self.config
        hyp = SimpleHypotheses.symmetric(config.theta)
        summary, detail = self.run_step(
            "multistage versus group-sequential comparison", table1, hyp, config.d_over_c, config.d, config.reps, config.seed,
            k_star=config.k_star, k_grid=config.k_grid, search_reps=config.search_reps,
            workers=config.workers, progress=self.progress,
        )
        frame = detail if config.per_truth else summary
        if config.format == "table" and not config.per_truth:
            write_text(format_table1(summary), config.out)
        else:
            write_frame(frame, config.out, config.format)
        return summary
