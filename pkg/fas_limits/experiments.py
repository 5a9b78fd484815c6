"""
Experiment Orchestration

Runs the subcommands behind the CLI and turns their outputs into result
tables. Sweep points and Monte Carlo trials fan out to a thread pool; results
are collected in submission order so output does not depend on the number
of workers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from . import __version__
from .bounds import min_energy_achievable
from .channel import avg_channel_gain
from .config import config_hash
from .detection_oracle import analytic_table, detection_oracle, oracle_violations
from .exceptions import ConfigError, DomainError, InfeasibleError
from .floor import collision_floor_report, min_energy_floor
from .models import ChannelParams, ExperimentConfig, FloorConfig, PowerAssignment, SystemConfig, TargetsSection
from .mra import (
    TABLE_I,
    PortPattern,
    audit_table_i,
    check_mra,
    dca_dof,
    default_aperture_cap,
    expected_index_gap,
    lambda_bar_sq,
    mra_search,
    pattern_for,
    ula_pattern,
)
from .numerics import RandomStream, as_generator, complex_gaussian
from .results import ResultTable
from .sensing import (
    PUBLISHED_GAMMA_MAX,
    SensingCodebook,
    aoa_estimate_logratio,
    build_codebook,
    build_ula_codebook,
    lasso_error_bound,
    observe_expectation,
    observe_sampled,
    steering_fas,
)
from .sparse_recovery import SOLVERS

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "mra", "gain", "sense-verify", "achievable", "antennas", "floor", "oracle",
    "table", "codebook", "deviation", "collision",
)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3

GAIN_EXPERIMENT_ID = 1
SENSE_EXPERIMENT_ID = 2
DEVIATION_EXPERIMENT_ID = 5


@dataclass
class RunResult:
    """Result table plus exit status and the error text for infeasible runs."""
    table: ResultTable
    exit_status: int = EXIT_OK
    errors: List[str] = field(default_factory=list)


@dataclass
class SystemSetup:
    """A SystemConfig together with the channel it was derived from (None for LOS)."""
    config: SystemConfig
    channel: Optional[ChannelParams]


def snr_to_sigma_z_sq(snr_db: float) -> float:
    """SNR = 1/sigma_z^2."""
    return 10.0 ** (-snr_db / 10.0)


class ExperimentRunner:
    """
    Runs experiment subcommands for one resolved configuration.

    Gains and codebooks are cached per (M, layout) for the lifetime of the
    runner.
    """

    def __init__(self, config: ExperimentConfig, threads: Optional[int] = None):
        self.config = config
        self.threads = threads or config.mc.threads
        self.stream = RandomStream(seed=config.mc.seed)
        self._gains: Dict[Tuple[int, bool], float] = {}
        self._codebooks: Dict[Tuple[int, str], SensingCodebook] = {}
        logger.info(
            f"ExperimentRunner initialized with seed: {config.mc.seed}, threads: {self.threads}, "
            f"config hash: {config_hash(config)}"
        )

    # ------------------------------------------------------------------
    # Shared helpers
    # ------------------------------------------------------------------

    def _new_table(self, subcommand: str, columns: List[str]) -> ResultTable:
        return ResultTable(
            columns=columns,
            metadata={
                "subcommand": subcommand,
                "config_hash": config_hash(self.config),
                "seed": str(self.config.mc.seed),
                "version": __version__,
            },
        )

    def _map(self, fn: Callable[[Any], Any], items: Iterable[Any]) -> List[Any]:
        items = list(items)
        if self.threads <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            return list(executor.map(fn, items))

    def channel_params(self, pattern: PortPattern) -> ChannelParams:
        ch = self.config.channel
        return ChannelParams.for_pattern(
            list(pattern.indices),
            rice_factor=ch.rice_factor,
            num_scatterers=ch.num_scatterers,
            channel_strength=ch.channel_strength,
        )

    def channel_gain(self, pattern: PortPattern, m: int) -> Tuple[float, float]:
        params = self.channel_params(pattern)
        return avg_channel_gain(
            params, m, self.config.channel.gain_trials,
            self.stream.derive(GAIN_EXPERIMENT_ID, params.num_ports * 64 + m),
        )

    def codebook(self, m: int, layout: str) -> SensingCodebook:
        key = (m, layout)
        if key not in self._codebooks:
            n = self.config.sensing.n_samples
            if layout == "ula":
                self._codebooks[key] = build_ula_codebook(m, n)
            else:
                pattern = pattern_for(m)
                params = self.channel_params(pattern)
                self._codebooks[key] = build_codebook(pattern, params.aperture, params.num_ports, n)
        return self._codebooks[key]

    def build_system_config(self, users: int, m: int, gain_mode: str) -> SystemSetup:
        """
        SystemConfig for `users` total users and M antennas.

        FAS: MRA pattern, Monte Carlo gain under optimal selection, MRA
        lambda_bar^2 and codebook gamma_max. LOS: contiguous ULA pattern with
        gain 1 and ULA factors.
        """
        sys_cfg = self.config.system
        users_s = int(round(users * sys_cfg.su_fraction))
        common = dict(
            bits_c=sys_cfg.bits_c,
            bits_s=sys_cfg.bits_s,
            users_c=users - users_s,
            users_s=users_s,
            blocklength=sys_cfg.blocklength,
            antennas=m,
            noise_var=sys_cfg.noise_var,
            gain_scope=sys_cfg.gain_scope,
            cons_budget_fraction=sys_cfg.cons_budget_fraction,
        )

        if gain_mode == "los":
            pattern = ula_pattern(m)
            aperture, ports = (m - 1) / 2.0, m
            codebook = self.codebook(m, "ula")
            config = SystemConfig(
                pattern=list(pattern.indices), aperture=aperture, ports=ports, gain=1.0,
                gamma_max=codebook.gamma_max, lambda_bar_sq=lambda_bar_sq(pattern, aperture, ports),
                **common,
            )
            return SystemSetup(config=config, channel=None)

        pattern = pattern_for(m)
        params = self.channel_params(pattern)
        key = (m, True)
        if key not in self._gains:
            self._gains[key] = self.channel_gain(pattern, m)[0]
        codebook = self.codebook(m, "fas")
        config = SystemConfig(
            pattern=list(pattern.indices), aperture=params.aperture, ports=params.num_ports,
            gain=self._gains[key], gamma_max=codebook.gamma_max,
            lambda_bar_sq=lambda_bar_sq(pattern, params.aperture, params.num_ports),
            **common,
        )
        return SystemSetup(config=config, channel=params)

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------

    def run(self, subcommand: str, options: Optional[Dict[str, Any]] = None) -> RunResult:
        """
        Run one subcommand.

        Args:
            subcommand: One of SUBCOMMANDS
            options: Subcommand flags (None values fall back to the config)

        Returns:
            RunResult with the table and exit status
        """
        options = {k: v for k, v in (options or {}).items() if v is not None}
        handlers = {
            "mra": self.run_mra,
            "gain": self.run_gain,
            "sense-verify": self.run_sense_verify,
            "achievable": self.run_achievable,
            "antennas": self.run_antennas,
            "floor": self.run_floor,
            "oracle": self.run_oracle,
            "table": self.run_table,
            "codebook": self.run_codebook,
            "deviation": self.run_deviation,
            "collision": self.run_collision,
        }
        if subcommand not in handlers:
            raise DomainError(f"unknown subcommand {subcommand!r}")
        logger.info(f"Running {subcommand} with options {options}")
        return handlers[subcommand](**options)

    def run_mra(self, m: int = 3, cap: Optional[int] = None, full_search: bool = False) -> RunResult:
        table = self._new_table("mra", ["pattern", "aperture", "gap", "dof", "hole_free"])
        if m in TABLE_I and m >= 9 and not full_search and cap is None:
            patterns = [PortPattern(p) for p, _ in TABLE_I[m]]
        else:
            patterns = mra_search(m, cap if cap is not None else default_aperture_cap(m))
        for pattern in patterns:
            table.add_row(
                pattern=str(pattern),
                aperture=pattern.aperture,
                gap=expected_index_gap(pattern),
                dof=dca_dof(pattern),
                hole_free=check_mra(pattern).is_mra,
            )
        return RunResult(table=table)

    def run_table(self) -> RunResult:
        table = self._new_table(
            "table", ["m", "pattern", "aperture", "hole_free", "holes", "gap", "published_gap", "mismatch"],
        )
        table.extend(audit_table_i())
        return RunResult(table=table)

    def run_gain(self, m_values: Optional[List[int]] = None) -> RunResult:
        table = self._new_table("gain", ["m", "n_f", "pattern", "gain", "stderr"])
        for m in m_values or self.config.sweep.antennas:
            pattern = pattern_for(m)
            mean, stderr = self.channel_gain(pattern, m)
            table.add_row(m=m, n_f=pattern.num_ports, pattern=str(pattern), gain=mean, stderr=stderr)
        return RunResult(table=table)

    def run_codebook(self, m_values: Optional[List[int]] = None) -> RunResult:
        n = self.config.sensing.n_samples
        table = self._new_table(
            "codebook",
            ["m", "layout", "pattern", "n_samples", "gamma_max", "trace_bound", "lambda_bar_sq",
             "published_gamma_max", "rel_deviation"],
        )
        for m in m_values or self.config.sensing.m_values:
            for layout in ("fas", "ula"):
                codebook = self.codebook(m, layout)
                published = PUBLISHED_GAMMA_MAX if (layout == "fas" and m == 3 and n == 90) else None
                deviation = (codebook.gamma_max - published) / published if published else None
                if deviation is not None and abs(deviation) > 0.05:
                    logger.warning(
                        f"gamma_max {codebook.gamma_max:.1f} deviates {deviation:+.1%} from the published "
                        f"{published:.1f}; trace bound N*M^2 = {n * m * m}"
                    )
                table.add_row(
                    m=m, layout=layout, pattern=str(codebook.pattern), n_samples=n,
                    gamma_max=codebook.gamma_max, trace_bound=n * m * m,
                    lambda_bar_sq=lambda_bar_sq(codebook.pattern, codebook.w_aperture, codebook.n_f),
                    published_gamma_max=published, rel_deviation=deviation,
                )
        return RunResult(table=table)

    def run_sense_verify(
        self,
        m_values: Optional[List[int]] = None,
        snr_db: Optional[List[float]] = None,
        trials: Optional[int] = None,
        algorithms: Optional[List[str]] = None,
        ula: bool = False,
        observation: Optional[str] = None,
    ) -> RunResult:
        sensing = self.config.sensing
        m_values = m_values or sensing.m_values
        snr_db = snr_db if snr_db is not None else sensing.snr_db
        trials = trials or self.config.mc.trials
        algorithms = algorithms or sensing.algorithms
        observation = observation or sensing.observation
        unknown = [name for name in algorithms if name not in SOLVERS]
        if unknown:
            raise ConfigError(
                f"unknown algorithms {unknown}, expected a subset of {sorted(SOLVERS)}", key="sensing.algorithms",
            )

        columns = ["algorithm", "m", "snr_db", "trial", "err_l2", "bound", "violation"]
        if ula:
            columns += ["ula_err_l2", "ula_violation"]
        table = self._new_table("sense-verify", columns)

        jobs = list(enumerate(
            (m, snr, trial)
            for m in m_values for snr in snr_db for trial in range(trials)
        ))

        def job(item: Tuple[int, Tuple[int, float, int]]) -> List[Dict[str, Any]]:
            index, (m, snr, trial) = item
            return self._sense_trial(m, snr, trial, index, algorithms, ula, observation)

        violations = 0
        for rows in self._map(job, jobs):
            for row in rows:
                violations += int(row["violation"])
                table.add_row(**row)
        if violations:
            logger.warning(f"{violations} sensing trials exceeded the Lasso error bound")
        return RunResult(table=table)

    def _sense_trial(
        self,
        m: int,
        snr: float,
        trial: int,
        index: int,
        algorithms: List[str],
        ula: bool,
        observation: str,
    ) -> List[Dict[str, Any]]:
        sensing = self.config.sensing
        rng = self.stream.derive(SENSE_EXPERIMENT_ID, index).generator()
        sigma_z_sq = snr_to_sigma_z_sq(snr)
        bound = lasso_error_bound(m, sigma_z_sq)
        codebooks = {"fas": self.codebook(m, "fas")}
        if ula:
            codebooks["ula"] = self.codebook(m, "ula")

        true_index = int(rng.integers(codebooks["fas"].n_samples))
        observations = {}
        for layout, codebook in codebooks.items():
            if observation == "sampled":
                observations[layout] = observe_sampled(codebook, float(codebook.grid[true_index]), sigma_z_sq, rng)
            else:
                observations[layout] = observe_expectation(codebook, true_index, sigma_z_sq)

        rows = []
        for name in algorithms:
            solver = SOLVERS[name]
            errors = {
                layout: solver(codebooks[layout], observations[layout].v, sensing.sparsity, sensing.solver_iters)
                .error_to(true_index)
                for layout in codebooks
            }
            row = dict(
                algorithm=name, m=m, snr_db=snr, trial=trial,
                err_l2=errors["fas"], bound=bound, violation=errors["fas"] > bound,
            )
            if ula:
                row.update(ula_err_l2=errors["ula"], ula_violation=errors["ula"] > bound)
            rows.append(row)
        return rows

    def run_deviation(
        self,
        m_values: Optional[List[int]] = None,
        snr_db: Optional[List[float]] = None,
        trials: Optional[int] = None,
    ) -> RunResult:
        """Mean squared cos(theta) error of the ULA and FAS log-ratio estimators."""
        m_values = m_values or self.config.sensing.m_values
        snr_db = snr_db if snr_db is not None else self.config.sensing.snr_db
        trials = trials or self.config.mc.trials
        table = self._new_table("deviation", ["mode", "m", "snr_db", "trials", "mean_sq_err", "symmetric_pattern"])

        points = list(enumerate((m, snr) for m in m_values for snr in snr_db))

        def point(item: Tuple[int, Tuple[int, float]]) -> List[Dict[str, Any]]:
            index, (m, snr) = item
            rng = as_generator(self.stream.derive(DEVIATION_EXPERIMENT_ID, index))
            sigma_z_sq = snr_to_sigma_z_sq(snr)
            fas_pattern = pattern_for(m)
            params = self.channel_params(fas_pattern)
            layouts = {
                "ULA": (ula_pattern(m), (m - 1) / 2.0, m),
                "FAS": (fas_pattern, params.aperture, params.num_ports),
            }
            sq_err = {mode: 0.0 for mode in layouts}
            for _ in range(trials):
                cos_theta = float(rng.uniform(-1.0, 1.0))
                noise = complex_gaussian(rng, sigma_z_sq, size=m)
                for mode, (pattern, aperture, n_f) in layouts.items():
                    g_hat = steering_fas(pattern, aperture, n_f, cos_theta) + noise
                    estimate = aoa_estimate_logratio(g_hat, mode, pattern, aperture, n_f)
                    sq_err[mode] += (estimate - cos_theta) ** 2
            return [
                dict(
                    mode=mode, m=m, snr_db=snr, trials=trials, mean_sq_err=sq_err[mode] / trials,
                    symmetric_pattern=_is_index_symmetric(layouts[mode][0]),
                )
                for mode in layouts
            ]

        for rows in self._map(point, points):
            table.extend(rows)
        return RunResult(table=table)

    def _targets(self, targets: Optional[Tuple[float, float]]) -> Tuple[float, float]:
        if targets is None:
            return self.config.targets.pupe, self.config.targets.mseaoa
        try:
            checked = TargetsSection(pupe=targets[0], mseaoa=targets[1])
        except ValidationError as e:
            first = e.errors()[0]
            raise ConfigError(first["msg"], key=f"targets.{first['loc'][0]}") from e
        return checked.pupe, checked.mseaoa

    def _achievable_row(self, users: int, m: int, gain_mode: str, targets: Tuple[float, float]) -> Dict[str, Any]:
        setup = self.build_system_config(users, m, gain_mode)
        try:
            powers, breakdown = min_energy_achievable(setup.config, *targets)
        except InfeasibleError as e:
            logger.error(f"Infeasible at users={users}, M={m}: {e} (binding: {e.binding_constraint})")
            return dict(
                users=users, m=m, gain_mode=gain_mode, e_n0_db=math.nan, eps_cons=math.nan,
                eps_coll=math.nan, eps_md=math.nan, pupe=math.nan, mseaoa_bound=math.nan,
                backoff=math.nan, binding_constraint=e.binding_constraint,
            )
        return dict(
            users=users, m=m, gain_mode=gain_mode, e_n0_db=breakdown.e_n0_db,
            eps_cons=breakdown.eps_cons, eps_coll=breakdown.eps_coll, eps_md=breakdown.eps_md,
            pupe=breakdown.pupe, mseaoa_bound=breakdown.mseaoa, backoff=powers.backoff,
            binding_constraint=breakdown.binding_constraint,
        )

    _ACHIEVABLE_COLUMNS = [
        "users", "m", "gain_mode", "e_n0_db", "eps_cons", "eps_coll", "eps_md", "pupe",
        "mseaoa_bound", "backoff", "binding_constraint",
    ]

    def _sweep(self, subcommand: str, points: List[Tuple[int, int]], gain_mode: str, targets) -> RunResult:
        table = self._new_table(subcommand, list(self._ACHIEVABLE_COLUMNS))
        for m in sorted({m for _, m in points}):
            # Warm the caches serially so worker threads only read them
            self.build_system_config(points[0][0], m, gain_mode)
        rows = self._map(lambda p: self._achievable_row(p[0], p[1], gain_mode, targets), points)
        table.extend(rows)
        infeasible = [r for r in rows if math.isnan(r["e_n0_db"])]
        errors = [
            f"infeasible at users={r['users']}, m={r['m']}: {r['binding_constraint']} binds" for r in infeasible
        ]
        return RunResult(table=table, exit_status=EXIT_INFEASIBLE if infeasible else EXIT_OK, errors=errors)

    def run_achievable(
        self,
        users: Optional[List[int]] = None,
        m: Optional[int] = None,
        l: Optional[int] = None,
        gain_mode: Optional[str] = None,
        targets: Optional[Tuple[float, float]] = None,
    ) -> RunResult:
        runner = self._with_blocklength(l)
        users = users or runner.config.sweep.users
        m = m or runner.config.system.antennas
        return runner._sweep(
            "achievable", [(u, m) for u in users], gain_mode or runner.config.sweep.gain_mode, runner._targets(targets),
        )

    def run_antennas(
        self,
        m_values: Optional[List[int]] = None,
        users: Optional[int] = None,
        l: Optional[int] = None,
        gain_mode: Optional[str] = None,
        targets: Optional[Tuple[float, float]] = None,
    ) -> RunResult:
        runner = self._with_blocklength(l)
        m_values = m_values or runner.config.sweep.antennas
        users = users or runner.config.sweep.antennas_users
        return runner._sweep(
            "antennas", [(users, m) for m in m_values], gain_mode or runner.config.sweep.gain_mode,
            runner._targets(targets),
        )

    def _with_blocklength(self, l: Optional[int]) -> "ExperimentRunner":
        if l is None or l == self.config.system.blocklength:
            return self
        updated = self.config.model_copy(
            update={"system": self.config.system.model_copy(update={"blocklength": l})}
        )
        return ExperimentRunner(updated, threads=self.threads)

    def run_floor(
        self,
        users: Optional[List[int]] = None,
        m: Optional[int] = None,
        l: Optional[int] = None,
        gain_mode: Optional[str] = None,
        targets: Optional[Tuple[float, float]] = None,
    ) -> RunResult:
        runner = self._with_blocklength(l)
        users = users or runner.config.sweep.users
        m = m or runner.config.system.antennas
        gain_mode = gain_mode or runner.config.sweep.gain_mode
        pupe_target, mseaoa_target = runner._targets(targets)
        table = runner._new_table(
            "floor",
            ["users", "m", "gain_mode", "e_n0_db", "binding_constraint", "capacity_mean", "capacity_stderr",
             "required_rate", "crlb", "pupe_floor"],
        )

        errors = []
        for u in users:
            setup = runner.build_system_config(u, m, gain_mode)
            cfg = FloorConfig(**setup.config.model_dump(), capacity_trials=runner.config.mc.capacity_trials)
            try:
                e_n0, diag = min_energy_floor(
                    cfg, pupe_target, mseaoa_target, runner.stream, setup.channel, threads=runner.threads,
                )
            except InfeasibleError as e:
                logger.error(f"Floor infeasible at users={u}: {e} (binding: {e.binding_constraint})")
                errors.append(f"infeasible at users={u}, m={m}: {e.binding_constraint} binds")
                table.add_row(users=u, m=m, gain_mode=gain_mode, e_n0_db=math.nan,
                              binding_constraint=e.binding_constraint)
                continue
            table.add_row(
                users=u, m=m, gain_mode=gain_mode, e_n0_db=e_n0, binding_constraint=diag.binding_constraint,
                capacity_mean=diag.capacity_mean, capacity_stderr=diag.capacity_stderr,
                required_rate=diag.required_rate, crlb=diag.crlb, pupe_floor=diag.pupe_floor,
            )
        return RunResult(table=table, exit_status=EXIT_INFEASIBLE if errors else EXIT_OK, errors=errors)

    def tiny_system_config(self) -> Tuple[SystemConfig, ChannelParams]:
        """Enumerable configuration from the [oracle] section."""
        oracle = self.config.oracle
        params = ChannelParams(
            rice_factor=self.config.channel.rice_factor,
            num_scatterers=self.config.channel.num_scatterers,
            channel_strength=self.config.channel.channel_strength,
            num_ports=oracle.num_ports,
            aperture=max((oracle.antennas - 1) / 2.0, 0.5),
        )
        gain, _ = avg_channel_gain(
            params, oracle.antennas, self.config.channel.gain_trials,
            self.stream.derive(GAIN_EXPERIMENT_ID, (1 << 31) + oracle.num_ports * 64 + oracle.antennas),
        )
        cfg = SystemConfig(
            bits_c=oracle.bits_c, bits_s=oracle.bits_s, users_c=oracle.users_c, users_s=oracle.users_s,
            blocklength=oracle.blocklength, antennas=oracle.antennas, noise_var=self.config.system.noise_var,
            pattern=[], aperture=params.aperture, ports=params.num_ports, gain=gain,
            gain_scope=self.config.system.gain_scope,
        )
        return cfg, params

    def run_oracle(self, trials: Optional[int] = None, snr_db: Optional[float] = None) -> RunResult:
        trials = trials or self.config.mc.oracle_trials
        snr_db = self.config.oracle.transmit_snr_db if snr_db is None else snr_db
        cfg, params = self.tiny_system_config()
        powers = PowerAssignment.from_transmit_power(cfg.noise_var * 10.0 ** (snr_db / 10.0))

        table_result = detection_oracle(cfg, powers, trials, self.stream, params, threads=self.threads)
        analytic = analytic_table(cfg, powers)
        violations = oracle_violations(table_result, analytic)

        table = self._new_table("oracle", ["k_s", "k_c", "count", "empirical", "stderr", "analytic", "violation"])
        for k_s in range(cfg.users_s + 1):
            for k_c in range(cfg.users_c + 1):
                table.add_row(
                    k_s=k_s, k_c=k_c, count=int(table_result.counts[k_s, k_c]),
                    empirical=float(table_result.frequencies[k_s, k_c]),
                    stderr=float(table_result.stderr[k_s, k_c]),
                    analytic=float(analytic[k_s, k_c]),
                    violation=bool(violations[k_s, k_c]),
                )
        if violations.any():
            logger.warning(f"Empirical detection errors exceed the analytic bound at {int(violations.sum())} entries")
        return RunResult(table=table)

    def run_collision(self, users: Optional[List[int]] = None, bits: Optional[List[int]] = None) -> RunResult:
        """Collision floor next to the collision bound on single-class configurations."""
        table = self._new_table("collision", ["users", "bits", "pupe_floor", "eps_coll", "floor_exceeds_bound"])
        table.extend(collision_floor_report(users or [2, 3, 4], bits or [1, 2, 3, 4, 5, 6]))
        return RunResult(table=table)


def _is_index_symmetric(pattern: PortPattern) -> bool:
    idx = np.asarray(pattern.indices)
    return bool(np.all(idx + idx[::-1] == idx[-1]))
