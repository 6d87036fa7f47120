#!/usr/bin/env python3
"""
RELOAD CLI v1 - learn, transfer, experiment and dry-run commands
Config file values are overridden by flags; diagnostics go to stderr
"""

import functools
import json
import logging
import os
from typing import Optional

import click

from .agents.policy_store_v1 import load_policy, save_policy
from .config.catalog_config_v1 import TECHNIQUES
from .config.run_config_v1 import RunConfig, load_run_config, write_effective_config
from .core.errors_v1 import ConfigInvalid, ReloadError
from .core.http_actuator_v1 import dry_run
from .pipeline.experiment_harness_v1 import (
    ExperimentPlan,
    initial_plan,
    make_environment,
    run_efficiency_study,
    run_plan,
    run_sensitivity_study,
    transfer_schedule,
)
from .pipeline.report_writer_v1 import (
    POLICY_SUMMARY_FILE,
    write_bundle,
    write_chart_svg,
    write_episode_csv,
    write_policy_summary,
)
from .utils.logging_utils_v1 import setup_logging

logger = logging.getLogger(__name__)

POLICY_FILE = 'policy.json'
TRANSFERRED_POLICY_FILE = 'policy_transferred.json'


def cmd_learn(config: RunConfig) -> int:
    """
    Initial learning for the configured technique (A1-A4)

    Writes the effective config, per-episode CSV and chart, policy snapshot and policy summary.

    Returns:
        0 on success, 1 when the actuator failed part way (the completed prefix is still written)
    """
    if TECHNIQUES[config.technique]['kind'] not in ('tabular', 'dqn'):
        raise ConfigInvalid(f"learn needs a learning technique (A1-A4), got {config.technique}", module='cli')
    env = make_environment(config)
    write_effective_config(config)
    report = run_plan(initial_plan(config, config.technique), env)

    # Write artifacts; a partial run still keeps its prefix
    out = config.output_dir
    write_episode_csv(report, os.path.join(out, f"{report.slug}.csv"))
    if report.episodes:
        write_chart_svg([report], os.path.join(out, f"{report.slug}.svg"))
    if report.policy is not None:
        save_policy(report.policy, os.path.join(out, POLICY_FILE))
        write_policy_summary(report.policy, os.path.join(out, POLICY_SUMMARY_FILE))
    if report.partial:
        click.echo(f"error: {report.error}", err=True)
        return 1
    logger.info(f"✅ Learned {config.technique} policy over {report.episodes} episodes, "
                f"convergence episode {report.convergence_episode}")
    return 0


def cmd_transfer(config: RunConfig, policy_path: str) -> int:
    """
    Resume a stored policy over the drift schedule with transfer exploration

    Returns:
        0 on success, 1 on a partial run
    """
    # Load the policy and pick the learner that matches its variant
    snapshot = load_policy(policy_path)
    env = make_environment(config)
    snapshot.check_catalog(env.catalog)
    if snapshot.variant == 'dqn':
        technique = 'A4'
    else:
        technique = config.technique if TECHNIQUES[config.technique]['kind'] == 'tabular' else 'A3'
    write_effective_config(config)

    # Run the drift schedule
    schedule = transfer_schedule(config)
    plan = ExperimentPlan(technique=technique, episodes=len(schedule), schedule=tuple(schedule),
                          params=config.transfer_params(technique), snapshot=snapshot, seed=config.seed,
                          actuator=config.actuator, initial_users_per_tx=config.initial_users_per_tx,
                          max_steps=config.max_steps, rt_low=config.rt_low_ms)
    report = run_plan(plan, env)

    # Write artifacts
    out = config.output_dir
    write_episode_csv(report, os.path.join(out, f"{report.slug}.csv"))
    if report.episodes:
        write_chart_svg([report], os.path.join(out, f"{report.slug}.svg"))
    updated = report.policy or snapshot
    save_policy(updated, os.path.join(out, TRANSFERRED_POLICY_FILE))
    write_policy_summary(updated, os.path.join(out, POLICY_SUMMARY_FILE))
    if report.partial:
        click.echo(f"error: {report.error}", err=True)
        return 1
    logger.info(f"✅ Transfer over {len(schedule)} objectives finished")
    return 0


def cmd_experiment(config: RunConfig) -> int:
    """Efficiency or sensitivity study per config.preset; emits all CSV/SVG/JSON artifacts"""
    env = make_environment(config)
    write_effective_config(config)
    if config.preset == 'efficiency':
        bundle = run_efficiency_study(config, env)
    elif config.preset == 'sensitivity':
        bundle = run_sensitivity_study(config, env)
    else:
        raise ConfigInvalid(f"unknown preset {config.preset!r}", module='cli')
    write_bundle(bundle, config.output_dir)
    failed = [r for r in bundle.reports if r.partial]
    for report in failed:
        click.echo(f"error: {report.label} ({report.phase}): {report.error}", err=True)
    return 1 if failed else 0


def cmd_dry_run(config: RunConfig) -> int:
    """One user per transaction script against the configured SUT; prints the step report"""
    if config.actuator != 'http':
        raise ConfigInvalid("dry-run needs --actuator http with scripts_path and base_url", module='cli')
    env = make_environment(config)
    report = dry_run(env.scripts, env.spec)
    click.echo(json.dumps(report, indent=2))
    for failed in report['failed_steps']:
        click.echo(f"error: transaction {failed['transaction']!r} failed at step {failed['step']}", err=True)
    return 0 if report['all_ok'] else 1


def _with_config(*config_keys: str):
    """
    Resolve the run config (file, group flags, then the listed command options),
    call the command and map ReloadError to a stderr diagnostic plus exit status
    """

    def decorate(command):
        @functools.wraps(command)
        def wrapper(ctx: click.Context, **kwargs):
            overrides = dict(ctx.obj['overrides'])
            overrides.update({key: kwargs.pop(key) for key in config_keys})
            try:
                config = load_run_config(ctx.obj['config_path'], **overrides)
                status = command(config, **kwargs)
            except ConfigInvalid as e:
                click.echo(f"error: {e}", err=True)
                ctx.exit(2)
            except ReloadError as e:
                click.echo(f"error: {e}", err=True)
                ctx.exit(1)
            ctx.exit(status)

        return wrapper

    return decorate


@click.group()
@click.option('--config', 'config_path', type=click.Path(), default=None, help='YAML run config')
@click.option('--actuator', type=click.Choice(['sim', 'http']), default=None)
@click.option('--seed', type=int, default=None)
@click.option('--out', 'output_dir', type=click.Path(), default=None, help='Output directory')
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str], actuator: Optional[str], seed: Optional[int],
        output_dir: Optional[str]):
    """RELOAD: reinforcement-learning driven load test generation"""
    setup_logging()
    ctx.ensure_object(dict)
    ctx.obj['config_path'] = config_path
    ctx.obj['overrides'] = {'actuator': actuator, 'seed': seed, 'output_dir': output_dir}


@cli.command()
@click.option('--technique', type=click.Choice(['A1', 'A2', 'A3', 'A4']), default=None)
@click.pass_context
@_with_config('technique')
def learn(config: RunConfig) -> int:
    """Initial learning; writes the policy snapshot and per-episode CSV"""
    return cmd_learn(config)


@cli.command()
@click.option('--policy', 'policy_path', type=click.Path(), required=True, help='Stored policy JSON')
@click.pass_context
@_with_config()
def transfer(config: RunConfig, policy_path: str) -> int:
    """Transfer learning over the objective drift schedule"""
    return cmd_transfer(config, policy_path)


@cli.command()
@click.option('--preset', type=click.Choice(['efficiency', 'sensitivity']), default=None)
@click.pass_context
@_with_config('preset')
def experiment(config: RunConfig) -> int:
    """Full efficiency or sensitivity study"""
    return cmd_experiment(config)


@cli.command('dry-run')
@click.pass_context
@_with_config()
def dry_run_command(config: RunConfig) -> int:
    """Execute every transaction script once with a single user"""
    return cmd_dry_run(config)


def main() -> None:
    cli(prog_name='reload')
