"""Test the command-line surface and its exit codes."""

import csv
import json
import logging

import pytest

from levyfluid import cli

from tests.conftest import CRITICAL_RATES


logger = logging.getLogger(__name__)


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def network_path(workdir, running_example_dict):
    path = workdir / 'net.json'
    path.write_text(json.dumps(running_example_dict))
    return str(path)


@pytest.fixture
def critical_path(workdir, running_example_dict):
    running_example_dict['r'] = list(CRITICAL_RATES)
    path = workdir / 'critical.json'
    path.write_text(json.dumps(running_example_dict))
    return str(path)


@pytest.fixture
def priority_path(workdir):
    document = {'rate': 1.0, 'inputs': [
        {'kind': 'compound-poisson', 'intensity': 0.4,
         'jump_law': {'variant': 'exponential', 'rate': 2.0}}
        for __ in range(2)]}
    path = workdir / 'priority.json'
    path.write_text(json.dumps(document))
    return str(path)


def _read_rows(path) -> list[dict]:
    with open(path, 'r', newline='') as file:
        return list(csv.DictReader(file))


def test_validate(network_path, workdir):
    logger.info("Validate the validate command writes a JSON report.")
    out = str(workdir / 'report.json')
    assert cli.run(['validate', '--network', network_path,
                    '--out', out]) == cli.EXIT_OK
    with open(out, 'r') as file:
        report = json.load(file)
    assert report['accepted']
    assert report['n'] == 2
    assert report['capabilities']['single_input_formulas']


def test_validate_priority(priority_path, workdir):
    out = str(workdir / 'report.json')
    assert cli.run(['validate', '--network', priority_path,
                    '--out', out]) == cli.EXIT_OK
    with open(out, 'r') as file:
        report = json.load(file)
    assert report['priority']
    assert not report['capabilities']['t1_strict']


def test_transform_fluctuation(network_path, workdir):
    logger.info("Validate a transform row of the running example.")
    out = str(workdir / 'fluct.csv')
    assert cli.run(['transform', '--network', network_path,
                    '--kind', 'fluctuation', '--alpha', '0,0',
                    '--beta', '1,1', '--out', out]) == cli.EXIT_OK
    rows = _read_rows(out)
    assert [row['station'] for row in rows] == ['1', '2']
    assert float(rows[0]['value']) == pytest.approx(12.0 / 17.0, rel=1e-10)


def test_transform_wb(network_path, workdir):
    out = str(workdir / 'wb.csv')
    assert cli.run(['transform', '--network', network_path,
                    '--omega', '0.5,1', '--beta', '0.5,0.5',
                    '--out', out]) == cli.EXIT_OK
    rows = _read_rows(out)
    assert len(rows) == 1
    assert rows[0]['kind'] == 'wb'
    assert 0 < float(rows[0]['value']) < 1


def test_transform_priority(priority_path, workdir):
    out = str(workdir / 'priority.csv')
    assert cli.run(['transform', '--network', priority_path,
                    '--omega', '0.5,0.5', '--beta', '0,1',
                    '--out', out]) == cli.EXIT_OK
    assert _read_rows(out)[0]['kind'] == 'priority'


def test_dimension_mismatch(network_path):
    assert cli.run(['transform', '--network', network_path,
                    '--omega', '0.5']) == cli.EXIT_DIMENSION


def test_unknown_kind(network_path):
    assert cli.run(['transform', '--network', network_path,
                    '--kind', 'spectral']) == cli.EXIT_CONFIG


def test_domain_failure(critical_path):
    logger.info("Validate an unstable network fails the tandem transform.")
    assert cli.run(['transform', '--network', critical_path,
                    '--omega', '0.5,0.5']) == cli.EXIT_DOMAIN


def test_missing_seed(network_path):
    assert cli.run(['simulate', '--network', network_path,
                    '--horizon', '5']) == cli.EXIT_CONFIG


def test_missing_network():
    assert cli.run(['validate']) == cli.EXIT_CONFIG


def test_malformed_network(workdir):
    path = workdir / 'broken.json'
    path.write_text('{"P": [[0, 1]], ')
    assert cli.run(['validate', '--network', str(path)]) == cli.EXIT_CONFIG


def test_unknown_command():
    assert cli.run(['spectral']) == cli.EXIT_USAGE


def test_trajectory_is_reproducible(network_path, workdir):
    logger.info("Validate equal seeds give byte-identical reports.")
    first, second = workdir / 'first.csv', workdir / 'second.csv'
    for out in (first, second):
        assert cli.run(['simulate', '--network', network_path, '--seed', '3',
                        '--horizon', '20', '--out', str(out)]) == cli.EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    rows = _read_rows(first)
    assert float(rows[0]['t']) == 0.0


def test_stationary_rows(network_path, workdir):
    out = workdir / 'stationary.csv'
    assert cli.run(['simulate', '--network', network_path, '--seed', '3',
                    '--mode', 'stationary', '--paths', '5',
                    '--out', str(out)]) == cli.EXIT_OK
    rows = _read_rows(out)
    assert len(rows) == 10
    assert list(rows[0]) == cli.STATIONARY_SAMPLE_FIELDS


def test_config_fills_flags(network_path, workdir):
    logger.info("Validate a run config supplies the network and options.")
    config = workdir / 'run.toml'
    config.write_text("network = 'net.json'\n"
                      "seed = 11\n"
                      "[simulate]\n"
                      "horizon = 10.0\n"
                      "out = 'trajectory.csv'\n")
    assert cli.run(['simulate', '--config', str(config)]) == cli.EXIT_OK
    assert (workdir / 'trajectory.csv').exists()


def test_failed_comparison_writes_report(network_path, workdir):
    logger.info("Validate a failed comparison still writes its report.")
    config = workdir / 'run.toml'
    config.write_text("network = 'net.json'\n"
                      "seed = 5\n"
                      "[excursion-check]\n"
                      "paths = 50\n"
                      "z_max = 0.0\n"
                      "rel_gap = 0.0\n"
                      "out = 'excursions.csv'\n")
    assert cli.run(['excursion-check', '--config',
                    str(config)]) == cli.EXIT_COMPARISON
    rows = _read_rows(workdir / 'excursions.csv')
    assert rows and list(rows[0]) == ['query', 'analytic', 'mc_mean',
                                      'mc_se', 'z', 'verdict']
    assert any(row['verdict'] == 'fail' for row in rows)


@pytest.mark.slow
def test_mc_compare_running_example(network_path, workdir):
    logger.info("Validate every comparison of the running example passes.")
    out = workdir / 'compare.csv'
    assert cli.run(['mc-compare', '--network', network_path, '--seed', '1',
                    '--paths', '100000', '--workers', '4',
                    '--out', str(out)]) == cli.EXIT_OK
    assert all(row['verdict'] == 'pass' for row in _read_rows(out))


def _loose_compare_config(workdir, extra: str = '') -> str:
    config = workdir / 'run.toml'
    config.write_text("network = 'net.json'\n"
                      "seed = 3\n"
                      "[mc-compare]\n"
                      "paths = 300\n"
                      "busy = false\n"
                      "z_max = 100.0\n"
                      "rel_gap = 10.0\n"
                      "censoring_ceiling = 1.0\n"
                      "out = 'compare.csv'\n" + extra)
    return str(config)


def test_mc_compare_reports_pathwise_laws(network_path, workdir):
    logger.info("Validate mc-compare reports the G ordering and the "
                "H > 0 iff X-bar = 0 law.")
    config = _loose_compare_config(workdir)
    assert cli.run(['mc-compare', '--config', config]) == cli.EXIT_OK
    rows = {row['query']: row for row in
            _read_rows(workdir / 'compare.csv')}
    for query in ("G ordering", "H>0 iff xbar=0"):
        assert rows[query]['verdict'] == 'pass'
        assert float(rows[query]['mc_mean']) == 0.0


def test_mc_compare_fails_on_ordering_violations(network_path, workdir,
                                                  monkeypatch):
    logger.info("Validate a G ordering violation fails the command.")
    monkeypatch.setattr(cli, 'check_ordering', lambda g, pairs: 3)
    config = _loose_compare_config(workdir)
    assert cli.run(['mc-compare', '--config',
                    config]) == cli.EXIT_COMPARISON
    rows = {row['query']: row for row in
            _read_rows(workdir / 'compare.csv')}
    assert rows["G ordering"]['verdict'] == 'fail'
    assert float(rows["G ordering"]['mc_mean']) == pytest.approx(3 / 300)
    assert rows["H>0 iff xbar=0"]['verdict'] == 'pass'


@pytest.mark.slow
def test_mc_compare_convergence(network_path, workdir):
    logger.info("Validate the convergence check from w0 = (10, 10).")
    config = _loose_compare_config(workdir, "convergence = true\n"
                                            "busy_paths = 500\n")
    assert cli.run(['mc-compare', '--config', config]) == cli.EXIT_OK
    rows = [row for row in _read_rows(workdir / 'compare.csv')
            if row['query'].startswith('convergence')]
    assert [row['query'] for row in rows] == [
        'convergence station=1 t=800', 'convergence station=2 t=800']
    assert all(row['verdict'] == 'pass' for row in rows)
