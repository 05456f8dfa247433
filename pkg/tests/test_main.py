# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

import os

import pytest

from qrmwave import files
from qrmwave import main
from qrmwave.grid import SEGMENT


@pytest.fixture
def simulated(small_config, tmp_path):
    out = str(tmp_path / 'sim')
    assert main.main(['simulate', '--config', small_config, '--out', out]) == 0
    return out


def test_unknown_test(capsys):
    assert main.main(['run-test', 'test9']) == 2
    err = capsys.readouterr().err
    assert "qrmwave: error: code=2 kind=UnknownPreset message=" in err
    assert "test1, test2, test3, test4, test5" in err


def test_empty_noise_list():
    with pytest.raises(SystemExit) as e:
        main.main(['simulate', '--noise', ''])
    assert e.value.code == 2


def test_cfl_violation_exit_code(small_config, tmp_path, capsys):
    config = tmp_path / 'cfl.ini'
    config.write_text(open(small_config).read().replace('ht = 0.05', 'ht = 0.1'))
    assert main.main(['simulate', '--config', str(config), '--out', str(tmp_path / 'x')]) == 4
    assert "kind=CflViolation" in capsys.readouterr().err


def test_simulate_artifacts(simulated):
    names = set(os.listdir(simulated))
    assert {'config.ini', 'phantom.csv', 'exact.csv', 'forward_summary.ini',
            'data', files.MANIFEST} <= names
    assert sorted(os.listdir(os.path.join(simulated, 'data'))) == ['clean', 'noise-0.05']
    clean = files.read_cauchy(os.path.join(simulated, 'data', 'clean'))
    noisy = files.read_cauchy(main.noise_dir(simulated, 0.05))
    assert clean.grid == noisy.grid
    assert clean.max_abs() > 0
    assert noisy.max_abs() != clean.max_abs()


def test_simulate_reproducible(simulated, small_config, tmp_path):
    again = str(tmp_path / 'again')
    assert main.main(['simulate', '--config', small_config, '--out', again]) == 0
    manifests = [open(os.path.join(_, files.MANIFEST)).read() for _ in (simulated, again)]
    assert manifests[0] == manifests[1]


def test_zero_phantom_zero_data(small_config, tmp_path):
    config = tmp_path / 'zero.ini'
    config.write_text(open(small_config).read() + "phantom = zero\n")
    out = str(tmp_path / 'zero')
    assert main.main(['simulate', '--config', str(config), '--out', out, '--noise', '0.5']) == 0
    assert files.read_cauchy(os.path.join(out, 'data', 'clean')).max_abs() == 0
    assert files.read_cauchy(main.noise_dir(out, 0.5)).max_abs() == 0


def test_reconstruct(simulated):
    assert main.main(['reconstruct', simulated]) == 0
    assert files.verify_manifest(simulated) == []
    out = os.path.join(simulated, 'reconstruction')
    assert files.verify_manifest(out) == []
    gamma = main.gamma_dir(out, 0.05)
    assert sorted(os.listdir(gamma)) == ['cross_section.csv', 'history.csv', 'peaks.csv',
                                         'reconstruction.csv', 'summary.ini']
    summary = files.read_summary(os.path.join(gamma, 'summary.ini'))['summary']
    assert summary['iterations'] == '5'
    assert summary['test'] == 'test3'
    assert summary['gamma'] == '0.05'
    assert float(summary['J_total']) <= float(summary['J_zero'])
    assert len(open(os.path.join(gamma, 'history.csv')).read().splitlines()) == 7


def test_reconstruct_corrupt_data(simulated, capsys):
    path = files.cauchy_path(main.noise_dir(simulated, 0.05), SEGMENT.G1, 'f')
    with open(path, 'a') as fp:
        fp.write("0.1,zero\n")
    assert main.main(['reconstruct', simulated]) == 3
    assert "kind=ParseError" in capsys.readouterr().err


def test_report(simulated, capsys):
    assert main.main(['report', simulated]) == 0
    out = capsys.readouterr().out
    assert "[forward]" in out
    assert out.rstrip().endswith("All checksums OK")

    with open(os.path.join(simulated, 'exact.csv'), 'a') as fp:
        fp.write("\n")
    assert main.main(['report', simulated]) == 3
    assert "fail their checksum" in capsys.readouterr().err


def test_report_without_manifest(tmp_path):
    assert main.main(['report', str(tmp_path)]) == 3


def test_sweep(small_config, tmp_path):
    out = str(tmp_path / 'sweep')
    assert main.main(['sweep', '--config', small_config, '--out', out,
                      '--seeds', '2', '--noise', '0.05,0.1']) == 0
    lines = open(os.path.join(out, 'sweep.csv')).read().splitlines()
    assert lines[0] == 'gamma,seed,rel_l2_error,max,min'
    assert [line.split(',')[:2] for line in lines[1:]] == [
        ['0.05', '0'], ['0.05', '1'], ['0.1', '0'], ['0.1', '1']]
    summary = files.read_summary(os.path.join(out, 'sweep_summary.ini'))['sweep']
    assert set(summary) == {'mean_rel_l2_error_0.05', 'mean_rel_l2_error_0.1'}


def test_run_test_ablated(small_config, tmp_path, capsys):
    out = str(tmp_path / 'run')
    assert main.main(['run-test', 'test3', '--config', small_config, '--out', out,
                      '--ablate-init-penalty']) == 0
    assert capsys.readouterr().out.startswith("test3 gamma=0.05 seed=0: rel_l2_error=")
    summary = files.read_summary(os.path.join(main.gamma_dir(out, 0.05), 'summary.ini'))
    assert summary['summary']['ablate_init_penalty'] == 'True'
    assert summary['summary']['w_init'] == '0.0'
    assert files.verify_manifest(out) == []


def test_duplicate_noise_levels(small_config, tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main.main(['simulate', '--noise', '0.05,0.05'])
    assert e.value.code == 2

    config = tmp_path / 'twice.ini'
    config.write_text(open(small_config).read().replace('noise = 0.05', 'noise = 0.1, 0.10'))
    assert main.main(['simulate', '--config', str(config), '--out', str(tmp_path / 'x')]) == 2
    assert "duplicate noise level" in capsys.readouterr().err


def test_close_noise_levels_kept_apart(small_config, tmp_path):
    out = str(tmp_path / 'close')
    assert main.main(['simulate', '--config', small_config, '--out', out,
                      '--noise', '0.1234561,0.1234562']) == 0
    assert main.noise_dir(out, 0.1234561) != main.noise_dir(out, 0.1234562)
    assert sorted(os.listdir(os.path.join(out, 'data'))) == [
        'clean', 'noise-0.1234561', 'noise-0.1234562']


def test_unwritable_output(small_config, tmp_path, capsys):
    blocker = tmp_path / 'file'
    blocker.write_text("")
    out = str(blocker / 'sim')
    assert main.main(['simulate', '--config', small_config, '--out', out]) == 3
    assert "kind=DataError" in capsys.readouterr().err
