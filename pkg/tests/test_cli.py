import re
import subprocess
import sys

import numpy as np
import pytest

from chaoselm import cli

from conftest import available

needs_fertility = pytest.mark.skipif(not available("fertility"), reason="fertility data missing")


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestExitCodes:
    def test_hidden_zero_is_validation_error(self, capsys, data_dir):
        code, _, err = run(["run", "--dataset", "haberman", "--hidden", "0",
                            "--data-dir", str(data_dir)], capsys)
        assert code == 1 and "at least 1" in err

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["run", "--dataset", "nope"])
        assert exc.value.code == 1

    def test_bad_format(self, capsys, data_dir):
        code, _, _ = run(["run", "--dataset", "haberman", "--format", "pdf",
                          "--data-dir", str(data_dir)], capsys)
        assert code == 1

    def test_missing_data_is_runtime_failure(self, capsys, tmp_path):
        code, _, err = run(["run", "--dataset", "haberman", "--variants", "plain_chaotic",
                            "--seeds", "0", "--data-dir", str(tmp_path)], capsys)
        assert code == 2 and "fetch-data" in err

    def test_split_mode_out_of_order(self, capsys, tmp_path):
        code, _, _ = run(["hidden", "--workdir", str(tmp_path)], capsys)
        assert code == 2

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "chaoselm", "--help"], capture_output=True,
                              text=True, timeout=120)
        assert proc.returncode == 0 and "fetch-data" in proc.stdout


class TestCommands:
    @needs_fertility
    def test_run_writes_reports(self, capsys, tmp_path, data_dir):
        code, out, _ = run(["run", "--dataset", "fertility", "--variants",
                            "plain_chaotic,plain_traditional", "--hidden", "input,5",
                            "--seeds", "0-2", "--report-dir", str(tmp_path),
                            "--data-dir", str(data_dir)], capsys)
        assert code == 0
        md = (tmp_path / "fertility.md").read_text()
        assert "| Same as input Nodes |" in md and "| 5 |" in md
        assert len((tmp_path / "fertility.csv").read_text().splitlines()) == 1 + 2 * 2 * 2 * 3

    def test_fetch_offline(self, capsys, tmp_path):
        pytest.importorskip("common_datasets")
        code, out, _ = run(["fetch-data", "--dir", str(tmp_path), "--offline",
                            "--datasets", "haberman,fertility"], capsys)
        assert code == 0 and out.count("ok") == 2
        assert (tmp_path / "haberman.csv").is_file() and (tmp_path / "CHECKSUMS").is_file()

    def test_fetch_reports_missing(self, capsys, tmp_path):
        code, out, _ = run(["fetch-data", "--dir", str(tmp_path), "--offline",
                            "--datasets", "heart"], capsys)
        assert code == 2 and "missing" in out

    @needs_fertility
    def test_suite(self, capsys, tmp_path, data_dir):
        m = tmp_path / "m.conf"
        m.write_text(f"datasets = fertility\nvariants = plain_chaotic\nseeds = 0\n"
                     f"data_dir = {data_dir}\n")
        code, out, _ = run(["suite", "--manifest", str(m), "--report-dir", str(tmp_path / "r")],
                           capsys)
        assert code == 0 and (tmp_path / "r" / "summary.md").is_file()


@needs_fertility
def test_split_mode_chain(capsys, tmp_path, data_dir):
    wd = str(tmp_path / "work")
    code, out, _ = run(["init", "--workdir", wd, "--dataset", "fertility", "--hidden", "3",
                        "--ckks-profile", "test", "--data-dir", str(data_dir)], capsys)
    assert code == 0
    shared = tmp_path / "work" / "shared"
    assert not any("secret" in p.name for p in shared.iterdir())
    for step in ("hidden", "train", "predict", "decrypt"):
        code, out, err = run([step, "--workdir", wd], capsys)
        assert code == 0, err
    diff = float(re.search(r"plaintext twin\| = (\S+)", out).group(1))
    agree = float(re.search(r"label agreement with twin = (\S+)", out).group(1))
    assert diff < 1e-2 and agree >= 0.99
    beta = np.load(tmp_path / "work" / "owner" / "beta.npy")
    assert beta.shape == (3,)
