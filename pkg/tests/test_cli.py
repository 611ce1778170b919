import pytest

from hocbates.cli import EXIT_BLOWUP, EXIT_INVALID, EXIT_OK, main
from hocbates.solver import NumericalBlowUp


def test_price_writes_surfaces(tmp_path, capsys):
    out, dout = tmp_path / "v.csv", tmp_path / "d.csv"
    assert main(["price", "--h", "0.4", "--out", str(out), "--delta-out", str(dout)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "factorisations=1" in text and "V(S=K" in text
    assert out.read_text().startswith("x,y,S,sigma,u,V\n")
    assert dout.read_text().startswith("x,y,S,sigma,delta\n")


def test_converge_prints_slope(tmp_path, capsys):
    assert main(["converge", "--scheme", "fd2", "--h", "0.4", "0.2", "--h-ref", "0.1",
                 "--out", str(tmp_path / "c.csv")]) == EXIT_OK
    assert "slope l2=" in capsys.readouterr().out


def test_stability_accepts_ratio_list(capsys):
    assert main(["stability", "--h", "0.4", "--h-ref", "0.2", "--ratio", "0.2", "0.4"]) == EXIT_OK
    assert len(capsys.readouterr().out.strip().splitlines()) == 3


def test_feller_and_hedge(capsys):
    assert main(["feller", "--h", "0.4", "0.2", "--h-ref", "0.1"]) == EXIT_OK
    assert main(["hedge", "--h", "0.4", "--h-ref", "0.2", "--bump", "0.01"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "feller=False" in out and "second_order" in out


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "a.cfg"
    cfg.write_text("h = 0.2\nscheme = fd2\n")
    assert main(["price", "--config", str(cfg), "--scheme", "hoc"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("hoc h=0.2")


@pytest.mark.parametrize("argv", [["price", "--h", "0.3"], ["price", "--config", "/nonexistent.cfg"],
                                  ["converge", "--ratio", "0.1", "0.2", "--h", "0.4", "--h-ref", "0.2"]])
def test_invalid_input_exit_code(argv, capsys):
    assert main(argv) == EXIT_INVALID
    assert capsys.readouterr().err.startswith("error:")


def test_blow_up_exit_code(monkeypatch):
    from hocbates import cli

    def boom(config):
        raise NumericalBlowUp(1, 1)
    monkeypatch.setattr(cli, "price_surface", boom)
    assert main(["price", "--h", "0.4"]) == EXIT_BLOWUP
