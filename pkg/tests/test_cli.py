import json
import math
import os

import pytest

from sel_lab.cli import ConfigError, main, parse_config


def write_cfg(tmp_path, text, name="problem.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run_cli(tmp_path, text, out="out"):
    cfg = write_cfg(tmp_path, text)
    outdir = str(tmp_path / out)
    code = main(["--config", cfg, "--out", outdir])
    return code, outdir


class TestConfigParsing:
    def test_minimal_ko_config(self, tmp_path):
        cfg = write_cfg(tmp_path, """
[problem]
command = check-ko

[functions]
f = "t^2"
""")
        spec = parse_config(cfg)
        assert spec.command == "check-ko"
        assert spec.expression("functions", "f") == "t^2"

    def test_missing_required_key(self, tmp_path):
        cfg = write_cfg(tmp_path, """
[problem]
command = eigen
R = 1.0
""")
        spec = parse_config(cfg)
        with pytest.raises(ConfigError, match="missing required key 'N'"):
            spec.get("problem", "N", required=True)

    def test_duplicate_key(self, tmp_path):
        cfg = write_cfg(tmp_path, """
[problem]
command = check-ko
N = 1
N = 2
""")
        with pytest.raises(ConfigError, match="duplicate key 'N'"):
            parse_config(cfg)

    def test_unknown_section(self, tmp_path):
        cfg = write_cfg(tmp_path, "[wat]\nx = 1\n")
        with pytest.raises(ConfigError, match=r"unknown section"):
            parse_config(cfg)

    def test_unknown_command(self, tmp_path):
        cfg = write_cfg(tmp_path, "[problem]\ncommand = frobnicate\n")
        with pytest.raises(ConfigError, match="unknown command"):
            parse_config(cfg)

    def test_list_values(self, tmp_path):
        cfg = write_cfg(tmp_path, """
[problem]
command = sweep
lambda_grid = 1.0, 2.0, 3.5
""")
        spec = parse_config(cfg)
        assert spec.get("problem", "lambda_grid") == [1.0, 2.0, 3.5]

    def test_error_carries_line_number(self, tmp_path):
        cfg = write_cfg(tmp_path, "[problem]\ncommand = check-ko\nnot a kv line\n")
        with pytest.raises(ConfigError) as err:
            parse_config(cfg)
        assert err.value.lineno == 3


class TestExitCodes:
    def test_success(self, tmp_path, capsys):
        code, outdir = run_cli(tmp_path, """
[problem]
command = check-ko

[functions]
f = "t^2"
""")
        assert code == 0
        out = capsys.readouterr().out
        assert "verdict=convergent" in out
        assert os.path.exists(os.path.join(outdir, "check_ko_summary.json"))

    def test_unknown_key_is_config_error_without_partial_output(self, tmp_path):
        code, outdir = run_cli(tmp_path, """
[problem]
command = eigen
N = 3
R = 1.0
nonsense = 1
""")
        assert code == 2
        assert not os.path.exists(outdir) or not os.listdir(outdir)

    def test_bad_expression_fails_fast(self, tmp_path):
        code, outdir = run_cli(tmp_path, """
[problem]
command = check-ko

[functions]
f = "ln("
""")
        assert code == 2
        assert not os.path.exists(outdir) or not os.listdir(outdir)

    def test_numerical_failure_is_exit_3(self, tmp_path):
        # profile on a KO-divergent nonlinearity is a numerical-domain error
        code, outdir = run_cli(tmp_path, """
[problem]
command = profile
k_alpha = 1.0

[functions]
f = "t"
""")
        assert code == 3
        diag = json.loads(open(os.path.join(outdir, "failure.json")).read())
        assert "Keller-Osserman" in diag["error"]


class TestCommands:
    def test_eigen_summary_and_csv(self, tmp_path, capsys):
        code, outdir = run_cli(tmp_path, """
[problem]
command = eigen
N = 3
R = 1.0
""")
        assert code == 0
        out = capsys.readouterr().out
        lam = float(out.split("lambda1=")[1].split()[0])
        assert lam == pytest.approx(math.pi ** 2, abs=1e-8)
        lines = open(os.path.join(outdir, "eigen.csv")).read().splitlines()
        assert lines[1] == "r,phi"

    def test_classify(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, """
[problem]
command = classify
direction = origin
b = 1.0

[functions]
fn = "t^(-1/2)"
""")
        assert code == 0
        assert "verdict=convergent" in capsys.readouterr().out

    def test_analyze_f(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, """
[problem]
command = analyze-f

[functions]
f = "t^3"
""")
        assert code == 0
        out = capsys.readouterr().out
        assert "rho=2" in out and "identities_ok=true" in out

    def test_ell(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, """
[problem]
command = ell
nu = 1.0

[functions]
k = "t^2"
""")
        assert code == 0
        ell1 = float(capsys.readouterr().out.split("ell1=")[1].split()[0])
        assert ell1 == pytest.approx(1.0 / 3.0, abs=1e-3)

    def test_make_k(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, """
[problem]
command = make-k
kind = invS
D = 2.0

[functions]
S = "t^2"
""")
        assert code == 0
        assert "predicted_ell1=0.333" in capsys.readouterr().out

    def test_xi0_power(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, """
[problem]
command = xi0
rho = 2.0
ell1 = 0.5
c = 1.0
""")
        assert code == 0
        xi0 = float(capsys.readouterr().out.split("xi0=")[1].split()[0])
        assert xi0 == pytest.approx(math.sqrt(3.0) / 2.0)

    def test_chi(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, """
[problem]
command = chi
rho = 2.0
zeta = 3.0
theta = 1.0
ell_star = -1.0
c_tilde = 0.5
""")
        assert code == 0
        out = capsys.readouterr().out
        assert "varpi=1" in out and "chi=-0.25" in out

    def test_profile_csv(self, tmp_path, capsys):
        code, outdir = run_cli(tmp_path, """
[problem]
command = profile
k_alpha = 1.0
nu = 1.0
c = 1.0

[functions]
f = "t^3"

[numerics]
grid_depth = 10

[output]
csv = h.csv
""")
        assert code == 0
        lines = open(os.path.join(outdir, "h.csv")).read().splitlines()
        assert lines[1] == "t,h,h_prime"
        assert "xi0=0.866" in capsys.readouterr().out

    def test_solve_system(self, tmp_path, capsys):
        code, outdir = run_cli(tmp_path, """
[problem]
command = solve-system
N = 3
R = 20.0
a = 1.0
b = 1.0

[functions]
p = "1"
q = "1"
f = "t^(1/2)"
g = "t^(1/2)"

[numerics]
mesh_points = 512
""")
        assert code == 0
        out = capsys.readouterr().out
        assert "classification=entire-large" in out
        assert os.path.exists(os.path.join(outdir, "system.csv"))

    def test_solve_entire(self, tmp_path, capsys):
        code, outdir = run_cli(tmp_path, """
[problem]
command = solve-entire
N = 3
R = 30.0
b0 = 1.0

[functions]
f = "t^(1/2)"
psi = "(1+t)^(-3)"

[numerics]
panels = 512
""")
        assert code == 0
        out = capsys.readouterr().out
        assert "classification=bounded" in out
        assert "growth_bound_ok=true" in out

    def test_young(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, """
[problem]
command = young
a = 0.0
p = 1.5
geometry = interval
N = 1
""")
        assert code == 0
        assert "C=1" in capsys.readouterr().out

    def test_gelfand_predicate_and_solve(self, tmp_path, capsys):
        code, outdir = run_cli(tmp_path, """
[problem]
command = gelfand
lambda = 0.5
mu = 1.0
N = 1
geometry = interval
solve = true

[functions]
g = "exp(-t)"
""")
        assert code == 0
        out = capsys.readouterr().out
        assert "solvable=true" in out and "agrees=true" in out
        assert os.path.exists(os.path.join(outdir, "gelfand.csv"))

    def test_lef_no_solution_writes_probe_table(self, tmp_path, capsys):
        code, outdir = run_cli(tmp_path, f"""
[problem]
command = lef
N = 1
geometry = interval
lambda = {1.2 * math.pi ** 2}

[functions]
f = "t"
g = "t^(-1/2)"
a = "1"
""")
        assert code == 0
        assert "classification=no-solution" in capsys.readouterr().out
        lines = open(os.path.join(outdir, "lef_probes.csv")).read().splitlines()
        assert lines[0] == "s,zero_location"
        assert len(lines) >= 61

    def test_blowup_with_rate(self, tmp_path, capsys):
        code, outdir = run_cli(tmp_path, """
[problem]
command = blowup
N = 1
domain = annulus
R0 = 0.0
R = 1.0
b_normalization = k2
k_alpha = 1.0
nu = 1.0
c = 1.0

[functions]
f = "t^3"
b = "t^2"

[numerics]
levels = 10, 20, 40, 80, 160, 320, 640
grid_depth = 14
tol = 1e-9

[output]
csv = solution.csv
json = summary.json
""")
        assert code == 0
        out = capsys.readouterr().out
        assert "rate_ratio=" in out
        summary = json.loads(open(os.path.join(outdir, "summary.json")).read())
        assert abs(summary["rate_limit"] - 1.0) < 0.05

    def test_rate_from_solution_csv(self, tmp_path, capsys):
        blow_cfg = """
[problem]
command = blowup
N = 1
domain = annulus
R0 = 0.0
R = 1.0
b_normalization = k2

[functions]
f = "t^3"
b = "t^2"

[numerics]
levels = 10, 20, 40, 80, 160, 320, 640
tol = 1e-9

[output]
csv = solution.csv
"""
        code, outdir = run_cli(tmp_path, blow_cfg, out="shared")
        assert code == 0
        rate_cfg = """
[problem]
command = rate
solution = solution.csv
k_alpha = 1.0
nu = 1.0
c = 1.0

[functions]
f = "t^3"

[numerics]
grid_depth = 14

[output]
csv = rate.csv
"""
        cfg = write_cfg(tmp_path, rate_cfg, name="rate.cfg")
        code = main(["--config", cfg, "--out", outdir])
        assert code == 0
        out = capsys.readouterr().out
        limit = float(out.split("limit=")[1].split()[0])
        assert abs(limit - 1.0) < 0.05
        assert os.path.exists(os.path.join(outdir, "rate.csv"))

    def test_sweep_with_bracket(self, tmp_path, capsys):
        grid = ", ".join(str(c * math.pi ** 2) for c in (0.5, 0.95, 1.05))
        code, outdir = run_cli(tmp_path, f"""
[problem]
command = sweep
N = 1
geometry = interval
lambda_grid = {grid}

[functions]
f = "t"
g = "t^(-1/2)"
a = "1"
""")
        assert code == 0
        out = capsys.readouterr().out
        assert "lambda_star_bracket=" in out
        lines = open(os.path.join(outdir, "sweep.csv")).read().splitlines()
        assert lines[0] == "lambda,status,sup_norm,center_value"
        assert len(lines) == 4


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path, capsys):
        text = """
[problem]
command = eigen
N = 2
R = 1.0
"""
        _, out1 = run_cli(tmp_path, text, out="out1")
        _, out2 = run_cli(tmp_path, text, out="out2")
        capsys.readouterr()
        a = open(os.path.join(out1, "eigen.csv"), "rb").read()
        b = open(os.path.join(out2, "eigen.csv"), "rb").read()
        assert a == b
