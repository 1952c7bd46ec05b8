import pytest

from starmec_plots import FigureSpec, SchemaError, render
from starmec_plots.cli import main as cli_main


def _write_trace(path, values):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# schema=starmec.trace.v1\n")
        fh.write("iteration,energy_efficiency\n")
        for i, v in enumerate(values):
            fh.write(f"{i},{v!r}\n")


def _write_trajectory(path, pts):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# schema=starmec.trajectory.v1\n")
        fh.write("slot,x,y,z\n")
        for i, (x, y) in enumerate(pts):
            fh.write(f"{i},{x!r},{y!r},30.0\n")


def _write_sweep(path, scheme, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# schema=starmec.sweep.v1\n")
        fh.write("scheme,sweep_variable,value,energy_efficiency,total_bits,"
                 "e_total,e_users,e_com_uav,e_fly,iterations,status\n")
        for value, ee in rows:
            fh.write(f"{scheme},M,{value},{ee!r},1e6,100.0,1.0,10.0,89.0,4,ok\n")


def test_convergence_renders(tmp_path):
    src = tmp_path / "trace.csv"
    _write_trace(src, [1.0, 2.0, 2.5, 2.5])
    out = tmp_path / "conv.png"
    render(FigureSpec(kind="convergence", inputs=[str(src)], output=str(out)))
    assert out.exists() and out.stat().st_size > 0


def test_trajectory_renders_with_markers(tmp_path):
    src = tmp_path / "traj.csv"
    _write_trajectory(src, [(-40.0, 0.0), (0.0, 5.0), (40.0, 0.0)])
    out = tmp_path / "traj.png"
    spec = FigureSpec(kind="trajectory", inputs=[str(src)], output=str(out),
                      markers={"users": [(10.0, -15.0)], "bs": (0.0, 40.0)})
    render(spec)
    assert out.exists() and out.stat().st_size > 0


def test_sweep_renders_multiple_series(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    _write_sweep(a, "proposed", [(16, 5.0), (25, 6.0)])
    _write_sweep(b, "ris_split", [(16, 4.0), (25, 5.0)])
    out = tmp_path / "sweep.png"
    render(FigureSpec(kind="sweep", inputs=[str(a), str(b)], output=str(out)))
    assert out.exists() and out.stat().st_size > 0


def test_schema_mismatch_raises(tmp_path):
    src = tmp_path / "trace.csv"
    _write_trajectory(src, [(0.0, 0.0), (1.0, 1.0)])
    with pytest.raises(SchemaError):
        render(FigureSpec(kind="convergence", inputs=[str(src)],
                          output=str(tmp_path / "x.png")))


def test_missing_schema_raises(tmp_path):
    src = tmp_path / "plain.csv"
    src.write_text("iteration,energy_efficiency\n0,1.0\n")
    with pytest.raises(SchemaError):
        render(FigureSpec(kind="convergence", inputs=[str(src)],
                          output=str(tmp_path / "x.png")))


def test_render_idempotent(tmp_path):
    src = tmp_path / "trace.csv"
    _write_trace(src, [1.0, 3.0])
    before = src.read_bytes()
    out = tmp_path / "c.png"
    render(FigureSpec(kind="convergence", inputs=[str(src)], output=str(out)))
    first = out.read_bytes()
    render(FigureSpec(kind="convergence", inputs=[str(src)], output=str(out)))
    assert src.read_bytes() == before
    assert out.read_bytes() == first


def test_cli_roundtrip(tmp_path):
    src = tmp_path / "trace.csv"
    _write_trace(src, [1.0, 2.0])
    out = tmp_path / "cli.png"
    code = cli_main(["--kind", "convergence", "--in", str(src),
                     "--out", str(out), "--title", "demo"])
    assert code == 0 and out.exists()


def test_cli_schema_error_exit(tmp_path):
    src = tmp_path / "bad.csv"
    src.write_text("nope\n")
    code = cli_main(["--kind", "convergence", "--in", str(src),
                     "--out", str(tmp_path / "x.png")])
    assert code == 1
