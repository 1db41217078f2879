"""Scenario configs, reports, heatmaps, figures, CLI verbs and exit codes."""

import json
from pathlib import Path

import numpy as np
import pytest

from comprange.cli import main
from comprange.config import ConfigError, load_scenario, scenario_from_dict
from comprange.report import emit_heatmap, run_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

FAST_QUERY = {"rings": [0.0, 0.9], "angles": [1, 16], "samples_per_disk": 1000}
FAST_FAMILY = {"monomial_degree_max": 6, "random_count": 4, "peak_ks": [1, 2],
               "kernel_radii": [0.5], "kernel_angles": 2}
FAST_QUAD = {"radial_order": 40, "angular_order": 64}


def fast_config(symbol, **outputs):
    return scenario_from_dict({
        "symbol": symbol,
        "label": "test",
        "query": dict(FAST_QUERY),
        "family": dict(FAST_FAMILY),
        "quadrature": dict(FAST_QUAD),
        "outputs": {"figures": False, "heatmaps": False, **outputs},
    })


class TestScenarioConfig:
    def test_roundtrip(self):
        cfg = fast_config({"kind": "scaled", "c": 0.5})
        again = scenario_from_dict(cfg.to_dict())
        assert again == cfg

    def test_shipped_scenarios_parse(self):
        files = sorted(SCENARIOS.glob("*.json"))
        assert len(files) == 8
        for path in files:
            cfg = load_scenario(path)
            assert cfg.symbol["kind"]

    def test_unknown_top_level_field(self):
        with pytest.raises(ConfigError):
            scenario_from_dict({"symbol": {"kind": "identity"}, "bogus": 1})

    def test_unknown_nested_field(self):
        with pytest.raises(ConfigError) as exc:
            scenario_from_dict({"symbol": {"kind": "identity"},
                                "query": {"nope": 3}})
        assert "query" in str(exc.value)

    def test_missing_symbol(self):
        with pytest.raises(ConfigError):
            scenario_from_dict({"label": "x"})

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            scenario_from_dict({"symbol": {"kind": "identity"},
                                "query": {"samples_per_disk": 10}})
        with pytest.raises(ConfigError):
            scenario_from_dict({"symbol": {"kind": "identity"},
                                "query": {"eps": 0.5}})


class TestRunScenario:
    def test_identity_report(self, tmp_path):
        cfg = fast_config({"kind": "identity"})
        report, code = run_scenario(cfg, out_dir=tmp_path)
        assert code == 0
        assert report.result.verdict.label == "closed_range_evidence"
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["verdict"]["label"] == "closed_range_evidence"
        assert set(data["verdict"]["criteria"]) == {
            "main_thm_b", "main_thm_c", "prop21_boxes",
            "cor26_bounded_n", "tail_hypothesis", "thmZ_gc"}
        assert data["timings"]["kind"] == "deterministic_work_counters"
        assert (tmp_path / "rings.csv").exists()

    def test_every_numeric_block_carries_uncertainty(self, tmp_path):
        cfg = fast_config({"kind": "scaled", "c": 0.5})
        report, _ = run_scenario(cfg, out_dir=tmp_path)
        data = json.loads((tmp_path / "report.json").read_text())
        for est in data["delta_estimates"].values():
            assert "standard_error" in est
            for ring in est["per_ring"]:
                assert "stderr" in ring
        for rec in data["verdict"]["criteria"].values():
            assert {"value", "threshold", "passed"} <= set(rec)
        for tail in data["tail_estimates"].values():
            assert tail["kind"] == "family_lower_estimate"

    def test_byte_identical_reruns(self, tmp_path):
        cfg = fast_config({"kind": "blaschke", "zeros": [[0.5, 0.0], [-0.3, 0.0]],
                           "phase": 0.0})
        run_scenario(cfg, out_dir=tmp_path / "a")
        run_scenario(cfg, out_dir=tmp_path / "b")
        assert (tmp_path / "a/report.json").read_bytes() \
            == (tmp_path / "b/report.json").read_bytes()
        assert (tmp_path / "a/rings.csv").read_bytes() \
            == (tmp_path / "b/rings.csv").read_bytes()

    def test_figures_rendered(self, tmp_path):
        cfg = fast_config({"kind": "identity"}, figures=True)
        run_scenario(cfg, out_dir=tmp_path)
        assert (tmp_path / "delta_rings.png").stat().st_size > 0
        assert (tmp_path / "peak_ratios.png").stat().st_size > 0


class TestHeatmaps:
    def test_identity_constant_field(self, tmp_path):
        cfg = fast_config({"kind": "identity"})
        paths = emit_heatmap("n_phi", 32, cfg, tmp_path, png=False)
        sidecar = Path(paths["sidecar"]).read_text().splitlines()
        meta = dict(line.split(" ", 1) for line in sidecar)
        assert float(meta["min"]) == 1.0 and float(meta["max"]) == 1.0
        assert meta["sentinel_pixels"] == "0"
        pgm = Path(paths["pgm"]).read_text().splitlines()
        assert pgm[0] == "P2"
        body = " ".join(pgm[4:]).split()
        assert set(body) == {"0"}  # constant field maps to a single gray level

    def test_power2_constant_two(self, tmp_path):
        cfg = fast_config({"kind": "power", "n": 2})
        paths = emit_heatmap("n_phi", 32, cfg, tmp_path, png=False)
        meta = dict(line.split(" ", 1)
                    for line in Path(paths["sidecar"]).read_text().splitlines())
        # multiplicity counting: two preimages at every sampled pixel
        assert float(meta["min"]) == 2.0 and float(meta["max"]) == 2.0

    def test_tau_sidecar_counts_origin_sentinels(self, tmp_path):
        cfg = fast_config({"kind": "identity"})
        paths = emit_heatmap("tau", 32, cfg, tmp_path, png=False)
        meta = dict(line.split(" ", 1)
                    for line in Path(paths["sidecar"]).read_text().splitlines())
        assert meta["field"] == "tau"

    def test_crescent_coverage_dark_wedge(self, tmp_path):
        cfg = fast_config({"kind": "crescent", "tangent_point": [1.0, 0.0],
                           "inner_radius": 0.25})
        paths = emit_heatmap("coverage", 24, cfg, tmp_path, png=False)
        pgm = Path(paths["pgm"]).read_text().splitlines()
        cols = int(pgm[2].split()[0])
        rows = int(pgm[2].split()[1])
        vals = np.array(" ".join(pgm[4:]).split(), dtype=float).reshape(rows, cols)
        outer = vals[-3:, :]  # radii closest to the boundary
        near_tangency = outer[:, [0, 1, cols - 1]].mean()
        far_side = outer[:, cols // 2 - 1: cols // 2 + 2].mean()
        assert near_tangency < far_side  # dark wedge toward zeta = 1

    def test_resolution_cap(self, tmp_path):
        cfg = fast_config({"kind": "identity"})
        with pytest.raises(Exception):
            emit_heatmap("n_phi", 4096, cfg, tmp_path)

    def test_pgm_bit_identical(self, tmp_path):
        cfg = fast_config({"kind": "scaled", "c": 0.5})
        a = emit_heatmap("tau", 24, cfg, tmp_path / "a", png=False)
        b = emit_heatmap("tau", 24, cfg, tmp_path / "b", png=False)
        assert Path(a["pgm"]).read_bytes() == Path(b["pgm"]).read_bytes()


class TestCli:
    def _scenario_file(self, tmp_path) -> Path:
        path = tmp_path / "scenario.json"
        cfg = fast_config({"kind": "identity"})
        path.write_text(json.dumps(cfg.to_dict()) + "\n")
        return path

    def test_analyze(self, tmp_path, capsys):
        path = self._scenario_file(tmp_path)
        code = main(["analyze", str(path), "--out-dir", str(tmp_path / "out")])
        assert code == 0
        out = capsys.readouterr().out
        assert "closed_range_evidence" in out
        assert (tmp_path / "out/report.json").exists()

    def test_analyze_flag_overrides(self, tmp_path):
        path = self._scenario_file(tmp_path)
        code = main(["analyze", str(path), "--out-dir", str(tmp_path / "o"),
                     "--seed", "7", "--alpha", "0.5", "--radial-order", "32"])
        assert code == 0
        data = json.loads((tmp_path / "o/report.json").read_text())
        assert data["seed"] == 7
        assert data["scenario"]["query"]["alpha"] == 0.5
        assert data["scenario"]["quadrature"]["radial_order"] == 32

    def test_rings(self, tmp_path, capsys):
        path = self._scenario_file(tmp_path)
        assert main(["rings", str(path)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("mode,ring_radius")
        assert "coverage" in out

    def test_heatmap(self, tmp_path):
        path = self._scenario_file(tmp_path)
        code = main(["heatmap", str(path), "--field", "n_phi",
                     "--resolution", "24", "--no-png",
                     "--out-dir", str(tmp_path / "h")])
        assert code == 0
        assert (tmp_path / "h/n_phi.pgm").exists()
        assert (tmp_path / "h/n_phi.txt").exists()

    def test_verify_tag(self, tmp_path, capsys):
        assert main(["verify", "--tags", "geometry",
                     "--out", str(tmp_path / "v.json")]) == 0
        summary = json.loads((tmp_path / "v.json").read_text())
        assert summary["failed"] == 0
        assert "PASS" in capsys.readouterr().out

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"symbol": {"kind": "identity"}, "bogus": 1}')
        assert main(["analyze", str(bad)]) == 1

    def test_invalid_json_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{нет}")
        assert main(["analyze", str(bad)]) == 1
