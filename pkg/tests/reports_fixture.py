"""A fixed tiny report shared by the bench and golden-file tests."""

from chaoselm.bench import CellResult, ExperimentConfig, ExperimentReport


def _cell(variant, hidden, resolved, linear, sigmoid, times, fidelity=()):
    return CellResult(variant, hidden, resolved, {"linear": linear, "sigmoid": sigmoid},
                      [{"train": t} for t in times], list(fidelity))


def _fid(seed, diff, agree, outside=0):
    return {"seed": seed, "max_score_diff": diff, "label_agreement": agree,
            "rows_outside_poly_range": outside}


def tiny_report() -> ExperimentReport:
    cfg = ExperimentConfig("haberman", variants=("plain_chaotic", "enc_chaotic"),
                           hidden_nodes=(2, "input"), seeds=(0, 1), ckks_profile="test")
    cells = [
        _cell("plain_chaotic", 2, 2, [0.5, 0.75], [0.25, 0.5], [0.01, 0.03]),
        _cell("enc_chaotic", 2, 2, [0.5, 0.5], [0.5, 0.25], [1.5, 2.5],
              [_fid(0, 1e-4, 1.0), _fid(1, 3e-4, 0.98)]),
        _cell("plain_chaotic", "input_dim", 3, [0.7, 0.8], [0.6, 0.6], [0.02, 0.02]),
        _cell("enc_chaotic", "input_dim", 3, [0.7, 0.7], [0.6, 0.7], [3.0, 4.0],
              [_fid(0, 2e-4, 1.0, 1), _fid(1, 1e-4, 1.0)]),
    ]
    return ExperimentReport(cfg.echo(), cells, {"split": "stratified 0.8/0.2"}, cfg.seeds)
