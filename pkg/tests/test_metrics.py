import json

import numpy as np
import pytest

from morphgrid import metrics
from morphgrid.errors import EmptyEvaluationError, NoAnalogiesError
from morphgrid.grid import Grid, GridRow
from morphgrid.metrics import (
    CELL,
    PARADIGM,
    AnalogyInstance,
    MetricsReport,
    analogy_accuracy,
    evaluate,
    f_score,
    form_scores,
    interpret_cells,
    is_valid_analogy,
    lexicon_expansion,
    mates,
    pdp_scores,
    read_analogies,
    sample_analogies,
    write_analogies,
)

TOY_ANALOGIES = {
    ("watched", "watching", "followed", "following"),
    ("watched", "watching", "seen", "seeing"),
    ("followed", "follows", "watched", "watches"),
    ("followed", "follows", "seen", "sees"),
    ("seen", "see", "watched", "watch"),
    ("seen", "see", "followed", "follow"),
}


def toy_instances():
    return [AnalogyInstance(*forms) for forms in sorted(TOY_ANALOGIES)]


def test_f_score():
    assert f_score(set(), set()) == 1.0
    assert f_score({"a"}, set()) == 0.0
    assert f_score({"a", "b"}, {"a"}) == pytest.approx(2 / 3)


def test_mates(toy_gold_grid, toy_lexicon):
    assert mates(toy_gold_grid, "watched", CELL, toy_lexicon) == {"followed", "seen"}
    assert mates(toy_gold_grid, "watched", PARADIGM, toy_lexicon) == {"watching"}
    assert mates(toy_gold_grid, "sees", PARADIGM, toy_lexicon) == {"see", "seen"}
    with pytest.raises(ValueError):
        mates(toy_gold_grid, "watched", "row", toy_lexicon)


def test_toy_pdp_scores(toy_prediction, toy_gold_restricted, toy_lexicon):
    f_par, f_cell, f_grid = pdp_scores(toy_prediction, toy_gold_restricted, toy_lexicon)
    assert f_par == pytest.approx(4 / 6)
    assert f_cell == pytest.approx(4 / 6)
    assert f_grid == pytest.approx(4 / 6)
    per_form = form_scores(toy_prediction, toy_gold_restricted, toy_lexicon).set_index("form")
    assert per_form.loc["watched", "f_par"] == 1.0
    assert per_form.loc["watched", "f_cell"] == 1.0
    assert per_form.loc["see", "f_par"] == 0.0
    assert per_form.loc["see", "f_cell"] == 0.0


def test_gold_scores_itself(toy_gold_grid, toy_lexicon):
    assert pdp_scores(toy_gold_grid, toy_gold_grid, toy_lexicon) == (1.0, 1.0, 1.0)


def test_empty_evaluation(toy_gold_grid):
    with pytest.raises(EmptyEvaluationError):
        form_scores(toy_gold_grid, toy_gold_grid, {"unrelated"})
    with pytest.raises(EmptyEvaluationError):
        analogy_accuracy([], toy_gold_grid)


def test_sample_every_toy_analogy(toy_gold_grid, toy_lexicon, caplog):
    instances = sample_analogies(toy_gold_grid, toy_lexicon, n=10, seed=0)
    assert {inst.forms for inst in instances} == TOY_ANALOGIES
    assert "fewer than the 10 requested" in caplog.text
    for inst in instances:
        assert is_valid_analogy(inst, toy_gold_grid, toy_lexicon)
        r1, r2 = inst.rows
        assert r1 != r2


def test_sample_subset(toy_gold_grid, toy_lexicon):
    instances = sample_analogies(toy_gold_grid, toy_lexicon, n=2, seed=4)
    assert len({inst.forms for inst in instances}) == 2
    assert {inst.forms for inst in instances} <= TOY_ANALOGIES
    assert sample_analogies(toy_gold_grid, toy_lexicon, n=2, seed=4) == instances


def test_no_analogies(toy_gold_grid):
    with pytest.raises(NoAnalogiesError):
        sample_analogies(toy_gold_grid, toy_gold_grid.forms(), n=5)
    with pytest.raises(ValueError):
        sample_analogies(toy_gold_grid, set(), n=0)


def test_invalid_analogy(toy_gold_grid, toy_lexicon):
    assert not is_valid_analogy(
        AnalogyInstance("watched", "watching", "followed", "follows"), toy_gold_grid, toy_lexicon
    )
    assert not is_valid_analogy(
        AnalogyInstance("watched", "watching", "watched", "watching"), toy_gold_grid, toy_lexicon
    )


def test_toy_analogy_and_expansion(toy_prediction):
    instances = toy_instances()
    assert analogy_accuracy(instances, toy_prediction) == pytest.approx(2 / 6)
    assert analogy_accuracy(instances, toy_prediction, joint=True) == pytest.approx(2 / 6)
    assert lexicon_expansion(instances, toy_prediction) == 1.0
    split = [AnalogyInstance("watched", "watching", "seen", "seeing")]
    assert analogy_accuracy(split, toy_prediction) == 0.0
    assert lexicon_expansion(split, toy_prediction) == 1.0


def test_joint_requires_one_slot_assignment():
    grid = Grid(
        [
            GridRow(slots={"a": ("x",), "b": ("y",)}),
            GridRow(slots={"a": ("z",), "c": ("w",)}),
            GridRow(slots={"b": ("w",)}),
        ]
    )
    instance = [AnalogyInstance("x", "y", "z", "w")]
    assert analogy_accuracy(instance, grid) == 1.0
    assert analogy_accuracy(instance, grid, joint=True) == 0.0


def random_grid(rng, pool, n_rows, columns):
    rows = []
    for _ in range(n_rows):
        slots = {c: (str(rng.choice(pool)),) for c in columns if rng.random() < 0.7}
        if slots:
            rows.append(GridRow(slots=slots))
    return Grid(rows)


def permuted(grid, rng):
    order = rng.permutation(len(grid.rows))
    names = {c: f"p{i}" for i, c in enumerate(rng.permutation(grid.columns))}
    return Grid(
        [
            GridRow(slots={names[c]: forms for c, forms in grid.rows[i].slots.items()})
            for i in order
        ]
    )


def test_metric_properties():
    rng = np.random.default_rng(11)
    pool = [f"f{i}" for i in range(12)]
    columns = ["0", "1", "2", "3"]
    checked = 0
    for _ in range(200):
        gold = random_grid(rng, pool, int(rng.integers(2, 5)), columns)
        pred = random_grid(rng, pool, int(rng.integers(1, 5)), columns)
        lexicon = {f for f in pool if rng.random() < 0.6}
        if not pred.rows or not gold.forms() & lexicon:
            continue
        scores = pdp_scores(pred, gold, lexicon)
        assert all(0.0 <= s <= 1.0 for s in scores)
        assert pdp_scores(permuted(pred, rng), gold, lexicon) == scores
        try:
            instances = sample_analogies(gold, lexicon, n=20, seed=0)
        except NoAnalogiesError:
            continue
        analogy = analogy_accuracy(instances, pred)
        expansion = lexicon_expansion(instances, pred)
        assert 0.0 <= analogy <= expansion <= 1.0
        assert analogy_accuracy(instances, permuted(pred, rng)) == analogy
        checked += 1
    assert checked > 10


def test_interpret_cells(toy_prediction, toy_gold_grid, toy_lexicon):
    frame = interpret_cells(toy_prediction, toy_gold_grid, toy_lexicon).set_index("cell")
    assert frame.loc["0", "members"] == 2
    assert frame.loc["0", "labels"] == "c4:0.50, c5:0.50"
    assert frame.loc["0", "suffix"] == "ed"
    assert frame.loc["3", "suffix"] == ""


def test_evaluate_and_report_files(tmp_path, toy_prediction, toy_gold_restricted, toy_lexicon):
    report = evaluate(toy_prediction, toy_gold_restricted, toy_lexicon, toy_instances())
    assert report.f_grid == pytest.approx(4 / 6)
    assert report.analogy == pytest.approx(2 / 6)
    assert report.n_cells == 4
    assert report.n_paradigms == 4
    assert report.n_instances == 6
    report.write(tmp_path / "report.json")
    data = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert MetricsReport.from_dict(data) == report
    assert "f_grid" in (tmp_path / "report.txt").read_text(encoding="utf-8")
    assert (tmp_path / "report_forms.tsv").exists()


def test_analogy_file(tmp_path):
    write_analogies(toy_instances(), tmp_path / "analogies.tsv")
    assert read_analogies(tmp_path / "analogies.tsv") == toy_instances()


def wide_grid(width):
    forms = tuple(f"x{i}" for i in range(width))
    return Grid(
        [
            GridRow(slots={"a": forms, "b": ("y1", "y2")}),
            GridRow(slots={"a": ("u",), "b": ("v",)}),
        ]
    ), set(forms) | {"y1", "u", "v"}


def test_rejection_sampling_warns_when_short(monkeypatch, caplog):
    monkeypatch.setattr(metrics, "ENUMERATION_LIMIT", 0)
    grid, lexicon = wide_grid(6)
    instances = sample_analogies(grid, lexicon, n=7, seed=1)
    assert {inst.forms for inst in instances} == {("u", "v", f"x{i}", "y2") for i in range(6)}
    assert "fewer than the 7 requested" in caplog.text


def test_rejection_sampling_without_analogies(monkeypatch):
    monkeypatch.setattr(metrics, "ENUMERATION_LIMIT", 0)
    grid = Grid([GridRow(slots={"a": ("x1", "x2", "x3"), "b": ("y1", "y2")})])
    with pytest.raises(NoAnalogiesError):
        sample_analogies(grid, {"x1", "x2", "x3", "y1"}, n=1)
