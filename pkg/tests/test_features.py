import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import match_frames, squad, tracking_frame
from linebreak.domain import AWAY, HOME, PassEvent, Position, order_squads
from linebreak.features import (
    FEATURE_NAMES, N_FEATURES, FeatureMatrix, SchemaDrift, check_schema, extract_features, featurize_dataset,
    load_schema, pass_direction, read_features, release_squads, write_features,
)
from linebreak.ingest import MatchInfo
from linebreak.labeler import label_dataset

MATCH = MatchInfo("M", 1, "H", "A", "right")
col = {n: i for i, n in enumerate(FEATURE_NAMES)}
Y_NEGATED = [n for n in FEATURE_NAMES if n.endswith(("_vy", "_ay")) or n.startswith("Defense_Line_o_") and n.endswith("_y")]
Y_REFLECTED = [n for n in FEATURE_NAMES if n == "Start Ball Y" or n.endswith("_y") and n.startswith(("o_", "d_"))]


def _pass(kind="through_pass", one_touch=False, start=(50.0, 34.0), end=(70.0, 34.0)):
    return PassEvent("p1", "M", 400, "h11", HOME, kind, one_touch, True, Position(*start), Position(*end),
                     receiver_id="h2", release_frame=10)


def _squads():
    off = squad(HOME, [80, 70, 60, 55, 50, 45, 40, 35, 30, 20, 5], [34, 30, 20, 25, 35, 40, 45, 50, 55, 60, 34])
    dfn = squad(AWAY, [100, 85, 84, 83, 82, 70, 69, 68, 67, 60, 59], [34, 30, 10, 20, 40, 50, 60, 25, 35, 45, 15])
    return order_squads(tracking_frame(off + dfn), HOME)


def test_schema_has_189_names_locked_by_the_golden_file():
    assert N_FEATURES == 189 and len(set(FEATURE_NAMES)) == 189
    assert load_schema() == FEATURE_NAMES
    assert FEATURE_NAMES[:3] == ["Start Ball X", "Start Ball Y", "Through Pass"]
    assert FEATURE_NAMES[13] == "o_1_x" and FEATURE_NAMES[24] == "d_1_x" and FEATURE_NAMES[-1] == "Defense_Line_o_11_y"


def test_vector_follows_the_schema_and_encodes_flags():
    v = extract_features(_pass(), _squads())
    assert v.values.shape == (189,) and list(v.as_dict()) == FEATURE_NAMES
    d = v.as_dict()
    assert (d["Through Pass"], d["Flick On"], d["Direct Pass"]) == (1.0, 0.0, 0.0)
    assert extract_features(_pass("flick_on", True), _squads()).as_dict()["Direct Pass"] == 1.0


def test_defense_line_differences_are_measured_from_d10():
    d = extract_features(_pass(), _squads()).as_dict()
    # d_10 is (85, 30) and o_1 is (80, 34)
    assert (d["Defense_Line_o_1_x"], d["Defense_Line_o_1_y"]) == (5.0, -4.0)
    assert d["Defense_Line_Ball_xDiff"] == 35.0
    assert d["Offense_Line_Ball_xDiff"] == 30.0 and d["Defense_Lines_xDiff"] == 65.0
    assert (d["Line Gap1"], d["Line Gap2"], d["Line Gap3"]) == (1.0, 2.0, 3.0)
    assert d["Passer_Nearest_Defender_Distance"] == pytest.approx(np.hypot(55, 11))


@pytest.mark.parametrize("end, expected", [
    ((60, 34), 1), ((55, 42.6), 1), ((55, 43.0), 0), ((50, 44), 0), ((40, 34), -1), ((45, 31.0), -1), ((45, 25.0), 0),
    ((50, 34), 1),
])
def test_pass_direction_thresholds(end, expected):
    assert pass_direction(Position(50, 34), Position(*end)) == expected


def test_missing_end_position_is_an_error():
    p = PassEvent("p1", "M", 400, "h11", HOME, "home_pass", False, True, Position(1, 1), release_frame=10)
    with pytest.raises(ValueError):
        extract_features(p, _squads())


def _window(seed, mirror=False):
    rng = np.random.default_rng(seed)
    start = np.c_[rng.uniform(5, 100, 22), rng.uniform(5, 63, 22)]
    vel = rng.normal(0, 3, (22, 2))
    rows = []
    for f in range(9):
        xy = start + vel * f / 25.0
        if mirror:
            xy[:, 1] = 68.0 - xy[:, 1]
        players = [(HOME if j < 11 else AWAY, f"{'ha'[j // 11]}{j % 11 + 1}", *xy[j]) for j in range(22)]
        rows.append((f, 1, (50.0, 34.0), players))
    return match_frames("M", rows)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([HOME, AWAY]))
def test_reflecting_the_frame_across_the_long_axis(seed, possession):
    ends = Position(80.0, 20.0), Position(80.0, 48.0)
    p = PassEvent("p1", "M", 160, "x", possession, "home_pass", False, True, Position(50.0, 30.0), ends[0])
    q = PassEvent("p1", "M", 160, "x", possession, "home_pass", False, True, Position(50.0, 38.0), ends[1])
    a = extract_features(p, release_squads(_window(seed), MATCH, possession, 4)).as_dict()
    b = extract_features(q, release_squads(_window(seed, mirror=True), MATCH, possession, 4)).as_dict()
    for name in FEATURE_NAMES:
        expected = -a[name] if name in Y_NEGATED else 68.0 - a[name] if name in Y_REFLECTED else a[name]
        assert b[name] == pytest.approx(expected, abs=1e-7), name


def test_area_features_tile_the_pitch():
    v = extract_features(_pass(), release_squads(_window(1), MATCH, HOME, 4)).as_dict()
    total = sum(v[f"{t}_{i}_area"] for t in "od" for i in range(1, 12))
    assert total == pytest.approx(7140.0, rel=1e-6)


def test_release_squads_estimate_constant_velocity():
    s = release_squads(_window(2), MATCH, HOME, 4)
    away_view = release_squads(_window(2), MATCH, AWAY, 4)
    assert all(abs(sl.velocity[0]) < 15 for sl in s.offense)
    # the away side attacks left in the first half, so the frame is mirrored for it
    assert sorted(round(sl.position.x, 9) for sl in away_view.offense) == \
        sorted(round(105 - sl.position.x, 9) for sl in s.defense)


def test_empty_matrix_writes_only_the_header(tmp_path):
    fm = FeatureMatrix([], [], np.zeros((0, N_FEATURES)), np.zeros(0, dtype=np.int64))
    write_features(fm, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert len(lines) == 1 and lines[0].split(",")[-2:] == ["label", "pass_id"]
    assert len(read_features(tmp_path / "f.csv")) == 0


@pytest.fixture(scope="module")
def league():
    from linebreak.synth import SynthConfig, generate
    ds = generate(SynthConfig(seed=21, n_rounds=1, matches_per_round=2, passes_per_match=150)).dataset
    labels, _ = label_dataset(ds)
    return ds, labels


def test_featurized_league_is_complete_and_ordered(league):
    ds, labels = league
    fm = featurize_dataset(labels, ds)
    assert fm.values.shape == (len(fm), 189) and len(fm) > 200
    assert np.all(np.isfinite(fm.values))
    release = {p.pass_id: p.release_frame for p in ds.all_passes()}
    keys = [(m, release[p], p) for m, p in zip(fm.match_ids, fm.pass_ids)]
    assert keys == sorted(keys)


def test_receiver_starts_in_front_of_the_line_on_every_break(league):
    ds, labels = league
    by_id = {lp.pass_event.pass_id: lp for lp in labels}
    fm = featurize_dataset(labels, ds)
    checked = 0
    for pid, row, y in zip(fm.pass_ids, fm.values, fm.labels):
        if not y:
            continue
        p = by_id[pid].pass_event
        s = release_squads(ds.frames[p.match_id], ds.matches[p.match_id], p.team_in_possession, p.release_frame)
        i = s.offense_index(p.receiver_id)
        assert row[col[f"Defense_Line_o_{i}_x"]] >= 0.1
        checked += 1
    assert checked > 0


def test_csv_is_byte_deterministic_and_threads_do_not_matter(league, tmp_path):
    ds, labels = league
    write_features(featurize_dataset(labels, ds), tmp_path / "a.csv")
    write_features(featurize_dataset(labels, ds, jobs=2), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    back = read_features(tmp_path / "a.csv")
    assert np.allclose(back.values, featurize_dataset(labels, ds).values, rtol=1e-5, atol=1e-4)


def test_drifted_header_names_the_offending_column(tmp_path):
    names = list(FEATURE_NAMES)
    names[40] = "o_6_speed"
    with pytest.raises(SchemaDrift, match="o_6_speed"):
        check_schema(names)
    (tmp_path / "f.csv").write_text(",".join(names) + ",label,pass_id\n")
    with pytest.raises(SchemaDrift, match="column 40"):
        read_features(tmp_path / "f.csv")
    with pytest.raises(SchemaDrift):
        check_schema(FEATURE_NAMES[:-1])
