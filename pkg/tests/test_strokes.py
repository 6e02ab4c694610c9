import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from portraitguide.errors import DocumentError, ValidationError
from portraitguide.strokes import (
    StrokeSet,
    Vertex,
    add_stroke,
    erase_stroke,
    load_sketch,
    rasterize,
    save_sketch,
    undo,
)

from oracles import segment_distance_grid

CANVAS = (64, 64)


def fresh(canvas=CANVAS):
    return StrokeSet(canvas_size=canvas)


def test_add_first_stroke_gets_order_zero():
    s = add_stroke(fresh(), [(1, 1), (5, 5), (9, 2)], width=2)
    assert len(s) == 1
    assert s.strokes[0].order == 0
    assert [ (v.x, v.y) for v in s.strokes[0].vertices ] == [(1, 1), (5, 5), (9, 2)]


def test_add_keeps_orders_monotone():
    s = fresh()
    for i in range(3):
        s = add_stroke(s, [(i, i), (i + 1, i)], width=1)
    assert [st.order for st in s.strokes] == [0, 1, 2]


def test_add_out_of_bounds_vertex_rejected():
    big = StrokeSet(canvas_size=(512, 512))
    with pytest.raises(ValidationError):
        add_stroke(big, [(600, 10)], width=1)
    with pytest.raises(ValidationError):
        add_stroke(big, [(10, 512)], width=1)


def test_add_empty_polyline_rejected():
    with pytest.raises(ValidationError):
        add_stroke(fresh(), [], width=1)


def test_add_does_not_mutate_input():
    a = add_stroke(fresh(), [(1, 1)], width=1)
    b = add_stroke(a, [(2, 2)], width=1)
    assert len(a) == 1 and len(b) == 2


def test_erase_hit_on_vertex():
    s = add_stroke(fresh(), [(10, 10), (20, 10)], width=1)
    s = add_stroke(s, [(40, 40), (50, 40)], width=1)
    out = erase_stroke(s, Vertex(10, 10), tolerance=6)
    assert [st.id for st in out.strokes] == [1]


def test_erase_miss_is_noop():
    s = add_stroke(fresh(), [(10, 10), (20, 10)], width=1)
    assert erase_stroke(s, Vertex(60, 60), tolerance=6) == s


def test_erase_tie_removes_most_recent():
    s = add_stroke(fresh(), [(10, 10), (30, 10)], width=1)
    s = add_stroke(s, [(10, 14), (30, 14)], width=1)
    out = erase_stroke(s, Vertex(20, 12), tolerance=6)  # equidistant from both
    assert [st.order for st in out.strokes] == [0]


def test_erase_undo_of_own_stroke_restores_set():
    base = add_stroke(fresh(), [(5, 5), (15, 5)], width=2)
    grown = add_stroke(base, [(30, 30), (40, 30)], width=2)
    assert erase_stroke(grown, Vertex(35, 30)) == base


def test_undo_removes_highest_order():
    s = add_stroke(fresh(), [(1, 1)], width=1)
    s = add_stroke(s, [(2, 2)], width=1)
    out = undo(s)
    assert [st.order for st in out.strokes] == [0]


def test_undo_empty_noop():
    assert undo(fresh()) == fresh()


def test_undo_does_not_reuse_orders():
    s = add_stroke(fresh(), [(1, 1)], width=1)  # a: order 0
    s = add_stroke(s, [(2, 2)], width=1)  # b: order 1
    s = undo(s)
    s = add_stroke(s, [(3, 3)], width=1)  # c
    assert [st.order for st in s.strokes] == [0, 2]


OPS = st.lists(
    st.one_of(
        st.tuples(st.just("add"), st.integers(1, 60), st.integers(1, 60)),
        st.tuples(st.just("undo"), st.just(0), st.just(0)),
    ),
    max_size=30,
)


@settings(max_examples=60, deadline=None)
@given(OPS)
def test_orders_strictly_increasing_under_random_edits(ops):
    s = fresh()
    model = []  # list of order numbers, mirroring add/undo
    counter = 0
    for op, x, y in ops:
        if op == "add":
            s = add_stroke(s, [(x, y), (x + 1, y)], width=1)
            model.append(counter)
            counter += 1
        else:
            s = undo(s)
            if model:
                model.pop()
    orders = [st.order for st in s.strokes]
    assert orders == model
    assert all(b > a for a, b in zip(orders, orders[1:]))


def test_rasterize_empty_is_blank():
    assert not rasterize(fresh()).any()


def test_rasterize_width1_horizontal_is_pixel_run():
    s = add_stroke(fresh(), [(5, 8), (15, 8)], width=1)
    grid = rasterize(s)
    expected = np.zeros((64, 64), dtype=bool)
    expected[8, 5:16] = True
    assert np.array_equal(grid, expected)


def test_rasterize_matches_distance_scan_oracle():
    rng = np.random.default_rng(7)
    for _ in range(5):
        pts = [(float(x), float(y)) for x, y in rng.integers(2, 30, size=(4, 2))]
        width = float(rng.integers(1, 5))
        s = add_stroke(StrokeSet(canvas_size=(32, 32)), pts, width=width)
        assert np.array_equal(
            rasterize(s), segment_distance_grid(pts, width, (32, 32))
        )


def test_rasterize_deterministic_and_id_independent():
    pts = [(3.0, 3.0), (20.0, 17.0)]
    a = add_stroke(fresh(), pts, width=3)
    b = StrokeSet(canvas_size=CANVAS, next_id=99, next_order=0)
    b = add_stroke(b, pts, width=3)
    assert a.strokes[0].id != b.strokes[0].id
    assert np.array_equal(rasterize(a), rasterize(b))
    assert np.array_equal(rasterize(a), rasterize(a))


def test_document_round_trip_exact():
    s = fresh()
    rng = np.random.default_rng(3)
    for _ in range(5):
        pts = [(float(x) + 0.25, float(y) + 0.75) for x, y in rng.integers(0, 60, size=(4, 2))]
        s = add_stroke(s, pts, width=float(rng.integers(1, 8)) / 2)
    doc = save_sketch(s)
    # through actual JSON text, as the wire does it
    restored = load_sketch(json.loads(json.dumps(doc)))
    assert restored == s
    assert save_sketch(restored) == doc


def test_document_missing_width_is_named():
    doc = save_sketch(add_stroke(fresh(), [(1, 1)], width=2))
    del doc["strokes"][0]["width"]
    with pytest.raises(DocumentError) as err:
        load_sketch(doc)
    assert "width" in str(err.value)


def test_document_bad_vertex_is_named():
    doc = save_sketch(add_stroke(fresh(), [(1, 1)], width=2))
    doc["strokes"][0]["points"][0] = [1]
    with pytest.raises(DocumentError) as err:
        load_sketch(doc)
    assert "points[0]" in str(err.value)


def test_document_non_monotone_orders_resequenced(caplog):
    doc = {
        "version": 1,
        "canvas": [64, 64],
        "strokes": [
            {"id": 0, "width": 1.0, "order": 5, "points": [[1.0, 1.0]]},
            {"id": 1, "width": 1.0, "order": 2, "points": [[2.0, 2.0]]},
            {"id": 2, "width": 1.0, "order": 9, "points": [[3.0, 3.0]]},
        ],
    }
    with caplog.at_level(logging.WARNING):
        s = load_sketch(doc)
    assert any("re-sequencing" in r.message for r in caplog.records)
    # relative order (2 < 5 < 9) preserved, new orders 0..2
    assert [(st.id, st.order) for st in s.strokes] == [(1, 0), (0, 1), (2, 2)]


def test_document_duplicate_id_rejected():
    doc = {
        "version": 1,
        "canvas": [64, 64],
        "strokes": [
            {"id": 0, "width": 1.0, "order": 0, "points": [[1.0, 1.0]]},
            {"id": 0, "width": 1.0, "order": 1, "points": [[2.0, 2.0]]},
        ],
    }
    with pytest.raises(DocumentError):
        load_sketch(doc)
