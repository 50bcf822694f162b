import pytest
from hypothesis import given, strategies as st

from antpap.graph import (
    Graph,
    GraphFormatError,
    bfs_order,
    build_cross,
    build_grid,
    build_path,
    build_rooms,
    build_star,
    paw_graph,
    from_cells,
    from_edges,
    load_graph,
    save_graph,
)


def assert_well_formed(g: Graph) -> None:
    for u, nbrs in enumerate(g.adjacency):
        assert list(nbrs) == sorted(set(nbrs))
        for i, v in enumerate(nbrs):
            assert v != u and 0 <= v < g.vertex_count
            assert u in g.adjacency[v]
            assert g.adjacency[v][g.rev[u][i]] == u


def test_grid_50x50():
    g = build_grid(50, 50)
    assert g.vertex_count == 2500
    assert g.degree(51) == 4
    assert g.degree(0) == 2


def test_grid_1x1():
    g = build_grid(1, 1)
    assert g.vertex_count == 1 and g.edge_count == 0


def test_grid_2x2():
    g = build_grid(2, 2)
    assert g.vertex_count == 4 and g.edge_count == 4
    assert all(g.degree(v) == 2 for v in range(4))


def test_grid_ids_are_row_major():
    g = build_grid(5, 3)
    for v, (x, y) in enumerate(g.layout):
        assert v == y * 5 + x
    assert g.has_edge(0, 1) and g.has_edge(0, 5) and not g.has_edge(4, 5)


@pytest.mark.parametrize("w,h", [(0, 3), (3, 0), (-1, 2)])
def test_grid_rejects_zero_dimension(w, h):
    with pytest.raises(ValueError):
        build_grid(w, h)


@pytest.mark.parametrize("w", range(1, 11))
@pytest.mark.parametrize("h", range(1, 11))
def test_grid_edge_count(w, h):
    g = build_grid(w, h)
    assert g.edge_count == w * (h - 1) + h * (w - 1)


def test_star_3_2():
    g = build_star(3, 2)
    assert g.vertex_count == 7
    assert g.degree(0) == 3
    assert sorted(g.degree(v) for v in range(7)) == [1, 1, 1, 2, 2, 2, 3]


def test_star_1_1_is_a_path():
    g = build_star(1, 1)
    assert g.vertex_count == 2 and g.edges() == [(0, 1)]


def test_star_4_1():
    g = build_star(4, 1)
    assert g.vertex_count == 5 and g.degree(0) == 4


def test_cross_counts():
    assert build_cross(5, 10).vertex_count == 225
    assert build_cross(1, 1).vertex_count == 5
    assert build_cross(5, 10).is_connected()


def test_rooms_reference_count():
    g = build_rooms(4, 1, 2)
    assert g.vertex_count == 6 * 16 + 7 * 2 * 1 == 110
    assert g.is_connected()


def test_rooms_rejects_corridor_wider_than_room():
    with pytest.raises(ValueError):
        build_rooms(3, 4, 1)


@pytest.mark.parametrize(
    "g",
    [build_grid(7, 4), build_star(3, 4), build_cross(3, 2), build_rooms(5, 2, 3), build_path(6), paw_graph()],
)
def test_builders_connected_and_symmetric(g):
    assert len(bfs_order(g, 0)) == g.vertex_count
    assert_well_formed(g)


@given(st.sets(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=30))
def test_from_cells_well_formed_and_merges_duplicates(cells):
    g = from_cells(list(cells) + list(cells))
    assert g.vertex_count == len(cells)
    assert_well_formed(g)
    for u, v in g.edges():
        (x1, y1), (x2, y2) = g.layout[u], g.layout[v]
        assert abs(x1 - x2) + abs(y1 - y2) == 1


@given(st.integers(1, 5), st.integers(1, 5))
def test_rooms_and_cross_formula(s, arm):
    assert build_cross(s, arm).vertex_count == s * s + 4 * s * arm
    w = max(1, s // 2)
    assert build_rooms(s, w, arm).vertex_count == 6 * s * s + 7 * w * arm


def test_graph_rejects_asymmetric_and_loops():
    with pytest.raises(ValueError):
        Graph(2, ((1,), ()))
    with pytest.raises(ValueError):
        Graph(1, ((0,),))
    with pytest.raises(ValueError):
        from_edges(3, [(0, 1), (1, 0)])


def test_edge_slot_rejects_non_edge():
    g = build_path(3)
    with pytest.raises(KeyError):
        g.edge_slot(0, 2)


def test_load_path(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("3\n0 1\n1 2")
    g = load_graph(p)
    assert g.vertex_count == 3 and g.edges() == [(0, 1), (1, 2)]
    assert g.layout is None


def test_load_out_of_range_names_line(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("3\n0 5\n")
    with pytest.raises(GraphFormatError) as err:
        load_graph(p)
    assert err.value.lineno == 2 and "line 2" in str(err.value)


@pytest.mark.parametrize(
    "text,line",
    [("3\n0 1\n1 0\n", 3), ("3\n0 1\n0 1\n", 3), ("3\n# c\n0 x\n", 3), ("", 0), ("2 3\n", 1)],
)
def test_load_errors(tmp_path, text, line):
    p = tmp_path / "g.txt"
    p.write_text(text)
    with pytest.raises(GraphFormatError) as err:
        load_graph(p)
    assert err.value.lineno == line


def test_load_paw_fixture(tmp_path):
    p = tmp_path / "paw.txt"
    p.write_text("# four-vertex example\n4\n0 1\n0 2\n0 3\n1 3\nc 0 0 0\nc 1 1 0\nc 2 0 1\nc 3 1 1\n")
    g = load_graph(p)
    assert g.vertex_count == 4
    assert g == paw_graph()
    assert g.layout == paw_graph().layout


def test_save_load_round_trip(tmp_path):
    g = build_rooms(3, 1, 2)
    p = tmp_path / "rooms.txt"
    save_graph(g, p)
    h = load_graph(p)
    assert h == g and h.layout == g.layout


def test_dict_round_trip():
    g = build_cross(2, 3)
    assert Graph.from_dict(g.to_dict()) == g


def test_graph_is_immutable():
    g = build_path(3)
    with pytest.raises(Exception):
        g.vertex_count = 4
