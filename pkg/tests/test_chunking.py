"""Split-then-merge chunking: grouping, budgets, gaps, and breadcrumbs."""

import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from astchunk import (
    CSHARP,
    JAVA,
    PYTHON,
    TYPESCRIPT,
    Breadcrumb,
    Chunk,
    ChunkingConfig,
    SourceDocument,
    attach_gaps,
    chunk_code,
    chunk_document,
    chunk_file,
    chunk_nodes,
    extract_breadcrumb,
    fixed_size_line_chunker,
    parse,
    split_oversized_leaf,
)

BOM = b"\xef\xbb\xbf"


def make_func(name: str, target_nonws: int) -> str:
    """Python function whose non-whitespace size is exactly ``target_nonws``.

    Layout: ``def NAME():`` then one string assignment, so the overhead is
    10 + len(name) non-whitespace bytes and the literal supplies the rest.
    """
    filler = target_nonws - 10 - len(name)
    assert filler >= 0
    return f'def {name}():\n    s = "{"A" * filler}"\n'


def pydoc(text: str | bytes) -> SourceDocument:
    return SourceDocument.from_text(text, PYTHON)


def reconstruct(doc: SourceDocument, chunks) -> bytes:
    return b"".join(doc.data[start:end] for start, end in (c.span for c in chunks))


def assert_tiling(doc: SourceDocument, chunks) -> None:
    assert reconstruct(doc, chunks) == doc.data
    previous = 0
    for chunk in chunks:
        assert chunk.span[0] == previous
        assert chunk.span[0] < chunk.span[1]
        previous = chunk.span[1]
    if chunks:
        assert previous == len(doc.data)


# --- helper sanity ----------------------------------------------------------


def test_make_func_hits_its_target_exactly():
    for name, target in [("f1", 900), ("alpha", 300), ("g", 42)]:
        doc = pydoc(make_func(name, target))
        assert doc.non_ws_size() == target


# --- grouping ---------------------------------------------------------------


def test_greedy_sibling_merge_packs_up_to_budget():
    source = (
        make_func("f1", 900)
        + "\n\n"
        + make_func("f2", 900)
        + "\n\n"
        + make_func("f3", 900)
        + "\n\n"
        + make_func("f4", 300)
    )
    doc = pydoc(source)
    chunks = chunk_document(doc, ChunkingConfig(max_chunk_size=2000))
    assert [c.size for c in chunks] == [1800, 1200]
    assert [len(c.node_spans) for c in chunks] == [2, 2]
    assert chunks[0].breadcrumb.function_path == ("f1",)
    assert chunks[1].breadcrumb.function_path == ("f3",)
    assert_tiling(doc, chunks)


def test_node_over_budget_starts_the_next_group_instead_of_vanishing():
    # f2 overflows the running group; it must begin the following group.
    source = make_func("f1", 1500) + "\n" + make_func("f2", 1000) + "\n" + make_func("f3", 900)
    doc = pydoc(source)
    chunks = chunk_document(doc, ChunkingConfig(max_chunk_size=2000))
    assert [c.size for c in chunks] == [1500, 1900]
    assert chunks[1].breadcrumb.function_path == ("f2",)
    assert_tiling(doc, chunks)


def test_merge_disabled_gives_one_chunk_per_top_node():
    source = (
        make_func("f1", 900)
        + "\n\n"
        + make_func("f2", 900)
        + "\n\n"
        + make_func("f3", 900)
        + "\n\n"
        + make_func("f4", 300)
    )
    doc = pydoc(source)
    merged = chunk_document(doc, ChunkingConfig(max_chunk_size=2000))
    split_only = chunk_document(
        doc, ChunkingConfig(max_chunk_size=2000, merge_enabled=False)
    )
    assert [c.size for c in split_only] == [900, 900, 900, 300]
    assert len(split_only) > len(merged)
    assert_tiling(doc, split_only)


def test_oversized_node_recurses_into_children_without_cross_level_merge():
    # One class far over budget: its methods are packed among themselves.
    body = "".join(
        f'    def m{i}(self):\n        s = "{"B" * 80}"\n' for i in range(6)
    )
    source = "class Big:\n" + body
    doc = pydoc(source)
    chunks = chunk_document(doc, ChunkingConfig(max_chunk_size=250))
    assert len(chunks) > 2
    assert all(c.size <= 250 for c in chunks)
    assert_tiling(doc, chunks)
    # every post-intro chunk sits inside the class
    for chunk in chunks[1:]:
        assert chunk.breadcrumb.class_path == ("Big",)


def test_whole_file_within_budget_is_a_single_chunk():
    doc = pydoc("x = 1\n")
    chunks = chunk_document(doc)
    assert len(chunks) == 1
    (chunk,) = chunks
    assert chunk.span == (0, 6)
    assert chunk.size == 3
    assert chunk.node_spans == ((0, 6),)
    assert chunk.index == 0
    assert chunk.breadcrumb == Breadcrumb("<memory>", (), ())


def test_empty_file_yields_no_chunks():
    assert chunk_document(pydoc(b"")) == []


def test_whitespace_only_file_is_one_zero_size_chunk():
    doc = pydoc(b"\n\n  \n")
    chunks = chunk_document(doc)
    assert len(chunks) == 1
    assert chunks[0].size == 0
    assert chunks[0].span == (0, 5)


def test_chunk_fields_are_consistent_with_document():
    source = make_func("f1", 700) + "\n" + make_func("f2", 800) + "\n" + make_func("f3", 900)
    doc = pydoc(source)
    for chunk in chunk_document(doc, ChunkingConfig(max_chunk_size=1000)):
        assert chunk.size == doc.non_ws_size(*chunk.span)
        assert chunk.line_span == doc.line_span_of(*chunk.span)
        assert chunk.doc_path == doc.path
    chunks = chunk_document(doc, ChunkingConfig(max_chunk_size=1000))
    assert [c.index for c in chunks] == list(range(len(chunks)))


# --- oversize policies ------------------------------------------------------


def test_line_split_cuts_an_over_budget_comment():
    doc = pydoc("x = 1\n# " + "B" * 3200 + "\n")
    chunks = chunk_document(doc, ChunkingConfig(max_chunk_size=2000))
    assert [c.size for c in chunks] == [3, 2000, 1201]
    assert_tiling(doc, chunks)


def test_emit_oversized_passes_the_leaf_through():
    doc = pydoc("x = 1\n# " + "B" * 3200 + "\n")
    chunks = chunk_document(
        doc, ChunkingConfig(max_chunk_size=2000, oversize_policy="emit-oversized")
    )
    assert [c.size for c in chunks] == [3, 3201]
    assert_tiling(doc, chunks)


def test_bom_bytes_attach_to_the_first_chunk_within_budget():
    source = BOM + "".join(make_func(f"f{i}", 800) + "\n" for i in range(8)).encode()
    doc = pydoc(source)
    chunks = chunk_document(doc, ChunkingConfig(max_chunk_size=2000))
    assert [c.size for c in chunks] == [1603, 1600, 1600, 1600]
    assert all(c.size <= 2000 for c in chunks)
    assert_tiling(doc, chunks)


def test_bom_inflation_past_budget_is_repaired_under_line_split():
    # Group packs to exactly 1999; the 3 BOM bytes push the first chunk to
    # 2002, which the budget normalization pass re-splits.
    source = BOM + (
        make_func("f1", 999) + "\n" + make_func("f2", 1000) + "\n" + make_func("f3", 500)
    ).encode()
    doc = pydoc(source)
    chunks = chunk_document(doc, ChunkingConfig(max_chunk_size=2000))
    assert all(c.size <= 2000 for c in chunks)
    assert_tiling(doc, chunks)


# --- split_oversized_leaf ---------------------------------------------------


def test_split_packs_whole_lines_greedily():
    text = "".join("A" * 600 + "\n" for _ in range(5))
    doc = pydoc(text)
    pieces = split_oversized_leaf(doc, (0, len(doc.data)), 2000)
    assert pieces == [(0, 1803), (1803, 3005)]
    assert [doc.non_ws_size(*p) for p in pieces] == [1800, 1200]


def test_split_cuts_inside_a_single_giant_line():
    doc = pydoc("A" * 3000 + "\n")
    pieces = split_oversized_leaf(doc, (0, 3001), 2000)
    assert pieces == [(0, 2000), (2000, 3001)]
    assert [doc.non_ws_size(*p) for p in pieces] == [2000, 1000]


def test_split_absorbs_leading_whitespace_lines_into_the_first_cut():
    doc = pydoc("\n\n" + "A" * 2500 + "\n")
    pieces = split_oversized_leaf(doc, (0, len(doc.data)), 1000)
    assert pieces == [(0, 1002), (1002, 2002), (2002, 2503)]
    assert [doc.non_ws_size(*p) for p in pieces] == [1000, 1000, 500]


def test_split_returns_span_unchanged_when_within_budget():
    doc = pydoc("small\n")
    assert split_oversized_leaf(doc, (0, 6), 100) == [(0, 6)]


def test_split_rejects_nonpositive_budget():
    doc = pydoc("x\n")
    with pytest.raises(ValueError):
        split_oversized_leaf(doc, (0, 2), 0)


@settings(max_examples=60, deadline=None)
@given(
    st.text(
        alphabet=st.sampled_from(list("ab \nXY\t#")), min_size=1, max_size=400
    ),
    st.integers(1, 40),
)
def test_split_pieces_tile_and_respect_budget(text, budget):
    doc = pydoc(text)
    span = (0, len(doc.data))
    pieces = split_oversized_leaf(doc, span, budget)
    assert pieces[0][0] == span[0]
    assert pieces[-1][1] == span[1]
    for (s1, e1), (s2, e2) in zip(pieces, pieces[1:]):
        assert e1 == s2
    assert all(doc.non_ws_size(s, e) <= budget for s, e in pieces)


# --- attach_gaps ------------------------------------------------------------


def test_gaps_attach_to_the_following_chunk():
    doc = pydoc(b"0123456789")
    chunks = attach_gaps([[(2, 4)], [(6, 8)]], doc)
    assert [c.span for c in chunks] == [(0, 4), (4, 10)]
    assert chunks[0].breadcrumb == Breadcrumb(doc.path)


def test_trailing_bytes_extend_the_last_chunk():
    doc = pydoc(b"0123456789")
    chunks = attach_gaps([[(0, 3)]], doc)
    assert [c.span for c in chunks] == [(0, 10)]


def test_zero_width_groups_are_dropped():
    doc = pydoc(b"0123456789")
    chunks = attach_gaps([[(0, 4)], [(4, 4)], [(4, 9)]], doc)
    assert [c.span for c in chunks] == [(0, 4), (4, 10)]


def test_out_of_order_groups_raise():
    doc = pydoc(b"0123456789")
    with pytest.raises(ValueError):
        attach_gaps([[(5, 9)], [(0, 3)]], doc)


# --- chunk_nodes ------------------------------------------------------------


def test_chunk_nodes_groups_sibling_views():
    source = (
        make_func("f1", 900)
        + "\n\n"
        + make_func("f2", 900)
        + "\n\n"
        + make_func("f3", 900)
        + "\n\n"
        + make_func("f4", 300)
    )
    doc = pydoc(source)
    root = parse(doc)
    groups = chunk_nodes(root.children, ChunkingConfig(max_chunk_size=2000))
    names = [
        [node.name_child.text.decode() for node in group] for group in groups
    ]
    assert names == [["f1", "f2"], ["f3", "f4"]]


def test_chunk_nodes_returns_oversized_leaf_as_singleton_group():
    doc = pydoc("x = 1\n# " + "B" * 50 + "\n")
    root = parse(doc)
    groups = chunk_nodes(root.children, ChunkingConfig(max_chunk_size=10))
    assert groups[-1][0].kind == "comment"
    assert len(groups[-1]) == 1


def test_chunk_nodes_empty_input():
    assert chunk_nodes([]) == []


# --- breadcrumbs ------------------------------------------------------------


def test_breadcrumbs_name_class_and_method_chunks():
    source = (
        "class Outer:\n"
        f'    def alpha(self):\n        value = "{"A" * 60}"\n        return value\n'
        "\n"
        f'    def beta(self):\n        value = "{"B" * 60}"\n        return value\n'
    )
    doc = pydoc(source)
    chunks = chunk_document(doc, ChunkingConfig(max_chunk_size=100))
    crumbs = [(c.breadcrumb.class_path, c.breadcrumb.function_path) for c in chunks]
    assert crumbs == [
        (("Outer",), ()),
        (("Outer",), ("alpha",)),
        (("Outer",), ("beta",)),
    ]


def test_whole_file_single_function_is_named():
    doc = pydoc("def f():\n    return 1")  # no trailing newline
    chunks = chunk_document(doc)
    assert chunks[0].breadcrumb.function_path == ("f",)


def test_whole_file_with_many_statements_has_empty_paths():
    doc = pydoc("x = 1\n\ndef f():\n    return x\n")
    chunks = chunk_document(doc)
    assert len(chunks) == 1
    assert chunks[0].breadcrumb.class_path == ()
    assert chunks[0].breadcrumb.function_path == ()


def _crafted_chunk(doc, node):
    return Chunk(
        doc_path=doc.path,
        span=node.span,
        node_spans=(node.span,),
        size=node.size(),
        line_span=doc.line_span_of(*node.span),
        breadcrumb=Breadcrumb(doc.path),
        index=0,
    )


def test_arrow_function_is_named_by_its_declarator():
    source = (
        "export const scale = (v: number): number => {\n"
        "  return v * 10;\n"
        "};\n"
    )
    doc = SourceDocument.from_text(source, TYPESCRIPT, path="scale.ts")
    root = parse(doc)
    arrow = next(n for n in root.walk() if n.kind == "arrow_function")
    crumb = extract_breadcrumb(_crafted_chunk(doc, arrow), root)
    assert crumb.function_path == ("scale",)
    assert crumb.class_path == ()


def test_typescript_method_and_class_names():
    source = (
        "class Grid {\n"
        "  resize(width: number): void {\n"
        "    this.w = width;\n"
        "  }\n"
        "}\n"
    )
    doc = SourceDocument.from_text(source, TYPESCRIPT, path="grid.ts")
    root = parse(doc)
    method = next(n for n in root.walk() if n.kind == "method_definition")
    crumb = extract_breadcrumb(_crafted_chunk(doc, method), root)
    assert crumb.class_path == ("Grid",)
    assert crumb.function_path == ("resize",)


def test_java_method_breadcrumb():
    source = "class Beta {\n    int twice(int x) {\n        return x * 2;\n    }\n}\n"
    doc = SourceDocument.from_text(source, JAVA, path="Beta.java")
    root = parse(doc)
    method = next(n for n in root.walk() if n.kind == "method_declaration")
    crumb = extract_breadcrumb(_crafted_chunk(doc, method), root)
    assert crumb.class_path == ("Beta",)
    assert crumb.function_path == ("twice",)


def test_csharp_struct_counts_as_class_like():
    source = (
        "struct Point {\n"
        "    public int Dot(int x) {\n"
        "        return x * 3;\n"
        "    }\n"
        "}\n"
    )
    doc = SourceDocument.from_text(source, CSHARP, path="point.cs")
    root = parse(doc)
    method = next(n for n in root.walk() if n.kind == "method_declaration")
    crumb = extract_breadcrumb(_crafted_chunk(doc, method), root)
    assert crumb.class_path == ("Point",)
    assert crumb.function_path == ("Dot",)


def test_kind_map_override_and_anonymous_names():
    # Treat python "block" nodes as function-like: blocks have no name field,
    # so the breadcrumb records an anonymous entry.
    doc = pydoc("def alpha():\n    return 1\n")
    root = parse(doc)
    ret = next(n for n in root.walk() if n.kind == "return_statement")
    config = ChunkingConfig(language_kind_map={"python": ((), ("block",))})
    crumb = extract_breadcrumb(_crafted_chunk(doc, ret), root, config)
    assert crumb.function_path == ("",)


def test_nested_functions_list_outermost_first():
    source = "def outer():\n    def inner():\n        return 1\n    return inner\n"
    doc = pydoc(source)
    root = parse(doc)
    ret = next(n for n in root.walk() if n.text == b"return 1")
    crumb = extract_breadcrumb(_crafted_chunk(doc, ret), root)
    assert crumb.function_path == ("outer", "inner")


# --- configuration ----------------------------------------------------------


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        ChunkingConfig(max_chunk_size=0)
    with pytest.raises(ValueError):
        ChunkingConfig(oversize_policy="shrug")


def test_config_is_frozen_and_freezes_kind_map():
    config = ChunkingConfig(language_kind_map={"python": (["class_definition"], ["function_definition"])})
    with pytest.raises(dataclasses.FrozenInstanceError):
        config.max_chunk_size = 5
    classes, functions = config.language_kind_map["python"]
    assert isinstance(classes, frozenset) and isinstance(functions, frozenset)


# --- fixed-line baseline ----------------------------------------------------


def test_fixed_line_chunker_groups_lines():
    doc = pydoc("".join(f"line{i}\n" for i in range(10)))
    chunks = fixed_size_line_chunker(doc, 4)
    assert [c.line_span for c in chunks] == [(1, 4), (5, 8), (9, 10)]
    assert all(c.node_spans == () for c in chunks)
    assert all(c.breadcrumb == Breadcrumb(doc.path) for c in chunks)
    assert_tiling(doc, chunks)


def test_fixed_line_chunker_handles_missing_trailing_newline():
    doc = pydoc("a\nb\nc")
    chunks = fixed_size_line_chunker(doc, 2)
    assert [c.line_span for c in chunks] == [(1, 2), (3, 3)]
    assert_tiling(doc, chunks)


def test_fixed_line_chunker_crlf_counts_lines_by_lf():
    doc = pydoc("a\r\nb\r\nc\r\nd\r\n")
    chunks = fixed_size_line_chunker(doc, 2)
    assert [c.line_span for c in chunks] == [(1, 2), (3, 4)]
    assert_tiling(doc, chunks)


def test_fixed_line_chunker_empty_and_validation():
    assert fixed_size_line_chunker(pydoc(b""), 5) == []
    with pytest.raises(ValueError):
        fixed_size_line_chunker(pydoc(b"x\n"), 0)


# --- convenience entry points ------------------------------------------------


def test_chunk_code_accepts_language_names():
    chunks = chunk_code("x = 1\n", "python")
    assert chunks[0].size == 3


def test_chunk_file_reads_and_detects(tmp_path):
    path = tmp_path / "thing.java"
    path.write_text("class A { }\n")
    chunks = chunk_file(str(path))
    assert len(chunks) == 1
    assert chunks[0].doc_path.endswith("thing.java")


# --- whole-pipeline properties ----------------------------------------------

_SNIPPETS = [
    "x = 1\n",
    "# short comment\n",
    "# " + "L" * 150 + "\n",
    'NAME = "' + "v" * 80 + '"\n',
    "def fn():\n    return 42\n",
    "def gn(a, b):\n    c = a + b\n    return c\n",
    "class K:\n    def m(self):\n        return 7\n",
    "\n",
    "   \n",
    "if x:\n    y = 2\nelse:\n    y = 3\n",
    "é = 'π🚀'\n",
    "while x:\n    x -= 1\n",
]


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.sampled_from(_SNIPPETS), min_size=0, max_size=12),
    st.integers(1, 300),
    st.booleans(),
    st.sampled_from(["line-split", "emit-oversized"]),
    st.booleans(),
)
def test_chunking_invariants_on_generated_sources(parts, budget, merge, policy, add_bom):
    data = "".join(parts).encode("utf-8")
    if add_bom:
        data = BOM + data
    doc = pydoc(data)
    config = ChunkingConfig(
        max_chunk_size=budget, merge_enabled=merge, oversize_policy=policy
    )
    chunks = chunk_document(doc, config)
    assert_tiling(doc, chunks)
    assert [c.index for c in chunks] == list(range(len(chunks)))
    for chunk in chunks:
        assert chunk.size == doc.non_ws_size(*chunk.span)
    if policy == "line-split":
        assert all(c.size <= budget for c in chunks)


@settings(max_examples=40, deadline=None)
@given(st.binary(max_size=300))
def test_reconstruction_holds_for_arbitrary_bytes(data):
    doc = pydoc(data)
    chunks = chunk_document(doc, ChunkingConfig(max_chunk_size=50))
    assert reconstruct(doc, chunks) == doc.data
