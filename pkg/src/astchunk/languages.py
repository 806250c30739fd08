"""Language registry and extension-based detection.

Four languages ship with the package: Python, Java, C#, and TypeScript.
Additional languages can be registered at runtime; parsing them requires a
grammar compiled into the bundled runtime, so registration of a new name is
mostly useful for custom extension mapping and breadcrumb kind sets in
downstream tooling.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import UnregisteredLanguage


@dataclass(frozen=True, order=True)
class LanguageId:
    """Opaque identity of a registered language (compares by name)."""

    name: str

    def __str__(self) -> str:  # pragma: no cover - trivial
        return self.name


@dataclass(frozen=True)
class LanguageInfo:
    """Everything the toolkit knows about one language."""

    language: LanguageId
    extensions: frozenset[str]
    #: Symbol under which the grammar is registered in the native runtime.
    grammar_symbol: str
    #: Node kinds treated as class-like for breadcrumb extraction.
    class_kinds: frozenset[str] = field(default_factory=frozenset)
    #: Node kinds treated as function-like for breadcrumb extraction.
    function_kinds: frozenset[str] = field(default_factory=frozenset)


PYTHON = LanguageId("python")
JAVA = LanguageId("java")
CSHARP = LanguageId("csharp")
TYPESCRIPT = LanguageId("typescript")

_REGISTRY: dict[str, LanguageInfo] = {}
_EXTENSIONS: dict[str, LanguageId] = {}


def register_language(info: LanguageInfo) -> None:
    """Add or replace a language; its extensions claim detection slots."""
    _REGISTRY[info.language.name] = info
    for ext in info.extensions:
        _EXTENSIONS[ext.lower()] = info.language


def get_language(name: str) -> LanguageId:
    """Look up a registered language by name."""
    try:
        return _REGISTRY[name].language
    except KeyError:
        raise UnregisteredLanguage(name) from None


def language_info(language: LanguageId | str) -> LanguageInfo:
    """Return the registry entry for a language (by id or name)."""
    name = language.name if isinstance(language, LanguageId) else language
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnregisteredLanguage(name) from None


def registered_languages() -> tuple[LanguageId, ...]:
    """All registered languages, in registration order."""
    return tuple(info.language for info in _REGISTRY.values())


def detect_language(path: str | os.PathLike[str]) -> LanguageId | None:
    """Map a file path to a language via its extension (case-insensitive).

    Returns ``None`` for unmapped extensions; absence is a value here, not
    an error, so callers can count skipped files.
    """
    _, ext = os.path.splitext(os.fspath(path))
    if not ext:
        return None
    return _EXTENSIONS.get(ext.lower())


register_language(
    LanguageInfo(
        language=PYTHON,
        extensions=frozenset({".py"}),
        grammar_symbol="python",
        class_kinds=frozenset({"class_definition"}),
        function_kinds=frozenset({"function_definition"}),
    )
)
register_language(
    LanguageInfo(
        language=JAVA,
        extensions=frozenset({".java"}),
        grammar_symbol="java",
        class_kinds=frozenset({"class_declaration", "interface_declaration"}),
        function_kinds=frozenset({"method_declaration", "constructor_declaration"}),
    )
)
register_language(
    LanguageInfo(
        language=CSHARP,
        extensions=frozenset({".cs"}),
        grammar_symbol="c_sharp",
        class_kinds=frozenset(
            {"class_declaration", "struct_declaration", "interface_declaration"}
        ),
        function_kinds=frozenset({"method_declaration", "constructor_declaration"}),
    )
)
register_language(
    LanguageInfo(
        language=TYPESCRIPT,
        # .tsx is parsed with the plain TypeScript grammar; JSX fragments may
        # surface as error-recovery nodes, which chunking treats like any
        # other node, so byte-exact reconstruction still holds.
        extensions=frozenset({".ts", ".tsx"}),
        grammar_symbol="typescript",
        class_kinds=frozenset({"class_declaration"}),
        # Arrow functions bound to a declarator are also treated as
        # function-like during breadcrumb extraction; the name comes from the
        # enclosing variable_declarator, so they are special-cased in the
        # extractor rather than listed here.
        function_kinds=frozenset({"function_declaration", "method_definition"}),
    )
)
