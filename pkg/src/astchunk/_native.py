"""Loader for the bundled syntax-tree runtime.

The package ships the C sources of the tree-sitter runtime and four grammars
(see ``_vendor/grammars.tar.xz``) together with a small shim that exposes a
flat, Python-friendly C ABI.  On first use the sources are compiled into a
single shared library and cached under ``$ASTCHUNK_CACHE`` (default
``~/.cache/astchunk``), keyed by the archive digest so upgrades rebuild
automatically.  A prebuilt ``_tsgrammars.so`` placed next to this module is
picked up without compiling.

Everything in here is private plumbing; the public parsing API lives in
:mod:`astchunk.parsing`.
"""

from __future__ import annotations

import ctypes
import functools
import hashlib
import logging
import os
import shutil
import subprocess
import tarfile
import tempfile
from pathlib import Path

from .errors import NativeBuildError

log = logging.getLogger("astchunk")

_SONAME = "_tsgrammars.so"

#: Relative paths (inside the extracted archive) of every C translation unit.
_SOURCES = (
    "core/src/lib.c",
    "python/src/parser.c",
    "python/src/scanner.c",
    "java/src/parser.c",
    "c_sharp/src/parser.c",
    "c_sharp/src/scanner.c",
    "typescript/typescript/src/parser.c",
    "typescript/typescript/src/scanner.c",
    "shim.c",
)

_INCLUDE_DIRS = ("core/include", "core/src", "typescript/typescript/src")

# Flag bits set per node by the shim's flattener.
FLAG_NAMED = 1
FLAG_ERROR = 2
FLAG_MISSING = 4
FLAG_HAS_ERROR = 8


class FlatNode(ctypes.Structure):
    """One pre-order tree node as produced by ``azg_flatten``.

    ``subtree_end`` is the flat index one past the node's last descendant,
    so node ``i`` is a leaf iff ``subtree_end == i + 1`` and the children of
    ``i`` start at ``i + 1`` and hop via their own ``subtree_end``.
    ``name_child`` is the flat index of the child occupying the grammar's
    ``name`` field, or -1.
    """

    _fields_ = [
        ("start_byte", ctypes.c_uint32),
        ("end_byte", ctypes.c_uint32),
        ("subtree_end", ctypes.c_uint32),
        ("name_child", ctypes.c_int32),
        ("kind_id", ctypes.c_uint16),
        ("flags", ctypes.c_uint16),
    ]


def _cache_root() -> Path:
    override = os.environ.get("ASTCHUNK_CACHE")
    if override:
        return Path(override)
    return Path.home() / ".cache" / "astchunk"


def _vendor_archive() -> Path:
    return Path(__file__).parent / "_vendor" / "grammars.tar.xz"


def _find_compiler() -> str:
    for candidate in (os.environ.get("CC"), "gcc", "cc", "clang"):
        if candidate and shutil.which(candidate):
            return candidate
    raise NativeBuildError(
        "no C compiler found (tried $CC, gcc, cc, clang); "
        "install one or provide a prebuilt " + _SONAME
    )


def _safe_extract(archive: Path, dest: Path) -> None:
    with tarfile.open(archive, "r:xz") as tar:
        for member in tar.getmembers():
            target = dest / member.name
            if not target.resolve().is_relative_to(dest.resolve()):
                raise NativeBuildError(f"archive member escapes extraction dir: {member.name}")
        tar.extractall(dest)


def _compile(workdir: Path, output: Path) -> None:
    cc = _find_compiler()
    root = workdir / "grammars"
    cmd = [cc, "-O2", "-fPIC", "-shared"]
    for inc in _INCLUDE_DIRS:
        cmd += ["-I", str(root / inc)]
    cmd += [str(root / src) for src in _SOURCES]
    cmd += ["-o", str(output)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise NativeBuildError(
            f"compiling grammar library failed (exit {proc.returncode}):\n{proc.stderr[-4000:]}"
        )


def _ensure_library() -> Path:
    """Return the path of the shared library, building it if necessary."""
    prebuilt = Path(__file__).parent / _SONAME
    if prebuilt.exists():
        return prebuilt

    archive = _vendor_archive()
    if not archive.exists():
        raise NativeBuildError(f"vendored grammar archive missing: {archive}")
    digest = hashlib.sha256(archive.read_bytes()).hexdigest()[:16]
    cached = _cache_root() / digest / _SONAME
    if cached.exists():
        return cached

    cached.parent.mkdir(parents=True, exist_ok=True)
    log.info("compiling grammar library into %s (first use only)", cached)
    # Build in a scratch dir, then rename atomically: concurrent builders may
    # race but each produces an identical artifact, so last-write wins safely.
    with tempfile.TemporaryDirectory(dir=cached.parent) as tmp:
        tmpdir = Path(tmp)
        _safe_extract(archive, tmpdir)
        scratch_so = tmpdir / _SONAME
        _compile(tmpdir, scratch_so)
        os.replace(scratch_so, cached)
    return cached


@functools.lru_cache(maxsize=1)
def load() -> ctypes.CDLL:
    """Load (building on demand) the grammar library and declare its ABI."""
    path = _ensure_library()
    try:
        lib = ctypes.CDLL(str(path))
    except OSError as exc:
        raise NativeBuildError(f"cannot load {path}: {exc}") from exc

    lib.azg_language.argtypes = [ctypes.c_char_p]
    lib.azg_language.restype = ctypes.c_void_p
    lib.azg_parser_new.argtypes = [ctypes.c_void_p]
    lib.azg_parser_new.restype = ctypes.c_void_p
    lib.azg_parser_delete.argtypes = [ctypes.c_void_p]
    lib.azg_parser_delete.restype = None
    lib.azg_parse.argtypes = [ctypes.c_void_p, ctypes.c_char_p, ctypes.c_uint32]
    lib.azg_parse.restype = ctypes.c_void_p
    lib.azg_tree_delete.argtypes = [ctypes.c_void_p]
    lib.azg_tree_delete.restype = None
    lib.azg_symbol_count.argtypes = [ctypes.c_void_p]
    lib.azg_symbol_count.restype = ctypes.c_uint32
    lib.azg_symbol_name.argtypes = [ctypes.c_void_p, ctypes.c_uint16]
    lib.azg_symbol_name.restype = ctypes.c_char_p
    lib.azg_node_count.argtypes = [ctypes.c_void_p]
    lib.azg_node_count.restype = ctypes.c_uint64
    lib.azg_flatten.argtypes = [
        ctypes.c_void_p,
        ctypes.POINTER(FlatNode),
        ctypes.c_uint64,
    ]
    lib.azg_flatten.restype = ctypes.c_uint64
    return lib
