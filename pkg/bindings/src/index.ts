/**
 * Node bindings for the astchunk source-code chunker.
 *
 * The heavy lifting happens in the `astchunk` command-line engine; these
 * bindings shell out to it per call and parse its JSON-lines output, so every
 * entry point is reentrant and no parser state survives between calls.
 * Records are materialized eagerly as plain objects — callers own them.
 */

import { execFileSync } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { extname, join, sep } from 'node:path';

/** Containment context of a chunk: file plus enclosing class/function names. */
export interface Breadcrumb {
  file: string;
  classes: string[];
  functions: string[];
}

/**
 * One chunk record, field-for-field identical to a line of the engine's
 * JSON-lines output (including key order, which `JSON.stringify` preserves).
 */
export interface BoundChunk {
  id: string;
  path: string;
  language: string;
  start_byte: number;
  end_byte: number;
  start_line: number;
  end_line: number;
  size_non_ws: number;
  text: string;
  breadcrumb: Breadcrumb;
  strategy: string;
  config_digest: string;
  v: number;
}

/** Knobs forwarded to the engine; omitted fields use engine defaults. */
export interface ChunkOptions {
  /** Non-whitespace byte budget per chunk (default 2000). */
  maxChunkSize?: number;
  /** Greedy sibling merging; `false` selects split-only mode (default true). */
  merge?: boolean;
}

/** The language name is not one the engine recognizes. */
export class UnknownLanguageError extends Error {
  readonly language: string;

  constructor(language: string) {
    super(`unknown language: ${language}`);
    this.name = 'UnknownLanguageError';
    this.language = language;
  }
}

/** The file's extension maps to no supported language. */
export class UnsupportedFileError extends Error {
  readonly path: string;

  constructor(path: string) {
    super(`no supported language for file: ${path}`);
    this.name = 'UnsupportedFileError';
    this.path = path;
  }
}

/** The file could not be read (missing, a directory, permissions, ...). */
export class FileAccessError extends Error {
  readonly path: string;

  constructor(path: string, cause: unknown) {
    super(`cannot read file: ${path}`, { cause });
    this.name = 'FileAccessError';
    this.path = path;
  }
}

/** The engine process failed to start or exited nonzero. */
export class EngineError extends Error {
  readonly stderr: string;

  constructor(message: string, stderr = '', cause?: unknown) {
    super(stderr ? `${message}\n${stderr.trimEnd()}` : message, { cause });
    this.name = 'EngineError';
    this.stderr = stderr;
  }
}

// Languages the bundled engine parses, and the extension used to hand
// in-memory snippets to it.  File-extension detection (chunkFile) accepts
// the wider set below, case-insensitively, mirroring the engine's walker.
const SNIPPET_EXTENSIONS: Record<string, string> = {
  python: '.py',
  java: '.java',
  csharp: '.cs',
  typescript: '.ts',
};

const FILE_EXTENSIONS: Record<string, string> = {
  '.py': 'python',
  '.java': 'java',
  '.cs': 'csharp',
  '.ts': 'typescript',
  '.tsx': 'typescript',
};

/** Language names `chunkCode` accepts. */
export function supportedLanguages(): string[] {
  return Object.keys(SNIPPET_EXTENSIONS);
}

/**
 * Serialize records exactly as the engine writes them: one compact JSON
 * object per line, unescaped non-ASCII, trailing newline on every line.
 */
export function toJsonLines(records: BoundChunk[]): string {
  return records.map((record) => JSON.stringify(record) + '\n').join('');
}

/**
 * Copy `records`, pointing every path-bearing field (`path`, `id`,
 * `breadcrumb.file`) at `path` instead.  Chunk indexes are taken from array
 * position, so the records must be one file's chunks in emission order.
 */
export function rebaseRecords(records: BoundChunk[], path: string): BoundChunk[] {
  return records.map((record, index) => ({
    ...record,
    id: `${path}:${index}`,
    path,
    breadcrumb: { ...record.breadcrumb, file: path },
  }));
}

function engineArgs(root: string, options: ChunkOptions): string[] {
  const args = ['chunk', root, '--strategy', 'cast', '--jobs', '1'];
  if (options.maxChunkSize !== undefined) {
    if (!Number.isInteger(options.maxChunkSize) || options.maxChunkSize <= 0) {
      throw new RangeError(
        `maxChunkSize must be a positive integer, got ${options.maxChunkSize}`,
      );
    }
    args.push('--max-chunk-size', String(options.maxChunkSize));
  }
  if (options.merge !== undefined) {
    args.push(options.merge ? '--merge' : '--no-merge');
  }
  return args;
}

function runEngine(root: string, options: ChunkOptions): BoundChunk[] {
  const bin = process.env.ASTCHUNK_BIN ?? 'astchunk';
  const args = engineArgs(root, options);
  let stdout: string;
  try {
    stdout = execFileSync(bin, args, {
      encoding: 'utf8',
      maxBuffer: 512 * 1024 * 1024,
      stdio: ['ignore', 'pipe', 'pipe'],
    });
  } catch (err) {
    const failure = err as NodeJS.ErrnoException & { stderr?: string | Buffer };
    if (failure.code === 'ENOENT') {
      throw new EngineError(
        `engine executable not found: ${bin} (set ASTCHUNK_BIN to its path)`,
        '',
        err,
      );
    }
    const stderr =
      typeof failure.stderr === 'string'
        ? failure.stderr
        : (failure.stderr?.toString('utf8') ?? '');
    throw new EngineError(`engine invocation failed: ${bin}`, stderr, err);
  }
  return stdout
    .split('\n')
    .filter((line) => line.length > 0)
    .map((line) => JSON.parse(line) as BoundChunk);
}

function chunkInTempDir(
  name: string,
  data: string | Buffer,
  options: ChunkOptions,
): BoundChunk[] {
  const dir = mkdtempSync(join(tmpdir(), 'astchunk-'));
  try {
    writeFileSync(join(dir, name), data);
    return runEngine(dir, options);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/**
 * Chunk an in-memory snippet (encoded as UTF-8) written in `language`.
 *
 * Returned records are exactly what the engine produces for a synthetic
 * document named `<memory>`.  Throws {@link UnknownLanguageError} for a
 * language name the engine does not ship a grammar for.
 */
export function chunkCode(
  text: string,
  language: string,
  options: ChunkOptions = {},
): BoundChunk[] {
  const ext = SNIPPET_EXTENSIONS[language];
  if (ext === undefined) {
    throw new UnknownLanguageError(language);
  }
  const records = chunkInTempDir(`snippet${ext}`, Buffer.from(text, 'utf8'), options);
  return rebaseRecords(records, '<memory>');
}

/**
 * Chunk a file on disk, auto-detecting its language from the extension.
 *
 * The file's bytes are passed to the engine untouched (BOMs, CRLF line
 * endings, and invalid UTF-8 included), and records carry the path as given.
 * Throws {@link FileAccessError} when the file cannot be read and
 * {@link UnsupportedFileError} when no language claims its extension.
 */
export function chunkFile(path: string, options: ChunkOptions = {}): BoundChunk[] {
  let data: Buffer;
  try {
    data = readFileSync(path);
  } catch (err) {
    throw new FileAccessError(path, err);
  }
  const ext = extname(path).toLowerCase();
  const language = FILE_EXTENSIONS[ext];
  if (language === undefined) {
    throw new UnsupportedFileError(path);
  }
  const records = chunkInTempDir(`source${ext}`, data, options);
  return rebaseRecords(records, path.split(sep).join('/'));
}
