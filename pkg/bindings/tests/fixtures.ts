import { mkdirSync, mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

function pythonModule(): Buffer {
  const parts: string[] = ['"""Fixture with café ☃ unicode and several functions."""\n\n'];
  for (let i = 0; i < 12; i++) {
    parts.push(
      `def handler_${i}(payload):\n` +
        `    checked = validate_${i}(payload)\n` +
        `    result = {"index": ${i}, "ok": checked, "label": "étape ${i}"}\n` +
        `    return result\n\n\n`,
    );
  }
  return Buffer.from(parts.join(''), 'utf8');
}

function javaClass(): Buffer {
  const methods: string[] = [];
  for (let i = 0; i < 10; i++) {
    methods.push(
      `    public int compute${i}(int value) {\n` +
        `        int shifted = value << ${i % 7};\n` +
        `        return shifted + ${i} * accumulator;\n` +
        `    }\n\n`,
    );
  }
  return Buffer.from(
    `package fixtures;\n\npublic class Nested {\n    private int accumulator = 41;\n\n${methods.join('')}}\n`,
    'utf8',
  );
}

function csharpCrlf(): Buffer {
  const lines = [
    'namespace Fixtures',
    '{',
    '    public struct Point',
    '    {',
    '        public int X;',
    '        public int Y;',
    '',
    '        public int Dot(Point other)',
    '        {',
    '            return X * other.X + Y * other.Y;',
    '        }',
    '    }',
    '}',
  ];
  return Buffer.from(lines.join('\r\n') + '\r\n', 'utf8');
}

function brokenTypescript(): Buffer {
  return Buffer.from(
    'export function torn(a: number, b: {{{\n' +
      '  return a +\n' +
      '}\n\n' +
      'const dangling = (x: number) =>\n',
    'utf8',
  );
}

function tsxView(): Buffer {
  return Buffer.from(
    'export const View = ({ label }: { label: string }) => {\n' +
      '  return <div className="view">{label}</div>;\n' +
      '};\n',
    'utf8',
  );
}

function bomPython(): Buffer {
  return Buffer.concat([
    Buffer.from([0xef, 0xbb, 0xbf]),
    Buffer.from('marker = "bom"\n\n\ndef after_bom():\n    return marker\n', 'utf8'),
  ]);
}

function invalidUtf8Python(): Buffer {
  return Buffer.concat([
    Buffer.from('prefix = "', 'utf8'),
    Buffer.from([0xff, 0xfe, 0x80]),
    Buffer.from('"\n\n\ndef salvage():\n    return prefix\n', 'utf8'),
  ]);
}

/** Relative path -> content for every fixture file, supported or not. */
export const FIXTURE_FILES: Record<string, Buffer> = {
  'alpha.py': pythonModule(),
  'bom.py': bomPython(),
  'binary.py': invalidUtf8Python(),
  'broken.ts': brokenTypescript(),
  'crlf.cs': csharpCrlf(),
  'empty.py': Buffer.alloc(0),
  'notes.md': Buffer.from('# not a source file\n', 'utf8'),
  'pkg/nested.java': javaClass(),
  'pkg/view.tsx': tsxView(),
};

/** Fixture paths the engine chunks (everything but the markdown file). */
export const SUPPORTED_FIXTURES = Object.keys(FIXTURE_FILES)
  .filter((path) => !path.endsWith('.md'))
  .sort();

/** Write the fixture corpus into a fresh temp directory and return its root. */
export function writeFixtureCorpus(): string {
  const root = mkdtempSync(join(tmpdir(), 'astchunk-fixtures-'));
  for (const [relPath, content] of Object.entries(FIXTURE_FILES)) {
    const target = join(root, relPath);
    mkdirSync(join(target, '..'), { recursive: true });
    writeFileSync(target, content);
  }
  return root;
}
