// Regenerates src/unicode_tables.inc: codepoint ranges for the \p{L} and \p{N}
// classes used by the byte-level BPE pre-tokenizer.
//   node tools/scripts/gen_unicode_tables.js > src/unicode_tables.inc
function ranges(re) {
  const out = [];
  let start = -1;
  for (let cp = 0; cp <= 0x110000; cp++) {
    const hit = cp < 0x110000 && !(cp >= 0xd800 && cp <= 0xdfff) && re.test(String.fromCodePoint(cp));
    if (hit && start < 0) start = cp;
    if (!hit && start >= 0) { out.push([start, cp - 1]); start = -1; }
  }
  return out;
}
function emit(name, rs) {
  const hex = (v) => '0x' + v.toString(16).toUpperCase();
  let s = `inline constexpr CodepointRange ${name}[] = {\n`;
  for (let i = 0; i < rs.length; i += 4) {
    s += '    ' + rs.slice(i, i + 4).map(([a, b]) => `{${hex(a)}, ${hex(b)}}`).join(', ') + ',\n';
  }
  return s + '};\n';
}
console.log(`// Generated by tools/scripts/gen_unicode_tables.js (Unicode ${process.versions.unicode}). Do not edit.`);
console.log(emit('kLetterRanges', ranges(/^\p{L}$/u)));
console.log(emit('kNumberRanges', ranges(/^\p{N}$/u)));
