// Copyright 2026 The diffhist Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Cross-checks tests/data/bpe_reference.json against the gpt-3-encoder npm
// package: node tools/scripts/check_bpe_reference.js <path/to/gpt-3-encoder>
const path = require('path');
const fs = require('fs');
const { encode } = require(path.resolve(process.argv[2]));
const ref = JSON.parse(fs.readFileSync(path.join(__dirname, '../../tests/data/bpe_reference.json')));
let bad = 0;
for (const r of ref) {
  const ids = encode(r.text);
  if (JSON.stringify(ids) !== JSON.stringify(r.ids)) {
    bad++;
    console.log('MISMATCH', JSON.stringify(r.text), ids.length, r.count);
  }
}
console.log(`${ref.length - bad}/${ref.length} agree`);
process.exit(bad ? 1 : 0);
