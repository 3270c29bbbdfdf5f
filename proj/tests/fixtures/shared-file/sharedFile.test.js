const fs = require('fs');
const os = require('os');
const path = require('path');

const scratch = path.join(os.tmpdir(), `odre-shared-${process.pid}.txt`);

afterAll(() => {
  fs.rmSync(scratch, { force: true });
});

test('writes the scratch file', () => {
  fs.writeFileSync(scratch, 'written');
  expect(fs.readFileSync(scratch, 'utf8')).toBe('written');
});

test('starts without a scratch file', () => {
  expect(fs.existsSync(scratch)).toBe(false);
});
