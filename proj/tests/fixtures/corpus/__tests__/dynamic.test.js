const prefix = 'dyn';
const cases = ['alpha', 'beta'];

test(prefix + ' concatenated', () => {});

test(`${prefix} template`, () => {});

for (const name of cases) {
  test(`loop ${name}`, () => {
    expect(cases).toContain(name);
  });
}

describe(`${prefix} block`, () => {
  test('static inside dynamic', () => {});
  test(String(42), () => {});
});
