describe('focus', () => {
  test.only('focused', () => {
    expect(true).toBe(true);
  });

  test('not focused', () => {
    throw new Error('should be skipped by .only');
  });

  test('also not focused', () => {});
});
