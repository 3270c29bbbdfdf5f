let count = 0;
module.exports = {
  increment: () => ++count,
  reset: () => { count = 0; },
  value: () => count,
};
