const os = require('os');
const path = require('path');

module.exports = path.join(os.tmpdir(), `odre-suite-state-${process.pid}.json`);
