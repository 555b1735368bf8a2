//! Knot tables for the motorcycle-impact simulator.
//!
//! 101 equidistant knots over the unit interval; the simulator mean and
//! heteroscedastic noise standard deviation are piecewise-linear through
//! these values.

pub const MOTORCYCLE_MEAN: [f64; 101] = [
    0.5107, 0.5032, 0.4939, 0.4843, 0.4765, 0.4718, 0.4713, //
    0.4748, 0.4805, 0.4856, 0.4870, 0.4824, 0.4724, 0.4604, //
    0.4523, 0.4543, 0.4695, 0.4953, 0.5216, 0.5319, 0.5067, //
    0.4284, 0.2868, 0.0825, -0.1722, -0.4559, -0.7433, -1.0112, //
    -1.2435, -1.4339, -1.5851, -1.7049, -1.8015, -1.8788, -1.9333, //
    -1.9549, -1.9298, -1.8453, -1.6947, -1.4804, -1.2140, -0.9140, //
    -0.6013, -0.2950, -0.0080, 0.2536, 0.4900, 0.7046, 0.9006, //
    1.0778, 1.2317, 1.3542, 1.4362, 1.4710, 1.4573, 1.4012, //
    1.3147, 1.2139, 1.1143, 1.0277, 0.9589, 0.9056, 0.8605, //
    0.8146, 0.7605, 0.6959, 0.6241, 0.5533, 0.4935, 0.4538, //
    0.4395, 0.4501, 0.4795, 0.5173, 0.5507, 0.5678, 0.5600, //
    0.5241, 0.4632, 0.3869, 0.3092, 0.2456, 0.2098, 0.2103, //
    0.2482, 0.3164, 0.4015, 0.4868, 0.5568, 0.6006, 0.6147, //
    0.6033, 0.5769, 0.5487, 0.5311, 0.5324, 0.5549, 0.5950, //
    0.6441, 0.6919, 0.7285,
];

pub const MOTORCYCLE_STDDEV: [f64; 101] = [
    0.0477, 0.0400, 0.0463, 0.0514, 0.0529, 0.0502, 0.0438, //
    0.0366, 0.0330, 0.0328, 0.0327, 0.0318, 0.0315, 0.0331, //
    0.0363, 0.0433, 0.0560, 0.0702, 0.0780, 0.0733, 0.0615, //
    0.0799, 0.1468, 0.2393, 0.3408, 0.4382, 0.5196, 0.5747, //
    0.5959, 0.5800, 0.5295, 0.4540, 0.3712, 0.3067, 0.2822, //
    0.2915, 0.3074, 0.3135, 0.3156, 0.3360, 0.3899, 0.4658, //
    0.5385, 0.5873, 0.6045, 0.5975, 0.5860, 0.5901, 0.6133, //
    0.6377, 0.6380, 0.5951, 0.5022, 0.3669, 0.2227, 0.1980, //
    0.3483, 0.5319, 0.6956, 0.8186, 0.8886, 0.8987, 0.8470, //
    0.7373, 0.5789, 0.3876, 0.1898, 0.1067, 0.2472, 0.3799, //
    0.4620, 0.4847, 0.4492, 0.3643, 0.2463, 0.1253, 0.1068, //
    0.2006, 0.2817, 0.3230, 0.3195, 0.2769, 0.2092, 0.1377, //
    0.0911, 0.0856, 0.0919, 0.0940, 0.1116, 0.1568, 0.2117, //
    0.2548, 0.2730, 0.2623, 0.2282, 0.1857, 0.1545, 0.1445, //
    0.1445, 0.1437, 0.1542,
];
