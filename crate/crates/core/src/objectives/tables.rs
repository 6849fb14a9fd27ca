//! Constant tables for the Shekel, Hartman, and Hougen–Watson objectives.
//!
//! Shekel and Hartman constants follow the standard Dixon–Szegő tables; the
//! Hougen–Watson reaction-rate data is the classical 13-observation kinetics
//! dataset from the nonlinear-regression literature. Unit tests pin row sums
//! so transcription drift fails loudly.

/// Shekel family: row `i` of `A` is the pole location `a_i`; `C[i]` is the
/// softening constant `c_i`. The m-term variants use the first `m` rows.
pub const SHEKEL_A: [[f64; 4]; 10] = [
    [4.0, 4.0, 4.0, 4.0],
    [1.0, 1.0, 1.0, 1.0],
    [8.0, 8.0, 8.0, 8.0],
    [6.0, 6.0, 6.0, 6.0],
    [3.0, 7.0, 3.0, 7.0],
    [2.0, 9.0, 2.0, 9.0],
    [5.0, 5.0, 3.0, 3.0],
    [8.0, 1.0, 8.0, 1.0],
    [6.0, 2.0, 6.0, 2.0],
    [7.0, 3.6, 7.0, 3.6],
];

pub const SHEKEL_C: [f64; 10] = [0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5];

/// 6-dimensional Hartman function: outer weights, exponent matrix, offsets.
pub const HARTMAN6_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

pub const HARTMAN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];

pub const HARTMAN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Hougen–Watson kinetics observations: `(x1, x2, x3, observed rate)`.
pub const HOUGEN_DATA: [[f64; 4]; 13] = [
    [470.0, 300.0, 10.0, 8.55],
    [285.0, 80.0, 10.0, 3.79],
    [470.0, 300.0, 120.0, 4.82],
    [470.0, 80.0, 120.0, 0.02],
    [470.0, 80.0, 10.0, 2.75],
    [100.0, 190.0, 10.0, 14.39],
    [100.0, 80.0, 65.0, 2.54],
    [470.0, 190.0, 65.0, 4.35],
    [100.0, 300.0, 54.0, 13.00],
    [100.0, 300.0, 120.0, 8.50],
    [100.0, 80.0, 120.0, 0.05],
    [285.0, 300.0, 10.0, 11.32],
    [285.0, 190.0, 120.0, 3.13],
];
