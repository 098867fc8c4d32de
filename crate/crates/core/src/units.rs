//! SI constants (CODATA 2018 exact values where defined).

pub const C_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const K_B: f64 = 1.380_649e-23;
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// One debye in C·m.
pub const DEBYE: f64 = 3.335_640_952e-30;
pub const MICRON: f64 = 1e-6;
