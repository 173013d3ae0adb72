//! Operation counters for complexity measurements.
//!
//! Counters are incremented by the instrumented (`*_counted`) entry points of
//! the estimator and ELM paths; the uninstrumented paths carry no overhead.
//! Counts reflect operations actually executed, so iterative kernels (the
//! Jacobi SVD) contribute their true, data-dependent cost.

/// Per-class operation counters. Monotone non-decreasing within a region.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FlopCounter {
    pub complex_mul: u64,
    pub complex_add: u64,
    pub complex_div: u64,
    pub real_mul: u64,
    pub real_add: u64,
    pub real_div: u64,
    /// Transcendental activation evaluations (exp, sqrt inside kernels).
    pub activation: u64,
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total real floating-point operations under the usual weights:
    /// one complex multiply = 6 flops, one complex add = 2, one complex
    /// divide = 11 (Smith's algorithm), transcendentals counted as 1.
    pub fn total_flops(&self) -> u64 {
        self.complex_mul * 6
            + self.complex_add * 2
            + self.complex_div * 11
            + self.real_mul
            + self.real_add
            + self.real_div
            + self.activation
    }

    pub fn merge(&mut self, other: &FlopCounter) {
        self.complex_mul += other.complex_mul;
        self.complex_add += other.complex_add;
        self.complex_div += other.complex_div;
        self.real_mul += other.real_mul;
        self.real_add += other.real_add;
        self.real_div += other.real_div;
        self.activation += other.activation;
    }
}
