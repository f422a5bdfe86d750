/// Every numeric threshold used by the library, in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Unitarity contract for closed-form gates.
    pub unitarity: f64,
    /// Completeness of discrete wires built from exact matrices.
    pub completeness: f64,
    /// Completeness defect above which a truncated wire is rejected.
    pub completeness_reject: f64,
    /// Target accuracy of continuous-outcome quadrature.
    pub quadrature: f64,
    /// Probability mass defect that aborts sampling.
    pub probability_abort: f64,
    /// Truncated coherent states losing more than this are rejected.
    pub cutoff_deficit_reject: f64,
    /// Minimal norm a squeezed vacuum must keep below the cutoff.
    pub squeeze_retention: f64,
    /// Minimal internal padding for non-number-conserving exponentials.
    pub min_pad: usize,
    /// Extra padding per squared parameter magnitude.
    pub pad_per_param_sq: f64,
    /// Operator-Schmidt coefficients below this count as zero.
    pub schmidt: f64,
    /// Off-diagonal magnitude below which a gate counts as diagonal.
    pub diagonal: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        unitarity: 1e-12,
        completeness: 1e-8,
        completeness_reject: 1e-4,
        quadrature: 1e-6,
        probability_abort: 1e-4,
        cutoff_deficit_reject: 0.5,
        squeeze_retention: 0.99,
        min_pad: 20,
        pad_per_param_sq: 10.0,
        schmidt: 1e-9,
        diagonal: 1e-12,
    };

    /// Internal cutoff padding for a generator with parameter magnitude `param`.
    pub fn pad_for(&self, param: f64) -> usize {
        let extra = libm::ceil(self.pad_per_param_sq * param * param);
        if extra.is_finite() && extra > self.min_pad as f64 {
            extra as usize
        } else {
            self.min_pad
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
