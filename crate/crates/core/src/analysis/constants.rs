//! Constants of the competitive analysis as functions of `alpha` and `beta`.

use serde::Serialize;

use crate::engine::AlgorithmParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisConstants {
    pub alpha: f64,
    pub beta: f64,
    /// Bound on an internal node's weight relative to its lighter subtree.
    pub xi: f64,
    /// `xi + 2`.
    pub tree_coef: f64,
    /// `log2(xi / 2 + 1)`.
    pub tree_exp: f64,
    /// Bound on a final edge's cost relative to the rest of its cycle.
    pub final_coef: f64,
}

impl AnalysisConstants {
    pub fn new(alpha: f64, beta: f64) -> Self {
        let xi = (1.0 + alpha) * (beta + 1.0) * (1.0 / alpha).max(beta / (beta - 1.0));
        Self {
            alpha,
            beta,
            xi,
            tree_coef: xi + 2.0,
            tree_exp: (xi / 2.0 + 1.0).log2(),
            final_coef: (1.0 + alpha) * (1.0 / alpha).max((beta + 1.0) / (beta - 1.0)),
        }
    }

    pub fn from_params(params: &AlgorithmParams) -> Self {
        Self::new(params.alpha, params.beta)
    }

    /// `max(1/alpha, beta/(beta-1))`: bound on an endpoint's wait relative
    /// to the path ending at it.
    pub fn wait_coef(&self) -> f64 {
        (1.0 / self.alpha).max(self.beta / (self.beta - 1.0))
    }

    /// `(1+alpha)(beta+1)`: bound on an edge's cost relative to the
    /// smaller wait of its endpoints.
    pub fn budget_chain_coef(&self) -> f64 {
        (1.0 + self.alpha) * (self.beta + 1.0)
    }

    /// `log2(xi + 2)`, the exponent of the tree induction.
    pub fn induction_exp(&self) -> f64 {
        (self.xi + 2.0).log2()
    }

    /// Bound on non-final cost over OPT cost for a cycle, with `m` pairs.
    pub fn non_final_bound(&self, m: usize) -> f64 {
        self.tree_coef * (m as f64).powf(self.tree_exp)
    }

    /// Bound on a cycle's ALG cost over its OPT cost, with `m` pairs.
    pub fn ratio_bound(&self, m: usize) -> f64 {
        (1.0 + self.final_coef) * self.non_final_bound(m) + self.final_coef
    }
}

impl Default for AnalysisConstants {
    fn default() -> Self {
        Self::from_params(&AlgorithmParams::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters() {
        let c = AnalysisConstants::default();
        assert_eq!(c.xi, 9.0);
        assert_eq!(c.tree_coef, 11.0);
        assert_eq!(c.tree_exp, 5.5f64.log2());
        assert_eq!(c.final_coef, 4.5);
        assert_eq!(c.wait_coef(), 2.0);
        assert_eq!(c.budget_chain_coef(), 4.5);
        assert_eq!(c.ratio_bound(1), 5.5 * 11.0 + 4.5);
    }

    #[test]
    fn large_alpha_uses_balance_terms() {
        let c = AnalysisConstants::new(4.0, 1.5);
        assert_eq!(c.wait_coef(), 3.0);
        assert_eq!(c.xi, 5.0 * 2.5 * 3.0);
        assert_eq!(c.final_coef, 5.0 * 5.0);
    }
}
