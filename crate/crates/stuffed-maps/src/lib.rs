//! Exact-arithmetic engine for the genus-graded generating series of
//! stuffed maps — discrete surfaces whose elementary 2-cells may carry
//! arbitrary topology — computed through the shifted topological recursion
//! of the multi-trace hermitian one-matrix model, and cross-checked against
//! a brute-force Gaussian Wick oracle and exact loop-equation residuals.
//!
//! Everything is exact: coefficients are arbitrary-precision rationals,
//! correlators are rational functions of the Zhukovsky variable in
//! partial-fraction normal form, and every acceptance check is an exact
//! identity. No floating point appears anywhere in the pipeline.
//!
//! Module map:
//! - [`series`]: graded truncated multivariate series over `Q` (the
//!   coefficient ring; cell weights plus the vertex weight `t = u^2`).
//! - [`zforms`]: rational functions and 1-forms of the Zhukovsky variable,
//!   the involution `z -> 1/z`, residues and contour extraction.
//! - [`oracle`]: Wick-theorem fatgraph enumeration: exact moments,
//!   cumulants, stuffed-map coefficients, and induced multi-trace weights.
//! - [`spectral`]: disk and cylinder solutions (endpoints, `W_1^0`, the
//!   master operator, `omega_2^0`, the local Cauchy kernel).
//! - [`toprec`]: potentials, the recursion kernel, the shifted topological
//!   recursion step, closed-form cross-checks, moment extraction, and
//!   free-energy derivatives.
//! - [`verify`]: exact Schwinger-Dyson, linear and quadratic loop-equation
//!   residuals, and oracle equivalence.
//! - [`cli`]: configuration, orchestration and machine-readable reports.

pub mod cli;
pub mod oracle;
pub mod series;
pub mod spectral;
pub mod toprec;
pub mod verify;
pub mod zforms;

pub use series::{CellWeightVar, GradedSeries, Monomial, Rat, WeightSpec};
pub use zforms::{Form1, NForm, Point, ZRational, ZhukovskyFrame};
