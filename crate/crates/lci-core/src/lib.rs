//! Exact and asymptotic analysis of longest common weakly-increasing
//! subsequences (LCI) of random words over a finite ordered alphabet.
//!
//! The crate has three layers:
//!
//! * exact combinatorics on words: the LCI dynamic program, block-aligned
//!   variants, plain LCS, and brute-force oracles ([`exact`]);
//! * the deterministic limit analysis: the limit mean `e_max`, case
//!   classification with its constants, feasible polytope grids, and the
//!   second-order functional with an independent LP oracle ([`analysis`],
//!   [`mfunc`]);
//! * Monte Carlo: sampling the limiting distributions as functionals of
//!   correlated Brownian paths, finite-`n` simulation, and
//!   Kolmogorov-Smirnov comparison ([`sampler`], [`harness`]).

pub mod analysis;
pub mod exact;
pub mod harness;
pub mod mfunc;
pub mod model;
pub mod sampler;
pub mod scalar;

pub use analysis::{
    blocks_analysis, classify_case, compute_emax, emax_grid_oracle, grid_j, grid_k, pair_score,
    truncate_alphabet, Analysis, AnalysisError, AnalysisReport, CaseConstants, CaseTag,
    PolytopeGrid,
};
pub use exact::{
    composition_value, lc_b_blocks, lc_blocks_length, lci_bruteforce, lci_length,
    lci_length_fast, lcs_length, BlockOrder, Composition, ExactError,
};
pub use harness::{converge, ks_two_sample, simulate_zn, ConvergeReport, EmpiricalZSet, KsResult};
pub use mfunc::{m_closed, m_lp_oracle, MfuncError, Perturbation};
pub use model::{sample_word, validate_pmf, Instance, ModelError, Pmf, RngConfig, Word};
pub use sampler::{
    eval_za, eval_zb, sample_brownian, sample_limit, sample_limit_blocks, BrownianGrid,
    LimitParams, LimitSampleSet, SamplerError,
};
