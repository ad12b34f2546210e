//! Exact weighted measures on `[0,1]` built as pushforwards of i.i.d. product
//! measures on digit sequences, plus streaming statistics for (generalized)
//! normality of digit expansions.
//!
//! A digit distribution `ρ` over the alphabet `{0, …, b−1}` induces the product
//! measure `μ_ρ` on infinite digit sequences. The evaluation map
//! `(a_j) ↦ Σ a_j b^{−j}` pushes `μ_ρ` forward to a measure `λ_ρ` on `[0,1]`;
//! uniform `ρ` recovers Lebesgue measure. Everything in [`measure`] is exact
//! rational arithmetic.
//!
//! Module map:
//!
//! * [`alphabet`]: bases, digit words, rationals, digit distributions.
//! * [`measure`]: cylinders, the evaluation map, point and interval measures.
//! * [`sources`]: digit streams (rationals, square roots, samplers, files).
//! * [`normality`]: overlapping word counts and normality reports.
//! * [`experiments`]: seeded Monte Carlo campaigns and the normal-number demo.

pub mod alphabet;
pub mod error;
pub mod experiments;
pub mod measure;
pub mod normality;
pub mod rng;
pub mod sources;

pub use alphabet::{
    make_distribution, parse_rational, uniform_distribution, word_probability, Base, Digit,
    DigitDistribution, DigitWord, Rational,
};
pub use error::{Error, Result};
pub use experiments::{run_campaign, CampaignConfig, CampaignResult, SampleVerdict};
pub use measure::{
    cylinder_measure, dual_representations, interval_measure, interval_to_cylinders,
    point_measure, psi_value, DigitSubset, Expansion, FiniteExpansion, PrefixCylinder, TailKind,
};
pub use normality::{build_report, count_simple, count_word, is_eps_normal, NormalityReport, WordCounter};
pub use sources::{DigitStream, Seed};
