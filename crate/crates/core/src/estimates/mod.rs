//! Quantitative checks around the solver: the iteration lemmas, stability
//! exponents, viscosity touching tests, the uniqueness energy, the `tr_ω X`
//! monitor and sup-norm uniformity along the continuation.

mod energy;
mod lemmas;
mod stability;
mod viscosity;

pub use energy::{
    energy_form, laplacian_monitor, linf_uniformity_report, uniqueness_energy, uniqueness_energy_normalized,
    MonitorOutcome, MonitorReport, UniformityReport, UniformityRow,
};
pub use lemmas::{
    certify_iteration_hypothesis, degiorgi_threshold, kolodziej_bound, synthetic_family, verify_lemma, Certification,
    IterationHypothesis, LemmaCheck, LemmaForm,
};
pub use stability::{
    fit_exponent, predicted_exponent, stability_experiment, stability_record, summarize_stability, ExponentFit,
    StabilityOutcome, StabilityRecord, SLOPE_SLACK, STABILITY_EPSILON,
};
pub use viscosity::{viscosity_check, ViscosityReport, MAX_LISTED};
