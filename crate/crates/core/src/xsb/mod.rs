//! Space-time analysis: the cutoff `ψ_T`, `X_{s,b}` norms and the ratio
//! probes for the Strichartz, bilinear and trilinear estimates.

mod field;
mod probe;

pub use field::{
    apply_window, free_solution, modulated_free_solution, modulated_free_spectrum, padded_product, padded_size,
    xsb_norm, Lattice, SpaceTimeField, SpaceTimeSpectrum, TimeWindow,
};
pub use probe::{
    bilinear_lhs, bilinear_probe, cone_weighted_norm, interpolate, l4_norm, lemma_pairing, lemma_ratio,
    random_free_wave, random_lemma_inputs, run_probe, schrodinger_weighted, strichartz_ratio, wave_weighted,
    write_probe_csv, write_probe_meta, LemmaInputs, ProbeConfig, ProbeReport, ProbeTrial, ProbeVariant,
    ResolutionReport, Sign, RHS_FLOOR,
};
