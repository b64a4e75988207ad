//! Forward synthesis F(z) = ∫ f(t) e^{2πi t·z} dt, FFT slice recovery of the
//! density, and the mollified recovery path.
//!
//! Conventions: the forward kernel is e^{+2πi t·z}; slices are analysed with
//! e^{-2πi x·t}, so recovery returns f(t) = e^{2πy·t} ∫ F(x+iy) e^{-2πix·t} dx.

mod mollify;
mod quad_spec;
mod recover;
mod synth;
mod tube;

pub use mollify::{
    mollifier_eval, mollifier_lower_bound, recover_density_mollified, validate_basis, MollifiedRecovery,
    MollifierForm,
};
pub use quad_spec::{Ladder, NormGrid, QuadSpec, SliceGrid, YSampler};
pub use recover::{
    compare_recoveries, plancherel_energies, recover_density, recover_from_samples, y_independence_residual,
    IndependenceResidual, RecoveredDensity,
};
pub use synth::{synthesize, Synthesis};
pub use tube::{ExternalSlice, TubeFunction, TubeSource};
