//! Validation mathematics: energies, frequency estimation, beam theory and
//! modal analysis.

pub mod beam;
mod energy;
pub mod freq;
pub mod modal;
mod trace;

pub use beam::{
    euler_bernoulli_frequency, predicted_ratio, run_beam_experiment, run_sweep, BeamError, BeamExperiment, BeamRun,
    BeamSpec, SweepAxis, SweepRow,
};
pub use energy::{energies, Energies, EnergyMeter};
pub use freq::{fft_dominant_frequency, zero_cross_frequency, zero_cross_frequency_interpolated, FreqError};
pub use modal::{assemble_modal_system, natural_frequencies, ModalError, ModalSystem};
pub use trace::{TraceError, TraceSeries};
