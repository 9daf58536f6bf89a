//! Ordered-eigenvalue distributions of complex noncentral Wishart matrices
//! and the performance of multichannel beamforming over Ricean MIMO
//! channels built on them.

pub mod cli;
pub mod eigdist;
pub mod error;
pub mod linalg;
pub mod mcsim;
pub mod logdet;
pub mod model;
pub mod perf;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
pub use logdet::{LogDet, SignedLog, SignedLogDet};
pub use model::{mean_from_singulars, spectrum_from_channel, subchannel_snr, RiceanChannel, SubchannelSnr, WishartSpec};
pub use eigdist::{asymptotic_coeffs, singular_value_cdf, AsymptoticCoeffs, EigenvalueDistribution, Evaluation};
pub use perf::{diversity_order, outage_asymptotic, Exactness, MbConfig, MbSystem, Modulation, SerPoint};
pub use mcsim::{empirical_eig_cdfs, empirical_outage, empirical_ser, sample_channel, EmpiricalCdf, McRun};
