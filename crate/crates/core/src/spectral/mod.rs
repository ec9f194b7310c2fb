//! Singular values and the spectral identities behind them: the shifted
//! Gram matrix, the nomadic walk matrix, Ihara–Bass, and hike counts.

pub mod hikes;
pub mod nomadic;
pub mod singular;

pub use hikes::{count_hikes, enumerate_hikes, nomadic_trace, trace_identity, HikeCounts, HikeRecord, TraceIdentity};
pub use nomadic::{
    default_z_grid, ihara_bass_check, ihara_bass_sides, l_matrix, nomadic_matrix, rho_excess, shifted_gram,
    spectral_radius_reduction, NomadicPair, NomadicWalkMatrix, ShiftedGram,
};
pub use singular::{
    m_interval, sigma_band_from_m_interval, singular_extremes, singular_values_dense, SpectrumMethod, SpectrumReport,
};
