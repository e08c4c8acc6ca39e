//! Verdicts on evolved measures: boundary-gap scans of the constrained
//! system, the small-time expansion horizon, derivative checks and
//! Dobrushin certificates.

mod certify;
mod gapscan;
mod horizon;
mod rn;

pub use certify::{dobrushin_evolved, EvolvedCertificate};
pub use gapscan::{
    bad_config_gap, parse_scan_config, transition_scan, AnalysisConfig, DynamicsConfig, EtaKind,
    GapScanResult, GapScanRow, ModelConfig, MonteCarloConfig, OutputConfig, ScanConfig,
    ScanMetadata, TimeGrid, GAP_CSV_HEADER, SCAN_NOTE,
};
pub use horizon::{
    cluster_horizon, flip_probability, horizon_from_constant, interaction_degree, ClusterHorizon,
    HorizonParams, HorizonRow, DEFAULT_TORUS_CAP,
};
pub use rn::{
    continuity_probe, rn_derivative_check, ContinuityRow, PolymerExpansion, RnCheck, RN_CAP,
};
